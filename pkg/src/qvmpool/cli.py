"""Command-line entry point: qvmpool <command> [options].

Exit status: 0 on success, 1 on bad input or usage, 2 when the run finished
but some circuits were infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import benchmarks
from .allocation import AllocationRequest, schedule_batches
from .calibration import (
    BIMODAL,
    KINGSTON,
    UNIFORM,
    CalibrationError,
    build_graph,
    generate_heavy_hex,
    inject_defects,
    load_snapshot,
    random_dead_couplers,
)
from .circuit.ir import CircuitIR
from .circuit.qasm import QasmError, load_qasm
from .config import CONFIG_SCHEMA, Config, load_config
from .noisesim import REPORT_SCHEMA_VERSION, NoiseModel, run_experiment
from .regions import RegionPool, discover, load_pool

PROFILES = {"kingston": KINGSTON, "uniform": UNIFORM, "bimodal": BIMODAL}
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated qubit indices, got {text!r}") from None
    return a, b


def _caps(text: str) -> list[int]:
    try:
        caps = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"batch caps must be integers, got {text!r}") from None
    if not caps or any(c < 1 for c in caps):
        raise argparse.ArgumentTypeError("batch caps must be positive")
    return caps


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def load_workload(source: str | None) -> dict[str, CircuitIR]:
    """``None``/'bundled', a directory of .qasm files, or a JSON manifest
    listing paths (relative to the manifest) under "circuits"."""
    if source in (None, "bundled"):
        return benchmarks.load_benchmarks()
    p = Path(source)
    if p.is_dir():
        files = sorted(p.glob("*.qasm"))
    elif p.suffix == ".json":
        raw = json.loads(p.read_text())
        entries = raw["circuits"] if isinstance(raw, dict) else raw
        files = [p.parent / e for e in entries]
    else:
        files = [p]
    if not files:
        raise ValueError(f"no circuits found in {source}")
    out = {}
    for f in files:
        c = load_qasm(f)
        if c.name in out:
            raise ValueError(f"duplicate circuit name {c.name!r}")
        out[c.name] = c
    return out


def _pool_and_graph(args) -> tuple[RegionPool, object]:
    pool = load_pool(args.pool)
    graph = build_graph(load_snapshot(args.calibration)) if args.calibration else pool.graph
    if graph is None:
        raise ValueError("pool has no embedded graph; pass --calibration")
    return pool, graph


def cmd_gen_fixture(args, cfg: Config) -> int:
    snap = generate_heavy_hex(args.rows, args.cols, replace(PROFILES[args.profile], seed=args.seed)
                              if args.seed is not None else PROFILES[args.profile], device_name=args.name)
    _write(args.out, snap.dumps())
    return EXIT_OK


def cmd_inject_defects(args, cfg: Config) -> int:
    snap = load_snapshot(args.calibration)
    kills = list(args.kill_coupler or [])
    if args.kill_fraction:
        kills += random_dead_couplers(snap, args.kill_fraction, cfg.seed if args.seed is None else args.seed)
    out = inject_defects(snap, kills, args.kill_qubit or [])
    _write(args.out, out.dumps())
    return EXIT_OK


def cmd_discover(args, cfg: Config) -> int:
    snap = load_snapshot(args.calibration)
    graph = build_graph(snap)
    pool = discover(graph, cfg.seed, cfg)
    pool = replace(pool, device=snap.device_name)
    if args.timings:
        print(_dump(dict(pool.timings)), file=sys.stderr, end="")
    _write(args.out, pool.dumps())
    return EXIT_OK


def cmd_schedule(args, cfg: Config) -> int:
    pool, graph = _pool_and_graph(args)
    workload = load_workload(args.workload)
    reqs = [AllocationRequest(n, c.num_qubits) for n, c in workload.items()]
    runs = []
    for cap in args.batch_cap:
        rep = schedule_batches(pool, reqs, cap, graph, cfg)
        runs.append({"batch_cap": cap, **rep.to_dict()})
    _write(args.report, _dump({"schema_version": REPORT_SCHEMA_VERSION, "kind": "schedule", "device": pool.device,
                               "runs": runs}))
    return EXIT_INFEASIBLE if any(r["infeasible"] for r in runs) else EXIT_OK


def cmd_run(args, cfg: Config) -> int:
    pool, graph = _pool_and_graph(args)
    workload = load_workload(args.workload)
    noise = NoiseModel.from_graph(graph, cfg.one_qubit_depol)
    runs = []
    for cap in args.batch_cap:
        rep = run_experiment(pool, workload, cap, noise, cfg.shots, cfg.seed, graph, cfg, baseline=args.baseline)
        if args.timings:
            print(_dump({"batch_cap": cap, **rep.timings}), file=sys.stderr, end="")
        runs.append(rep.to_dict())
    _write(args.report, _dump({"schema_version": REPORT_SCHEMA_VERSION, "kind": "run", "device": pool.device,
                               "runs": runs}))
    return EXIT_INFEASIBLE if any(r["schedule"]["infeasible"] for r in runs) else EXIT_OK


def _fmt(x, pct: bool = False) -> str:
    if x is None:
        return "-"
    return f"{100 * x:.1f}%" if pct else f"{x:.3f}"


def report_tables(doc: dict) -> list[tuple[str, list[str], list[list[str]]]]:
    """(title, header, rows) for the batching, batch-size and per-circuit tables."""
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {doc.get('schema_version')!r}")
    runs = doc["runs"]
    tables = []
    cost = [
        [
            str(r["batch_cap"]),
            str(r["jobs_used"]),
            _fmt(r["cost_reduction"], pct=True),
            _fmt(r.get("mean_fidelity"), pct=True) if "mean_fidelity" in r else "-",
        ]
        for r in runs
    ]
    tables.append(("Cost reduction through batching", ["Batch", "Jobs", "CostReduction", "MeanFidelity"], cost))
    if doc["kind"] == "run":
        rows = []
        for r in runs:
            regions: dict[int, set] = {}
            for b in r["schedule"]["batches"]:
                size = len(b["admitted"])
                regions.setdefault(size, set()).add(b["regions_used"])
            for size, st in r["by_batch_size"].items():
                used = regions.get(int(size), set())
                rows.append([str(r["batch_cap"]), size, "/".join(str(u) for u in sorted(used)) or "-",
                             _fmt(st["mean"], pct=True), _fmt(st["std"])])
        tables.append(("Batch scalability", ["Cap", "BatchSize", "RegionsUsed", "MeanFidelity", "StdDev"], rows))
        per = []
        for r in runs:
            for c in r["circuits"]:
                f, b = c["fidelity"], c["baseline_fidelity"]
                delta = None if f is None or b is None else f - b
                per.append([str(r["batch_cap"]), c["circuit_id"], str(c["width"]), _fmt(b), _fmt(f), _fmt(delta)])
        tables.append(("Per-circuit fidelity", ["Cap", "Circuit", "Width", "Baseline", "QualityAware", "Delta"], per))
        wl = [[str(r["batch_cap"]), str(r["win_loss"]["wins"]), str(r["win_loss"]["losses"]),
               str(r["win_loss"]["ties"]), _fmt(r.get("mean_baseline_fidelity"), pct=True),
               _fmt(r["mean_fidelity"], pct=True)] for r in runs]
        tables.append(("Win/loss vs baseline (1% tolerance)",
                       ["Cap", "Wins", "Losses", "Ties", "BaselineMean", "QualityAwareMean"], wl))
    return tables


def render(tables, fmt: str) -> str:
    buf = io.StringIO()
    for i, (title, header, rows) in enumerate(tables):
        if i:
            buf.write("\n")
        if fmt == "md":
            buf.write(f"### {title}\n\n")
            buf.write("| " + " | ".join(header) + " |\n")
            buf.write("|" + "|".join("---" for _ in header) + "|\n")
            for row in rows:
                buf.write("| " + " | ".join(row) + " |\n")
        else:
            buf.write(f"# {title}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    return buf.getvalue()


def cmd_report(args, cfg: Config) -> int:
    doc = json.loads(Path(args.input).read_text())
    _write(args.out, render(report_tables(doc), args.format))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qvmpool", description="Quality-aware region discovery and multi-tenant batching on heavy-hex devices.")
    p.add_argument("--config", help="JSON config file; keys: " + ", ".join(CONFIG_SCHEMA))
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-fixture", help="write a synthetic heavy-hex calibration snapshot")
    g.add_argument("--rows", type=int, default=7)
    g.add_argument("--cols", type=int, default=3)
    g.add_argument("--profile", choices=sorted(PROFILES), default="kingston")
    g.add_argument("--seed", type=int, help="override the profile's error seed")
    g.add_argument("--name", help="device name")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen_fixture)

    d = sub.add_parser("inject-defects", help="mark couplers or qubits non-operational")
    d.add_argument("--calibration", required=True)
    d.add_argument("--kill-coupler", type=_pair, action="append", metavar="A,B")
    d.add_argument("--kill-qubit", type=int, action="append", metavar="Q")
    d.add_argument("--kill-fraction", type=float, default=0.0, help="also kill this fraction of live couplers at random")
    d.add_argument("--seed", type=int)
    d.add_argument("--out", default="-")
    d.set_defaults(func=cmd_inject_defects)

    s = sub.add_parser("discover", help="build the region pool from a calibration snapshot")
    s.add_argument("--calibration", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default="-")
    s.add_argument("--timings", action="store_true", help="print stage wall-clock times to stderr")
    s.set_defaults(func=cmd_discover)

    for name, func, helptext in (
        ("schedule", cmd_schedule, "batch a workload onto the pool (no simulation)"),
        ("run", cmd_run, "schedule, route, simulate and score a workload"),
    ):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--pool", required=True)
        c.add_argument("--workload", help="directory of .qasm files, a JSON manifest, or 'bundled' (default)")
        c.add_argument("--batch-cap", type=_caps, default=[10], help="one cap or a comma list")
        c.add_argument("--calibration", help="snapshot to use instead of the graph embedded in the pool")
        c.add_argument("--report", default="-")
        c.add_argument("--seed", type=int)
        if name == "run":
            c.add_argument("--shots", type=int)
            c.add_argument("--baseline", action="store_true", help="also run the full-chip, noise-unaware baseline")
            c.add_argument("--timings", action="store_true")
        c.set_defaults(func=func)

    r = sub.add_parser("report", help="render a schedule/run report as tables")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--format", choices=["csv", "md"], default="md")
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, seed=getattr(args, "seed", None), shots=getattr(args, "shots", None))
        return args.func(args, cfg)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, OSError, CalibrationError, QasmError) as e:
        print(f"qvmpool: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
