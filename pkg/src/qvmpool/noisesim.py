"""Pauli-trajectory noise simulation, fidelity metrics, and the end-to-end experiment runner.

Noise is depolarizing per gate (rate = the coupler's calibrated error for
two-qubit gates, a fixed rate for one-qubit gates) plus a classical readout
flip per measured qubit. A swap counts as three two-qubit gates. Sampled
error patterns are deduplicated so each distinct pattern is simulated once.
"""

from __future__ import annotations

import math
import time
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .allocation import AllocationRequest, BatchReport, schedule_batches
from .calibration import HardwareGraph, edge_key
from .circuit.composite import CompositeCircuit, combine, demultiplex, raw_to_composite_keys
from .circuit.ir import CircuitIR
from .circuit.routing import RouteCache, RoutedCircuit
from .circuit.statevector import (
    MAX_QUBITS,
    PAULIS,
    apply_1q,
    apply_gate,
    bits_to_keys,
    check_terminal_measures,
    ideal_distribution,
    outcome_bits,
    zero_state,
)
from .config import Config
from .regions import RegionPool

REPORT_SCHEMA_VERSION = 1
MAX_AMPLITUDES = 1 << 22
WIN_TOLERANCE = 0.01


@dataclass(frozen=True)
class NoiseModel:
    two_qubit_depol: Mapping[tuple[int, int], float]
    one_qubit_depol: float = 1e-4
    readout_flip: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        probs = [self.one_qubit_depol, *self.two_qubit_depol.values(), *self.readout_flip.values()]
        if any(not (0.0 <= p <= 1.0) or math.isnan(p) for p in probs):
            raise ValueError("noise probabilities must lie in [0, 1]")

    @classmethod
    def from_graph(cls, graph: HardwareGraph, one_qubit_depol: float = 1e-4) -> "NoiseModel":
        return cls(
            {e: min(1.0, err) for e, err in graph.edge_error.items()},
            one_qubit_depol,
            dict(graph.vertex_readout_error),
        )

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls({}, 0.0, {})

    def scaled(self, factor: float) -> "NoiseModel":
        """Gate depolarizing rates times ``factor`` (clipped to 1); readout unchanged."""
        return NoiseModel(
            {e: min(1.0, p * factor) for e, p in self.two_qubit_depol.items()},
            min(1.0, self.one_qubit_depol * factor),
            dict(self.readout_flip),
        )

    def two_qubit(self, a: int, b: int) -> float:
        return self.two_qubit_depol.get(edge_key(a, b), 0.0)


def segment_seed(seed: int, circuit_id: str) -> int:
    return (seed ^ zlib.crc32(circuit_id.encode())) & 0xFFFFFFFF


def _channel_sites(circ: CircuitIR, noise: NoiseModel) -> list[tuple[int, tuple[int, ...], float]]:
    """(gate index, qubits, probability) after which a depolarizing channel acts."""
    sites = []
    for i, g in enumerate(circ.gates):
        if g.kind in ("measure", "barrier"):
            continue
        if g.is_two_qubit:
            p = noise.two_qubit(*g.qubits)
            for _ in range(3 if g.kind == "swap" else 1):
                sites.append((i, g.qubits, p))
        else:
            sites.append((i, g.qubits, noise.one_qubit_depol))
    return sites


def _apply_pauli(state: np.ndarray, rows: np.ndarray, code: int, axes: list[int]) -> None:
    """In place on the selected batch rows; ``code`` packs one base-4 digit per qubit (first qubit high)."""
    sub = state[rows]
    for k, ax in enumerate(axes):
        digit = (code >> (2 * (len(axes) - 1 - k))) & 3
        if digit:
            sub = apply_1q(sub, PAULIS[digit], ax)
    state[rows] = sub


def sample_raw(routed: RoutedCircuit | CircuitIR, noise: NoiseModel, shots: int, seed: int) -> np.ndarray:
    """Shot records of a routed circuit: (shots, m) bits, column j = j-th
    measured physical qubit in ascending order."""
    circ = routed.base if isinstance(routed, RoutedCircuit) else routed
    if shots < 1:
        raise ValueError("shots must be >= 1")
    check_terminal_measures(circ)
    active = circ.qubits_used()
    if len(active) > MAX_QUBITS:
        raise ValueError(f"{circ.name}: {len(active)} active qubits exceed the {MAX_QUBITS}-qubit bound")
    local = {q: i for i, q in enumerate(active)}
    k = len(active)
    measured = sorted(circ.measured())
    rng = np.random.default_rng(seed)

    sites = _channel_sites(circ, noise)
    pattern = np.zeros((shots, len(sites)), dtype=np.int8)
    for j, (_, qs, p) in enumerate(sites):
        if p <= 0.0:
            continue
        hit = rng.random(shots) < p
        choices = 3 if len(qs) == 1 else 15
        pattern[:, j] = np.where(hit, rng.integers(1, choices + 1, size=shots), 0)
    uniq, inverse = np.unique(pattern, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    by_gate: dict[int, list[int]] = {}
    for j, (gi, _, _) in enumerate(sites):
        by_gate.setdefault(gi, []).append(j)

    outcomes = np.empty(shots, dtype=np.int64)
    chunk = max(1, MAX_AMPLITUDES >> k)
    for start in range(0, len(uniq), chunk):
        pats = uniq[start : start + chunk]
        state = zero_state(k, len(pats))
        for gi, g in enumerate(circ.gates):
            state = apply_gate(state, g, local)
            for j in by_gate.get(gi, ()):
                col = pats[:, j]
                if not col.any():
                    continue
                axes = [local[q] for q in sites[j][1]]
                for code in np.unique(col[col > 0]):
                    _apply_pauli(state, np.nonzero(col == code)[0], int(code), axes)
        probs = np.abs(state.reshape(len(pats), -1)) ** 2
        cdf = np.cumsum(probs, axis=1)
        for r in range(len(pats)):
            idx = np.nonzero(inverse == start + r)[0]
            u = rng.random(len(idx)) * cdf[r, -1]
            outcomes[idx] = np.minimum(np.searchsorted(cdf[r], u, side="right"), cdf.shape[1] - 1)

    bits = outcome_bits(outcomes, k)
    raw = np.stack([bits[:, local[q]] for q in measured], axis=1) if measured else np.zeros((shots, 0), np.int64)
    flip_p = np.array([noise.readout_flip.get(q, 0.0) for q in measured])
    if len(measured):
        raw ^= (rng.random((shots, len(measured))) < flip_p[None, :]).astype(raw.dtype)
    return raw.astype(np.uint8)


def raw_to_logical_keys(raw: np.ndarray, routed: RoutedCircuit) -> list[str]:
    """Solo-run view of :func:`sample_raw` output as tenant bitstrings."""
    measured = routed.base.measured()
    phys = sorted(measured)
    clbits = np.zeros((raw.shape[0], routed.base.num_clbits), dtype=np.int64)
    for j, p in enumerate(phys):
        clbits[:, measured[p]] = raw[:, j]
    return bits_to_keys(clbits)


def simulate(routed: RoutedCircuit, noise: NoiseModel, shots: int, seed: int) -> dict[str, int]:
    """Counts over the tenant's classical register (clbit 0 rightmost)."""
    return dict(Counter(raw_to_logical_keys(sample_raw(routed, noise, shots, seed), routed)))


def l1_distance(p_ideal: Mapping[str, float], counts: Mapping[str, int]) -> float:
    shots = sum(counts.values())
    if shots <= 0:
        raise ValueError("counts are empty")
    keys = set(p_ideal) | set(counts)
    return math.fsum(abs(p_ideal.get(x, 0.0) - counts.get(x, 0) / shots) for x in keys)


def fidelity(p_ideal: Mapping[str, float], counts: Mapping[str, int]) -> float:
    return 1.0 - l1_distance(p_ideal, counts) / 2.0


@dataclass(frozen=True)
class RunResult:
    circuit_id: str
    counts: Mapping[str, int]
    shots: int
    d_l1: float
    fidelity: float

    @classmethod
    def of(cls, circuit_id: str, ideal: Mapping[str, float], counts: Mapping[str, int]) -> "RunResult":
        d = l1_distance(ideal, counts)
        return cls(circuit_id, dict(counts), sum(counts.values()), d, 1.0 - d / 2.0)


def run_composite(
    composite: CompositeCircuit, noise: NoiseModel, shots: int, seed: int
) -> dict[str, int]:
    """Composite counts, each segment simulated independently with its own
    derived seed and stitched together shot by shot."""
    raw = {
        s.circuit_id: sample_raw(s.routed, noise, shots, segment_seed(seed, s.circuit_id))
        for s in composite.segments
    }
    return dict(Counter(raw_to_composite_keys(raw, composite)))


@dataclass
class CircuitRecord:
    circuit_id: str
    width: int
    batch: int | None
    region_ids: tuple[int, ...] = ()
    composed: bool = False
    batch_size: int = 0
    swaps: int = 0
    depth: int = 0
    fidelity: float | None = None
    d_l1: float | None = None
    baseline_fidelity: float | None = None
    baseline_swaps: int | None = None

    def to_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "width": self.width,
            "batch": self.batch,
            "batch_size": self.batch_size,
            "region_ids": list(self.region_ids),
            "composed": self.composed,
            "swaps": self.swaps,
            "depth": self.depth,
            "fidelity": self.fidelity,
            "d_l1": self.d_l1,
            "baseline_fidelity": self.baseline_fidelity,
            "baseline_swaps": self.baseline_swaps,
        }


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; 0 when either series is constant."""
    if len(x) < 2:
        return 0.0
    xa, ya = np.asarray(x, float), np.asarray(y, float)
    sx, sy = xa.std(), ya.std()
    if sx == 0 or sy == 0:
        return 0.0
    return float(np.mean((xa - xa.mean()) * (ya - ya.mean())) / (sx * sy))


def win_loss(records: Sequence[CircuitRecord], tol: float = WIN_TOLERANCE) -> dict[str, int]:
    tally = {"wins": 0, "losses": 0, "ties": 0}
    for r in records:
        if r.fidelity is None or r.baseline_fidelity is None:
            continue
        diff = r.fidelity - r.baseline_fidelity
        tally["wins" if diff > tol else "losses" if diff < -tol else "ties"] += 1
    return tally


@dataclass
class ExperimentReport:
    batch_cap: int
    shots: int
    seed: int
    schedule: BatchReport
    circuits: list[CircuitRecord]
    timings: dict[str, float] = field(default_factory=dict)
    device: str = ""

    @property
    def jobs_used(self) -> int:
        return self.schedule.jobs_used

    @property
    def cost_reduction(self) -> float:
        return self.schedule.cost_reduction

    def fidelities(self) -> list[float]:
        return [r.fidelity for r in self.circuits if r.fidelity is not None]

    def mean_fidelity(self) -> float:
        f = self.fidelities()
        return float(np.mean(f)) if f else float("nan")

    def by_batch_size(self) -> dict[int, dict[str, float]]:
        groups: dict[int, list[float]] = {}
        for r in self.circuits:
            if r.fidelity is not None:
                groups.setdefault(r.batch_size, []).append(r.fidelity)
        return {
            k: {"n": len(v), "mean": float(np.mean(v)), "std": float(np.std(v))} for k, v in sorted(groups.items())
        }

    def correlation(self) -> float:
        """Pearson r between each executed circuit's batch size and its fidelity."""
        pts = [(r.batch_size, r.fidelity) for r in self.circuits if r.fidelity is not None]
        return pearson([p[0] for p in pts], [p[1] for p in pts])

    def to_dict(self, include_timings: bool = False) -> dict:
        """Report body. Timings are wall-clock and left out by default so
        identical inputs give byte-identical reports."""
        base = [r.baseline_fidelity for r in self.circuits if r.baseline_fidelity is not None]
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "device": self.device,
            "batch_cap": self.batch_cap,
            "shots": self.shots,
            "seed": self.seed,
            "n_circuits": self.schedule.n_circuits,
            "jobs_used": self.jobs_used,
            "cost_reduction": self.cost_reduction,
            "mean_fidelity": self.mean_fidelity(),
            "mean_baseline_fidelity": float(np.mean(base)) if base else None,
            "fidelity_vs_batch_size_r": self.correlation(),
            "by_batch_size": {str(k): v for k, v in self.by_batch_size().items()},
            "win_loss": win_loss(self.circuits),
            "circuits": [r.to_dict() for r in self.circuits],
            "schedule": self.schedule.to_dict(),
            **({"timings": self.timings} if include_timings else {}),
        }


def run_experiment(
    pool: RegionPool,
    workload: Mapping[str, CircuitIR],
    batch_cap: int,
    noise: NoiseModel | None = None,
    shots: int = 1024,
    seed: int = 0,
    graph: HardwareGraph | None = None,
    config: Config | None = None,
    baseline: bool = False,
    baseline_graph: HardwareGraph | None = None,
    cache: RouteCache | None = None,
) -> ExperimentReport:
    """Schedule, route each admitted circuit inside its footprint, run every
    executed batch as one composite, demultiplex, and score against the
    noiseless distribution.

    With ``baseline`` each circuit is also routed alone on the whole chip
    (``baseline_graph`` if given) with a noise-unaware layout and simulated
    under the same noise model.
    """
    graph = graph if graph is not None else pool.graph
    if graph is None:
        raise ValueError("run_experiment needs the hardware graph (pass graph= or embed it in the pool)")
    noise = noise if noise is not None else NoiseModel.from_graph(graph, (config or Config()).one_qubit_depol)
    cache = cache if cache is not None else RouteCache()
    t0 = time.perf_counter()
    ids = list(workload)
    reqs = [AllocationRequest(cid, workload[cid].num_qubits) for cid in ids]
    sched = schedule_batches(pool, reqs, batch_cap, graph, config)
    t_sched = time.perf_counter() - t0

    records = {cid: CircuitRecord(cid, workload[cid].num_qubits, None) for cid in ids}
    device_size = max(graph.vertices) + 1
    t1 = time.perf_counter()
    for b in sched.executed:
        routed = {}
        for cid in b.admitted:
            alloc = b.allocations[cid]
            sub = graph.subgraph(alloc.physical_vertices)
            routed[cid] = cache.route(workload[cid], sub, seed, bridge_edges=alloc.bridge_edges)
            rec = records[cid]
            rec.batch, rec.batch_size = b.index, len(b.admitted)
            rec.region_ids, rec.composed = alloc.region_ids, alloc.composed
            rec.swaps, rec.depth = routed[cid].swap_count, routed[cid].depth
        composite = combine(routed, device_size)
        counts = demultiplex(run_composite(composite, noise, shots, seed), composite)
        for cid in b.admitted:
            res = RunResult.of(cid, ideal_distribution(workload[cid]), counts[cid])
            records[cid].fidelity, records[cid].d_l1 = res.fidelity, res.d_l1
    t_run = time.perf_counter() - t1

    if baseline:
        full = baseline_graph if baseline_graph is not None else graph
        bnoise = noise if baseline_graph is None else NoiseModel(
            {e: min(1.0, err) for e, err in full.edge_error.items()}, noise.one_qubit_depol, dict(noise.readout_flip)
        )
        for cid in ids:
            r = cache.route(workload[cid], full, seed, error_aware=False)
            counts = simulate(r, bnoise, shots, segment_seed(seed, "baseline:" + cid))
            records[cid].baseline_fidelity = RunResult.of(cid, ideal_distribution(workload[cid]), counts).fidelity
            records[cid].baseline_swaps = r.swap_count

    timings = {"schedule_s": t_sched, "execute_s": t_run, "total_s": time.perf_counter() - t0}
    return ExperimentReport(batch_cap, shots, seed, sched, [records[c] for c in ids], timings, pool.device)


def batch_sweep(
    pool: RegionPool,
    workload: Mapping[str, CircuitIR],
    caps: Sequence[int],
    seeds: Sequence[int],
    noise: NoiseModel | None = None,
    shots: int = 1024,
    graph: HardwareGraph | None = None,
    config: Config | None = None,
) -> dict:
    """Run every (batch cap, seed) pair.

    ``pearson_r`` correlates each executed circuit's batch size (programs
    sharing its job) with its fidelity, pooled over all runs.
    ``pearson_r_cap_means`` correlates the cap with the run's mean fidelity.
    """
    cache = RouteCache()
    rows = []
    xs: list[float] = []
    ys: list[float] = []
    for cap in caps:
        for s in seeds:
            rep = run_experiment(pool, workload, cap, noise, shots, s, graph, config, cache=cache)
            for r in rep.circuits:
                if r.fidelity is not None:
                    xs.append(r.batch_size)
                    ys.append(r.fidelity)
            rows.append(
                {
                    "batch_cap": cap,
                    "seed": s,
                    "jobs_used": rep.jobs_used,
                    "cost_reduction": rep.cost_reduction,
                    "mean_fidelity": rep.mean_fidelity(),
                    "by_batch_size": {str(k): v for k, v in rep.by_batch_size().items()},
                }
            )
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "rows": rows,
        "pearson_r": pearson(xs, ys),
        "pearson_r_cap_means": pearson([r["batch_cap"] for r in rows], [r["mean_fidelity"] for r in rows]),
    }
