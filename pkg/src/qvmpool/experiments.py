"""Desk-scale studies built on the pipeline: noise heterogeneity and dead couplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import AllocationRequest, AllocationState, schedule_batches
from .benchmarks import load_benchmarks
from .calibration import (
    CalibrationSnapshot,
    ErrorProfile,
    build_graph,
    edge_key,
    generate_heavy_hex,
    graph_with_dead_links,
    inject_defects,
    random_dead_couplers,
)
from .circuit import ideal_distribution, route
from .config import Config
from .noisesim import NoiseModel, fidelity, run_experiment, segment_seed, simulate
from .regions import discover


@dataclass
class HeterogeneityResult:
    profile: str
    seeds: tuple[int, ...]
    quality_aware: float
    baseline: float
    per_seed: list[tuple[float, float]] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.quality_aware - self.baseline


def heterogeneity_gap(
    profile: ErrorProfile,
    name: str = "",
    seeds=(0, 1, 2),
    shots: int = 1024,
    max_width: int = 4,
    rows: int = 7,
    cols: int = 3,
    config: Config | None = None,
) -> HeterogeneityResult:
    """Mean fidelity of region-allocated circuits (one per job, so each gets
    the best free region) against whole-chip noise-unaware routing."""
    cfg = config or Config()
    graph = build_graph(generate_heavy_hex(rows, cols, profile))
    pool = discover(graph, 0, cfg)
    wl = load_benchmarks(max_width=max_width)
    per = []
    for s in seeds:
        rep = run_experiment(pool, wl, 1, shots=shots, seed=s, graph=graph, config=cfg, baseline=True)
        base = [r.baseline_fidelity for r in rep.circuits if r.baseline_fidelity is not None]
        per.append((rep.mean_fidelity(), float(np.mean(base))))
    q = float(np.mean([p[0] for p in per]))
    b = float(np.mean([p[1] for p in per]))
    return HeterogeneityResult(name, tuple(seeds), q, b, per)


@dataclass
class DeadLinkResult:
    killed: list[tuple[int, int]]
    n_regions: int
    regions_with_dead_edges: int
    infeasible: list[str]
    dead_edges_traversed: int
    baseline: dict[str, float]
    allocated: dict[str, float]


def dead_link_study(
    snap: CalibrationSnapshot,
    fraction: float = 0.05,
    seed: int = 0,
    forced_chain=(0, 1, 2, 3),
    forced=("ghz_n4", "cat_state_n4"),
    shots: int = 1024,
    config: Config | None = None,
) -> DeadLinkResult:
    """Kill the couplers along ``forced_chain`` plus random ones up to
    ``fraction`` of all couplers, then compare region allocation with a
    calibration-blind compiler that keeps the dead couplers (error 1.0) and
    places the ``forced`` circuits on ``forced_chain``."""
    cfg = config or Config()
    chain = [edge_key(a, b) for a, b in zip(forced_chain, forced_chain[1:])]
    target = math.ceil(fraction * len(snap.couplers))
    extra = [e for e in random_dead_couplers(snap, 2 * fraction, seed) if e not in chain]
    killed = sorted(set(chain) | set(extra[: max(0, target - len(chain))]))
    dead_snap = inject_defects(snap, killed)
    dead = set(killed)

    graph = build_graph(dead_snap)
    pool = discover(graph, cfg.seed, cfg)
    bad_regions = sum(1 for r in pool.regions if any(edge_key(*e) in dead for e in r.edges))

    wl = load_benchmarks(max_width=4)
    sched = schedule_batches(pool, [AllocationRequest(k, c.num_qubits) for k, c in wl.items()], 1, graph, cfg)

    noise = NoiseModel.from_graph(graph, cfg.one_qubit_depol)
    traversed = 0
    allocated = {}
    for name, circ in wl.items():
        a = AllocationState(pool, graph, cfg).allocate(AllocationRequest(name, circ.num_qubits))
        r = route(circ, graph.subgraph(a.physical_vertices), seed, bridge_edges=a.bridge_edges)
        traversed += sum(1 for g in r.base.gates if g.is_two_qubit and edge_key(*g.qubits) in dead)
        if name in forced:
            counts = simulate(r, noise, shots, segment_seed(seed, name))
            allocated[name] = fidelity(ideal_distribution(circ), counts)

    blind = graph_with_dead_links(dead_snap)
    blind_noise = NoiseModel.from_graph(blind, cfg.one_qubit_depol)
    baseline = {}
    for name in forced:
        circ = wl[name]
        layout = {i: forced_chain[i] for i in range(circ.num_qubits)}
        r = route(circ, blind, seed, initial_layout=layout, error_aware=False)
        counts = simulate(r, blind_noise, shots, segment_seed(seed, "baseline:" + name))
        baseline[name] = fidelity(ideal_distribution(circ), counts)

    return DeadLinkResult(killed, len(pool.regions), bad_regions, list(sched.infeasible), traversed, baseline, allocated)
