"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from acceptance_log import record
from oracles import modularity_double_sum
from worked_examples import composition_fixture, random_circuit, random_composite
from qvmpool.allocation import AllocationRequest, AllocationState, schedule_batches, size_score
from qvmpool.calibration import BIMODAL, EPS0, UNIFORM, HardwareGraph, edge_key
from qvmpool.circuit import ideal_distribution, route
from qvmpool.circuit.composite import combine, demultiplex, multiplex
from qvmpool.community import Partition, delta_modularity, louvain, modularity
from qvmpool.experiments import dead_link_study, heterogeneity_gap
from qvmpool.noisesim import NoiseModel, batch_sweep, run_composite, segment_seed, simulate
from qvmpool.regions import Region, RegionScores, discover, gate_quality, score_region, select_pool


def l1(p, q):
    return sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))


def chain(n, err=0.01):
    return HardwareGraph.from_edges(range(n), {(i, i + 1): err for i in range(n - 1)}, {v: 0.01 for v in range(n)})


def test_criterion_01_formula_fidelity():
    t0 = time.perf_counter()
    s6, s8 = size_score(6, 4), size_score(8, 4)
    w = HardwareGraph.from_edges([0, 1], {(0, 1): 0.005}).weight(0, 1)
    conn5 = score_region(chain(5), range(5)).s_conn
    g1, g2 = gate_quality([0.005]), gate_quality([0.015])
    checks = {
        "size_score(6,4)": abs(s6 - math.exp(-0.25)) <= 1e-12,
        "size_score(8,4)": abs(s8 - math.exp(-0.5)) <= 1e-12,
        "weight(0.005)": 199.9 <= w <= 200.0,
        "s_conn(5-chain)=0.5": abs(conn5 - 0.5) <= 1e-12,
        "s_gate(0.005)=0.5": abs(g1 - 0.5) <= 1e-12,
        "s_gate(0.015)=0": g2 == 0.0,
    }
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 1.0
    failed = [k for k, v in checks.items() if not v]
    detail = f"w={w:.4f}, 5-chain s_conn={conn5:.3f}, {elapsed * 1e3:.1f} ms" + (f"; failed: {', '.join(failed)}" if failed else "")
    assert record(1, "formula fidelity", ok, detail), detail


def test_criterion_02_selection_worked_example():
    t0 = time.perf_counter()
    fake = lambda rid, vs, q: Region(rid, frozenset(vs), frozenset(), RegionScores(0, 0, 0, 0, q))
    pool = select_pool([fake(0, range(20), 0.6), fake(1, range(10), 0.5), fake(2, range(10, 20), 0.5)])
    ids = sorted(r.id for r in pool.regions)
    total = sum(r.q for r in pool.regions)
    elapsed = time.perf_counter() - t0
    ok = ids == [1, 2] and abs(total - 1.0) < 1e-12 and elapsed < 1.0
    assert record(2, "selection worked example", ok, f"pool={ids}, total Q={total:.3f}"), ids


def test_criterion_03_composition_worked_example():
    t0 = time.perf_counter()
    g, pool = composition_fixture()
    a = AllocationState(pool).allocate(AllocationRequest("wide", 12))
    sb_gap = gate_quality([0.001]) - gate_quality([0.009])
    elapsed = time.perf_counter() - t0
    ok = a.region_ids == (0, 1) and len(a.physical_vertices) == 13 and sb_gap >= 0.2 and elapsed < 1.0
    detail = f"regions={a.region_ids}, |V|={len(a.physical_vertices)}, s_bridge gap={sb_gap:.2f}"
    assert record(3, "composition worked example", ok, detail), detail


def test_criterion_04_modularity(kingston_graph):
    rng = np.random.default_rng(4)
    worst, moves, q_ok = 0.0, 0, True
    graphs = []
    for _ in range(10):
        n = int(rng.integers(4, 13))
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
        pairs = pairs or [(0, 1)]
        weights = {e: float(rng.uniform(0.5, 500.0)) for e in pairs}
        graphs.append(HardwareGraph.from_edges(range(n), {e: 1 / w - EPS0 for e, w in weights.items()}))
    for g in graphs:
        ws = {e: g.weight(*e) for e in g.edges}
        verts = sorted(g.vertices)
        for _ in range(50):
            p = Partition.from_labels({v: int(rng.integers(0, 4)) for v in verts})
            v = verts[int(rng.integers(len(verts)))]
            target = int(rng.integers(len(p)))
            moved = dict(p.community_of)
            moved[v] = target
            exact = modularity_double_sum(ws, moved) - modularity_double_sum(ws, p.community_of)
            got = delta_modularity(g, p, v, target)
            if not math.isclose(got, exact, rel_tol=1e-9, abs_tol=1e-12):
                worst = max(worst, abs(got - exact) / max(abs(exact), 1e-300))
            moves += 1
    for g in graphs + [kingston_graph]:
        q = modularity(g, louvain(g, 0))
        single = modularity(g, Partition.from_labels({v: v for v in g.vertices}))
        q_ok &= q >= 0 and q > single
    ok = worst == 0.0 and q_ok
    detail = f"{moves} moves on {len(graphs)} graphs, mismatches rel={worst:.1e}, Louvain Q>=0 and > singletons: {q_ok}"
    assert record(4, "modularity correctness", ok, detail), detail


def _connected_subset(graph, size, rng):
    verts = sorted(graph.vertices)
    chosen = {verts[int(rng.integers(len(verts)))]}
    while len(chosen) < size:
        frontier = sorted({u for v in chosen for u in graph.adj[v]} - chosen)
        chosen.add(frontier[int(rng.integers(len(frontier)))])
    return chosen


def test_criterion_05_router_soundness(kingston_graph, kingston_pool, workload):
    t0 = time.perf_counter()
    worst, off_edge, count, swaps = 0.0, 0, 0, 0
    cases = []
    for name, c in workload.items():
        a = AllocationState(kingston_pool, kingston_graph).allocate(AllocationRequest(name, c.num_qubits))
        cases.append((c, kingston_graph.subgraph(a.physical_vertices)))
    rng = np.random.default_rng(5)
    for i in range(200):
        n = int(rng.integers(1, 7))
        c = random_circuit(rng, n, int(rng.integers(0, 40)), name=f"r{i}")
        cases.append((c, kingston_graph.subgraph(_connected_subset(kingston_graph, n + int(rng.integers(0, 4)), rng))))
    for c, sub in cases:
        r = route(c, sub, seed=count)
        swaps += r.swap_count
        off_edge += sum(1 for g in r.base.gates if g.is_two_qubit and not sub.has_edge(*g.qubits))
        worst = max(worst, l1(ideal_distribution(r.base), ideal_distribution(c)))
        count += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and off_edge == 0 and elapsed < 60
    detail = f"{count} circuits ({swaps} SWAPs inserted), max L1={worst:.1e}, off-footprint 2q gates={off_edge}, {elapsed:.1f} s"
    assert record(5, "router soundness", ok, detail), detail


def test_criterion_06_demux_roundtrip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(500):
        comp, memory = random_composite(rng)
        back = demultiplex(multiplex(memory, comp), comp)
        for cid, mem in memory.items():
            expect = {}
            for k in mem:
                expect[k] = expect.get(k, 0) + 1
            bad += back[cid] != expect
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 5
    assert record(6, "demux round-trip", ok, f"500 tuples, {bad} mismatches, {elapsed:.2f} s"), bad


def test_criterion_07_cost_model(kingston_graph, kingston_pool, workload):
    t0 = time.perf_counter()
    reqs = [AllocationRequest(k, c.num_qubits) for k, c in workload.items()]
    jobs, red, infeasible = [], [], []
    for cap in (2, 4, 6, 10, 15):
        rep = schedule_batches(kingston_pool, reqs, cap, kingston_graph)
        jobs.append(rep.jobs_used)
        red.append(round(100 * rep.cost_reduction))
        infeasible += rep.infeasible
    elapsed = time.perf_counter() - t0
    ok = jobs == [15, 8, 5, 3, 2] and red == [48, 72, 83, 90, 93] and not infeasible and elapsed < 10
    detail = f"jobs={jobs}, reductions={red}%, infeasible={len(infeasible)}, {elapsed:.2f} s"
    assert record(7, "cost model", ok, detail), detail


def test_criterion_08_batch_stability(kingston_graph, kingston_pool, workload):
    t0 = time.perf_counter()
    # exact isolation: a batch's demultiplexed counts equal each tenant's solo run
    noise = NoiseModel.from_graph(kingston_graph)
    sched = schedule_batches(kingston_pool, [AllocationRequest(k, c.num_qubits) for k, c in workload.items()], 10)
    identical = True
    for b in sched.executed:
        routed = {
            cid: route(workload[cid], kingston_graph.subgraph(b.allocations[cid].physical_vertices), 0)
            for cid in b.admitted
        }
        comp = combine(routed, max(kingston_graph.vertices) + 1)
        demux = demultiplex(run_composite(comp, noise, 1024, 0), comp)
        identical &= all(demux[c] == simulate(r, noise, 1024, segment_seed(0, c)) for c, r in routed.items())
    sweep = batch_sweep(kingston_pool, workload, list(range(2, 19)), [0, 1, 2], noise, 1024, kingston_graph)
    r = sweep["pearson_r"]
    elapsed = time.perf_counter() - t0
    ok = identical and abs(r) < 0.1 and elapsed < 300
    detail = (
        f"composite==solo: {identical}; per-circuit r(batch size, fidelity)={r:+.3f} "
        f"(cap-mean r={sweep['pearson_r_cap_means']:+.3f}), {elapsed:.0f} s"
    )
    assert record(8, "batch stability", ok, detail), detail


def test_criterion_09_heterogeneity():
    bim = heterogeneity_gap(BIMODAL, "bimodal")
    uni = heterogeneity_gap(UNIFORM, "uniform")
    ok = bim.gap >= 0.05 and abs(uni.gap) <= 0.03
    detail = (
        f"clustered gap={100 * bim.gap:+.1f} pts ({100 * bim.quality_aware:.1f} vs {100 * bim.baseline:.1f}), "
        f"uniform gap={100 * uni.gap:+.1f} pts"
    )
    assert record(9, "heterogeneity benefit", ok, detail), detail


def test_criterion_10_dead_links(kingston_snap):
    res = dead_link_study(kingston_snap, 0.05, seed=0)
    frac = len(res.killed) / len(kingston_snap.couplers)
    ok = (
        frac >= 0.05
        and res.n_regions > 0
        and res.regions_with_dead_edges == 0
        and not res.infeasible
        and res.dead_edges_traversed == 0
        and all(f < 0.2 for f in res.baseline.values())
        and all(f >= 0.8 for f in res.allocated.values())
    )
    fmt = lambda d: ", ".join(f"{k}={v:.2f}" for k, v in d.items())
    detail = (
        f"{len(res.killed)} couplers dead ({100 * frac:.1f}%), {res.n_regions} regions, "
        f"{res.regions_with_dead_edges} with dead edges, {len(res.infeasible)} infeasible; "
        f"baseline F: {fmt(res.baseline)}; allocated F: {fmt(res.allocated)}"
    )
    assert record(10, "dead-link immunity", ok, detail), detail


def test_criterion_11_performance(kingston_graph, kingston_pool):
    t0 = time.perf_counter()
    discover(kingston_graph, 0)
    t_disc = time.perf_counter() - t0
    st = AllocationState(kingston_pool, kingston_graph)
    rng = np.random.default_rng(11)
    widths = rng.integers(2, 7, size=1000)
    t1 = time.perf_counter()
    for i, w in enumerate(widths):
        st.allocate(AllocationRequest(f"c{i}", int(w)))
        st.release(f"c{i}")
    per = (time.perf_counter() - t1) / 1000
    ok = t_disc < 5 and per < 1e-3
    detail = f"{len(kingston_graph.vertices)}-qubit discovery {t_disc * 1e3:.0f} ms, allocate {per * 1e3:.3f} ms/request"
    assert record(11, "performance", ok, detail), detail
