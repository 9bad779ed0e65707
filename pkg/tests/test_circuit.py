from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ghz_vector
from worked_examples import random_circuit, random_composite
from qvmpool import benchmarks
from qvmpool.calibration import HardwareGraph
from qvmpool.circuit import CircuitIR, Gate, QasmError, RouteCache, RoutingError, ideal_distribution, parse_qasm, route
from qvmpool.circuit.composite import (
    CompositeError,
    combine,
    demultiplex,
    join_keys,
    multiplex,
    split_key,
)
from qvmpool.noisesim import l1_distance

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def path_graph(vertices, err=0.01):
    vs = list(vertices)
    return HardwareGraph.from_edges(vs, {(a, b): err for a, b in zip(vs, vs[1:])}, {v: 0.01 for v in vs})


def l1_dist(p, q):
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---- parsing ---------------------------------------------------------------


def test_parse_bell():
    c = parse_qasm(HEADER + "qreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q -> c;\n", "bell")
    assert c.num_qubits == 2 and c.num_clbits == 2
    assert [g.kind for g in c.gates] == ["h", "cx", "measure", "measure"]
    assert ideal_distribution(c) == pytest.approx({"00": 0.5, "11": 0.5})


def test_parse_params_and_gate_definitions():
    src = HEADER + (
        "gate foo(a) x, y { rz(a/2) x; cx x, y; }\n"
        "qreg q[2];\ncreg c[2];\nfoo(pi) q[0], q[1];\nu3(pi,0,pi) q[1];\nbarrier q;\n"
    )
    c = parse_qasm(src)
    assert [g.kind for g in c.gates] == ["rz", "cx", "u", "barrier"]
    assert c.gates[0].params[0] == pytest.approx(np.pi / 2)


@pytest.mark.parametrize(
    "body, line",
    [
        ("qreg q[2];\nfoo q[0];\n", 4),
        ("qreg q[2];\ncx q[0],q[0];\n", 4),
        ("qreg q[2];\nh q[5];\n", 4),
        ("qreg q[2];\nh q[0]\n", 4),
        ("qreg q[2];\ncreg c[1];\nmeasure q[1] -> c[3];\n", 5),
    ],
)
def test_parse_errors_have_locations(body, line):
    with pytest.raises(QasmError) as exc:
        parse_qasm(HEADER + body)
    assert exc.value.line == line


def test_bundled_fixtures_load():
    wl = benchmarks.load_benchmarks()
    assert len(wl) == 29
    assert all(c.num_qubits <= 10 for c in wl.values())
    for c in wl.values():
        dist = ideal_distribution(c)
        assert sum(dist.values()) == pytest.approx(1.0)


def test_ghz_matches_matrix_oracle():
    for n in (2, 3, 4):
        gates = [Gate("h", (0,))] + [Gate("cx", (i, i + 1)) for i in range(n - 1)]
        gates += [Gate("measure", (q,), clbit=q) for q in range(n)]
        dist = ideal_distribution(CircuitIR("ghz", n, n, tuple(gates)))
        amp = ghz_vector(n)
        # oracle index has qubit 0 most significant; keys put clbit 0 rightmost
        ref = {format(i, f"0{n}b")[::-1]: abs(a) ** 2 for i, a in enumerate(amp) if abs(a) > 1e-12}
        assert dist == pytest.approx(ref)


def test_wstate_fixture():
    dist = ideal_distribution(benchmarks.load("wstate_n3"), tol=1e-12)
    assert dist == pytest.approx({"001": 1 / 3, "010": 1 / 3, "100": 1 / 3})


# ---- routing ---------------------------------------------------------------


def test_path_needs_exactly_one_swap():
    c = CircuitIR("far", 3, 3, (Gate("cx", (0, 2)),) + tuple(Gate("measure", (q,), clbit=q) for q in range(3)))
    r = route(c, path_graph(range(3)), initial_layout={0: 0, 1: 1, 2: 2})
    assert r.swap_count == 1
    assert l1_dist(ideal_distribution(r.base), ideal_distribution(c)) < 1e-12


def test_fitting_circuit_needs_no_swaps():
    c = benchmarks.load("ghz_n4")
    r = route(c, path_graph(range(10, 14)))
    assert r.swap_count == 0
    assert r.footprint == frozenset(range(10, 14))
    assert set(r.pi.values()) <= r.footprint


def test_routing_rejects_bad_inputs():
    c = benchmarks.load("ghz_n4")
    with pytest.raises(RoutingError):
        route(c, path_graph(range(3)))
    split = HardwareGraph.from_edges([0, 1, 2, 3], {(0, 1): 0.01, (2, 3): 0.01}, {})
    with pytest.raises(RoutingError):
        route(c, split)
    with pytest.raises(RoutingError):
        route(c, path_graph(range(4)), initial_layout={0: 0, 1: 1, 2: 2, 3: 9})


def test_error_aware_routing_avoids_bad_coupler():
    # square 0-1-2-3-0 where 0-1 is terrible; cx(0,2) should swap through 3
    g = HardwareGraph.from_edges(range(4), {(0, 1): 0.2, (1, 2): 0.01, (2, 3): 0.01, (0, 3): 0.01}, {})
    c = CircuitIR("x", 3, 0, (Gate("cx", (0, 1)),))
    r = route(c, g, initial_layout={0: 0, 1: 2, 2: 1})
    swaps = [gt.qubits for gt in r.base.gates if gt.kind == "swap"]
    assert swaps and all(set(s) != {0, 1} for s in swaps)


def test_route_cache_hits():
    cache = RouteCache()
    c = benchmarks.load("qft_n4")
    g = path_graph(range(6))
    a = cache.route(c, g, 3)
    b = cache.route(c, g, 3)
    assert a is b and cache.hits == 1 and cache.misses == 1
    cache.route(c, path_graph(range(6), err=0.02), 3)
    assert cache.misses == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(0, 30), st.booleans())
def test_routing_preserves_semantics(seed, n, n_gates, aware):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, n_gates)
    m = n + int(rng.integers(0, 3))
    base = int(rng.integers(0, 50))
    g = path_graph(range(base, base + m), err=0.01)
    for v in range(base, base + m - 2):
        if rng.random() < 0.3:
            g = HardwareGraph.from_edges(g.vertices, {**g.edge_error, (v, v + 2): float(rng.uniform(0, 0.05))}, {})
    r = route(c, g, seed=seed, error_aware=aware)
    assert all(g.has_edge(*gt.qubits) for gt in r.base.gates if gt.is_two_qubit)
    assert set(r.base.qubits_used()) <= g.vertices
    assert l1_dist(ideal_distribution(r.base), ideal_distribution(c)) < 1e-9


# ---- composite and demultiplexing --------------------------------------------


def measured_identity(n, gates=()):
    return CircuitIR("c", n, n, tuple(gates) + tuple(Gate("measure", (q,), clbit=q) for q in range(n)))


def test_combine_offsets_and_overlap():
    ra = route(measured_identity(2), path_graph([0, 1]), initial_layout={0: 0, 1: 1})
    rb = route(measured_identity(3), path_graph([5, 6, 7]), initial_layout={0: 5, 1: 6, 2: 7})
    comp = combine({"b": rb, "a": ra}, 10)
    assert [s.circuit_id for s in comp.segments] == ["a", "b"]
    assert [s.clbit_offset for s in comp.segments] == [0, 2]
    assert comp.total_clbits == 5
    with pytest.raises(CompositeError):
        combine({"a": ra, "a2": ra}, 10)
    with pytest.raises(CompositeError):
        combine({"b": rb}, 6)


def test_demultiplex_worked_example():
    ra = route(measured_identity(2), path_graph([0, 1]), initial_layout={0: 0, 1: 1})
    rb = route(measured_identity(2), path_graph([2, 3]), initial_layout={0: 2, 1: 3})
    comp = combine({"A": ra, "B": rb}, 4)
    assert demultiplex({"1001": 7}, comp) == {"A": {"01": 7}, "B": {"10": 7}}


def test_swapped_pi_exchanges_positions():
    # x on logical 0, which sits on physical 1: raw slice reads "10", tenant sees "01"
    c = measured_identity(2, [Gate("x", (0,))])
    r = route(c, path_graph([0, 1]), initial_layout={0: 1, 1: 0})
    assert r.pi == {0: 1, 1: 0}
    comp = combine({"t": r}, 2)
    raw = ideal_distribution(comp.circuit())
    assert raw == pytest.approx({"10": 1.0})
    assert demultiplex({"10": 5}, comp) == {"t": {"01": 5}}
    assert ideal_distribution(c) == pytest.approx({"01": 1.0})


def test_demultiplex_rejects_malformed_keys():
    r = route(measured_identity(2), path_graph([0, 1]), initial_layout={0: 0, 1: 1})
    comp = combine({"t": r}, 2)
    with pytest.raises(CompositeError):
        split_key("101", comp)
    with pytest.raises(CompositeError):
        split_key("1x", comp)


def test_composite_circuit_equals_segments():
    wl = benchmarks.load_benchmarks()
    ra = route(wl["bell_n4"], path_graph(range(0, 4)))
    rb = route(wl["wstate_n3"], path_graph(range(4, 7)))
    comp = combine({"bell": ra, "w": rb}, 7)
    demux = demultiplex({k: round(v * 9000) for k, v in ideal_distribution(comp.circuit()).items()}, comp)
    for cid, circ in (("bell", wl["bell_n4"]), ("w", wl["wstate_n3"])):
        total = sum(demux[cid].values())
        assert l1_distance(ideal_distribution(circ), demux[cid]) < 1e-3 * total


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_multiplex_demultiplex_roundtrip(seed):
    comp, memory = random_composite(np.random.default_rng(seed))
    counts = multiplex(memory, comp)
    back = demultiplex(counts, comp)
    for cid, mem in memory.items():
        assert back[cid] == dict(Counter(mem))
    key = next(iter(counts))
    assert join_keys(split_key(key, comp), comp) == key
