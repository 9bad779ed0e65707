"""Hand-built fixtures shared by unit and acceptance tests."""

from dataclasses import replace

from qvmpool.calibration import HardwareGraph
from qvmpool.regions import RegionPool, make_region


def with_q(region, q):
    return replace(region, scores=replace(region.scores, q=q))


def composition_fixture(strong=0.001, weak=0.009):
    """Seed path A (8 qubits, q=0.75) bridged to path B (5, q=0.70) by a
    low-error coupler and to path C (4, q=0.80) by a high-error one."""
    a, b, c = list(range(8)), list(range(8, 13)), list(range(13, 17))
    errs = {}
    for part in (a, b, c):
        for u, v in zip(part, part[1:]):
            errs[(u, v)] = 0.01
    errs[(7, 8)] = strong
    errs[(0, 13)] = weak
    g = HardwareGraph.from_edges(range(17), errs, {v: 0.02 for v in range(17)})
    regions = (
        with_q(make_region(g, 0, a), 0.75),
        with_q(make_region(g, 1, b), 0.70),
        with_q(make_region(g, 2, c), 0.80),
    )
    return g, RegionPool(regions, frozenset(range(17)), graph=g)


ONE_Q = ("h", "x", "s", "t", "sdg", "y")
TWO_Q = ("cx", "cz", "swap")


def random_circuit(rng, n, n_gates, name="rand"):
    """Random measured circuit over ``n`` qubits; every qubit is measured to its own clbit."""
    from qvmpool.circuit import CircuitIR, Gate

    gates = []
    for _ in range(n_gates):
        if n > 1 and rng.random() < 0.5:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate(str(rng.choice(TWO_Q)), (int(a), int(b))))
        elif rng.random() < 0.3:
            gates.append(Gate("ry", (int(rng.integers(n)),), (float(rng.uniform(0, 3.2)),)))
        else:
            gates.append(Gate(str(rng.choice(ONE_Q)), (int(rng.integers(n)),)))
    clbits = list(rng.permutation(n))
    gates += [Gate("measure", (q,), clbit=int(clbits[q])) for q in range(n)]
    return CircuitIR(name, n, n, tuple(gates))


def random_composite(rng):
    """Random tenants on disjoint paths with random layouts, plus random shot memory per tenant."""
    from qvmpool.calibration import HardwareGraph
    from qvmpool.circuit import route
    from qvmpool.circuit.composite import combine

    routed, base = {}, 0
    for t in range(int(rng.integers(1, 5))):
        n = int(rng.integers(1, 5))
        c = random_circuit(rng, n, 0, name=f"t{t}")
        vs = list(range(base, base + n))
        g = HardwareGraph.from_edges(vs, {(a, a + 1): 0.01 for a in vs[:-1]}, {})
        perm = rng.permutation(n)
        routed[f"t{t}"] = route(c, g, initial_layout={q: base + int(perm[q]) for q in range(n)})
        base += n + int(rng.integers(0, 3))
    comp = combine(routed, base + 1)
    shots = int(rng.integers(1, 40))
    memory = {
        cid: [format(int(x), f"0{r.base.num_clbits}b") for x in rng.integers(0, 2**r.base.num_clbits, shots)]
        for cid, r in routed.items()
    }
    return comp, memory
