"""Subgraph-restricted layout and SWAP routing."""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..calibration import EPS0, HardwareGraph, edge_key
from .ir import CircuitIR, Gate


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class RoutedCircuit:
    base: CircuitIR
    footprint: frozenset[int]
    pi: Mapping[int, int]
    initial_layout: Mapping[int, int]
    swap_count: int
    depth: int
    bridge_edges: frozenset[tuple[int, int]] = frozenset()

    @property
    def measured_physical(self) -> list[int]:
        """Physical qubits measured, ascending: the raw bit order a backend reports."""
        return sorted(self.base.measured())

    def to_dict(self) -> dict:
        return {
            "footprint": sorted(self.footprint),
            "pi": {str(k): v for k, v in sorted(self.pi.items())},
            "initial_layout": {str(k): v for k, v in sorted(self.initial_layout.items())},
            "swap_count": self.swap_count,
            "depth": self.depth,
            "bridge_edges": [list(e) for e in sorted(self.bridge_edges)],
            "circuit": self.base.to_dict(),
        }


class _Distances:
    def __init__(self, graph: HardwareGraph, error_aware: bool):
        self.graph = graph
        self.error_aware = error_aware
        self._cache: dict[int, tuple[dict[int, float], dict[int, int]]] = {}

    def cost(self, a: int, b: int) -> float:
        return self.graph.edge_error[edge_key(a, b)] + EPS0 if self.error_aware else 1.0

    def _run(self, src: int):
        if src not in self._cache:
            dist = {src: 0.0}
            pred: dict[int, int] = {}
            heap = [(0.0, src)]
            done = set()
            while heap:
                d, u = heapq.heappop(heap)
                if u in done:
                    continue
                done.add(u)
                for w in sorted(self.graph.adj[u]):
                    nd = d + self.cost(u, w)
                    if nd < dist.get(w, float("inf")):
                        dist[w] = nd
                        pred[w] = u
                        heapq.heappush(heap, (nd, w))
            self._cache[src] = (dist, pred)
        return self._cache[src]

    def dist(self, a: int, b: int) -> float:
        return self._run(a)[0].get(b, float("inf"))

    def path(self, a: int, b: int) -> list[int]:
        dist, pred = self._run(a)
        if b not in dist:
            raise RoutingError(f"no path between {a} and {b}")
        out = [b]
        while out[-1] != a:
            out.append(pred[out[-1]])
        return out[::-1]


def interaction_weights(circ: CircuitIR) -> dict[tuple[int, int], int]:
    w: dict[tuple[int, int], int] = defaultdict(int)
    for g in circ.gates:
        if g.is_two_qubit:
            w[edge_key(*g.qubits)] += 1
    return dict(w)


def choose_layout(
    circ: CircuitIR, graph: HardwareGraph, seed: int = 0, error_aware: bool = True, dists: _Distances | None = None
) -> dict[int, int]:
    """Most-interacting logical qubit goes to the highest weighted-degree vertex;
    its interaction partners follow in BFS order, each onto the free vertex
    closest to its already-placed partners. Ties prefer free neighbourhoods for
    qubits that still have partners to place (and avoid them for leaves), then
    degree, then a seeded vertex order."""
    n = circ.num_qubits
    if n > len(graph.vertices):
        raise RoutingError(f"{circ.name}: {n} qubits do not fit a {len(graph.vertices)}-vertex footprint")
    dists = dists or _Distances(graph, error_aware)
    rng = np.random.default_rng(seed)
    tiebreak = {v: i for i, v in enumerate(rng.permutation(sorted(graph.vertices)).tolist())}
    degree = {
        v: (graph.weighted_degree(v) if error_aware else float(len(graph.adj[v]))) for v in graph.vertices
    }
    inter = interaction_weights(circ)
    partners: dict[int, dict[int, int]] = defaultdict(dict)
    for (a, b), c in inter.items():
        partners[a][b] = c
        partners[b][a] = c
    activity = {q: sum(partners[q].values()) for q in range(n)}

    order: list[int] = []
    seen: set[int] = set()
    for root in sorted(range(n), key=lambda q: (-activity[q], q)):
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        while queue:
            q = queue.pop(0)
            order.append(q)
            for p in sorted(partners[q], key=lambda x: (-partners[q][x], x)):
                if p not in seen:
                    seen.add(p)
                    queue.append(p)

    layout: dict[int, int] = {}
    free = set(graph.vertices)
    for q in order:
        placed = [(p, c) for p, c in partners[q].items() if p in layout]
        if not layout:
            cost = {v: 0.0 for v in free}
        elif placed:
            cost = {v: sum(c * dists.dist(layout[p], v) for p, c in placed) for v in free}
        else:
            cost = {v: min(dists.dist(u, v) for u in layout.values()) for v in free}
        # a qubit with partners still to place wants room around it; a leaf should not take that room
        room = 1 if any(p not in layout for p in partners[q]) else -1
        best = min(
            free,
            key=lambda v: (cost[v], -room * sum(1 for u in graph.adj[v] if u in free), -degree[v], tiebreak[v]),
        )
        layout[q] = best
        free.discard(best)
    return layout


def route(
    circ: CircuitIR,
    footprint_graph: HardwareGraph,
    seed: int = 0,
    initial_layout: Mapping[int, int] | None = None,
    error_aware: bool = True,
    bridge_edges: frozenset[tuple[int, int]] = frozenset(),
) -> RoutedCircuit:
    """Lay out and route ``circ`` using only vertices and couplers of ``footprint_graph``.

    Non-adjacent two-qubit gates get SWAPs along the cheapest path (summed
    gate error, or hop count when ``error_aware`` is off); where along the
    path the two operands meet is picked by a one-gate lookahead. Measures are
    emitted last, against the final mapping, which is returned as ``pi``.
    """
    g = footprint_graph
    if not g.vertices or not g.is_connected():
        raise RoutingError(f"{circ.name}: footprint is empty or disconnected")
    if circ.num_qubits > len(g.vertices):
        raise RoutingError(f"{circ.name}: {circ.num_qubits} qubits exceed the {len(g.vertices)}-vertex footprint")
    dists = _Distances(g, error_aware)
    if initial_layout is None:
        layout = choose_layout(circ, g, seed, error_aware, dists)
    else:
        layout = dict(initial_layout)
        if set(layout) != set(range(circ.num_qubits)) or len(set(layout.values())) != len(layout):
            raise RoutingError("initial_layout must injectively map every logical qubit")
        if not set(layout.values()) <= g.vertices:
            raise RoutingError("initial_layout leaves the footprint")

    l2p = dict(layout)
    p2l = {p: l for l, p in l2p.items()}
    body = [gt for gt in circ.gates if gt.kind != "measure"]
    measures = [gt for gt in circ.gates if gt.kind == "measure"]
    two_q = [i for i, gt in enumerate(body) if gt.is_two_qubit]
    next_two_q = {two_q[k]: (two_q[k + 1] if k + 1 < len(two_q) else None) for k in range(len(two_q))}
    out: list[Gate] = []
    swaps = 0

    def do_swap(a: int, b: int) -> None:
        nonlocal swaps
        out.append(Gate("swap", (a, b)))
        swaps += 1
        la, lb = p2l.pop(a, None), p2l.pop(b, None)
        if la is not None:
            p2l[b] = la
            l2p[la] = b
        if lb is not None:
            p2l[a] = lb
            l2p[lb] = a

    for i, gt in enumerate(body):
        if not gt.is_two_qubit:
            out.append(gt.remap(l2p))
            continue
        pa, pb = l2p[gt.qubits[0]], l2p[gt.qubits[1]]
        if not g.has_edge(pa, pb):
            path = dists.path(pa, pb)
            hops = len(path) - 1
            nxt = body[next_two_q[i]] if next_two_q[i] is not None else None
            best = None
            for m in range(hops):
                # operand a walks m steps forward, operand b walks the rest backward
                used = list(zip(path[:m], path[1 : m + 1])) + list(zip(path[m + 1 : -1], path[m + 2 :]))
                score = 3.0 * sum(dists.cost(x, y) for x, y in used)
                if nxt is not None:
                    trial = dict(l2p)
                    trial[gt.qubits[0]] = path[m]
                    trial[gt.qubits[1]] = path[m + 1]
                    for lq, p in l2p.items():
                        if lq in gt.qubits:
                            continue
                        if p in path[1:m + 1]:
                            trial[lq] = path[path.index(p) - 1]
                        elif p in path[m + 1 : -1]:
                            trial[lq] = path[path.index(p) + 1]
                    score += dists.dist(trial[nxt.qubits[0]], trial[nxt.qubits[1]])
                if best is None or score < best[0] - 1e-15:
                    best = (score, m)
            m = best[1]
            for k in range(m):
                do_swap(path[k], path[k + 1])
            for k in range(hops, m + 1, -1):
                do_swap(path[k], path[k - 1])
        out.append(gt.remap(l2p))

    for gt in measures:
        out.append(gt.remap(l2p))

    for gt in out:
        if gt.is_two_qubit and not g.has_edge(*gt.qubits):
            raise RoutingError(f"internal error: {gt} is not on a footprint edge")
    size = max(g.vertices) + 1
    base = CircuitIR(circ.name, size, circ.num_clbits, tuple(out))
    return RoutedCircuit(
        base,
        frozenset(g.vertices),
        {l: l2p[l] for l in range(circ.num_qubits)},
        dict(layout),
        swaps,
        base.depth(),
        frozenset(bridge_edges),
    )


@dataclass
class RouteCache:
    """Routed-circuit cache keyed by circuit structure and footprint (vertices plus coupler errors)."""

    entries: dict = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    @staticmethod
    def footprint_key(graph: HardwareGraph) -> tuple:
        return (tuple(sorted(graph.vertices)), tuple(sorted(graph.edge_error.items())))

    def route(self, circ: CircuitIR, graph: HardwareGraph, seed: int = 0, **kwargs) -> RoutedCircuit:
        layout = kwargs.get("initial_layout")
        key = (
            circ.structural_hash(),
            circ.name,
            self.footprint_key(graph),
            seed,
            kwargs.get("error_aware", True),
            tuple(sorted(layout.items())) if layout else None,
            tuple(sorted(kwargs.get("bridge_edges", ()))),
        )
        if key in self.entries:
            self.hits += 1
            return self.entries[key]
        self.misses += 1
        routed = route(circ, graph, seed, **kwargs)
        self.entries[key] = routed
        return routed
