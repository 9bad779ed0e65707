"""Weighted Louvain modularity maximisation over a hardware graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .calibration import HardwareGraph, components

PASS_TOLERANCE = 1e-7


@dataclass(frozen=True)
class Partition:
    community_of: Mapping[int, int]
    communities: Mapping[int, frozenset[int]]

    @classmethod
    def from_labels(cls, labels: Mapping[int, object], order: Sequence[int] | None = None) -> "Partition":
        """Relabel arbitrary community labels densely, by first appearance along ``order``."""
        order = sorted(labels) if order is None else order
        dense: dict[object, int] = {}
        community_of = {}
        for v in order:
            community_of[v] = dense.setdefault(labels[v], len(dense))
        members: dict[int, set[int]] = {c: set() for c in range(len(dense))}
        for v, c in community_of.items():
            members[c].add(v)
        return cls(community_of, {c: frozenset(m) for c, m in members.items()})

    def __len__(self) -> int:
        return len(self.communities)


@dataclass(frozen=True)
class ModularityContext:
    total_weight: float  # W = half the sum of all adjacency entries
    strength: Mapping[int, float]

    @classmethod
    def of(cls, graph: HardwareGraph) -> "ModularityContext":
        s = {v: graph.weighted_degree(v) for v in sorted(graph.vertices)}
        return cls(0.5 * sum(s.values()), s)


def modularity(graph: HardwareGraph, p: Partition) -> float:
    if set(p.community_of) != set(graph.vertices):
        raise ValueError("partition does not cover exactly the graph's vertex set")
    ctx = ModularityContext.of(graph)
    two_w = 2.0 * ctx.total_weight
    if two_w <= 0.0:
        raise ValueError("modularity is undefined on a graph without edges")
    inside = [0.0] * len(p.communities)
    tot = [0.0] * len(p.communities)
    for v, c in p.community_of.items():
        tot[c] += ctx.strength[v]
        for u, w in graph.adj[v].items():
            if p.community_of[u] == c:
                inside[c] += w
    return sum(i / two_w - (t / two_w) ** 2 for i, t in zip(inside, tot))


def _gain(k_in: float, tot: float, s: float, w: float) -> float:
    # modularity gained by inserting an isolated node of strength s into a
    # community of total strength tot, to which it links with weight k_in
    return k_in / w - s * tot / (2.0 * w * w)


def delta_modularity(graph: HardwareGraph, p: Partition, v: int, target: int) -> float:
    """Modularity change of moving vertex ``v`` into community ``target``, computed incrementally."""
    ctx = ModularityContext.of(graph)
    own = p.community_of[v]
    if target == own:
        return 0.0
    k = {own: 0.0, target: 0.0}
    for u, w in graph.adj[v].items():
        c = p.community_of[u]
        if u != v and c in k:
            k[c] += w
    tot_own = sum(ctx.strength[u] for u in p.communities[own]) - ctx.strength[v]
    tot_target = sum(ctx.strength[u] for u in p.communities.get(target, ()))
    s = ctx.strength[v]
    w = ctx.total_weight
    return _gain(k[target], tot_target, s, w) - _gain(k[own], tot_own, s, w)


class _Level:
    """Compact weighted graph on nodes 0..n-1; ``adj[i][i]`` holds the diagonal entry."""

    def __init__(self, adj: list[dict[int, float]]):
        self.adj = adj
        self.n = len(adj)
        self.strength = [sum(row.values()) for row in adj]
        self.w = 0.5 * sum(self.strength)

    def aggregate(self, com: list[int]) -> "_Level":
        k = max(com) + 1
        new: list[dict[int, float]] = [dict() for _ in range(k)]
        for i, row in enumerate(self.adj):
            ci = com[i]
            for j, w in row.items():
                cj = com[j]
                new[ci][cj] = new[ci].get(cj, 0.0) + w
        return _Level(new)


def _local_moves(level: _Level, com: list[int], rng: np.random.Generator) -> bool:
    """Move nodes between neighbouring communities until a pass gains < PASS_TOLERANCE.

    Mutates ``com``; returns whether any node moved.
    """
    if level.w <= 0.0:
        return False
    w = level.w
    tot = [0.0] * level.n
    for i, c in enumerate(com):
        tot[c] += level.strength[i]
    moved_any = False
    while True:
        pass_gain = 0.0
        moved = False
        for i in rng.permutation(level.n):
            i = int(i)
            own = com[i]
            s = level.strength[i]
            links: dict[int, float] = {}
            for j, wij in level.adj[i].items():
                if j != i:
                    links[com[j]] = links.get(com[j], 0.0) + wij
            tot[own] -= s
            stay = _gain(links.get(own, 0.0), tot[own], s, w)
            best, best_gain = own, stay
            for c in sorted(links):
                if c == own:
                    continue
                g = _gain(links[c], tot[c], s, w)
                # strict comparison over a sorted scan: lowest id wins exact ties
                if g > best_gain:
                    best, best_gain = c, g
            tot[best] += s
            if best != own:
                com[i] = best
                pass_gain += best_gain - stay
                moved = True
                moved_any = True
        if not moved or pass_gain < PASS_TOLERANCE:
            return moved_any


def _dense(com: list[int]) -> list[int]:
    remap: dict[int, int] = {}
    return [remap.setdefault(c, len(remap)) for c in com]


@dataclass(frozen=True)
class LouvainResult:
    partition: Partition
    levels: tuple[Partition, ...]


def louvain_hierarchy(
    graph: HardwareGraph, seed: int = 0, order: Sequence[int] | None = None
) -> LouvainResult:
    """Run Louvain and keep every aggregation level.

    ``order`` fixes the base vertex ordering (default: ascending ids); the
    per-pass visit order is a seeded shuffle of positions in that ordering, so
    relabelling vertices together with ``order`` relabels the output.
    After the last aggregation a final local-move pass on the original graph
    makes the returned partition locally optimal for single-vertex moves.
    """
    base = list(sorted(graph.vertices) if order is None else order)
    if set(base) != set(graph.vertices) or len(base) != len(graph.vertices):
        raise ValueError("order must be a permutation of the graph's vertices")
    if not base:
        raise ValueError("graph has no vertices")
    pos = {v: i for i, v in enumerate(base)}
    rng = np.random.default_rng(seed)

    finest = _Level([{pos[u]: w for u, w in graph.adj[v].items()} for v in base])
    level = finest
    node_of = list(range(len(base)))  # original position -> node at current level
    levels: list[Partition] = []
    while True:
        com = list(range(level.n))
        moved = _local_moves(level, com, rng)
        if levels and not moved:
            break
        com = _dense(com)
        node_of = [com[node_of[i]] for i in range(len(base))]
        levels.append(Partition.from_labels({base[i]: node_of[i] for i in range(len(base))}, base))
        if not moved or max(com) + 1 == level.n:
            break
        level = level.aggregate(com)

    refined = list(node_of)
    if _local_moves(finest, refined, rng):
        refined = _dense(refined)
    final = Partition.from_labels({base[i]: refined[i] for i in range(len(base))}, base)
    if final.community_of != levels[-1].community_of:
        levels.append(final)
    return LouvainResult(final, tuple(levels))


def louvain(graph: HardwareGraph, seed: int = 0, order: Sequence[int] | None = None) -> Partition:
    return louvain_hierarchy(graph, seed, order).partition


def candidate_communities(
    graph: HardwareGraph, seed: int = 0, min_size: int = 3
) -> list[frozenset[int]]:
    """Connected communities of at least ``min_size`` vertices from every hierarchy level."""
    if not graph.vertices:
        return []
    result = louvain_hierarchy(graph, seed)
    seen: set[frozenset[int]] = set()
    out: list[frozenset[int]] = []
    for part in result.levels:
        for c in range(len(part)):
            for comp in components(graph, part.communities[c]):
                fs = frozenset(comp)
                if len(fs) >= min_size and fs not in seen:
                    seen.add(fs)
                    out.append(fs)
    out.sort(key=lambda s: (min(s), len(s), sorted(s)))
    return out

