"""Region scoring, greedy disjoint selection, and offline discovery."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .calibration import HardwareGraph
from .community import candidate_communities
from .config import Config

SCHEMA_VERSION = 1
DEFAULT_SCORE_WEIGHTS = Config().score_weights


@dataclass(frozen=True)
class RegionScores:
    s_conn: float
    s_gate: float
    s_ro: float
    s_unif: float
    q: float

    def to_dict(self) -> dict:
        return {"s_conn": self.s_conn, "s_gate": self.s_gate, "s_ro": self.s_ro, "s_unif": self.s_unif, "q": self.q}


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def induced_edges(graph: HardwareGraph, vertices: Iterable[int]) -> list[tuple[int, int]]:
    vs = set(vertices)
    return sorted((a, b) for a in vs for b in graph.adj[a] if a < b and b in vs)


def gate_quality(errors: Sequence[float]) -> float:
    """``max(0, 1 - 100 * mean error)``; also the bridge score used in composition."""
    return _clamp(1.0 - 100.0 * (sum(errors) / len(errors)))


def connectivity(n_vertices: int, n_edges: int) -> float:
    return _clamp(2.0 * n_edges / (n_vertices * (n_vertices - 1)))


def score_region(
    graph: HardwareGraph,
    vertices: Iterable[int],
    weights: Sequence[float] = DEFAULT_SCORE_WEIGHTS,
) -> RegionScores:
    vs = sorted(set(vertices))
    if len(vs) < 2:
        raise ValueError("a region needs at least two vertices")
    if not graph.is_connected(vs):
        raise ValueError(f"vertex set {vs} does not induce a connected subgraph")
    edges = induced_edges(graph, vs)
    errs = [graph.edge_error[e] for e in edges]
    s_conn = connectivity(len(vs), len(edges))
    s_gate = gate_quality(errs)
    s_ro = _clamp(1.0 - 10.0 * sum(graph.vertex_readout_error[v] for v in vs) / len(vs))
    mu = sum(errs) / len(errs)
    sigma = math.sqrt(sum((e - mu) ** 2 for e in errs) / len(errs))
    s_unif = 1.0 if sigma == 0.0 else _clamp(1.0 - sigma / mu)
    w_conn, w_gate, w_ro, w_unif = weights
    q = w_conn * s_conn + w_gate * s_gate + w_ro * s_ro + w_unif * s_unif
    return RegionScores(s_conn, s_gate, s_ro, s_unif, q)


@dataclass(frozen=True)
class Region:
    id: int
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]
    scores: RegionScores

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def q(self) -> float:
        return self.scores.q

    @property
    def density(self) -> float:
        return self.scores.q / len(self.vertices)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "vertices": sorted(self.vertices),
            "edges": [list(e) for e in sorted(self.edges)],
            "scores": self.scores.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Region":
        return cls(
            int(raw["id"]),
            frozenset(int(v) for v in raw["vertices"]),
            frozenset((int(a), int(b)) for a, b in raw["edges"]),
            RegionScores(**{k: float(v) for k, v in raw["scores"].items()}),
        )


def make_region(
    graph: HardwareGraph, region_id: int, vertices: Iterable[int], weights: Sequence[float] = DEFAULT_SCORE_WEIGHTS
) -> Region:
    vs = frozenset(vertices)
    return Region(region_id, vs, frozenset(induced_edges(graph, vs)), score_region(graph, vs, weights))


@dataclass(frozen=True)
class RegionPool:
    regions: tuple[Region, ...]
    covered: frozenset[int]
    uncovered: frozenset[int] = frozenset()
    graph: HardwareGraph | None = field(default=None, repr=False, compare=False)
    timings: Mapping[str, float] = field(default_factory=dict, compare=False)
    device: str = ""

    def __post_init__(self):
        seen: set[int] = set()
        for r in self.regions:
            if seen & r.vertices:
                raise ValueError(f"region {r.id} overlaps an earlier region")
            seen |= r.vertices
        if seen != set(self.covered):
            raise ValueError("covered must equal the union of region vertex sets")

    def by_id(self, region_id: int) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(region_id)

    @property
    def max_region_size(self) -> int:
        return max((r.size for r in self.regions), default=0)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "device": self.device,
            "regions": [r.to_dict() for r in self.regions],
            "covered": sorted(self.covered),
            "uncovered": sorted(self.uncovered),
            "graph": self.graph.to_dict() if self.graph is not None else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RegionPool":
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported pool schema_version {raw.get('schema_version')!r}")
        graph = HardwareGraph.from_dict(raw["graph"]) if raw.get("graph") else None
        regions = tuple(Region.from_dict(r) for r in raw["regions"])
        return cls(
            regions,
            frozenset(int(v) for v in raw["covered"]),
            frozenset(int(v) for v in raw["uncovered"]),
            graph,
            device=raw.get("device", ""),
        )


def load_pool(path) -> RegionPool:
    with open(path) as fh:
        return RegionPool.from_dict(json.load(fh))


def selection_order(candidates: Iterable[Region]) -> list[Region]:
    # quality density descending; ties: larger region, then lower id
    return sorted(candidates, key=lambda r: (-r.density, -r.size, r.id))


def select_pool(candidates: Iterable[Region]) -> RegionPool:
    """Greedy weighted set packing: scan by quality density, keep what stays disjoint."""
    used: set[int] = set()
    chosen: list[Region] = []
    for r in selection_order(candidates):
        if used.isdisjoint(r.vertices):
            chosen.append(r)
            used |= r.vertices
    return RegionPool(tuple(chosen), frozenset(used))


def discover(graph: HardwareGraph, seed: int = 0, config: Config | None = None) -> RegionPool:
    """Candidate communities -> scores -> disjoint pool, with per-stage wall-clock times."""
    cfg = config or Config()
    if not graph.vertices:
        raise ValueError("cannot discover regions on an empty graph")
    t0 = time.perf_counter()
    cands = candidate_communities(graph, seed, cfg.min_region_size)
    t1 = time.perf_counter()
    scored = [make_region(graph, i, vs, cfg.score_weights) for i, vs in enumerate(cands)]
    t2 = time.perf_counter()
    picked = select_pool(scored)
    t3 = time.perf_counter()
    regions = tuple(
        Region(i, r.vertices, r.edges, r.scores) for i, r in enumerate(picked.regions)
    )
    timings = {
        "community_detection_s": t1 - t0,
        "scoring_s": t2 - t1,
        "selection_s": t3 - t2,
        "total_s": t3 - t0,
        "candidates": float(len(cands)),
    }
    return RegionPool(
        regions,
        picked.covered,
        frozenset(graph.vertices - picked.covered),
        graph,
        timings,
    )
