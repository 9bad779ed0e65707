"""Online best-fit allocation, multi-region composition, and deferred-retry batching."""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .calibration import HardwareGraph, edge_key
from .config import Config
from .regions import Region, RegionPool, RegionScores, connectivity, gate_quality, induced_edges, score_region


class AllocationError(Exception):
    pass


class NoFeasibleRegion(AllocationError):
    """No free region (or composition of free regions) can host the request right now."""


class CompositionFailed(NoFeasibleRegion):
    pass


class WidthExceedsHardware(AllocationError):
    """The request is wider than the device's operational qubit count."""


@dataclass(frozen=True)
class AllocationRequest:
    circuit_id: str
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be >= 1")


@dataclass(frozen=True)
class Allocation:
    circuit_id: str
    region_ids: tuple[int, ...]
    physical_vertices: frozenset[int]
    pi: Mapping[int, int]
    composed: bool = False
    bridge_edges: frozenset[tuple[int, int]] = frozenset()
    scores: RegionScores | None = None
    fitness: float = 0.0

    def to_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "region_ids": list(self.region_ids),
            "physical_vertices": sorted(self.physical_vertices),
            "pi": {str(k): v for k, v in sorted(self.pi.items())},
            "composed": self.composed,
            "bridge_edges": [list(e) for e in sorted(self.bridge_edges)],
            "fitness": self.fitness,
        }


def size_score(region_size: int, n: int) -> float:
    if region_size < n:
        return 0.0
    if region_size == n:
        return 1.0
    return math.exp(-0.5 * (region_size - n) / n)


def fitness(region: Region, n: int, weights: Sequence[float] = Config().fitness_weights) -> float:
    """Best-fit score; undersized regions are infeasible and score 0 outright."""
    if region.size < n:
        return 0.0
    w_size, w_conn, w_q = weights
    return w_size * size_score(region.size, n) + w_conn * region.scores.s_conn + w_q * region.scores.q


def _placeholder_pi(vertices: Iterable[int], n: int) -> dict[int, int]:
    return {i: v for i, v in enumerate(sorted(vertices)[:n])}


class AllocationState:
    """Occupancy of a region pool. ``allocate``/``release`` are serialised by a lock."""

    def __init__(self, pool: RegionPool, graph: HardwareGraph | None = None, config: Config | None = None):
        self.pool = pool
        self.graph = graph if graph is not None else pool.graph
        self.config = config or Config()
        self.busy: set[int] = set()
        self.active: dict[str, Allocation] = {}
        self._lock = threading.Lock()
        self._hw_size = len(self.graph.vertices) if self.graph is not None else len(pool.covered)

    def free_regions(self) -> list[Region]:
        return [r for r in self.pool.regions if r.id not in self.busy]

    def allocate(self, req: AllocationRequest) -> Allocation:
        with self._lock:
            if req.circuit_id in self.active:
                raise AllocationError(f"circuit {req.circuit_id!r} is already allocated")
            n = req.width
            if n > self._hw_size:
                raise WidthExceedsHardware(f"{req.circuit_id}: {n} qubits > {self._hw_size} operational")
            best: Region | None = None
            best_key = None
            for r in self.free_regions():
                if r.size < n:
                    continue
                f = fitness(r, n, self.config.fitness_weights)
                # ties: smaller region, then lower id
                key = (-f, r.size, r.id)
                if best_key is None or key < best_key:
                    best, best_key = r, key
            if best is not None:
                alloc = Allocation(
                    req.circuit_id,
                    (best.id,),
                    best.vertices,
                    _placeholder_pi(best.vertices, n),
                    scores=best.scores,
                    fitness=-best_key[0],
                )
            else:
                alloc = self._compose(req.circuit_id, n)
            self.busy.update(alloc.region_ids)
            self.active[req.circuit_id] = alloc
            return alloc

    def compose(self, n: int, circuit_id: str = "") -> Allocation:
        with self._lock:
            alloc = self._compose(circuit_id, n)
            self.busy.update(alloc.region_ids)
            self.active[circuit_id] = alloc
            return alloc

    def _compose(self, circuit_id: str, n: int) -> Allocation:
        g = self.graph
        if g is None:
            raise CompositionFailed("composition needs the hardware graph")
        free = self.free_regions()
        if not free:
            raise NoFeasibleRegion(f"{circuit_id}: every region is busy")
        w_q, w_conn, w_bridge = self.config.compose_weights
        seed = min(free, key=lambda r: (-r.size, -r.q, r.id))
        chosen = [seed]
        footprint = set(seed.vertices)
        bridges: set[tuple[int, int]] = set()
        while len(footprint) < n:
            best = None
            for r in free:
                if r in chosen or not footprint.isdisjoint(r.vertices):
                    continue
                e_b = [edge_key(u, v) for u in r.vertices for v in g.adj[u] if v in footprint]
                if not e_b:
                    continue
                merged = footprint | r.vertices
                s_conn = connectivity(len(merged), len(induced_edges(g, merged)))
                s_bridge = gate_quality([g.edge_error[e] for e in e_b])
                s = w_q * r.q + w_conn * s_conn + w_bridge * s_bridge
                if best is None or s > best[0]:
                    best = (s, r, e_b)
            if best is None:
                raise CompositionFailed(
                    f"{circuit_id}: no free region adjacent to a {len(footprint)}-qubit footprint (need {n})"
                )
            _, r, e_b = best
            chosen.append(r)
            footprint |= r.vertices
            bridges.update(e_b)
        if not g.is_connected(footprint):
            raise CompositionFailed(f"{circuit_id}: composed footprint is disconnected")
        scores = score_region(g, footprint, self.config.score_weights)
        merged = Region(-1, frozenset(footprint), frozenset(induced_edges(g, footprint)), scores)
        return Allocation(
            circuit_id,
            tuple(r.id for r in chosen),
            frozenset(footprint),
            _placeholder_pi(footprint, n),
            composed=len(chosen) > 1,
            bridge_edges=frozenset(bridges),
            scores=scores,
            fitness=fitness(merged, n, self.config.fitness_weights),
        )

    def release(self, circuit_id: str) -> None:
        with self._lock:
            try:
                alloc = self.active.pop(circuit_id)
            except KeyError:
                raise AllocationError(f"circuit {circuit_id!r} is not active") from None
            self.busy.difference_update(alloc.region_ids)

    def release_all(self) -> None:
        with self._lock:
            self.active.clear()
            self.busy.clear()


def allocate(state: AllocationState, req: AllocationRequest) -> Allocation:
    return state.allocate(req)


def compose(state: AllocationState, n: int, circuit_id: str = "") -> Allocation:
    return state.compose(n, circuit_id)


def release(state: AllocationState, circuit_id: str) -> None:
    state.release(circuit_id)


@dataclass
class Batch:
    index: int
    attempted: list[str]
    admitted: list[str]
    deferred: list[str]
    allocations: dict[str, Allocation] = field(default_factory=dict)
    sweep: bool = False
    new_arrivals: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "sweep": self.sweep,
            "attempted": self.attempted,
            "admitted": self.admitted,
            "deferred": self.deferred,
            "regions_used": sum(len(a.region_ids) for a in self.allocations.values()),
            "allocations": [self.allocations[c].to_dict() for c in self.admitted],
        }


@dataclass
class BatchReport:
    batches: list[Batch]
    infeasible: list[str]
    n_circuits: int
    queue_sizes: list[int] = field(default_factory=list)

    @property
    def jobs_used(self) -> int:
        return sum(1 for b in self.batches if b.admitted)

    @property
    def cost_reduction(self) -> float:
        return 1.0 - self.jobs_used / self.n_circuits if self.n_circuits else 0.0

    @property
    def executed(self) -> list[Batch]:
        return [b for b in self.batches if b.admitted]

    def to_dict(self) -> dict:
        return {
            "n_circuits": self.n_circuits,
            "jobs_used": self.jobs_used,
            "cost_reduction": self.cost_reduction,
            "infeasible": self.infeasible,
            "retry_queue_sizes": self.queue_sizes,
            "batches": [b.to_dict() for b in self.batches],
        }


def schedule_batches(
    pool: RegionPool,
    workload: Sequence[AllocationRequest],
    batch_cap: int,
    graph: HardwareGraph | None = None,
    config: Config | None = None,
) -> BatchReport:
    """Deferred-retry batching.

    Each batch starts from a fully free pool, drains up to ``batch_cap``
    deferred requests first, then tops up with new arrivals. Requests that fail
    join the retry queue. Once arrivals are exhausted and a batch admits
    nothing, the leftovers get one individual attempt each against the free
    pool (the final sweep, composition included); what still fails is
    infeasible. Requests wider than the whole device skip straight to
    infeasible.
    """
    if batch_cap < 1:
        raise ValueError("batch_cap must be >= 1")
    state = AllocationState(pool, graph, config)
    arrivals = deque(workload)
    retry: deque[AllocationRequest] = deque()
    batches: list[Batch] = []
    infeasible: list[str] = []
    queue_sizes: list[int] = []

    while arrivals or retry:
        batch: list[AllocationRequest] = []
        while retry and len(batch) < batch_cap:
            batch.append(retry.popleft())
        fresh = 0
        while arrivals and len(batch) < batch_cap:
            batch.append(arrivals.popleft())
            fresh += 1
        rec = Batch(len(batches), [r.circuit_id for r in batch], [], [], new_arrivals=fresh)
        for req in batch:
            try:
                rec.allocations[req.circuit_id] = state.allocate(req)
                rec.admitted.append(req.circuit_id)
            except WidthExceedsHardware:
                infeasible.append(req.circuit_id)
            except NoFeasibleRegion:
                rec.deferred.append(req.circuit_id)
                retry.append(req)
        state.release_all()
        batches.append(rec)
        queue_sizes.append(len(retry))
        if not rec.admitted and fresh == 0:
            break

    for req in list(retry):
        rec = Batch(len(batches), [req.circuit_id], [], [], sweep=True)
        try:
            rec.allocations[req.circuit_id] = state.allocate(req)
            rec.admitted.append(req.circuit_id)
        except AllocationError:
            infeasible.append(req.circuit_id)
        state.release_all()
        if rec.admitted:
            batches.append(rec)
    return BatchReport(batches, infeasible, len(workload), queue_sizes)
