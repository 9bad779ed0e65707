"""Calibration snapshots, the heavy-hex fixture generator, and the weighted hardware graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

EPS0 = 1e-6
DEAD_THRESHOLD = 0.5


class CalibrationError(ValueError):
    """Raised when a snapshot file is malformed or violates an invariant."""


def edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class QubitProps:
    index: int
    t1_us: float
    t2_us: float
    readout_error: float
    operational: bool = True


@dataclass(frozen=True)
class CouplerProps:
    q0: int
    q1: int
    gate_error: float
    operational: bool = True

    @property
    def endpoints(self) -> tuple[int, int]:
        return edge_key(self.q0, self.q1)


@dataclass(frozen=True)
class CalibrationSnapshot:
    device_name: str
    timestamp: str
    qubits: tuple[QubitProps, ...]
    couplers: tuple[CouplerProps, ...]

    def __post_init__(self):
        validate_snapshot(self)

    def to_dict(self) -> dict:
        return {
            "device": self.device_name,
            "timestamp": self.timestamp,
            "qubits": [
                {
                    "index": q.index,
                    "t1_us": q.t1_us,
                    "t2_us": q.t2_us,
                    "readout_error": q.readout_error,
                    "operational": q.operational,
                }
                for q in self.qubits
            ],
            "couplers": [
                {"q0": c.q0, "q1": c.q1, "gate_error": c.gate_error, "operational": c.operational}
                for c in self.couplers
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def validate_snapshot(snap: CalibrationSnapshot) -> None:
    seen: set[int] = set()
    for q in snap.qubits:
        if q.index < 0:
            raise CalibrationError(f"qubit index {q.index} is negative")
        if q.index in seen:
            raise CalibrationError(f"duplicate qubit index {q.index}")
        seen.add(q.index)
        if not 0.0 <= q.readout_error <= 1.0:
            raise CalibrationError(f"qubit {q.index}: readout_error {q.readout_error} outside [0, 1]")
        if not (q.t1_us > 0 and q.t2_us > 0):
            raise CalibrationError(f"qubit {q.index}: coherence times must be positive")
    pairs: set[tuple[int, int]] = set()
    for c in snap.couplers:
        if c.q0 == c.q1:
            raise CalibrationError(f"coupler ({c.q0},{c.q1}) has identical endpoints")
        for end in (c.q0, c.q1):
            if end not in seen:
                raise CalibrationError(f"coupler ({c.q0},{c.q1}) references missing qubit {end}")
        if c.endpoints in pairs:
            raise CalibrationError(f"duplicate coupler pair {c.endpoints}")
        pairs.add(c.endpoints)
        if not 0.0 <= c.gate_error <= 1.0:
            raise CalibrationError(f"coupler {c.endpoints}: gate_error {c.gate_error} outside [0, 1]")


def parse_snapshot(text: str | bytes) -> CalibrationSnapshot:
    """Parse calibration JSON; unknown fields are ignored."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise CalibrationError("top-level JSON value must be an object")
    try:
        qubits = tuple(
            QubitProps(
                index=int(q["index"]),
                t1_us=float(q["t1_us"]),
                t2_us=float(q["t2_us"]),
                readout_error=float(q["readout_error"]),
                operational=bool(q.get("operational", True)),
            )
            for q in raw["qubits"]
        )
        couplers = tuple(
            CouplerProps(
                q0=int(c["q0"]),
                q1=int(c["q1"]),
                gate_error=float(c["gate_error"]),
                operational=bool(c.get("operational", True)),
            )
            for c in raw["couplers"]
        )
    except (KeyError, TypeError) as exc:
        raise CalibrationError(f"missing or mistyped field: {exc}") from exc
    return CalibrationSnapshot(
        device_name=str(raw.get("device", "")),
        timestamp=str(raw.get("timestamp", "")),
        qubits=qubits,
        couplers=couplers,
    )


def load_snapshot(path) -> CalibrationSnapshot:
    with open(path, "rb") as fh:
        return parse_snapshot(fh.read())


@dataclass(frozen=True)
class HardwareGraph:
    """Operational qubits and couplers, with edge weight ``1 / (error + EPS0)``.

    ``adj`` maps each vertex to ``{neighbour: weight}``. ``flagged`` holds edges
    whose error reached the dead threshold; they stay in the graph with their
    (tiny) weight.
    """

    vertices: frozenset[int]
    edge_error: Mapping[tuple[int, int], float]
    vertex_readout_error: Mapping[int, float]
    adj: Mapping[int, Mapping[int, float]] = field(repr=False)
    flagged: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def from_edges(
        cls,
        vertices: Iterable[int],
        edge_error: Mapping[tuple[int, int], float],
        readout: Mapping[int, float] | None = None,
        dead_threshold: float = DEAD_THRESHOLD,
    ) -> "HardwareGraph":
        verts = frozenset(int(v) for v in vertices)
        errs: dict[tuple[int, int], float] = {}
        adj: dict[int, dict[int, float]] = {v: {} for v in sorted(verts)}
        for (a, b), e in sorted(edge_error.items()):
            key = edge_key(a, b)
            if a not in verts or b not in verts:
                raise ValueError(f"edge {key} has an endpoint outside the vertex set")
            errs[key] = float(e)
            w = 1.0 / (float(e) + EPS0)
            adj[a][b] = w
            adj[b][a] = w
        ro = {v: float((readout or {}).get(v, 0.0)) for v in sorted(verts)}
        flagged = frozenset(k for k, e in errs.items() if e >= dead_threshold)
        return cls(verts, errs, ro, adj, flagged)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edge_error)

    def weight(self, a: int, b: int) -> float:
        return self.adj[a][b]

    def weighted_degree(self, v: int) -> float:
        return sum(self.adj[v].values())

    def neighbors(self, v: int) -> Iterable[int]:
        return self.adj[v].keys()

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj.get(a, {})

    def subgraph(self, vertices: Iterable[int]) -> "HardwareGraph":
        vs = frozenset(vertices)
        missing = vs - self.vertices
        if missing:
            raise ValueError(f"vertices {sorted(missing)} not in graph")
        errs = {k: e for k, e in self.edge_error.items() if k[0] in vs and k[1] in vs}
        return HardwareGraph.from_edges(vs, errs, {v: self.vertex_readout_error[v] for v in vs})

    def is_connected(self, vertices: Iterable[int] | None = None) -> bool:
        vs = set(self.vertices if vertices is None else vertices)
        if not vs:
            return False
        return len(components(self, vs)[0]) == len(vs)

    def to_dict(self) -> dict:
        return {
            "vertices": sorted(self.vertices),
            "readout_error": [[v, self.vertex_readout_error[v]] for v in sorted(self.vertices)],
            "edges": [[a, b, e] for (a, b), e in sorted(self.edge_error.items())],
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "HardwareGraph":
        return cls.from_edges(
            raw["vertices"],
            {edge_key(int(a), int(b)): float(e) for a, b, e in raw["edges"]},
            {int(v): float(r) for v, r in raw["readout_error"]},
        )


def components(graph: HardwareGraph, vertices: Iterable[int]) -> list[list[int]]:
    """Connected components of the subgraph induced on ``vertices``, each sorted, largest first."""
    remaining = set(vertices)
    out = []
    for start in sorted(remaining):
        if start not in remaining:
            continue
        remaining.discard(start)
        comp = [start]
        stack = [start]
        while stack:
            u = stack.pop()
            for w in graph.adj[u]:
                if w in remaining:
                    remaining.discard(w)
                    comp.append(w)
                    stack.append(w)
        out.append(sorted(comp))
    out.sort(key=lambda c: (-len(c), c[0]))
    return out


def build_graph(snap: CalibrationSnapshot, dead_threshold: float = DEAD_THRESHOLD) -> HardwareGraph:
    """Single pass over the snapshot; non-operational qubits and couplers are dropped."""
    live = {q.index: q.readout_error for q in snap.qubits if q.operational}
    errs = {}
    for c in snap.couplers:
        if c.operational and c.q0 in live and c.q1 in live:
            errs[c.endpoints] = c.gate_error
    return HardwareGraph.from_edges(live.keys(), errs, live, dead_threshold)


# --- synthetic heavy-hex devices -------------------------------------------------


@dataclass(frozen=True)
class ErrorProfile:
    """Distribution of synthetic calibration errors.

    With ``clusters > 0`` the chip is split into graph-Voronoi zones around
    randomly chosen seed qubits. If ``zone_means`` is given, zones cycle through
    those mean gate errors with relative spread ``zone_spread``; otherwise each
    zone gets a random level and the resulting field is rescaled to exactly
    ``gate_mean`` / ``gate_std``.
    """

    gate_mean: float = 0.014
    gate_std: float = 0.007
    readout_mean: float = 0.015
    readout_std: float = 0.008
    clusters: int = 0
    zone_means: tuple[float, ...] | None = None
    zone_spread: float = 0.2
    seed: int = 0
    min_gate_error: float = 5e-4
    max_gate_error: float = 0.3


KINGSTON = ErrorProfile(gate_mean=0.014, gate_std=0.007, clusters=8, seed=2025)
UNIFORM = ErrorProfile(gate_mean=0.01, gate_std=0.001, clusters=0, seed=7)
BIMODAL = ErrorProfile(clusters=6, zone_means=(0.003, 0.03), zone_spread=0.15, seed=11)


def heavy_hex_coupling(rows: int, cols: int) -> tuple[int, list[tuple[int, int]]]:
    """Coupling list for a heavy-hex lattice of ``rows`` x ``cols`` hexagonal cells.

    Layout: ``rows + 1`` horizontal lines of ``4*cols + 4`` qubits each. Between
    line ``r`` and ``r + 1`` sits a row of ``cols + 1`` bridge qubits at line
    positions ``4j + 3`` (even ``r``) or ``4j + 1`` (odd ``r``). Indices run
    row-major: line 0, bridge row 0, line 1, bridge row 1, ... so that
    ``rows=7, cols=3`` gives a 156-qubit lattice with 176 couplers.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    length = 4 * cols + 4
    edges: list[tuple[int, int]] = []
    nxt = 0
    pending: list[tuple[int, int]] = []  # (bridge qubit, position on the next line)
    for r in range(rows + 1):
        line = list(range(nxt, nxt + length))
        nxt += length
        edges.extend(zip(line, line[1:]))
        for b, pos in pending:
            edges.append((line[pos], b))
        pending = []
        if r < rows:
            offset = 3 if r % 2 == 0 else 1
            for j in range(cols + 1):
                pos = 4 * j + offset
                b = nxt
                nxt += 1
                edges.append((line[pos], b))
                pending.append((b, pos))
    return nxt, sorted(edge_key(a, b) for a, b in edges)


def _zones(n: int, edges: list[tuple[int, int]], seeds: list[int]) -> list[int]:
    adj: dict[int, list[int]] = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    zone = [-1] * n
    frontier = []
    for z, s in enumerate(seeds):
        if zone[s] == -1:
            zone[s] = z
            frontier.append(s)
    while frontier:
        nxt = []
        for u in frontier:
            for w in sorted(adj[u]):
                if zone[w] == -1:
                    zone[w] = zone[u]
                    nxt.append(w)
        frontier = nxt
    return [z if z >= 0 else 0 for z in zone]


def generate_heavy_hex(
    rows: int,
    cols: int,
    error_profile: ErrorProfile = KINGSTON,
    device_name: str | None = None,
    timestamp: str = "2025-12-09T00:00:00Z",
) -> CalibrationSnapshot:
    n, edges = heavy_hex_coupling(rows, cols)
    p = error_profile
    rng = np.random.default_rng(p.seed)

    if p.clusters > 0:
        seeds = [int(s) for s in rng.choice(n, size=min(p.clusters, n), replace=False)]
        zone = _zones(n, edges, seeds)
        if p.zone_means:
            levels = [p.zone_means[z % len(p.zone_means)] for z in range(len(seeds))]
            qubit_level = np.array([levels[zone[v]] for v in range(n)])
            base = np.array([0.5 * (qubit_level[a] + qubit_level[b]) for a, b in edges])
            gate = base * (1.0 + p.zone_spread * rng.standard_normal(len(edges)))
        else:
            levels = rng.standard_normal(len(seeds))
            raw = np.array([0.5 * (levels[zone[a]] + levels[zone[b]]) for a, b in edges])
            raw = raw + 0.35 * rng.standard_normal(len(edges))
            gate = p.gate_mean + p.gate_std * (raw - raw.mean()) / raw.std()
    else:
        gate = p.gate_mean + p.gate_std * rng.standard_normal(len(edges))
    gate = np.clip(gate, p.min_gate_error, p.max_gate_error)

    readout = np.clip(p.readout_mean + p.readout_std * rng.standard_normal(n), 1e-3, 0.25)
    t1 = np.clip(rng.normal(250.0, 60.0, n), 20.0, None)
    t2 = np.clip(rng.normal(150.0, 50.0, n), 10.0, None)

    qubits = tuple(
        QubitProps(i, round(float(t1[i]), 3), round(float(t2[i]), 3), round(float(readout[i]), 6))
        for i in range(n)
    )
    couplers = tuple(CouplerProps(a, b, round(float(e), 6)) for (a, b), e in zip(edges, gate))
    name = device_name or f"heavyhex_{rows}x{cols}"
    return CalibrationSnapshot(name, timestamp, qubits, couplers)


def inject_defects(
    snap: CalibrationSnapshot,
    kill_couplers: Iterable[tuple[int, int]] = (),
    kill_qubits: Iterable[int] = (),
) -> CalibrationSnapshot:
    """Mark the given couplers and qubits non-operational."""
    dead_pairs = {edge_key(a, b) for a, b in kill_couplers}
    known = {c.endpoints for c in snap.couplers}
    unknown = dead_pairs - known
    if unknown:
        raise CalibrationError(f"no such coupler(s): {sorted(unknown)}")
    dead_q = set(kill_qubits)
    missing = dead_q - {q.index for q in snap.qubits}
    if missing:
        raise CalibrationError(f"no such qubit(s): {sorted(missing)}")
    qubits = tuple(replace(q, operational=False) if q.index in dead_q else q for q in snap.qubits)
    couplers = tuple(replace(c, operational=False) if c.endpoints in dead_pairs else c for c in snap.couplers)
    return replace(snap, qubits=qubits, couplers=couplers)


def random_dead_couplers(snap: CalibrationSnapshot, fraction: float, seed: int) -> list[tuple[int, int]]:
    live = sorted(c.endpoints for c in snap.couplers if c.operational)
    k = int(round(fraction * len(live)))
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(live), size=k, replace=False) if k else []
    return sorted(live[int(i)] for i in picks)


def graph_with_dead_links(snap: CalibrationSnapshot, dead_error: float = 1.0) -> HardwareGraph:
    """Graph that keeps non-operational couplers (between live qubits) at
    ``dead_error``: what a calibration-blind compiler would see."""
    live = {q.index: q.readout_error for q in snap.qubits if q.operational}
    errs = {}
    for c in snap.couplers:
        if c.q0 in live and c.q1 in live:
            errs[c.endpoints] = c.gate_error if c.operational else dead_error
    return HardwareGraph.from_edges(sorted(live), errs, live, DEAD_THRESHOLD)
