"""Composite programs built from disjoint routed segments, and count demultiplexing.

Within a segment, composite clbits follow physical-measure order: bit ``j`` of
the segment's slice holds the ``j``-th measured physical qubit, ascending,
which is how a backend reports a measured register. Demultiplexing maps each
position back through ``pi`` to the logical qubit and then to that qubit's
original classical bit.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .ir import CircuitIR, Gate
from .routing import RoutedCircuit


class CompositeError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    circuit_id: str
    routed: RoutedCircuit
    clbit_offset: int
    num_clbits: int
    measured_physical: tuple[int, ...]
    # for each raw position j: the tenant clbit it lands on
    target_clbit: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.measured_physical)

    def to_dict(self) -> dict:
        return {
            "circuit_id": self.circuit_id,
            "clbit_offset": self.clbit_offset,
            "num_clbits": self.num_clbits,
            "measured_physical": list(self.measured_physical),
            "routed": self.routed.to_dict(),
        }


@dataclass(frozen=True)
class CompositeCircuit:
    segments: tuple[Segment, ...]
    total_qubits: int
    total_clbits: int

    def segment(self, circuit_id: str) -> Segment:
        for s in self.segments:
            if s.circuit_id == circuit_id:
                return s
        raise KeyError(circuit_id)

    def circuit(self, name: str = "composite") -> CircuitIR:
        """The single program a backend would run: all segments side by side."""
        gates: list[Gate] = []
        for seg in self.segments:
            slot = {p: seg.clbit_offset + j for j, p in enumerate(seg.measured_physical)}
            for g in seg.routed.base.gates:
                if g.kind == "measure":
                    gates.append(Gate("measure", g.qubits, clbit=slot[g.qubits[0]]))
                else:
                    gates.append(g)
        return CircuitIR(name, self.total_qubits, self.total_clbits, tuple(gates))

    def to_dict(self) -> dict:
        return {
            "total_qubits": self.total_qubits,
            "total_clbits": self.total_clbits,
            "segments": [s.to_dict() for s in self.segments],
        }


def _segment(circuit_id: str, routed: RoutedCircuit, offset: int) -> Segment:
    measured = routed.base.measured()
    inv = {p: l for l, p in routed.pi.items()}
    phys = tuple(sorted(measured))
    for p in phys:
        if p not in inv:
            raise CompositeError(f"{circuit_id}: measured physical qubit {p} is not in pi's image")
    return Segment(
        circuit_id,
        routed,
        offset,
        routed.base.num_clbits,
        phys,
        tuple(measured[p] for p in phys),
    )


def combine(
    items: Sequence[tuple[str, RoutedCircuit]] | Mapping[str, RoutedCircuit], device_size: int
) -> CompositeCircuit:
    """Place routed circuits (already over global vertex ids) into one composite.

    Segments are ordered by circuit id and get cumulative clbit offsets sized
    by their classical registers; slice positions past the measured qubits
    stay 0.
    """
    pairs = list(items.items()) if isinstance(items, Mapping) else [(c, r) for c, r in items]
    pairs.sort(key=lambda t: t[0])
    ids = [c for c, _ in pairs]
    if len(set(ids)) != len(ids):
        raise CompositeError("duplicate circuit ids in composite")
    used: set[int] = set()
    segments = []
    offset = 0
    for cid, routed in pairs:
        touched = set(routed.footprint) | set(routed.base.qubits_used())
        if used & touched:
            raise CompositeError(f"{cid}: footprint overlaps another segment on {sorted(used & touched)}")
        if any(q >= device_size for q in touched):
            raise CompositeError(f"{cid}: footprint exceeds device size {device_size}")
        used |= touched
        seg = _segment(cid, routed, offset)
        segments.append(seg)
        offset += seg.num_clbits
    return CompositeCircuit(tuple(segments), device_size, offset)


def _check_key(key: str, n: int) -> None:
    if len(key) != n or any(ch not in "01" for ch in key):
        raise CompositeError(f"bitstring {key!r} does not have {n} binary digits")


def split_key(key: str, composite: CompositeCircuit) -> dict[str, str]:
    """Composite bitstring (clbit 0 rightmost) -> each tenant's logical bitstring."""
    _check_key(key, composite.total_clbits)
    out = {}
    n = composite.total_clbits
    for seg in composite.segments:
        bits = ["0"] * seg.num_clbits
        for j, c in enumerate(seg.target_clbit):
            bits[c] = key[n - 1 - (seg.clbit_offset + j)]
        out[seg.circuit_id] = "".join(reversed(bits))
    return out


def demultiplex(composite_counts: Mapping[str, int], composite: CompositeCircuit) -> dict[str, dict[str, int]]:
    per: dict[str, Counter] = {s.circuit_id: Counter() for s in composite.segments}
    for key, c in composite_counts.items():
        for cid, sub in split_key(key, composite).items():
            per[cid][sub] += c
    return {cid: dict(cnt) for cid, cnt in per.items()}


def join_keys(tenant_keys: Mapping[str, str], composite: CompositeCircuit) -> str:
    """Inverse of :func:`split_key`. Tenant clbits that no measure writes must be 0."""
    n = composite.total_clbits
    bits = ["0"] * n
    for seg in composite.segments:
        key = tenant_keys[seg.circuit_id]
        _check_key(key, seg.num_clbits)
        written = set(seg.target_clbit)
        for c in range(seg.num_clbits):
            if c not in written and key[seg.num_clbits - 1 - c] != "0":
                raise CompositeError(f"{seg.circuit_id}: clbit {c} is never measured but set in {key!r}")
        for j, c in enumerate(seg.target_clbit):
            bits[n - 1 - (seg.clbit_offset + j)] = key[seg.num_clbits - 1 - c]
    return "".join(bits)


def multiplex(
    tenant_memory: Mapping[str, Sequence[str]], composite: CompositeCircuit
) -> dict[str, int]:
    """Stitch per-tenant shot records (one logical bitstring per shot, equal
    shot counts) into composite counts, shot by shot."""
    lengths = {len(m) for m in tenant_memory.values()}
    if len(lengths) > 1:
        raise CompositeError("tenants have different shot counts")
    shots = lengths.pop() if lengths else 0
    counts: Counter = Counter()
    for i in range(shots):
        counts[join_keys({cid: tenant_memory[cid][i] for cid in tenant_memory}, composite)] += 1
    return dict(counts)


def raw_to_composite_keys(raw: Mapping[str, np.ndarray], composite: CompositeCircuit) -> list[str]:
    """Per-segment raw bit arrays (shots x width, column j = j-th measured
    physical qubit) -> composite bitstrings, clbit 0 rightmost."""
    n = composite.total_clbits
    shots = {arr.shape[0] for arr in raw.values()}
    if len(shots) != 1:
        raise CompositeError("segments have different shot counts")
    full = np.zeros((shots.pop(), n), dtype=np.uint8)
    for seg in composite.segments:
        arr = raw[seg.circuit_id]
        if arr.shape[1] != seg.width:
            raise CompositeError(f"{seg.circuit_id}: expected {seg.width} raw bits, got {arr.shape[1]}")
        full[:, seg.clbit_offset : seg.clbit_offset + seg.width] = arr
    chars = np.where(full[:, ::-1] == 1, "1", "0")
    return ["".join(r) for r in chars]
