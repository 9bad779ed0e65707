from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

ONE_QUBIT = frozenset({"h", "x", "y", "z", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "u"})
TWO_QUBIT = frozenset({"cx", "cz", "swap"})
N_PARAMS = {"rx": 1, "ry": 1, "rz": 1, "u": 3}
KINDS = ONE_QUBIT | TWO_QUBIT | {"measure", "barrier"}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    clbit: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unsupported gate kind {self.kind!r}")
        if self.kind in ONE_QUBIT and len(self.qubits) != 1:
            raise ValueError(f"{self.kind} acts on one qubit")
        if self.kind in TWO_QUBIT and (len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]):
            raise ValueError(f"{self.kind} acts on two distinct qubits")
        if len(self.params) != N_PARAMS.get(self.kind, 0):
            raise ValueError(f"{self.kind} takes {N_PARAMS.get(self.kind, 0)} parameters")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("gate parameters must be finite")
        if (self.kind == "measure") != (self.clbit is not None):
            raise ValueError("exactly the measure gates carry a clbit")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def remap(self, mapping: Mapping[int, int]) -> "Gate":
        return Gate(self.kind, tuple(mapping[q] for q in self.qubits), self.params, self.clbit)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.params:
            d["params"] = list(self.params)
        if self.clbit is not None:
            d["clbit"] = self.clbit
        return d


@dataclass(frozen=True)
class CircuitIR:
    """Ordered gate list. Qubit operands are logical indices before routing and
    physical vertex ids after it, in which case ``num_qubits`` bounds the ids."""

    name: str
    num_qubits: int
    num_clbits: int
    gates: tuple[Gate, ...] = field(default=())

    def __post_init__(self):
        for g in self.gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise ValueError(f"{self.name}: operand out of range in {g}")
            if g.clbit is not None and not 0 <= g.clbit < self.num_clbits:
                raise ValueError(f"{self.name}: clbit out of range in {g}")

    def qubits_used(self) -> list[int]:
        return sorted({q for g in self.gates for q in g.qubits})

    def measured(self) -> dict[int, int]:
        """qubit -> clbit for every measure gate (the last one wins)."""
        return {g.qubits[0]: g.clbit for g in self.gates if g.kind == "measure"}

    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def depth(self) -> int:
        level: dict[int, int] = {}
        d = 0
        for g in self.gates:
            if g.kind == "barrier":
                continue
            t = 1 + max((level.get(q, 0) for q in g.qubits), default=0)
            for q in g.qubits:
                level[q] = t
            d = max(d, t)
        return max(d, 1)

    def structural_hash(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(f"{self.num_qubits}:{self.num_clbits}".encode())
        for g in self.gates:
            h.update(repr((g.kind, g.qubits, g.params, g.clbit)).encode())
        return h.hexdigest()

    def with_gates(self, gates: Iterable[Gate], num_qubits: int | None = None, name: str | None = None) -> "CircuitIR":
        return CircuitIR(name or self.name, self.num_qubits if num_qubits is None else num_qubits, self.num_clbits, tuple(gates))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "num_clbits": self.num_clbits,
            "gates": [g.to_dict() for g in self.gates],
        }
