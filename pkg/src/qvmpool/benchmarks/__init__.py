"""Bundled 29-circuit workload (2 to 10 qubits), in OpenQASM 2.0."""

from __future__ import annotations

from importlib import resources

from ..circuit.ir import CircuitIR
from ..circuit.qasm import parse_qasm


def names() -> list[str]:
    root = resources.files(__name__)
    return sorted(p.name[: -len(".qasm")] for p in root.iterdir() if p.name.endswith(".qasm"))


def load(name: str) -> CircuitIR:
    text = resources.files(__name__).joinpath(f"{name}.qasm").read_text()
    return parse_qasm(text, name)


def load_benchmarks(max_width: int | None = None) -> dict[str, CircuitIR]:
    """name -> circuit, in name order (the workload's arrival order)."""
    out = {n: load(n) for n in names()}
    if max_width is not None:
        out = {n: c for n, c in out.items() if c.num_qubits <= max_width}
    return out
