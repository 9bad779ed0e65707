"""Dense statevector evolution over the qubits a circuit actually touches.

States carry a leading batch axis so several trajectories evolve together.
Bitstrings put clbit 0 rightmost.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache

import numpy as np

from .ir import CircuitIR, Gate

MAX_QUBITS = 14

_S2 = 1.0 / np.sqrt(2.0)
FIXED = {
    "h": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
    # two-qubit matrices index |q0 q1> with q0 the first operand (control for cx)
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
PAULIS = (np.eye(2, dtype=complex), FIXED["x"], FIXED["y"], FIXED["z"])


@lru_cache(maxsize=4096)
def gate_matrix(kind: str, params: tuple[float, ...] = ()) -> np.ndarray:
    if kind in FIXED:
        return FIXED[kind]
    if kind == "rx":
        (t,) = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "ry":
        (t,) = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        (t,) = params
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if kind == "u":
        t, p, lam = params
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * p) * s, np.exp(1j * (p + lam)) * c]]
        )
    raise ValueError(f"no matrix for {kind!r}")


def apply_1q(state: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    """Apply a 2x2 unitary to local qubit ``axis`` of a batched state."""
    out = np.tensordot(u, state, axes=([1], [axis + 1]))
    return np.moveaxis(out, 0, axis + 1)


def apply_2q(state: np.ndarray, u: np.ndarray, a: int, b: int) -> np.ndarray:
    out = np.tensordot(u.reshape(2, 2, 2, 2), state, axes=([2, 3], [a + 1, b + 1]))
    return np.moveaxis(out, [0, 1], [a + 1, b + 1])


def apply_gate(state: np.ndarray, gate: Gate, local: dict[int, int]) -> np.ndarray:
    if gate.kind in ("measure", "barrier"):
        return state
    u = gate_matrix(gate.kind, gate.params)
    if len(gate.qubits) == 1:
        return apply_1q(state, u, local[gate.qubits[0]])
    return apply_2q(state, u, local[gate.qubits[0]], local[gate.qubits[1]])


def check_terminal_measures(circ: CircuitIR) -> None:
    done: set[int] = set()
    for g in circ.gates:
        if g.kind == "measure":
            done.add(g.qubits[0])
        elif g.kind != "barrier" and done.intersection(g.qubits):
            raise ValueError(f"{circ.name}: gate {g.kind} after measurement (mid-circuit measurement unsupported)")


def active_qubits(circ: CircuitIR) -> list[int]:
    active = circ.qubits_used()
    if len(active) > MAX_QUBITS:
        raise ValueError(f"{circ.name}: {len(active)} active qubits exceed the {MAX_QUBITS}-qubit simulation bound")
    return active


def zero_state(k: int, batch: int = 1) -> np.ndarray:
    state = np.zeros((batch,) + (2,) * k, dtype=complex)
    state[(slice(None),) + (0,) * k] = 1.0
    return state


def final_probabilities(circ: CircuitIR) -> tuple[list[int], np.ndarray]:
    """Noiseless outcome probabilities over the active qubits (C-order, first active qubit most significant)."""
    check_terminal_measures(circ)
    active = active_qubits(circ)
    local = {q: i for i, q in enumerate(active)}
    state = zero_state(len(active))
    for g in circ.gates:
        state = apply_gate(state, g, local)
    probs = np.abs(state.reshape(-1)) ** 2
    return active, probs


def outcome_bits(outcomes: np.ndarray, k: int) -> np.ndarray:
    """(n,) outcome indices -> (n, k) bits with column j = local qubit j."""
    shifts = np.arange(k - 1, -1, -1)
    return (outcomes[:, None] >> shifts[None, :]) & 1


def bits_to_keys(clbits: np.ndarray) -> list[str]:
    """(n, num_clbits) 0/1 array -> strings with clbit 0 rightmost."""
    if clbits.shape[1] == 0:
        return [""] * clbits.shape[0]
    chars = np.where(clbits[:, ::-1] == 1, "1", "0")
    return ["".join(row) for row in chars]


def ideal_distribution(circ: CircuitIR, tol: float = 0.0) -> dict[str, float]:
    """Exact output distribution over the classical register, clbit 0 rightmost."""
    active, probs = final_probabilities(circ)
    k = len(active)
    local = {q: i for i, q in enumerate(active)}
    measured = circ.measured()
    dist: dict[str, float] = defaultdict(float)
    nz = np.nonzero(probs > tol)[0]
    bits = outcome_bits(nz, k)
    clbits = np.zeros((len(nz), circ.num_clbits), dtype=np.int64)
    for q, c in measured.items():
        clbits[:, c] = bits[:, local[q]]
    for key, p in zip(bits_to_keys(clbits), probs[nz]):
        dist[key] += float(p)
    return dict(dist)
