"""Circuit IR, QASM front end, routing, composition and statevector simulation."""

from .ir import CircuitIR, Gate
from .qasm import QasmError, load_qasm, parse_qasm
from .routing import RouteCache, RoutedCircuit, RoutingError, route
from .statevector import ideal_distribution

__all__ = [
    "CircuitIR",
    "Gate",
    "QasmError",
    "load_qasm",
    "parse_qasm",
    "RouteCache",
    "RoutedCircuit",
    "RoutingError",
    "route",
    "ideal_distribution",
]
