"""Overridable constants for scoring, allocation and simulation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

# JSON config schema: every key optional, unknown keys rejected.
CONFIG_SCHEMA = {
    "score_weights": "4 non-negative reals summing to 1: connectivity, gate, readout, uniformity",
    "fitness_weights": "3 non-negative reals: size, connectivity, quality",
    "compose_weights": "3 non-negative reals: quality, connectivity, bridge",
    "min_region_size": "int >= 2",
    "shots": "int >= 1",
    "seed": "int",
    "one_qubit_depol": "real in [0, 1]",
}


@dataclass(frozen=True)
class Config:
    score_weights: tuple[float, float, float, float] = (0.25, 0.35, 0.20, 0.20)
    fitness_weights: tuple[float, float, float] = (0.2, 0.4, 0.4)
    compose_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    min_region_size: int = 3
    shots: int = 1024
    seed: int = 0
    one_qubit_depol: float = 1e-4

    def __post_init__(self):
        for name in ("score_weights", "fitness_weights", "compose_weights"):
            vals = tuple(float(x) for x in getattr(self, name))
            object.__setattr__(self, name, vals)
            if any(x < 0 for x in vals):
                raise ValueError(f"{name} must be non-negative")
        if len(self.score_weights) != 4 or abs(sum(self.score_weights) - 1.0) > 1e-9:
            raise ValueError("score_weights must be 4 values summing to 1")
        if len(self.fitness_weights) != 3 or len(self.compose_weights) != 3:
            raise ValueError("fitness_weights and compose_weights take 3 values each")
        if self.min_region_size < 2:
            raise ValueError("min_region_size must be >= 2")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0.0 <= self.one_qubit_depol <= 1.0:
            raise ValueError("one_qubit_depol must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | Path | None, **overrides) -> Config:
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        known = {f.name for f in fields(Config)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**raw)
