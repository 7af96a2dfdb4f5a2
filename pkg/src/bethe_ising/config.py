"""Experiment configuration: a JSON file plus command-line overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from bethe_ising import degree_laws

# keys that do not influence numeric results
_NON_SEMANTIC = {"out", "workers"}


@dataclass
class ExperimentConfig:
    law: dict = field(default_factory=lambda: {"family": "regular", "params": {"k": 3}})
    graph_model: str = "configuration"
    sizes: list = field(default_factory=lambda: [1000, 10000, 100000])
    replicas: int = 1
    beta: float = 0.8
    B: float = 0.2
    betas: list = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    fields: list = field(default_factory=lambda: [0.1, 0.2, 0.5])
    pool_size: int = 100_000
    t_max: int = 1000
    tol: float = 1e-3
    mc_samples: int = 100_000
    derivatives: bool = True
    derivative_step: float = 1e-3
    zero_field_sequence: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    sweeps: int = 2000
    burn_in: int | None = None
    grid_step: float = 0.05
    suites: list = field(default_factory=lambda: ["all"])
    suite_scale: float = 1.0
    seed: int = 0
    out: str = "results"
    workers: int = 1

    def degree_law(self):
        return degree_laws.from_dict(self.law)

    def semantic_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in _NON_SEMANTIC}

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def metadata(self) -> dict:
        return {"config_hash": self.config_hash(), "seed": self.seed, "config": asdict(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def updated(self, **overrides) -> "ExperimentConfig":
        d = asdict(self)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return self.from_dict(d)
