"""Solver configuration."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError, ExponentOutOfRange

__all__ = ["SolverConfig", "load_config"]


@dataclass(frozen=True)
class SolverConfig:
    p: float = 3.0
    k: int = 1
    points_per_annulus: int = 2000
    r_infty: float = 30.0
    kappa: float = 1.0
    tol_nehari: float = 1e-12
    tol_grad: float = 1e-7
    tol_r: float = 1e-4
    tol_psi: float = 1e-9
    jump_threshold: float = 1e-2
    max_inner_iters: int = 5000
    max_outer_evals: int = 400
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.p, (int, float)) or not math.isfinite(self.p):
            raise ConfigError("p", "must be a finite number")
        if not 2.5 < self.p < 5.0:
            raise ExponentOutOfRange(self.p)
        if int(self.k) != self.k or self.k < 0:
            raise ConfigError("k", "must be a non-negative integer")
        if int(self.points_per_annulus) != self.points_per_annulus or self.points_per_annulus < 4:
            raise ConfigError("points_per_annulus", "must be an integer >= 4")
        if not self.r_infty > 0 or not math.isfinite(self.r_infty):
            raise ConfigError("r_infty", "must be positive and finite")
        if not self.kappa > 0:
            raise ConfigError("kappa", "must be positive")
        for name in ("tol_nehari", "tol_grad", "tol_r", "tol_psi", "jump_threshold"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for name in ("max_inner_iters", "max_outer_evals"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError(name, "must be a positive integer")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | Path, **overrides) -> SolverConfig:
    """Read a JSON config file; non-``None`` keyword overrides win."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config", "top-level JSON value must be an object")
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration field")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig(**raw)
