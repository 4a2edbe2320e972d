"""Minimisation of the inner minimum energy ``psi`` over partitions.

Partitions are parameterised by log-widths ``x_i = log(r_i - r_{i-1})``,
which maps the ordered cone ``0 < r_1 < ... < r_k`` onto R^k.  A Nelder-Mead
simplex runs from three seed partitions.  Points too close to the boundary of
the cone, or with ``r_k`` too close to the truncation radius, receive a
barrier value and are never reported as the optimum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .config import SolverConfig
from .errors import SearchFailed, SolverError
from .inner_solver import SolutionBundle, minimize_fixed_partition
from .partition_grid import AnnularPartition, make_partition

__all__ = [
    "PsiEvaluation",
    "OuterResult",
    "PsiEvaluator",
    "psi",
    "optimize_partition",
    "seed_partitions",
    "radii_from_log_widths",
    "log_widths",
]

log = logging.getLogger(__name__)

MIN_WIDTH_RATIO = 1e-3
MAX_TAIL_RATIO = 0.8
BARRIER = 1e6


@dataclass(frozen=True, eq=False)
class PsiEvaluation:
    partition: AnnularPartition
    psi: float
    bundle: SolutionBundle


@dataclass(eq=False)
class OuterResult:
    best_partition: AnnularPartition
    best_bundle: SolutionBundle
    trace: list[tuple[AnnularPartition, float]] = field(default_factory=list)
    converged: bool = False
    starts: list[dict] = field(default_factory=list)

    @property
    def best_psi(self) -> float:
        return self.best_bundle.energy


def radii_from_log_widths(x) -> np.ndarray:
    return np.cumsum(np.exp(np.asarray(x, dtype=float)))


def log_widths(radii) -> np.ndarray:
    return np.log(np.diff(np.concatenate(([0.0], np.asarray(radii, dtype=float)))))


def guard_violation(partition: AnnularPartition, r_infty: float) -> float:
    """Zero inside the admissible region, positive outside it."""
    if partition.k == 0:
        return 0.0
    r_k = partition.radii[-1]
    widths = partition.widths()
    v = max(0.0, MIN_WIDTH_RATIO * r_k - float(np.min(widths))) / r_k
    v += max(0.0, r_k - MAX_TAIL_RATIO * r_infty) / r_infty
    return v


class PsiEvaluator:
    """Cached ``psi`` for one configuration.

    Inner solves are warm-started from the bundle of the most recent
    successful evaluation.
    """

    def __init__(self, config: SolverConfig, warm_start: bool = True):
        self.config = config
        self.warm_start = warm_start
        self.cache: dict[tuple[float, ...], PsiEvaluation] = {}
        self.failures: dict[tuple[float, ...], str] = {}
        self._last: SolutionBundle | None = None

    def __call__(self, partition: AnnularPartition) -> PsiEvaluation:
        key = partition.key()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        initial = self._last if self.warm_start else None
        try:
            bundle = minimize_fixed_partition(partition, self.config, initial=initial)
        except SolverError:
            if initial is None:
                raise
            bundle = minimize_fixed_partition(partition, self.config)
        ev = PsiEvaluation(partition, bundle.energy, bundle)
        self.cache[key] = ev
        self._last = bundle
        return ev

    def objective(self, partition: AnnularPartition) -> tuple[float, PsiEvaluation | None]:
        """``psi`` or a barrier value when the guards fire or the solve fails."""
        v = guard_violation(partition, self.config.r_infty)
        if v > 0:
            return BARRIER * (1.0 + v), None
        key = partition.key()
        if key in self.failures:
            return BARRIER, None
        try:
            ev = self(partition)
        except SolverError as exc:
            self.failures[key] = exc.code
            log.debug("psi failed at %s: %s", partition.radii, exc)
            return BARRIER, None
        return ev.psi, ev


def psi(partition, config: SolverConfig, evaluator: PsiEvaluator | None = None) -> PsiEvaluation:
    if not isinstance(partition, AnnularPartition):
        partition = make_partition(partition)
    if evaluator is None:
        evaluator = PsiEvaluator(config, warm_start=False)
    return evaluator(partition)


def seed_partitions(k: int, config: SolverConfig) -> list[np.ndarray]:
    """Uniform, geometric and wide-tail seeds with seeded multiplicative jitter."""
    rng = np.random.default_rng(config.seed)
    base = 0.9
    seeds = [
        base * np.arange(1, k + 1),
        base * 0.6 * (1.8 ** np.arange(1, k + 1) - 1) / 0.8,
        np.concatenate((base * 0.8 * np.arange(1, k), [base * (0.8 * (k - 1) + 2.0)]))
        if k > 1
        else np.array([2.0 * base]),
    ]
    out = []
    for s in seeds:
        widths = np.diff(np.concatenate(([0.0], s)))
        widths = widths * np.exp(0.05 * rng.standard_normal(k))
        out.append(np.cumsum(widths))
    return out


def _admissible_seed(radii: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Pull a seed back inside the guards (coercivity reseeding)."""
    radii = np.asarray(radii, dtype=float)
    for _ in range(200):
        part = make_partition(radii)
        if guard_violation(part, config.r_infty) == 0.0:
            return radii
        widths = np.diff(np.concatenate(([0.0], radii)))
        if radii[-1] > MAX_TAIL_RATIO * config.r_infty:
            widths = widths * 0.5
        widths = np.maximum(widths, 2 * MIN_WIDTH_RATIO * widths.sum())
        radii = np.cumsum(widths)
    raise SearchFailed("could not move seed inside the admissible region")


def optimize_partition(
    k: int,
    config: SolverConfig,
    seeds=None,
    initial_step: float = 0.15,
    evaluator: PsiEvaluator | None = None,
) -> OuterResult:
    """Multi-start Nelder-Mead over log-widths.

    Each start stops when the simplex diameter is at most ``config.tol_r``
    (in log-width units) and the spread of ``psi`` over the simplex is at most
    ``config.tol_psi``; it may use ``config.max_outer_evals`` objective calls.
    """
    if k < 1:
        raise ValueError("k must be >= 1; k = 0 needs no search")
    if config.k != k:
        config = config.with_(k=k)
    evaluator = evaluator or PsiEvaluator(config)
    if seeds is None:
        seeds = seed_partitions(k, config)
    trace: list[tuple[AnnularPartition, float]] = []
    best: PsiEvaluation | None = None
    starts = []
    any_converged = False

    def fun(x):
        nonlocal best
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 50):
            return BARRIER * 2
        part = make_partition(radii_from_log_widths(x))
        value, ev = evaluator.objective(part)
        trace.append((part, value))
        if ev is not None and (
            best is None
            or ev.psi < best.psi
            or (ev.psi == best.psi and part.radii < best.partition.radii)
        ):
            best = ev
        return value

    for seed in seeds:
        seed = _admissible_seed(np.asarray(seed, dtype=float), config)
        x0 = log_widths(seed)
        simplex = np.vstack([x0] + [x0 + initial_step * e for e in np.eye(k)])
        res = minimize(
            fun,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": config.tol_r,
                "fatol": config.tol_psi,
                "maxfev": config.max_outer_evals,
                "maxiter": 10 * config.max_outer_evals,
            },
        )
        ok = bool(res.success)
        any_converged |= ok
        starts.append(
            {
                "seed": tuple(float(r) for r in seed),
                "radii": tuple(float(r) for r in radii_from_log_widths(res.x)),
                "psi": float(res.fun),
                "converged": ok,
                "evaluations": int(res.nfev),
            }
        )
        log.info("start %s -> %s psi=%.12g converged=%s", seed, starts[-1]["radii"], res.fun, ok)

    if best is None:
        raise SearchFailed("no admissible partition could be evaluated")
    if not any_converged:
        raise SearchFailed("every start exhausted its evaluation budget")
    return OuterResult(best.partition, best.bundle, trace, any_converged, starts)
