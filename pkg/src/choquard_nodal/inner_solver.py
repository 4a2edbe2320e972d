"""Energy minimisation on the Nehari-type set for a fixed partition.

The iteration is a Riemannian gradient descent on the reduced functional
``u -> max_t E(t_1 u_1, ..., t_{k+1} u_{k+1})``:

1. H^1-gradient step on every component,
2. sign pattern ``(-1)**(i+1) |u_i|``,
3. rescaling back onto the set with :func:`choquard_nodal.nehari.project`.

On the set the H^1 gradient of component ``i`` is H^1-orthogonal to ``u_i``
(this is exactly ``F_i = 0``), so the step is tangent to the scaling orbits
and the energy decreases at first order.  Step sizes follow Barzilai-Borwein
with Armijo backtracking on the projected energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .config import SolverConfig
from .coulomb import potential_values
from .energy import (
    check_exponent,
    energy_from_terms,
    h_gradient_values,
    interaction_terms,
    signed_power,
)
from .errors import ComponentCollapsed, MaxIterationsExceeded, SolverError
from .nehari import InteractionData, NehariTuple, certify_manifold, project
from .partition_grid import AnnularPartition, RadialGrid, build_grid, make_partition
from .radial_field import ComponentField, RadialField, h_inner_values, radial_lhs

__all__ = [
    "SolutionBundle",
    "Residual",
    "initial_guess",
    "minimize_fixed_partition",
    "euler_lagrange_residual",
    "transplant",
]

COLLAPSE_RATIO = 1e-6


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    """Converged components ``(w_1, ..., w_{k+1})`` and diagnostics."""

    components: list[ComponentField]
    energy: float
    constraint_residual: float
    gradient_norm: float
    partition: AnnularPartition
    p: float
    iterations: int
    kappa: float = 1.0
    nehari: NehariTuple | None = None
    energy_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.components[0].grid

    @property
    def k(self) -> int:
        return self.partition.k

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([c.values for c in self.components])

    @cached_property
    def glued(self) -> RadialField:
        return RadialField(self.values.sum(axis=0), self.grid)

    @cached_property
    def norms_sq(self) -> np.ndarray:
        return h_inner_values(self.grid, self.values, self.values)


class Residual(NamedTuple):
    value: float
    degenerate: bool


def _signs(m: int) -> np.ndarray:
    return np.where(np.arange(m) % 2 == 0, 1.0, -1.0)


def _pattern(U: np.ndarray) -> np.ndarray:
    return _signs(U.shape[0])[:, None] * np.abs(U)


def _raw_guess(grid: RadialGrid) -> np.ndarray:
    t = grid.nodes
    m = grid.n_regions
    U = np.zeros((m, t.size))
    for i, (lo, hi) in enumerate(grid.partition.bounds(grid.r_infty), start=1):
        sl = grid.free_slice(i)
        s = t[sl]
        if m == 1:
            bump = np.exp(-s) * (1.0 - s / hi)
        elif i == 1:
            # the origin is not a boundary; start from a profile flat at t = 0
            bump = np.cos(0.5 * np.pi * s / hi) ** 2
        elif i == m:
            ramp = np.sin(0.5 * np.pi * np.minimum(s - lo, 1.0)) ** 2
            bump = ramp * np.exp(-(s - lo)) * (1.0 - (s - lo) / (hi - lo))
        else:
            bump = np.sin(np.pi * (s - lo) / (hi - lo)) ** 2
        U[i - 1, sl] = bump
    return _pattern(U)


class _State(NamedTuple):
    U: np.ndarray
    a: np.ndarray
    B: np.ndarray
    energy: float
    nehari: NehariTuple


def _check_collapse(grid: RadialGrid, U: np.ndarray) -> None:
    norms = np.sqrt(np.maximum(h_inner_values(grid, U, U), 0.0))
    if np.any(norms < COLLAPSE_RATIO * np.max(norms)) or not np.max(norms) > 0:
        raise ComponentCollapsed(f"component norms {norms} degenerate")


def _projected(grid, U, p, kappa, tol) -> _State:
    _check_collapse(grid, U)
    a, B = interaction_terms(grid, U, p, kappa)
    data = InteractionData(a, B)
    nt = project(data, p, tol=tol, initial=np.ones(a.size), certify=False)
    t = nt.t
    tp = t**p
    a2 = t**2 * a
    B2 = np.outer(tp, tp) * B
    return _State(U * t[:, None], a2, B2, energy_from_terms(a2, B2, p), nt)


def initial_guess(
    partition: AnnularPartition,
    grid: RadialGrid,
    p: float,
    kappa: float = 1.0,
    tol: float = 1e-12,
) -> list[ComponentField]:
    """Alternating-sign bumps, one per region, rescaled onto the Nehari set."""
    p = check_exponent(p)
    if grid.partition != partition:
        raise ValueError("grid was built for a different partition")
    state = _projected(grid, _raw_guess(grid), p, kappa, tol)
    return [ComponentField(state.U[i], grid, i + 1) for i in range(state.U.shape[0])]


def transplant(bundle: SolutionBundle, grid: RadialGrid) -> np.ndarray:
    """Map each component affinely onto the matching region of ``grid``.

    Bounded regions are stretched linearly; the exterior region is shifted so
    that its inner edge lands on the new ``r_k``.  Useful as a warm start.
    """
    old = bundle.grid
    if old.n_regions != grid.n_regions:
        raise ValueError("region counts differ")
    U = np.zeros((grid.n_regions, grid.n_nodes))
    m = grid.n_regions
    old_bounds = old.partition.bounds(old.r_infty)
    new_bounds = grid.partition.bounds(grid.r_infty)
    for i in range(1, m + 1):
        (olo, ohi), (nlo, nhi) = old_bounds[i - 1], new_bounds[i - 1]
        sl = grid.free_slice(i)
        s = grid.nodes[sl]
        if i < m:
            src = olo + (s - nlo) * (ohi - olo) / (nhi - nlo)
        else:
            src = olo + (s - nlo)
        U[i - 1, sl] = np.interp(src, old.nodes, bundle.values[i - 1], right=0.0)
    return U


def minimize_fixed_partition(
    partition: AnnularPartition | Sequence[float],
    config: SolverConfig,
    initial=None,
    grid: RadialGrid | None = None,
) -> SolutionBundle:
    """Minimise the energy over the Nehari set for ``partition``.

    ``initial`` may be a list of components, a stacked array, or a previous
    :class:`SolutionBundle` (mapped onto the new grid with :func:`transplant`).
    Stops when the relative H^1 gradient norm is at most ``config.tol_grad``.
    """
    if not isinstance(partition, AnnularPartition):
        partition = make_partition(partition)
    p = check_exponent(config.p)
    kappa = config.kappa
    tol = config.tol_nehari
    if grid is None:
        grid = build_grid(partition, config.points_per_annulus, config.r_infty)
    m = grid.n_regions

    if initial is None:
        U0 = _raw_guess(grid)
    elif isinstance(initial, SolutionBundle):
        U0 = transplant(initial, grid) if initial.grid is not grid else initial.values.copy()
    elif isinstance(initial, np.ndarray):
        U0 = np.array(initial, dtype=float)
    else:
        U0 = np.array([c.values for c in sorted(initial, key=lambda c: c.annulus_index)])
    if U0.shape != (m, grid.n_nodes):
        raise ValueError(f"initial guess has shape {U0.shape}, expected {(m, grid.n_nodes)}")

    state = _projected(grid, _pattern(U0), p, kappa, tol)
    G = h_gradient_values(grid, state.U, p, kappa)
    history = [state.energy]
    alpha = 1.0
    iterations = 0
    while True:
        g2 = float(np.sum(h_inner_values(grid, G, G)))
        unorm2 = float(np.sum(state.a))
        gnorm = np.sqrt(max(g2, 0.0) / unorm2)
        if gnorm <= config.tol_grad:
            break
        if iterations >= config.max_inner_iters:
            raise MaxIterationsExceeded(
                f"no convergence after {iterations} steps (gradient norm {gnorm:.3e})"
            )
        slack = 1e-14 * abs(state.energy)
        while True:
            try:
                trial = _projected(grid, _pattern(state.U - alpha * G), p, kappa, tol)
            except ComponentCollapsed:
                trial = None
            except SolverError:
                trial = None
            if trial is not None and trial.energy <= state.energy - 1e-4 * alpha * g2 + slack:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise MaxIterationsExceeded(
                    f"line search failed at step {iterations} (gradient norm {gnorm:.3e})"
                )
        G_new = h_gradient_values(grid, trial.U, p, kappa)
        s = trial.U - state.U
        y = G_new - G
        sy = float(np.sum(h_inner_values(grid, s, y)))
        ss = float(np.sum(h_inner_values(grid, s, s)))
        alpha = ss / sy if sy > 0 else 2.0 * alpha
        alpha = float(np.clip(alpha, 1e-6, 1e3))
        state, G = trial, G_new
        history.append(state.energy)
        iterations += 1

    F = state.a - state.B.sum(axis=1)
    components = [ComponentField(state.U[i], grid, i + 1) for i in range(m)]
    data = InteractionData(state.a, state.B)
    nt = NehariTuple(
        state.nehari.t,
        1.0,
        certify_manifold(data, np.ones(m), p),
        state.nehari.newton_iterations,
    )
    return SolutionBundle(
        components=components,
        energy=state.energy,
        constraint_residual=float(np.max(np.abs(F))),
        gradient_norm=float(gnorm),
        partition=partition,
        p=p,
        iterations=iterations,
        kappa=kappa,
        nehari=nt,
        energy_history=tuple(history),
    )


def euler_lagrange_residual(bundle: SolutionBundle) -> Residual:
    """Max-norm residual of each component's equation on its open region.

    ``-(t^2 u_i')' + t^2 u_i - t^2 Phi |u_i|^{p-2} u_i`` with ``Phi`` the
    potential of the glued profile, evaluated at interior nodes of every
    region (the origin excluded), divided by ``max |u_i|``.  The largest value
    over components is returned.
    """
    grid = bundle.grid
    U = bundle.values
    scale = np.max(np.abs(U), axis=1)
    if not np.any(scale > 0):
        return Residual(0.0, True)
    W = U.sum(axis=0)
    pot = potential_values(grid, np.abs(W) ** bundle.p, bundle.kappa)
    worst = 0.0
    degenerate = False
    for i in range(U.shape[0]):
        if scale[i] == 0:
            degenerate = True
            continue
        sl = grid.free_slice(i + 1)
        lo = max(sl.start, 1)
        lhs = radial_lhs(grid, U[i])
        rhs = grid.nodes * pot * signed_power(U[i], bundle.p)
        res = np.abs(lhs[lo : sl.stop] - rhs[lo : sl.stop]) / scale[i]
        worst = max(worst, float(np.max(res)))
    return Residual(worst, degenerate)
