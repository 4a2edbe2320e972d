"""Decomposed energy, Nehari constraint functions and the H^1 gradient.

For components ``u_1..u_{k+1}`` with disjoint supports

    E(u) = 1/2 sum_i ||u_i||^2 - 1/(2p) sum_{i,j} D(|u_i|^p, |u_j|^p)
    F_i(u) = ||u_i||^2 - sum_j D(|u_i|^p, |u_j|^p)

and ``E(u_1, ..., u_{k+1})`` coincides with the single-field energy of the
glued profile.  Internally everything runs on a stacked array ``U`` of shape
``(k + 1, n_nodes)``; the public functions accept lists of
:class:`~choquard_nodal.radial_field.ComponentField`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, LinAlgError

from .coulomb import energy_from_potential, potential_values
from .errors import ExponentOutOfRange, GridMismatch, SingularSolve
from .partition_grid import RadialGrid
from .radial_field import ComponentField, RadialField, h_apply, h_form_bands, h_inner_values

__all__ = [
    "EnergyBreakdown",
    "check_exponent",
    "total_energy",
    "single_field_energy",
    "constraint_values",
    "h_gradient",
    "interaction_terms",
    "signed_power",
]


def check_exponent(p: float) -> float:
    p = float(p)
    if not 2.5 < p < 5.0:
        raise ExponentOutOfRange(p)
    return p


def signed_power(u: np.ndarray, q: float) -> np.ndarray:
    """``|u|**(q-1) * u``; zero where ``u`` vanishes."""
    return np.sign(u) * np.abs(u) ** (q - 1.0)


@dataclass(frozen=True)
class EnergyBreakdown:
    norms_sq: np.ndarray
    self_interactions: np.ndarray
    cross_interactions: np.ndarray  # zero diagonal
    total: float

    @property
    def interaction_matrix(self) -> np.ndarray:
        return self.cross_interactions + np.diag(self.self_interactions)


def _stack(components: Sequence[ComponentField]) -> tuple[RadialGrid, np.ndarray]:
    if not components:
        raise ValueError("empty component list")
    grid = components[0].grid
    if any(c.grid is not grid for c in components):
        raise GridMismatch("components live on different grids")
    order = sorted(components, key=lambda c: c.annulus_index)
    if [c.annulus_index for c in order] != list(range(1, grid.n_regions + 1)):
        raise ValueError("need exactly one component per region")
    return grid, np.array([c.values for c in order])


def interaction_terms(
    grid: RadialGrid, U: np.ndarray, p: float, kappa: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Norms ``a_i = ||u_i||^2`` and the Gram matrix ``B_ij = D(|u_i|^p, |u_j|^p)``."""
    a = h_inner_values(grid, U, U)
    dens = np.abs(U) ** p
    pots = potential_values(grid, dens, kappa)
    B = (grid.line_weights * grid.nodes * dens) @ pots.T
    B = 0.5 * (B + B.T)
    return a, B


def energy_from_terms(a: np.ndarray, B: np.ndarray, p: float) -> float:
    return float(0.5 * np.sum(a) - np.sum(B) / (2.0 * p))


def total_energy(components: Sequence[ComponentField], p: float, kappa: float = 1.0) -> EnergyBreakdown:
    p = check_exponent(p)
    grid, U = _stack(components)
    a, B = interaction_terms(grid, U, p, kappa)
    cross = B - np.diag(np.diag(B))
    return EnergyBreakdown(a, np.diag(B).copy(), cross, energy_from_terms(a, B, p))


def single_field_energy(W: RadialField, p: float, kappa: float = 1.0) -> float:
    """``1/2 ||W||^2 - 1/(2p) D(|W|^p, |W|^p)`` evaluated on the whole grid."""
    p = check_exponent(p)
    grid = W.grid
    dens = np.abs(W.values) ** p
    D = energy_from_potential(grid, dens, potential_values(grid, dens, kappa))
    return float(0.5 * h_inner_values(grid, W.values, W.values) - D / (2.0 * p))


def constraint_values(components: Sequence[ComponentField], p: float, kappa: float = 1.0) -> np.ndarray:
    p = check_exponent(p)
    grid, U = _stack(components)
    a, B = interaction_terms(grid, U, p, kappa)
    return a - B.sum(axis=1)


class HelmholtzSolver:
    """Banded Cholesky factors of the H^1 form restricted to each region.

    ``solve(i, rhs)`` returns the Dirichlet solution on region ``i`` as a full
    nodal vector (zero outside the free nodes).
    """

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        diag, off = h_form_bands(grid)
        self._factors = []
        for i in range(1, grid.n_regions + 1):
            sl = grid.free_slice(i)
            d = diag[sl]
            ab = np.zeros((2, d.size))
            ab[1] = d
            ab[0, 1:] = off[sl][:-1]
            try:
                self._factors.append(cholesky_banded(ab, lower=False))
            except LinAlgError as exc:
                raise SingularSolve(f"H^1 form on region {i} is not positive definite") from exc

    def solve(self, i: int, rhs: np.ndarray) -> np.ndarray:
        sl = self.grid.free_slice(i)
        out = np.zeros(self.grid.n_nodes)
        out[sl] = cho_solve_banded((self._factors[i - 1], False), rhs[sl])
        return out


@lru_cache(maxsize=16)
def helmholtz_solver(grid: RadialGrid) -> HelmholtzSolver:
    return HelmholtzSolver(grid)


def energy_dual(grid: RadialGrid, U: np.ndarray, p: float, kappa: float = 1.0) -> np.ndarray:
    """Nodal vectors ``dE/du_i`` (the L^2-dual gradient, before the Riesz map).

    Entries at Dirichlet nodes are meaningless and must be masked by callers.
    """
    W = U.sum(axis=0)
    pot = potential_values(grid, np.abs(W) ** p, kappa)
    source = grid.line_weights * grid.nodes * pot * signed_power(U, p)
    return h_apply(grid, U) - source


def h_gradient_values(grid: RadialGrid, U: np.ndarray, p: float, kappa: float = 1.0) -> np.ndarray:
    """Riesz representatives ``g_i = u_i - S_i[Phi |u_i|^{p-2} u_i]`` as rows."""
    solver = helmholtz_solver(grid)
    W = U.sum(axis=0)
    pot = potential_values(grid, np.abs(W) ** p, kappa)
    source = grid.line_weights * grid.nodes * pot * signed_power(U, p)
    G = np.empty_like(U)
    for i in range(U.shape[0]):
        G[i] = U[i] - solver.solve(i + 1, source[i])
    return G


def h_gradient(components: Sequence[ComponentField], p: float, kappa: float = 1.0) -> list[ComponentField]:
    p = check_exponent(p)
    grid, U = _stack(components)
    G = h_gradient_values(grid, U, p, kappa)
    return [ComponentField(G[i], grid, i + 1) for i in range(G.shape[0])]
