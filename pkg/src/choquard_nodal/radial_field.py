"""Radial fields, their per-region components, and the radial H^1 form.

The H^1 form uses continuous piecewise-linear interpolation between nodes:
the gradient term integrates ``t**2`` exactly over each cell against the
cellwise slope, and the mass term uses the trapezoidal weights of the grid.
With this choice the form is a symmetric tridiagonal matrix ``A`` and
``u @ A @ u`` splits exactly into per-region contributions whenever the
interface values vanish.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import GridMismatch
from .partition_grid import RadialGrid

__all__ = [
    "RadialField",
    "ComponentField",
    "make_component",
    "split_components",
    "h_norm_sq",
    "h_inner",
    "apply_sign_pattern",
    "glue",
    "derivative",
    "h_form_bands",
]


@dataclass(frozen=True, eq=False)
class RadialField:
    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise GridMismatch("values do not match the grid size")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class ComponentField:
    """Field supported on region ``annulus_index`` (1-based), zero elsewhere."""

    values: np.ndarray
    grid: RadialGrid
    annulus_index: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise GridMismatch("values do not match the grid size")
        if not 1 <= self.annulus_index <= self.grid.n_regions:
            raise ValueError(f"annulus index {self.annulus_index} out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("component values must be finite")
        mask = np.ones(values.size, dtype=bool)
        mask[self.grid.free_slice(self.annulus_index)] = False
        if np.any(values[mask] != 0.0):
            raise ValueError(
                f"component {self.annulus_index} is nonzero outside its region"
            )
        object.__setattr__(self, "values", values)


def make_component(grid: RadialGrid, i: int, values: np.ndarray) -> ComponentField:
    """Restrict ``values`` to the free nodes of region ``i``."""
    out = np.zeros(grid.n_nodes)
    sl = grid.free_slice(i)
    out[sl] = np.asarray(values, dtype=float)[sl]
    return ComponentField(out, grid, i)


def split_components(field: RadialField) -> list[ComponentField]:
    return [make_component(field.grid, i, field.values) for i in range(1, field.grid.n_regions + 1)]


@lru_cache(maxsize=32)
def _bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = grid.nodes
    h = grid.spacing
    # exact integral of t**2 over each cell divided by h**2
    cell = (t[1:] ** 3 - t[:-1] ** 3) / (3.0 * h**2)
    diag = grid.weights.copy()
    diag[:-1] += cell
    diag[1:] += cell
    off = -cell
    for arr in (cell, diag, off):
        arr.setflags(write=False)
    return diag, off, cell


def h_form_bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Main and upper diagonals of the tridiagonal H^1 form on ``grid``."""
    diag, off, _ = _bands(grid)
    return diag, off


def h_apply(grid: RadialGrid, x: np.ndarray) -> np.ndarray:
    """``A @ x`` for the H^1 form (last axis of ``x`` runs over nodes)."""
    diag, off, _ = _bands(grid)
    y = diag * x
    y[..., :-1] += off * x[..., 1:]
    y[..., 1:] += off * x[..., :-1]
    return y


def h_inner_values(grid: RadialGrid, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _, _, cell = _bands(grid)
    dx = np.diff(x, axis=-1)
    dy = np.diff(y, axis=-1)
    return np.sum(cell * dx * dy, axis=-1) + np.sum(grid.weights * x * y, axis=-1)


def h_inner(u: ComponentField | RadialField, v: ComponentField | RadialField) -> float:
    if u.grid is not v.grid:
        raise GridMismatch("fields live on different grids")
    return float(h_inner_values(u.grid, u.values, v.values))


def h_norm_sq(u: ComponentField | RadialField) -> float:
    """``int (u'^2 + u^2) t^2 dt`` over the support of ``u``."""
    return float(h_inner_values(u.grid, u.values, u.values))


def apply_sign_pattern(components: Sequence[ComponentField]) -> list[ComponentField]:
    """Replace component ``i`` by ``(-1)**(i+1) * |u_i|``."""
    out = []
    for c in components:
        sign = 1.0 if c.annulus_index % 2 == 1 else -1.0
        out.append(ComponentField(sign * np.abs(c.values), c.grid, c.annulus_index))
    return out


def glue(components: Sequence[ComponentField]) -> RadialField:
    if not components:
        raise ValueError("nothing to glue")
    grid = components[0].grid
    if any(c.grid is not grid for c in components):
        raise GridMismatch("components live on different grids")
    indices = sorted(c.annulus_index for c in components)
    if indices != list(range(1, grid.n_regions + 1)):
        raise ValueError("need exactly one component per region")
    return RadialField(np.sum([c.values for c in components], axis=0), grid)


def derivative(field: RadialField | ComponentField) -> np.ndarray:
    """Nodal ``du/dt``: centred differences inside, one-sided at both ends.

    Interface nodes use the two-sided formula as well; for a glued profile
    with a derivative jump use :func:`choquard_nodal.verifier.one_sided_derivatives`.
    """
    return np.gradient(field.values, field.grid.nodes, edge_order=2)


def radial_lhs(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """Finite-difference ``-(t^2 u')' + t^2 u`` at nodes ``1..n-2``.

    Flux form with ``t^2`` at cell midpoints; second order on uniform
    stretches.  Entries at the two end nodes are NaN.
    """
    t = grid.nodes
    h = grid.spacing
    mid = 0.5 * (t[1:] + t[:-1])
    flux = mid**2 * np.diff(values, axis=-1) / h
    out = np.full(np.shape(values), np.nan)
    out[..., 1:-1] = -np.diff(flux, axis=-1) / (0.5 * (h[1:] + h[:-1])) + t[1:-1] ** 2 * values[..., 1:-1]
    return out
