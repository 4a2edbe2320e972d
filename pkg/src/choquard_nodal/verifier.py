"""Checks that a glued bundle is a genuine k-node solution.

A bundle from the inner solver solves its equation on every region
separately.  The glued profile solves the full equation only when the radial
derivatives of neighbouring components match at each interface.  The
functions here measure that mismatch, the pointwise ODE residual away from
the interfaces, the number of sign changes, the Strauss decay ratio, and the
first-order energy gain obtainable by smoothing a mismatched corner.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .coulomb import potential_values
from .energy import energy_from_terms, interaction_terms, signed_power
from .errors import DeltaTooLarge, ZeroField
from .inner_solver import SolutionBundle, minimize_fixed_partition
from .nehari import InteractionData, project
from .partition_grid import build_grid, make_partition
from .radial_field import RadialField, derivative, h_norm_sq, radial_lhs

__all__ = [
    "VerificationReport",
    "one_sided_derivatives",
    "interface_jumps",
    "relative_jumps",
    "count_sign_changes",
    "ode_residual_glued",
    "strauss_check",
    "jump_energy_gain",
    "nehari_identity_error",
    "verify",
]


@dataclass
class VerificationReport:
    interface_jumps: list[float]
    relative_jumps: list[float]
    ode_residual: float
    sign_changes: int
    strauss_ratio: float
    nehari_identity_error: float
    passed: bool
    failures: list[str] = field(default_factory=list)


def one_sided_derivatives(bundle: SolutionBundle) -> list[tuple[float, float]]:
    """``(w_-, w_+)`` at each interface from 3-point one-sided stencils."""
    grid = bundle.grid
    W = bundle.glued.values
    out = []
    for l, j in enumerate(grid.interface_nodes, start=1):
        hl = grid.region_spacing(l)
        hr = grid.region_spacing(l + 1)
        w_minus = (3 * W[j] - 4 * W[j - 1] + W[j - 2]) / (2 * hl)
        w_plus = (-3 * W[j] + 4 * W[j + 1] - W[j + 2]) / (2 * hr)
        out.append((float(w_minus), float(w_plus)))
    return out


def interface_jumps(bundle: SolutionBundle) -> list[float]:
    """``w_- - w_+`` at every interface (empty for ``k = 0``)."""
    return [wm - wp for wm, wp in one_sided_derivatives(bundle)]


def relative_jumps(bundle: SolutionBundle) -> list[float]:
    pairs = one_sided_derivatives(bundle)
    if not pairs:
        return []
    scale = max(
        float(np.max(np.abs(derivative(bundle.glued)))),
        max(max(abs(a), abs(b)) for a, b in pairs),
    )
    return [abs(wm - wp) / scale for wm, wp in pairs]


def count_sign_changes(W, threshold: float = 1e-6) -> int:
    """Strict sign alternations among nodes with ``|W| > threshold * max|W|``."""
    values = np.asarray(W.values if isinstance(W, RadialField) else W, dtype=float)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak == 0:
        return 0
    kept = values[np.abs(values) > threshold * peak]
    signs = np.sign(kept)
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def ode_residual_glued(W: RadialField, p: float, kappa: float = 1.0, collar: int = 2) -> float:
    """Normalised max residual of ``-(t^2 W')' + t^2 W - t^2 Phi |W|^{p-2} W``.

    Interior nodes only, skipping ``collar`` nodes on either side of every
    interface of ``W.grid``.
    """
    grid = W.grid
    peak = np.max(np.abs(W.values))
    if peak == 0:
        return 0.0
    pot = potential_values(grid, np.abs(W.values) ** p, kappa)
    res = radial_lhs(grid, W.values) - grid.nodes * pot * signed_power(W.values, p)
    mask = np.zeros(grid.n_nodes, dtype=bool)
    mask[1:-1] = True
    for j in grid.interface_nodes:
        mask[max(j - collar, 0) : j + collar + 1] = False
    return float(np.max(np.abs(res[mask])) / peak)


def strauss_check(W: RadialField) -> float:
    """``max_t |W(t)| t / ||W||``; bounded for radial H^1 functions."""
    norm_sq = h_norm_sq(W)
    if not norm_sq > 0:
        raise ZeroField("Strauss ratio undefined for the zero field")
    return float(np.max(np.abs(W.values) * W.grid.nodes) / np.sqrt(norm_sq))


def nehari_identity_error(bundle: SolutionBundle) -> float:
    """``|E - (1/2 - 1/(2p)) sum ||w_i||^2| / |E|``."""
    p = bundle.p
    reduced = (0.5 - 0.5 / p) * float(np.sum(bundle.norms_sq))
    return abs(bundle.energy - reduced) / abs(bundle.energy)


def _resolved(bundle: SolutionBundle, l: int, delta: float, cells: int) -> SolutionBundle:
    """Re-solve on a finer grid when ``delta`` spans fewer than ``cells`` cells."""
    grid = bundle.grid
    h = max(grid.region_spacing(l), grid.region_spacing(l + 1))
    factor = int(np.ceil(cells * h / delta))
    if factor <= 1:
        return bundle
    config = SolverConfig(
        p=bundle.p,
        k=bundle.k,
        points_per_annulus=grid.points_per_annulus * factor,
        r_infty=grid.r_infty,
        kappa=bundle.kappa,
    )
    return minimize_fixed_partition(bundle.partition, config, initial=bundle)


def jump_energy_gain(
    bundle: SolutionBundle,
    l: int,
    delta: float,
    tol: float = 1e-12,
    cells_per_delta: int = 8,
) -> tuple[float, float]:
    """Predicted and actual energy change from smoothing the corner at ``r_l``.

    ``W`` is replaced on ``(r_l - delta, r_l + delta)`` by the straight line
    joining ``W(r_l - delta)`` and ``W(r_l + delta)``.  The line crosses zero
    at ``s``; the profile is re-split with ``r_l`` moved to ``s``, rebuilt on a
    grid for the new partition, and every component is rescaled back onto the
    Nehari set.  ``predicted = -(delta/4) r_l^2 (w_+ - w_-)^2`` and
    ``actual = E(Z) - E(W)``.  ``l`` is 1-based.

    If the grid spacing next to ``r_l`` exceeds ``delta / cells_per_delta``
    the bundle is first re-solved (warm-started) on a proportionally refined
    grid, and both ``W`` and the derivatives come from that solution.
    """
    part = bundle.partition
    k = part.k
    if not 1 <= l <= k:
        raise ValueError(f"interface index {l} outside 1..{k}")
    grid = bundle.grid
    bounds = part.bounds(grid.r_infty)
    r = part.radii[l - 1]
    left_w = bounds[l - 1][1] - bounds[l - 1][0]
    right_w = bounds[l][1] - bounds[l][0]
    if not 0 < delta < 0.5 * min(left_w, right_w):
        raise DeltaTooLarge(f"delta = {delta!r} must be below {0.5 * min(left_w, right_w)!r}")

    bundle = _resolved(bundle, l, delta, cells_per_delta)
    grid = bundle.grid
    w_minus, w_plus = one_sided_derivatives(bundle)[l - 1]
    predicted = -0.25 * delta * r**2 * (w_plus - w_minus) ** 2

    W = bundle.glued.values
    y_lo = float(np.interp(r - delta, grid.nodes, W))
    y_hi = float(np.interp(r + delta, grid.nodes, W))
    slope = (y_hi - y_lo) / (2 * delta)
    s_bar = r - delta - y_lo / slope

    radii = list(part.radii)
    radii[l - 1] = s_bar
    new_grid = build_grid(make_partition(radii), grid.points_per_annulus, grid.r_infty)
    t = new_grid.nodes
    Z = np.interp(t, grid.nodes, W)
    inside = (t > r - delta) & (t < r + delta)
    Z[inside] = y_lo + slope * (t[inside] - (r - delta))
    U = np.zeros((k + 1, t.size))
    for i in range(1, k + 2):
        sl = new_grid.free_slice(i)
        U[i - 1, sl] = Z[sl]
    a, B = interaction_terms(new_grid, U, bundle.p, bundle.kappa)
    t_hat = project(InteractionData(a, B), bundle.p, tol=tol, initial=np.ones(k + 1)).t
    tp = t_hat**bundle.p
    e_z = energy_from_terms(t_hat**2 * a, np.outer(tp, tp) * B, bundle.p)
    return float(predicted), float(e_z - bundle.energy)


def verify(
    bundle: SolutionBundle,
    jump_threshold: float = 1e-2,
    residual_threshold: float = 1e-3,
    nehari_tol: float = 1e-8,
    sign_threshold: float = 1e-6,
) -> VerificationReport:
    W = bundle.glued
    jumps = interface_jumps(bundle)
    rel = relative_jumps(bundle)
    residual = ode_residual_glued(W, bundle.p, bundle.kappa)
    changes = count_sign_changes(W, sign_threshold)
    strauss = strauss_check(W)
    nie = nehari_identity_error(bundle)
    failures = []
    if changes != bundle.k:
        failures.append(f"sign_changes={changes} (expected {bundle.k})")
    for l, r in enumerate(rel, start=1):
        if not r <= jump_threshold:
            failures.append(f"relative_jump[{l}]={r:.3e} > {jump_threshold:g}")
    if not residual <= residual_threshold:
        failures.append(f"ode_residual={residual:.3e} > {residual_threshold:g}")
    if not nie <= nehari_tol:
        failures.append(f"nehari_identity_error={nie:.3e} > {nehari_tol:g}")
    if not np.isfinite(strauss):
        failures.append("strauss_ratio not finite")
    return VerificationReport(
        interface_jumps=[abs(j) for j in jumps],
        relative_jumps=rel,
        ode_residual=residual,
        sign_changes=changes,
        strauss_ratio=strauss,
        nehari_identity_error=nie,
        passed=not failures,
        failures=failures,
    )
