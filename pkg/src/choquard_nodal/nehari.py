"""Projection onto the Nehari-type set by positive rescaling of each component.

Given ``a_i = ||u_i||^2`` and the Gram matrix ``B_ij = D(|u_i|^p, |u_j|^p)``,
the scaled tuple ``(t_1 u_1, ..., t_{k+1} u_{k+1})`` lies on the set iff

    G_i(t; mu=1) = t_i^2 a_i - t_i^{2p} B_ii - mu sum_{j != i} t_i^p t_j^p B_ij = 0.

The positive root is unique.  :func:`project` follows it from the decoupled
system at ``mu = 0`` (closed form) to ``mu = 1`` with damped Newton
corrections, then certifies the result by the smallest eigenvalue of

    N~(t) = p (t_i^p t_j^p B_ij) + (p - 2) diag(t_i^2 a_i),

which is positive definite for ``5/2 < p < 5`` whenever ``B`` is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CertificationFailed, DegenerateGram, HomotopyStalled, NewtonDiverged

__all__ = [
    "InteractionData",
    "NehariTuple",
    "scaling_residual",
    "scaling_jacobian",
    "m_tilde",
    "nehari_matrix",
    "n_tilde",
    "certify_manifold",
    "reduced_energy",
    "project",
]

T_MIN, T_MAX = 1e-8, 1e8


@dataclass(frozen=True, eq=False)
class InteractionData:
    """Norms ``a`` (length ``k+1``) and symmetric positive definite ``B``."""

    a: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (a.size, a.size):
            raise ValueError(f"B has shape {B.shape}, expected {(a.size, a.size)}")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(B)):
            raise ValueError("interaction data must be finite")
        if np.any(a <= 0):
            raise DegenerateGram("every component needs a positive norm")
        scale = np.max(np.abs(B))
        if np.any(B < -1e-14 * scale):
            raise DegenerateGram("interaction matrix has negative entries")
        if not np.allclose(B, B.T, rtol=1e-10, atol=1e-14 * scale):
            raise DegenerateGram("interaction matrix is not symmetric")
        B = 0.5 * (B + B.T)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError as exc:
            raise DegenerateGram("interaction matrix is not positive definite") from exc
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "B", B)

    @property
    def size(self) -> int:
        return self.a.size

    def rescaled(self, t: np.ndarray, p: float) -> "InteractionData":
        """Data of the tuple ``(t_1 u_1, ..., t_{k+1} u_{k+1})``."""
        tp = t**p
        return InteractionData(t**2 * self.a, np.outer(tp, tp) * self.B)


@dataclass(frozen=True)
class NehariTuple:
    t: np.ndarray
    mu: float
    min_eigenvalue_N_tilde: float
    newton_iterations: int
    homotopy_steps: int = 0


def _offdiag(B: np.ndarray) -> np.ndarray:
    return B - np.diag(np.diag(B))


def scaling_residual(t, mu: float, data: InteractionData, p: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    tp = t**p
    C = _offdiag(data.B)
    return t**2 * data.a - t ** (2 * p) * np.diag(data.B) - mu * tp * (C @ tp)


def scaling_jacobian(t, mu: float, data: InteractionData, p: float) -> np.ndarray:
    """Exact ``dG_i/dt_j`` (no use of ``G = 0``)."""
    t = np.asarray(t, dtype=float)
    tp = t**p
    C = _offdiag(data.B)
    J = -mu * p * np.outer(tp, t ** (p - 1)) * C
    diag = (
        2 * t * data.a
        - 2 * p * t ** (2 * p - 1) * np.diag(data.B)
        - mu * p * t ** (p - 1) * (C @ tp)
    )
    J[np.diag_indices_from(J)] = diag
    return J


def m_tilde(t, mu: float, data: InteractionData, p: float) -> np.ndarray:
    """Symmetric matrix with ``det M = (-1)^{k+1} det M~ / prod(t)`` on roots of ``G``."""
    t = np.asarray(t, dtype=float)
    tp = t**p
    Mt = mu * p * np.outer(tp, tp) * _offdiag(data.B)
    Mt[np.diag_indices_from(Mt)] = (p - 2) * t**2 * data.a + p * t ** (2 * p) * np.diag(data.B)
    return Mt


def nehari_matrix(data: InteractionData, t, p: float) -> np.ndarray:
    """``N_ij = (dF_j/du_i, u_i)`` at the scaled tuple, without using ``F = 0``."""
    d = data.rescaled(np.asarray(t, dtype=float), p)
    C = _offdiag(d.B)
    N = -p * C
    N[np.diag_indices_from(N)] = 2 * d.a - 2 * p * np.diag(d.B) - p * C.sum(axis=1)
    return N


def n_tilde(data: InteractionData, t, p: float) -> np.ndarray:
    d = data.rescaled(np.asarray(t, dtype=float), p)
    return p * d.B + (p - 2) * np.diag(d.a)


def certify_manifold(data: InteractionData, t, p: float) -> float:
    """Smallest eigenvalue of ``N~``; positive certifies a regular point."""
    return float(np.linalg.eigvalsh(n_tilde(data, t, p))[0])


def reduced_energy(c, data: InteractionData, p: float) -> float:
    """``phi(c) = E(c_1 u_1, ..., c_{k+1} u_{k+1})``."""
    c = np.asarray(c, dtype=float)
    cp = c**p
    return float(0.5 * np.sum(c**2 * data.a) - cp @ data.B @ cp / (2 * p))


def _normalized(t, mu, data, p):
    # G_i / (t_i^2 a_i); same positive roots as G, scale-free
    return scaling_residual(t, mu, data, p) / (t**2 * data.a)


def _newton(t, mu, data, p, tol, maxiter):
    """Damped Newton on ``G``; returns ``(t, iterations)`` or ``None`` on failure."""
    t = t.copy()
    r = _normalized(t, mu, data, p)
    merit = r @ r
    for it in range(maxiter + 1):
        if np.max(np.abs(r)) <= tol:
            return t, it
        if it == maxiter:
            return None
        G = scaling_residual(t, mu, data, p)
        try:
            step = np.linalg.solve(scaling_jacobian(t, mu, data, p), -G)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        lam = 1.0
        worst = np.min(step / t)
        if worst < -0.9:
            # keep every t_i >= 0.1 * previous value
            lam = 0.9 / -worst
        while True:
            trial = t + lam * step
            r_trial = _normalized(trial, mu, data, p)
            m_trial = r_trial @ r_trial
            if np.isfinite(m_trial) and m_trial <= (1 - 1e-4 * lam) * merit:
                break
            lam *= 0.5
            if lam < 1e-10:
                return None
        t, r, merit = trial, r_trial, m_trial
        if np.any(t < T_MIN) or np.any(t > T_MAX):
            return None
    return None


def project(
    data: InteractionData,
    p: float,
    tol: float = 1e-12,
    initial=None,
    max_newton: int = 50,
    certify: bool = True,
) -> NehariTuple:
    """Unique positive tuple ``t`` with ``G(t; 1) = 0``.

    Convergence is declared when ``|G_i| <= tol * t_i^2 a_i`` for every ``i``.
    When ``initial`` is given, Newton is first tried directly at ``mu = 1``
    from it (the usual case inside the descent loop, where ``t`` is close to
    one); the homotopy is the fallback and the default.
    """
    m = data.size
    iterations = 0
    steps = 0
    t = None
    if initial is not None:
        res = _newton(np.asarray(initial, dtype=float).copy(), 1.0, data, p, tol, max_newton)
        if res is not None:
            t, iterations = res
    if t is None:
        t = (data.a / np.diag(data.B)) ** (1.0 / (2 * p - 2))
        mu, dmu = 0.0, 0.1
        C = _offdiag(data.B)
        while mu < 1.0:
            mu_next = min(1.0, mu + dmu)
            # tangent predictor: dG/dmu = -t^p * (C t^p)
            tp = t**p
            try:
                dt = np.linalg.solve(scaling_jacobian(t, mu, data, p), tp * (C @ tp))
                guess = t + (mu_next - mu) * dt
                if np.any(guess <= 0.1 * t):
                    guess = t
            except np.linalg.LinAlgError:
                guess = t
            res = _newton(guess, mu_next, data, p, max(tol, 1e-10) if mu_next < 1 else tol, 12)
            if res is None:
                dmu *= 0.5
                if dmu < 1e-6:
                    raise HomotopyStalled(f"continuation step underflow at mu = {mu:.6g}")
                continue
            t, its = res
            iterations += its
            steps += 1
            mu = mu_next
            if its <= 3:
                dmu = min(2 * dmu, 0.5)
        res = _newton(t, 1.0, data, p, tol, max_newton)
        if res is None:
            raise NewtonDiverged("final Newton correction at mu = 1 failed")
        t, its = res
        iterations += its
    if np.any(t <= 0):
        raise NewtonDiverged("Newton left the positive orthant")
    lam = certify_manifold(data, t, p) if certify else float("nan")
    if certify and not lam > 0:
        raise CertificationFailed(f"N~ has non-positive eigenvalue {lam:.3e}")
    return NehariTuple(t, 1.0, lam, iterations, steps)
