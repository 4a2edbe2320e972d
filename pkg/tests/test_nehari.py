import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from choquard_nodal.errors import DegenerateGram
from choquard_nodal.nehari import (
    InteractionData,
    certify_manifold,
    m_tilde,
    n_tilde,
    nehari_matrix,
    project,
    reduced_energy,
    scaling_jacobian,
    scaling_residual,
)

P_VALUES = [2.6, 3.0, 4.0, 4.9]


def _gram_data(rng, m):
    V = rng.uniform(0.05, 1.0, size=(m, m + 2))
    return InteractionData(rng.uniform(0.5, 3.0, m), V @ V.T)


@pytest.mark.parametrize("p", P_VALUES)
def test_single_component_closed_form(p):
    data = InteractionData([2.0], [[5.0]])
    t = (2.0 / 5.0) ** (1 / (2 * p - 2))
    assert abs(scaling_residual([t], 1.0, data, p)[0]) < 1e-14
    assert project(data, p).t[0] == pytest.approx(t, rel=1e-12)


@pytest.mark.parametrize("p", P_VALUES)
def test_decoupled_system_at_mu_zero(rng, p):
    data = _gram_data(rng, 3)
    t = (data.a / np.diag(data.B)) ** (1 / (2 * p - 2))
    np.testing.assert_allclose(scaling_residual(t, 0.0, data, p), 0.0, atol=1e-13)


def test_unit_data_projects_in_one_step():
    out = project(InteractionData([1.0], [[1.0]]), 3.0, initial=[1.0])
    assert out.t[0] == 1.0
    assert out.newton_iterations == 0
    # the closed form also lands on t = 1
    assert project(InteractionData([1.0], [[1.0]]), 3.0).t[0] == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("p", P_VALUES)
def test_scalar_certificate(p):
    assert certify_manifold(InteractionData([1.0], [[1.0]]), [1.0], p) == pytest.approx(2 * p - 2)


@pytest.mark.parametrize("p", P_VALUES)
def test_scalar_jacobian_is_negative(p):
    # at a root: (2 - p) t a - p t^(2p-1) b = (2 - 2p) t a
    a, b = 2.0, 3.0
    data = InteractionData([a], [[b]])
    t = (a / b) ** (1 / (2 * p - 2))
    J = scaling_jacobian([t], 1.0, data, p)[0, 0]
    assert J == pytest.approx((2 - p) * t * a - p * t ** (2 * p - 1) * b, rel=1e-13)
    assert J == pytest.approx((2 - 2 * p) * t * a, rel=1e-13)
    assert J < 0


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_data_already_on_the_set(rng, k):
    data = _gram_data(rng, k + 1)
    t = project(data, 3.0).t
    out = project(data.rescaled(t, 3.0), 3.0)
    np.testing.assert_allclose(out.t, 1.0, atol=1e-11)


@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("p", P_VALUES)
def test_jacobian_matches_finite_differences(rng, mu, p):
    data = _gram_data(rng, 3)
    t = rng.uniform(0.5, 1.5, 3)
    J = scaling_jacobian(t, mu, data, p)
    eps = 1e-6
    fd = np.empty_like(J)
    for j in range(3):
        e = np.zeros(3)
        e[j] = eps
        fd[:, j] = (scaling_residual(t + e, mu, data, p) - scaling_residual(t - e, mu, data, p)) / (2 * eps)
    np.testing.assert_allclose(J, fd, rtol=1e-6, atol=1e-9 * np.max(np.abs(J)))


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("p", P_VALUES)
def test_determinant_identities_at_roots(field_data, k, p):
    data = field_data(k, p)
    t = project(data, p).t
    M = scaling_jacobian(t, 1.0, data, p)
    lhs = np.linalg.det(M)
    rhs = (-1) ** (k + 1) * np.linalg.det(m_tilde(t, 1.0, data, p)) / np.prod(t)
    assert lhs == pytest.approx(rhs, rel=1e-8)
    N = nehari_matrix(data, t, p)
    Nt = n_tilde(data, t, p)
    assert np.linalg.det(N) == pytest.approx((-1) ** (k + 1) * np.linalg.det(Nt), rel=1e-8)
    assert np.linalg.eigvalsh(Nt)[0] > 0


@pytest.mark.parametrize("p", P_VALUES)
def test_projection_is_root_and_certified(field_data, p):
    for k in range(4):
        data = field_data(k, p)
        out = project(data, p, tol=1e-12)
        G = scaling_residual(out.t, 1.0, data, p)
        assert np.all(np.abs(G) <= 1e-12 * out.t**2 * data.a * 1.0000001)
        assert out.min_eigenvalue_N_tilde > 0
        assert np.all((out.t > 1e-8) & (out.t < 1e8))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(P_VALUES))
def test_projection_idempotent(seed, p):
    rng = np.random.default_rng(seed)
    data = _gram_data(rng, int(rng.integers(1, 4)))
    t = project(data, p).t
    again = project(data.rescaled(t, p), p).t
    np.testing.assert_allclose(again, 1.0, atol=1e-11)


@pytest.mark.parametrize("p", [2.6, 3.0, 4.9])
def test_projection_maximizes_reduced_energy(field_data, p):
    # grid oracle followed by a derivative-free polish
    for _ in range(5):
        data = field_data(1, p)
        t = project(data, p).t
        s = np.linspace(-1.5, 1.5, 61)
        c1, c2 = np.meshgrid(t[0] * np.exp(s), t[1] * np.exp(s), indexing="ij")
        vals = np.array([[reduced_energy([x, y], data, p) for x, y in zip(r1, r2)] for r1, r2 in zip(c1, c2)])
        best = reduced_energy(t, data, p)
        assert vals.max() <= best * (1 + 1e-12)
        i, j = np.unravel_index(np.argmax(vals), vals.shape)
        polish = minimize(lambda x: -reduced_energy(np.exp(x), data, p), np.log([c1[i, j], c2[i, j]]),
                          method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        np.testing.assert_allclose(np.exp(polish.x), t, rtol=1e-6)


def test_nehari_matrix_without_using_constraints(rng):
    # at a non-root the unsimplified matrix keeps the a-terms
    data = _gram_data(rng, 2)
    t = np.array([0.7, 1.3])
    d = data.rescaled(t, 3.0)
    N = nehari_matrix(data, t, 3.0)
    assert N[0, 0] == pytest.approx(2 * d.a[0] - 6 * d.B[0, 0] - 3 * d.B[0, 1])
    assert N[0, 1] == pytest.approx(-3 * d.B[0, 1])


@pytest.mark.parametrize(
    "a, B",
    [
        ([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]]),  # proportional densities
        ([1.0, 0.0], [[1.0, 0.1], [0.1, 1.0]]),
        ([1.0, 1.0], [[1.0, -0.1], [-0.1, 1.0]]),
        ([1.0, 1.0], [[1.0, 0.2], [0.1, 1.0]]),
    ],
)
def test_degenerate_data_rejected(a, B):
    with pytest.raises(DegenerateGram):
        InteractionData(a, B)


def test_homotopy_reports_its_steps(rng):
    data = _gram_data(rng, 3)
    out = project(data, 3.0)
    assert out.homotopy_steps >= 2
    assert out.mu == 1.0
