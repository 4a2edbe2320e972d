import numpy as np
import pytest

from choquard_nodal import (
    SolverConfig,
    build_grid,
    constraint_values,
    euler_lagrange_residual,
    make_partition,
    minimize_fixed_partition,
)
from choquard_nodal.errors import ComponentCollapsed, MaxIterationsExceeded
from choquard_nodal.inner_solver import SolutionBundle, initial_guess, transplant
from choquard_nodal.radial_field import ComponentField, h_norm_sq


@pytest.fixture(scope="module")
def ground():
    return minimize_fixed_partition([], SolverConfig(k=0, points_per_annulus=2000))


@pytest.fixture(scope="module")
def two_node():
    return minimize_fixed_partition([1.0, 2.5], SolverConfig(k=2, points_per_annulus=300))


def test_initial_guess_single_bump():
    grid = build_grid(make_partition([]), 200, 30.0)
    (u,) = initial_guess(make_partition([]), grid, 3.0)
    assert np.all(u.values[:-1] > 0) and u.values[-1] == 0.0


@pytest.mark.parametrize("radii", [[1.0], [0.5, 2.0], [0.4, 1.2, 3.0]])
def test_initial_guess_is_projected(radii):
    part = make_partition(radii)
    grid = build_grid(part, 100, 20.0)
    comps = initial_guess(part, grid, 3.0)
    assert all(h_norm_sq(c) > 0 for c in comps)
    F = constraint_values(comps, 3.0)
    a = np.array([h_norm_sq(c) for c in comps])
    assert np.all(np.abs(F) <= 1e-11 * a)
    for i, c in enumerate(comps, start=1):
        assert np.all((-1) ** (i + 1) * c.values >= 0)


def test_ground_state_converges(ground):
    assert ground.gradient_norm <= 1e-6
    assert ground.constraint_residual <= 1e-8
    assert ground.energy > 0
    assert np.all(ground.values[0, :-1] > 0)


def test_ground_state_residual_decreases_quadratically(ground):
    coarse = euler_lagrange_residual(ground)
    assert coarse.value <= 1e-3 and not coarse.degenerate
    fine = minimize_fixed_partition([], SolverConfig(k=0, points_per_annulus=4000), initial=ground)
    assert 3.0 < coarse.value / euler_lagrange_residual(fine).value < 5.0


def test_two_node_bundle_properties(two_node):
    b = two_node
    p = b.p
    assert b.energy == pytest.approx((0.5 - 0.5 / p) * np.sum(b.norms_sq), rel=1e-8)
    for i, c in enumerate(b.components, start=1):
        assert np.min((-1) ** (i + 1) * c.values) >= 0
        assert np.max(np.abs(c.values)) > 0
    assert b.nehari.min_eigenvalue_N_tilde > 0
    np.testing.assert_allclose(b.nehari.t, 1.0, atol=1e-6)


def test_energy_history_is_monotone(two_node):
    h = np.array(two_node.energy_history)
    assert np.all(np.diff(h) <= 1e-12 * np.abs(h[1:]))
    assert h[-1] == two_node.energy


def test_restart_reconverges_quickly(two_node):
    again = minimize_fixed_partition(
        two_node.partition, SolverConfig(k=2, points_per_annulus=300), initial=two_node.components
    )
    assert again.iterations <= 2
    assert again.energy == pytest.approx(two_node.energy, rel=1e-12)


def test_grid_refinement_via_transplant(two_node):
    grid = build_grid(two_node.partition, 600, 30.0)
    U = transplant(two_node, grid)
    assert U.shape == (3, grid.n_nodes)
    np.testing.assert_array_equal(U[:, grid.interface_nodes], 0.0)
    config = SolverConfig(k=2, points_per_annulus=600)
    warm = minimize_fixed_partition(two_node.partition, config, initial=two_node)
    cold = minimize_fixed_partition(two_node.partition, config)
    assert warm.energy == pytest.approx(cold.energy, rel=1e-10)
    assert warm.iterations < cold.iterations
    assert warm.energy == pytest.approx(two_node.energy, rel=1e-3)


def test_iteration_cap():
    with pytest.raises(MaxIterationsExceeded):
        minimize_fixed_partition([1.0], SolverConfig(k=1, points_per_annulus=200, max_inner_iters=1))


def test_vanishing_component_is_reported():
    part = make_partition([1.0])
    grid = build_grid(part, 50, 10.0)
    U = np.zeros((2, grid.n_nodes))
    U[0, grid.free_slice(1)] = 1.0
    with pytest.raises(ComponentCollapsed):
        minimize_fixed_partition(part, SolverConfig(points_per_annulus=50, r_infty=10.0), initial=U)


def test_wrong_initial_shape():
    with pytest.raises(ValueError):
        minimize_fixed_partition([1.0], SolverConfig(points_per_annulus=50), initial=np.ones((2, 7)))


def test_zero_bundle_residual_is_degenerate():
    part = make_partition([1.0])
    grid = build_grid(part, 20, 5.0)
    zero = [ComponentField(np.zeros(grid.n_nodes), grid, i) for i in (1, 2)]
    b = SolutionBundle(zero, 0.0, 0.0, 0.0, part, 3.0, 0)
    assert euler_lagrange_residual(b) == (0.0, True)


@pytest.mark.parametrize("kappa", [0.5, 4 * np.pi])
def test_kernel_normalization_rescales_solutions(ground, kappa):
    # u_kappa = kappa^(-1/(2p-2)) u_1, energy scales by kappa^(-1/(p-1))
    p = ground.p
    other = minimize_fixed_partition([], SolverConfig(k=0, points_per_annulus=2000, kappa=kappa))
    assert other.energy == pytest.approx(ground.energy * kappa ** (-1 / (p - 1)), rel=1e-7)
    np.testing.assert_allclose(other.values, ground.values * kappa ** (-1 / (2 * p - 2)), rtol=1e-5, atol=1e-9)
