import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from choquard_nodal import CoulombKernel, RadialField, build_grid, coulomb_energy, make_partition
from choquard_nodal.coulomb import (
    kernel,
    potential_direct,
    potential_fast,
    potential_values,
    potential_values_direct,
)
from choquard_nodal.errors import GridMismatch


def _ones(grid):
    return RadialField(np.ones(grid.n_nodes), grid)


def _positive_pair(rng, grid):
    t = grid.nodes
    f = rng.uniform(0, 1, t.size) * np.exp(-rng.uniform(0.2, 2) * t)
    g = rng.uniform(0, 1, t.size) * np.exp(-rng.uniform(0.2, 2) * t)
    return RadialField(f, grid), RadialField(g, grid)


@pytest.mark.parametrize("s, t, expected", [(1.0, 2.0, 2.0), (2.0, 1.0, 2.0), (0.0, 3.0, 0.0)])
def test_kernel_values(s, t, expected):
    assert kernel(s, t) == expected
    assert CoulombKernel()(s, t) == expected


def test_kernel_normalization_scales_linearly():
    assert CoulombKernel(4 * np.pi)(1.0, 2.0) == pytest.approx(8 * np.pi)
    with pytest.raises(ValueError):
        CoulombKernel(0.0)


@given(st.floats(0, 100), st.floats(0, 100))
def test_kernel_symmetry(s, t):
    assert kernel(s, t) == kernel(t, s)


@pytest.mark.parametrize("potential", [potential_fast, potential_direct])
@pytest.mark.parametrize("t0, expected", [(0.5, 11 / 48), (1.0, 1 / 3)])
def test_potential_of_unit_ball_density(potential, t0, expected, unit_grid):
    # V(t) = t^3/3 + t (1 - t^2)/2 on [0, 1]
    V = potential(_ones(unit_grid))
    j = int(np.argmin(np.abs(unit_grid.nodes - t0)))
    assert unit_grid.nodes[j] == pytest.approx(t0)
    assert V.values[j] == pytest.approx(expected, abs=1e-6)


def test_potential_outside_support_is_constant():
    # outside the support V is the enclosed mass int_0^1 s^2 ds
    grid = build_grid(make_partition([1.0]), 2000, 3.0)
    f = np.where(grid.nodes <= 1.0, 1.0, 0.0)
    V = potential_fast(RadialField(f, grid)).values
    outside = V[grid.nodes >= 1.0]
    # the indicator's jump costs half a cell of quadrature
    h = grid.region_spacing(2)
    np.testing.assert_allclose(outside, 1 / 3, atol=h)
    assert np.ptp(outside) < 1e-15


def test_unit_ball_self_energy(unit_grid):
    assert coulomb_energy(_ones(unit_grid), _ones(unit_grid)) == pytest.approx(2 / 15, abs=1e-6)


def test_fast_matches_direct_on_random_fields(rng):
    grid = build_grid(make_partition([0.8, 2.2]), 166, 12.0)
    for _ in range(10):
        f = RadialField(rng.standard_normal(grid.n_nodes), grid)
        fast = potential_fast(f).values
        slow = potential_direct(f).values
        assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


def test_rowwise_potentials_match(rng):
    grid = build_grid(make_partition([1.0]), 50, 5.0)
    F = rng.standard_normal((3, grid.n_nodes))
    stacked = potential_values(grid, F)
    for row, V in zip(F, stacked):
        np.testing.assert_allclose(V, potential_values(grid, row), rtol=1e-14, atol=1e-14)


def test_direct_block_size_is_irrelevant(rng):
    grid = build_grid(make_partition([]), 300, 5.0)
    f = rng.standard_normal(grid.n_nodes)
    np.testing.assert_allclose(
        potential_values_direct(grid, f, block=7), potential_values_direct(grid, f, block=1000), rtol=1e-13
    )


def test_bilinearity(rng):
    grid = build_grid(make_partition([1.0]), 200, 8.0)
    f, g = _positive_pair(rng, grid)
    two_f = RadialField(2 * f.values, grid)
    assert coulomb_energy(f, two_f) == pytest.approx(2 * coulomb_energy(f, f), rel=1e-14)
    assert coulomb_energy(f, g, 3.0) == pytest.approx(3 * coulomb_energy(f, g), rel=1e-14)


def test_symmetry_and_positivity(rng):
    grid = build_grid(make_partition([1.0, 3.0]), 100, 10.0)
    for _ in range(50):
        f = RadialField(rng.standard_normal(grid.n_nodes), grid)
        g = RadialField(rng.standard_normal(grid.n_nodes), grid)
        dfg, dgf = coulomb_energy(f, g), coulomb_energy(g, f)
        assert abs(dfg - dgf) <= 1e-13 * max(abs(dfg), 1e-300) + 1e-15
        assert coulomb_energy(f, f) >= 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    grid = build_grid(make_partition([1.0]), 60, 6.0)
    f, g = _positive_pair(rng, grid)
    assert coulomb_energy(f, g) ** 2 <= coulomb_energy(f, f) * coulomb_energy(g, g) * (1 + 1e-12)


@given(st.floats(0.01, 100))
def test_cauchy_schwarz_equality_for_proportional_fields(c):
    grid = build_grid(make_partition([]), 80, 6.0)
    f = RadialField(np.exp(-grid.nodes) * (1 + grid.nodes), grid)
    g = RadialField(c * f.values, grid)
    lhs = coulomb_energy(f, g) ** 2
    rhs = coulomb_energy(f, f) * coulomb_energy(g, g)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_mixed_grids_rejected():
    a = build_grid(make_partition([]), 10, 1.0)
    b = build_grid(make_partition([]), 10, 1.0)
    with pytest.raises(GridMismatch):
        coulomb_energy(_ones(a), _ones(b))
