import numpy as np
import pytest

from choquard_nodal import SolverConfig, build_grid, make_partition
from choquard_nodal.outer_search import optimize_partition


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def unit_grid():
    # single region on [0, 1]
    return build_grid(make_partition([]), 2000, 1.0)


@pytest.fixture(scope="session")
def small_config():
    return SolverConfig(p=3.0, k=1, points_per_annulus=400, r_infty=30.0)


def _refined(coarse, config):
    # warm-started search on the doubled grid, seeded at the coarse optimum
    fine = config.with_(points_per_annulus=2 * config.points_per_annulus)
    return optimize_partition(config.k, fine, seeds=[np.array(coarse.best_partition.radii)])


@pytest.fixture(scope="session")
def optimum_k1():
    config = SolverConfig(p=3.0, k=1, points_per_annulus=2000, r_infty=30.0)
    return optimize_partition(1, config)


@pytest.fixture(scope="session")
def optimum_k2():
    config = SolverConfig(p=3.0, k=2, points_per_annulus=2000, r_infty=30.0)
    return optimize_partition(2, config)


@pytest.fixture(scope="session")
def optimum_k1_fine(optimum_k1):
    return _refined(optimum_k1, SolverConfig(p=3.0, k=1, points_per_annulus=2000, r_infty=30.0))


@pytest.fixture(scope="session")
def optimum_k2_fine(optimum_k2):
    return _refined(optimum_k2, SolverConfig(p=3.0, k=2, points_per_annulus=2000, r_infty=30.0))


def _field_data(rng, k, p, n=60, r_infty=10.0):
    from choquard_nodal.energy import interaction_terms
    from choquard_nodal.nehari import InteractionData

    widths = rng.uniform(0.3, 2.0, size=k)
    grid = build_grid(make_partition(np.cumsum(widths)), n, r_infty)
    t = grid.nodes
    U = np.zeros((k + 1, t.size))
    for i in range(1, k + 2):
        sl = grid.free_slice(i)
        s = t[sl]
        # random positive profile times a random amplitude over several decades
        bump = (1 + rng.uniform(0, 1) * np.cos(rng.uniform(0.5, 5) * s)) * np.exp(-rng.uniform(0.1, 1) * s)
        U[i - 1, sl] = bump * 10 ** rng.uniform(-1, 1)
    U[:, -1] = 0.0
    return InteractionData(*interaction_terms(grid, U, p))


@pytest.fixture
def field_data(rng):
    """Factory for interaction data built from random fields on random partitions."""
    return lambda k, p, **kw: _field_data(rng, k, p, **kw)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
