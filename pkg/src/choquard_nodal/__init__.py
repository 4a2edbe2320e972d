"""Radial sign-changing solutions of the Choquard equation.

``-Δu + u = (|x|^{-1} * |u|^p) |u|^{p-2} u`` in R^3, ``5/2 < p < 5``, via
energy minimisation on a Nehari-type set for each annular partition and an
outer search over partitions.
"""
from .config import SolverConfig, load_config
from .coulomb import CoulombKernel, coulomb_energy, potential_direct, potential_fast
from .energy import constraint_values, h_gradient, single_field_energy, total_energy
from .errors import ChoquardError, ConfigError, SolverError
from .inner_solver import SolutionBundle, euler_lagrange_residual, minimize_fixed_partition
from .nehari import InteractionData, NehariTuple, project
from .outer_search import OuterResult, optimize_partition, psi
from .partition_grid import AnnularPartition, RadialGrid, build_grid, make_partition
from .radial_field import ComponentField, RadialField, glue, h_norm_sq
from .verifier import VerificationReport, jump_energy_gain, verify

__version__ = "0.1.0"

__all__ = [
    "SolverConfig",
    "load_config",
    "CoulombKernel",
    "coulomb_energy",
    "potential_direct",
    "potential_fast",
    "constraint_values",
    "h_gradient",
    "single_field_energy",
    "total_energy",
    "ChoquardError",
    "ConfigError",
    "SolverError",
    "SolutionBundle",
    "euler_lagrange_residual",
    "minimize_fixed_partition",
    "InteractionData",
    "NehariTuple",
    "project",
    "OuterResult",
    "optimize_partition",
    "psi",
    "AnnularPartition",
    "RadialGrid",
    "build_grid",
    "make_partition",
    "ComponentField",
    "RadialField",
    "glue",
    "h_norm_sq",
    "VerificationReport",
    "jump_energy_gain",
    "verify",
]
