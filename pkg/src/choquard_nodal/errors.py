"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI copies into
the summary JSON.
"""
from __future__ import annotations


class ChoquardError(Exception):
    code = "error"


class ConfigError(ChoquardError, ValueError):
    code = "config_error"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ExponentOutOfRange(ConfigError):
    code = "exponent_out_of_range"

    def __init__(self, p: float):
        super().__init__("p", f"exponent {p!r} outside (5/2, 5)")
        self.p = p


class NonIncreasingRadii(ChoquardError, ValueError):
    code = "non_increasing_radii"


class NonFiniteRadius(ChoquardError, ValueError):
    code = "non_finite_radius"


class TruncationTooSmall(ChoquardError, ValueError):
    code = "truncation_too_small"


class GridMismatch(ChoquardError, ValueError):
    code = "grid_mismatch"


class ZeroField(ChoquardError, ValueError):
    code = "zero_field"


class DeltaTooLarge(ChoquardError, ValueError):
    code = "delta_too_large"


class SolverError(ChoquardError, RuntimeError):
    code = "solver_error"


class SingularSolve(SolverError):
    code = "singular_solve"


class DegenerateGram(SolverError):
    code = "degenerate_gram"


class HomotopyStalled(SolverError):
    code = "homotopy_stalled"


class NewtonDiverged(SolverError):
    code = "newton_diverged"


class CertificationFailed(SolverError):
    code = "certification_failed"


class MaxIterationsExceeded(SolverError):
    code = "max_iterations_exceeded"


class ComponentCollapsed(SolverError):
    code = "component_collapsed"


class SearchFailed(SolverError):
    code = "search_failed"
