"""splinefield: trajectory encoding as quadratic splines, analytic distance
fields over them, and stable autonomous motion generation.

Typical flow: fit a `QuadraticSpline` to a demonstrated `Trajectory`, query
its distance field with `query`/`batch_query`, and integrate the induced
dynamical system with `rollout`.
"""

from ._kernels import active_backend_name, available_backends
from .cubic import CubicCoefficients, cubic_coefficients, solve_cubic_in_unit_interval
from .dynamics import (
    DynamicsConfig,
    RolloutSession,
    RolloutTrace,
    gains,
    lyapunov_value,
    perturb,
    rollout,
    step,
    velocity,
)
from .errors import (
    DegenerateInputError,
    DivergenceError,
    DomainError,
    FormatError,
    IntegrationError,
    RankDeficiencyError,
    SplineFieldError,
    UnderdeterminedError,
    VersionError,
)
from .field import (
    FieldQuery,
    UnionField,
    batch_query,
    numerical_baseline_query,
    query,
    query_arrays,
    segment_distance,
    union_query,
)
from .spline import (
    BasisSystem,
    FitConfig,
    QuadraticSpline,
    SegmentControl,
    Trajectory,
    bernstein_derivative_row,
    bernstein_row,
    build_constraint_map,
    fit,
    global_parameterize,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSystem",
    "CubicCoefficients",
    "DegenerateInputError",
    "DivergenceError",
    "DomainError",
    "DynamicsConfig",
    "FieldQuery",
    "FitConfig",
    "FormatError",
    "IntegrationError",
    "QuadraticSpline",
    "RankDeficiencyError",
    "RolloutSession",
    "RolloutTrace",
    "SegmentControl",
    "SplineFieldError",
    "Trajectory",
    "UnderdeterminedError",
    "UnionField",
    "VersionError",
    "active_backend_name",
    "available_backends",
    "batch_query",
    "bernstein_derivative_row",
    "bernstein_row",
    "build_constraint_map",
    "cubic_coefficients",
    "fit",
    "gains",
    "global_parameterize",
    "lyapunov_value",
    "numerical_baseline_query",
    "perturb",
    "query",
    "query_arrays",
    "rollout",
    "segment_distance",
    "solve_cubic_in_unit_interval",
    "step",
    "union_query",
    "velocity",
]
