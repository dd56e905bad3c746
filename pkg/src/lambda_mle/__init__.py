"""Maximum likelihood estimation for lambda-exponential families.

The fixed-point iteration lives in :mod:`lambda_mle.solver`; the two bundled
families are :class:`QGaussianModel` and :class:`DirichletPerturbationModel`.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DimensionMismatch,
    DomainError,
    EmptyData,
    InitializationError,
    InvalidManifest,
    InvalidParameter,
    LambdaFamilyError,
    NoFeasiblePoint,
    ParseError,
    QuadratureFailure,
)
from .lambda_core import (  # noqa: E402
    Curvature,
    DualParam,
    NaturalParam,
    fenchel_young_residual,
    lambda_gradient,
    numeric_conjugate,
    pairing,
)
from .family import (  # noqa: E402
    FamilyModel,
    SufficientData,
    escort_expectation_oracle,
    escort_weights,
    first_order_residual,
    kappa,
    log_density,
    log_likelihood,
)
from .qgaussian import QGaussianModel  # noqa: E402
from .dirichlet import DirichletPerturbationModel  # noqa: E402
from .solver import (  # noqa: E402
    FitResult,
    SolverConfig,
    SolverTrace,
    monotonicity_audit,
    sample_mean_init,
    solve,
    step,
)

__all__ = [
    "DimensionMismatch",
    "DomainError",
    "EmptyData",
    "InitializationError",
    "InvalidManifest",
    "InvalidParameter",
    "LambdaFamilyError",
    "NoFeasiblePoint",
    "ParseError",
    "QuadratureFailure",
    "Curvature",
    "DualParam",
    "NaturalParam",
    "fenchel_young_residual",
    "lambda_gradient",
    "numeric_conjugate",
    "pairing",
    "FamilyModel",
    "SufficientData",
    "escort_expectation_oracle",
    "escort_weights",
    "first_order_residual",
    "kappa",
    "log_density",
    "log_likelihood",
    "QGaussianModel",
    "DirichletPerturbationModel",
    "FitResult",
    "SolverConfig",
    "SolverTrace",
    "monotonicity_audit",
    "sample_mean_init",
    "solve",
    "step",
]
