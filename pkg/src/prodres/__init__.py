"""Resolvent kernels of products of hyperbolic spaces: contour formula, boundary asymptotics and Martin limits."""

__version__ = "0.1.0"

from .errors import (
    BoundarySignal,
    BranchCutError,
    ConfigError,
    ContourError,
    DimensionMismatch,
    DomainError,
    NoCrossing,
    PoleOnContour,
    ProdresError,
    QuadratureError,
    SideFaceRegime,
    TransitionSignal,
    UnsupportedDimension,
)
from .geometry import HyperbolicPoint, ProductPoint, boundary_coords, point_pair_delta, ray_point
from .hyperbolic import heat_kernel, poisson_kernel, resolvent_kernel, spherical_function, zeta_of_lambda
from .martin import MartinBoundaryPoint, MartinRequest, closed_form_limit, martin_kernel, martin_limit
from .product import (
    CutConfiguration,
    ModelOperator,
    ProductResolventRequest,
    SyntheticPole,
    boundary_value_kernel,
    continued_kernel,
    product_kernel,
)
from .saddle import PhaseContext, classify, predict_leading, residue_decision, saddle_point
from .scaled import ScaledComplex
