"""One-loop N-point scalar integrals through multivariate-normal orthant
probabilities, arcsine integrals, dimension shifts and tensor reduction."""

from .errors import (
    AssemblyLimit,
    DegenerateConditioning,
    DivergentIntegral,
    InconsistentMomenta,
    IndexOutOfRange,
    NonConvergence,
    NonPositiveDiagonal,
    NonPositiveMass,
    OrthantLoopError,
    OutOfRange,
    ParseError,
    SingularMatrix,
    TailDominates,
    ValidationError,
)
from .kinematics import (
    AngleBranch,
    KinematicAngle,
    KinematicConfig,
    PDStatus,
    SigmaMatrix,
    angle,
    build_sigma,
    kallen,
    random_interior_config,
)
from .matrixops import CorrelationData, correlation_data, delete_index
from .quadrature import (
    IntegralValue,
    QuadratureSettings,
    integrate_01,
    integrate_0inf,
    integrate_contour,
)
from .gaussint import (
    CorrelationSubmatrix,
    i_hex,
    i_pair,
    i_pair_conditional,
    i_quad,
    i_single,
    rho_tilde,
)
from .npoint import (
    evaluate_unit,
    j2_2d,
    j3_2d,
    j3_3d,
    j4_4d,
    j5_4d,
    j5_5d,
    j6_6d,
    j7_7d,
    orthant_probability,
)
from .dimshift import (
    EpsSeries,
    ShiftKind,
    ShiftedSigma,
    eps_expand,
    evaluate_any_dimension,
    expand_power_excess,
    lower_dimension,
    raise_dimension,
    raise_power_duplicate,
    raise_power_pair,
    raise_power_single,
    recurrence_check_lower,
    recurrence_check_merge,
)
from .oracle import (
    MCSettings,
    feynman_oracle,
    lauricella_expectation_mc,
    momenta_for_config,
    orthant_mc,
    tensor_rank2_mc,
    truncated_moment_mc,
)
from .tensor import TensorReduction5, reduce_rank2_5pt

__version__ = "0.1.0"
