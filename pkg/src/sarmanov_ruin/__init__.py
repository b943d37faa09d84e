"""Tail asymptotics and Monte Carlo checks for discounted aggregate losses
with Sarmanov-dependent loss/discount pairs."""

from .asymptotics import (
    AsymptoticConstants,
    breiman_constant,
    finite_horizon_factor,
    geometric_factor,
    horizon_factor,
    infinite_horizon_factor,
    kernel_power_moment,
    predicted_tail_H_i,
)
from .conditions import DZReport, SummabilityReport, classify_sv, dz_report, summability_report
from .errors import (
    AcceptanceRateError,
    DomainError,
    HypothesisError,
    ModelError,
    NumericalError,
    QuadratureError,
    SarmanovError,
)
from .marginals import (
    BoundedPareto,
    Lognormal,
    LognormalTail,
    ParetoTail,
    PointMass,
    RegularlyVaryingLaw,
    ScaledBeta,
    SlowlyVaryingSpec,
    Uniform,
    WeibullTail,
    power_moment,
    quantile,
    sample_iid,
    tail,
    truncated_alpha_moment,
)
from .sarmanov import (
    CustomKernels,
    FGMKernels,
    SarmanovModel,
    ValidationReport,
    conditional_tail_x_given_y,
    kernel_tail_integral,
    sample_joint,
    twisted_law,
    validate,
)
from .simulate import (
    CURVE_COLUMNS,
    MCEstimate,
    estimate_finite_ruin,
    estimate_H_i,
    estimate_infinite_ruin,
    exact_product_tail,
    product_tail_mc,
    ratio_curve,
    truncation_plan,
)

__version__ = "0.1.0"
