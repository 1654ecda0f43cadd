"""Discrete-time hedging engine for European calls.

Prices under a signed pricing kernel via three interchangeable routes — the
backward grid recursion, the closed lognormal form, and Mellin-contour
inversion — plus feasibility/negativity diagnostics, small-step asymptotics,
and a deterministic Monte Carlo hedging oracle.
"""
from .asymptotics import ExpansionEstimate, bs_limit_check, estimate_expansion
from .cli import RunConfig, main, run
from .errors import (
    BracketingError,
    ContourError,
    DegenerateDistributionError,
    MomentDomainError,
    NumericError,
    QuadratureError,
    StripError,
    ValidationError,
)
from .kernel import (
    PriceGrid,
    PricingKernel,
    backward_step,
    kernel_eval,
    min_variance_delta,
    portfolio_value,
    price_recursive,
)
from .lognormal import (
    BinomialCoefficients,
    LognormalParams,
    U_closed,
    black_scholes,
    closed_moments,
    coefficients,
    green_closed,
    price_closed,
)
from .market_model import (
    MarketPath,
    MarketStep,
    ReturnDistribution,
    exp_moment,
    feasibility_interval,
    step_moments,
)
from .mc_oracle import (
    DeltaFit,
    HedgeReport,
    SimConfig,
    fit_optimal_delta,
    simulate_hedged_step,
    uniform_stream,
)
from .mellin import (
    MellinLine,
    TransformFn,
    default_line,
    green_price,
    kernel_transform,
    mellin_forward,
    mellin_inverse,
    payoff_transform_call,
    price_mellin,
    product_transform,
)
from .negativity import (
    NegativityReport,
    lognormal_family,
    scan_negative_set,
    shrinkage_profile,
)

__all__ = [
    "BinomialCoefficients",
    "BracketingError",
    "ContourError",
    "DegenerateDistributionError",
    "DeltaFit",
    "ExpansionEstimate",
    "HedgeReport",
    "LognormalParams",
    "MarketPath",
    "MarketStep",
    "MellinLine",
    "MomentDomainError",
    "NegativityReport",
    "NumericError",
    "PriceGrid",
    "PricingKernel",
    "QuadratureError",
    "ReturnDistribution",
    "RunConfig",
    "SimConfig",
    "StripError",
    "TransformFn",
    "U_closed",
    "ValidationError",
    "backward_step",
    "black_scholes",
    "bs_limit_check",
    "closed_moments",
    "coefficients",
    "default_line",
    "estimate_expansion",
    "exp_moment",
    "feasibility_interval",
    "fit_optimal_delta",
    "green_closed",
    "green_price",
    "kernel_eval",
    "kernel_transform",
    "lognormal_family",
    "main",
    "mellin_forward",
    "mellin_inverse",
    "min_variance_delta",
    "payoff_transform_call",
    "portfolio_value",
    "price_closed",
    "price_mellin",
    "price_recursive",
    "product_transform",
    "run",
    "scan_negative_set",
    "shrinkage_profile",
    "simulate_hedged_step",
    "step_moments",
    "uniform_stream",
]
