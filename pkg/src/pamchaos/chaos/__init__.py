"""Wiener chaos second moments, bound series and the cut-off integral."""

from .moments import (
    ChaosMomentRequest,
    Method,
    MomentEstimate,
    chaos_moment,
    closed_white_integrand_quadrature,
    first_chaos_colored_quadrature,
    first_chaos_white,
    second_chaos_closed_white,
    second_chaos_lower_bound,
    second_chaos_white,
    time_scaling_exponent,
)
from .series import (
    BoundConstants,
    SeriesReport,
    bound_constants,
    moment_upper_bound_series,
    series_convergence_report,
)
from .upsilon import UpsilonFit, UpsilonSpec, upsilon_cutoff, upsilon_slope

__all__ = [
    "BoundConstants",
    "ChaosMomentRequest",
    "Method",
    "MomentEstimate",
    "SeriesReport",
    "UpsilonFit",
    "UpsilonSpec",
    "bound_constants",
    "chaos_moment",
    "closed_white_integrand_quadrature",
    "first_chaos_colored_quadrature",
    "first_chaos_white",
    "moment_upper_bound_series",
    "second_chaos_closed_white",
    "second_chaos_lower_bound",
    "second_chaos_white",
    "series_convergence_report",
    "time_scaling_exponent",
    "upsilon_cutoff",
    "upsilon_slope",
]
