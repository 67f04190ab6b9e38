"""Mittag-Leffler series, Stirling diagnostics and closed-form moment bounds.

The moment bound has the shape

    C_H exp(C_H t^theta p^gamma),
    theta = (H_total - d + 2 H0) / (H_total - d + 1),
    gamma = (H_total - d + 2) / (H_total - d + 1),

and its constant is derived from the per-order bounds of
:mod:`pamchaos.chaos.series`: those are dominated termwise by
K2^n (sqrt(p) t^(theta (a+1)/2))^n / Gamma(rho n + 1) with rho = (a + 1)/2,
whose sum is a Mittag-Leffler function E_rho(x) <= A_rho exp(x^(1/rho)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .chaos.series import SUP_ORDERS, bound_constants
from .errors import InsufficientRegularity
from .params import HurstParams, Verdict, classify

#: once the ratio of consecutive terms drops below this, the tail is geometric
TAIL_RATIO = 0.5
#: relative safety margin on numerically computed suprema
SUP_MARGIN = 1e-2


@dataclass(frozen=True)
class MLSeriesSpec:
    rho: float
    x: float
    tail_tol: float = 1e-14

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.x >= 0:
            raise ValueError("x must be nonnegative")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


@dataclass(frozen=True)
class MLResult:
    log_value: float
    remainder_bound: float  # relative to the returned value
    terms: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709.0 else math.inf


def mittag_leffler_log(spec: MLSeriesSpec, block: int = 256) -> MLResult:
    """log of sum_n x^n / Gamma(rho n + 1) with a certified relative remainder.

    Term ratios x Gamma(rho n + 1) / Gamma(rho n + rho + 1) decrease in n
    (log-convexity of Gamma), so once a ratio r < 1/2 is reached at term N
    the remainder is at most t_N r / (1 - r).  Summation continues until that
    bound is below ``tail_tol`` times the partial sum (or ``tail_tol`` itself
    when the sum is below one).
    """
    rho, x = spec.rho, spec.x
    if x == 0.0:
        return MLResult(0.0, 0.0, 1)
    lx = math.log(x)
    acc = -math.inf
    start = 0
    while True:
        n = np.arange(start, start + block, dtype=float)
        lt = n * lx - gammaln(rho * n + 1)
        acc = float(np.logaddexp(acc, logsumexp(lt)))
        last = lt[-1]
        lr = lx + gammaln(rho * n[-1] + 1) - gammaln(rho * n[-1] + rho + 1)
        r = math.exp(lr)
        if r < TAIL_RATIO:
            log_rem = last + lr - math.log1p(-r)
            scale = max(acc, 0.0)
            if log_rem - scale < math.log(spec.tail_tol):
                return MLResult(acc, math.exp(log_rem - acc), int(n[-1]) + 1)
        start += block


def mittag_leffler(spec: MLSeriesSpec) -> float:
    """E_rho(x) = sum_{n >= 0} x^n / Gamma(rho n + 1)."""
    return mittag_leffler_log(spec).value


@dataclass(frozen=True)
class StirlingResult:
    value: float
    rel_error: float  # against the exact Gamma(z)
    error_estimate: float  # leading asymptotic term 1/(12 z)
    in_asymptotic_range: bool


#: below this the 1/(12 z) estimate is no longer a faithful error size
STIRLING_MIN_Z = 10.0


def stirling_gamma(z: float) -> StirlingResult:
    """sqrt(2 pi / z) (z / e)^z as an approximation of Gamma(z)."""
    if not z > 0:
        raise ValueError("z must be positive")
    log_approx = 0.5 * math.log(2 * math.pi / z) + z * (math.log(z) - 1.0)
    rel = abs(math.expm1(log_approx - math.lgamma(z)))
    value = math.exp(log_approx) if log_approx < 709.0 else math.inf
    return StirlingResult(value, rel, 1.0 / (12.0 * z), z >= STIRLING_MIN_Z)


def moment_bound_exponents(params: HurstParams) -> tuple[float, float]:
    """(theta, gamma): exponents of t and p inside the exponential."""
    a = params.excess
    return (a + 2 * params.H0) / (a + 1), (a + 2) / (a + 1)


@lru_cache(maxsize=64)
def ml_growth_constant(rho: float) -> float:
    """A_rho = sup_{x >= 0} E_rho(x) exp(-x^(1/rho)), evaluated on a grid.

    E_rho(x) exp(-x^(1/rho)) tends to 1/rho; the supremum is taken over
    x^(1/rho) in [0, 200] together with that limit.
    """
    ys = np.concatenate([[0.0], np.geomspace(1e-3, 200.0, 240)])
    best = 1.0 / rho
    for y in ys:
        x = y ** rho
        best = max(best, math.exp(mittag_leffler_log(MLSeriesSpec(rho, x, 1e-12)).log_value - y))
    return best


def _order_constant(params: HurstParams, K: float) -> float:
    """K2 = sup_n R_n^(1/n), R_n = (n!)^(H0-1/2) Gamma(rho n + 1) K^(n H0) / Gamma(rho0 n + 1)^H0."""
    H0, a = params.H0, params.excess
    rho, rho0 = (a + 1) / 2, a / (2 * H0) + 1
    n = np.arange(1, SUP_ORDERS + 1, dtype=float)
    logR = (H0 - 0.5) * gammaln(n + 1) + gammaln(rho * n + 1) - H0 * gammaln(rho0 * n + 1)
    per = logR / n + H0 * math.log(K)
    # the n log n parts cancel; the linear parts give the n -> infinity limit
    limit = (-(H0 - 0.5) + rho * math.log(rho) - rho - H0 * (rho0 * math.log(rho0) - rho0)
             + H0 * math.log(K))
    return math.exp(max(float(per.max()), limit))


@dataclass(frozen=True)
class MomentBoundConstants:
    C_H: float
    K2: float
    A_rho: float
    rho: float
    theta: float
    gamma: float
    rigorous: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _require_global(params: HurstParams) -> None:
    v = classify(params).verdict
    if v is not Verdict.GLOBAL_UNIQUE:
        raise InsufficientRegularity(
            f"moment bound needs the global sufficient condition (verdict {v.value})")


def moment_bound_constants(params: HurstParams, K: float | None = None) -> MomentBoundConstants:
    _require_global(params)
    c = bound_constants(params, K)
    rho = (params.excess + 1) / 2
    K2 = _order_constant(params, c.K)
    A = ml_growth_constant(round(rho, 12))
    theta, gamma = moment_bound_exponents(params)
    C_H = max(A, K2 ** (1.0 / rho)) * (1 + SUP_MARGIN)
    return MomentBoundConstants(C_H, K2, A, rho, theta, gamma, c.rigorous)


def moment_bound(params: HurstParams, t: float, p: float, C: float | None = None,
                 K: float | None = None) -> float:
    """C_H exp(C_H t^theta p^gamma).

    With the default constant the value dominates sum_n b_n, the summed
    per-order bounds on ||u_n(t, x)||_p.  ``C`` overrides C_H for shape
    studies; ``K`` overrides the per-order constant it is derived from.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if p < 2:
        raise ValueError("p must be at least 2")
    consts = moment_bound_constants(params, K)
    CH = consts.C_H if C is None else float(C)
    expo = CH * t ** consts.theta * p ** consts.gamma
    return CH * math.exp(expo) if expo < 709.0 else math.inf


def log_moment_bound(params: HurstParams, t: float, p: float, C: float | None = None,
                     K: float | None = None) -> float:
    """log of :func:`moment_bound`, finite where the bound itself overflows."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if p < 2:
        raise ValueError("p must be at least 2")
    consts = moment_bound_constants(params, K)
    CH = consts.C_H if C is None else float(C)
    return math.log(CH) + CH * t ** consts.theta * p ** consts.gamma
