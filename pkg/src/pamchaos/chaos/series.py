"""Per-order upper bounds on ||u_n(t, x)||_p and the summability report.

Constants are fixed so that each bound is an actual inequality (not an
"up to a constant" statement) whenever every H_k >= 1/2:

* per spatial coordinate the frequency integral obeys
  G_k(u) <= sqrt(2 pi) M(1 - 2H_k) prod_i u_i^(H_k - 1)
  (symmetric rearrangement, valid for 1 - 2H_k <= 0), and the squared
  heat kernel doubles every gap, giving the factor 2^(H_total - d) per order;
* for H0 > 1/2 the temporal covariance is handled by the sharp
  Hardy-Littlewood-Sobolev constant on the line, raised to the n-th power.

Rough coordinates (H_k < 1/2) reuse the same constants but the bound is
then not certified; :attr:`BoundConstants.rigorous` records this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..errors import InsufficientRegularity
from ..kernels import gauss_power_constant, noise_constant
from ..params import HurstParams, Verdict, classify

#: orders scanned when taking suprema over n of per-order constants
SUP_ORDERS = 20_000


def hls_constant(H0: float) -> float:
    """Best C in int int f(s) f(r) gamma0(s - r) ds dr <= C ||f||_{1/H0}^2 on the line.

    gamma0(x) = H0 (2H0 - 1) |x|^(2H0 - 2); with lambda = 2 - 2H0 the sharp
    diagonal constant is pi^(lambda/2) Gamma((1-lambda)/2) / Gamma(1 - lambda/2)
    * (Gamma(1/2) / Gamma(1))^(lambda - 1).  Equals 1 in the white limit.
    """
    if H0 == 0.5:
        return 1.0
    lam = 2.0 - 2.0 * H0
    sharp = (math.pi ** (lam / 2) * math.gamma((1 - lam) / 2) / math.gamma(1 - lam / 2)
             * math.sqrt(math.pi) ** (lam - 1))
    return H0 * (2 * H0 - 1) * sharp


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the bound b_n = p^(n/2) (n!)^(H0-1/2) [K^n t^(rho0 n) / Gamma(rho0 n + 1)]^H0."""

    params: HurstParams
    spatial: float  # prod_k c_k sqrt(2 pi) M(alpha_k) 2^(H_k - 1)
    hls: float
    K: float
    rho0: float
    rigorous: bool
    overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"spatial": self.spatial, "hls": self.hls, "K": self.K, "rho0": self.rho0,
                "rigorous": self.rigorous, **({"overrides": self.overrides} if self.overrides else {})}


def bound_constants(p: HurstParams, K: float | None = None) -> BoundConstants:
    a = p.excess
    rho0 = a / (2 * p.H0) + 1
    if rho0 <= 0:
        raise InsufficientRegularity("H_total - d + 2 H0 <= 0: no time integrability")
    spatial = math.prod(noise_constant(h) * gauss_power_constant(h) * 2 ** (h - 1) for h in p.H)
    hls = hls_constant(p.H0)
    k_calc = (spatial * hls) ** (1 / (2 * p.H0)) * math.gamma(a / (2 * p.H0) + 1)
    over = {} if K is None else {"K": float(K)}
    return BoundConstants(p, spatial, hls, float(K) if K is not None else k_calc, rho0,
                          rigorous=all(h >= 0.5 for h in p.H), overrides=over)


def log_bound_terms(c: BoundConstants, t: float, p: float, N: int) -> np.ndarray:
    """log b_n for n = 0..N."""
    n = np.arange(N + 1, dtype=float)
    H0 = c.params.H0
    with np.errstate(divide="ignore"):
        logt = math.log(t) if t > 0 else -np.inf
        inner = n * math.log(c.K) + c.rho0 * n * logt - gammaln(c.rho0 * n + 1)
        inner = np.where(n == 0, 0.0, inner)
    return 0.5 * n * math.log(p) + (H0 - 0.5) * gammaln(n + 1) + H0 * inner


def _require_applicable(p: HurstParams, allow_critical: bool) -> None:
    v = classify(p).verdict
    if v is Verdict.GLOBAL_UNIQUE:
        return
    if allow_critical and v is Verdict.LOCAL_UNIQUE:
        return
    raise InsufficientRegularity(f"bound is vacuous for verdict {v.value}")


def moment_upper_bound_series(p: HurstParams, t: float, pnorm: float, N: int,
                              K: float | None = None) -> np.ndarray:
    """Upper bounds on ||u_n(t, x)||_p for n = 0..N (the n = 0 term is 1)."""
    _require_applicable(p, allow_critical=True)
    if pnorm < 2:
        raise ValueError("norm order p must be at least 2")
    if t < 0:
        raise ValueError("t must be nonnegative")
    c = bound_constants(p, K)
    return np.exp(log_bound_terms(c, t, pnorm, N))


def critical_horizon(c: BoundConstants, pnorm: float) -> float:
    """T0 below which the critical bound series converges geometrically.

    With H_total = d - 1 the ratio b_{n+1}/b_n tends to
    p^(1/2) (K t^rho0 rho0^-rho0)^H0, which is < 1 iff t < T0.
    """
    H0 = c.params.H0
    return c.rho0 * (pnorm ** -0.5 * c.K ** -H0) ** (1.0 / (H0 - 0.5))


@dataclass(frozen=True)
class SeriesReport:
    applicable: bool
    verdict: str
    terms: tuple[float, ...] = ()
    partial_sums: tuple[float, ...] = ()
    ratios: tuple[float, ...] = ()
    ratio_limit: float | None = None
    kind: str = ""
    T0: float | None = None
    rigorous: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def series_convergence_report(p: HurstParams, t: float, pnorm: float = 2.0, N: int = 40,
                              K: float | None = None) -> SeriesReport:
    """Partial sums and ratio-test diagnostics of the bound series."""
    verdict = classify(p)
    try:
        _require_applicable(p, allow_critical=True)
    except InsufficientRegularity as exc:
        return SeriesReport(False, verdict.verdict.value, reason=str(exc))
    c = bound_constants(p, K)
    logs = log_bound_terms(c, t, pnorm, N)
    terms = np.exp(logs)
    ratios = np.exp(np.diff(logs))
    critical = verdict.verdict is Verdict.LOCAL_UNIQUE
    if critical:
        H0 = p.H0
        limit = math.sqrt(pnorm) * (c.K * t ** c.rho0 * c.rho0 ** -c.rho0) ** H0
        kind, T0 = "geometric", critical_horizon(c, pnorm)
    else:
        limit, kind, T0 = 0.0, "superexponential", None
    return SeriesReport(True, verdict.verdict.value, tuple(terms), tuple(np.cumsum(terms)),
                        tuple(ratios), limit, kind, T0, c.rigorous)
