"""Singular one-dimensional integrals and simplex integrals of gap powers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import NonIntegrableEndpoint, PreconditionError, ToleranceNotMet

#: Lemma-style floor on gap exponents: alpha_i must exceed -1 + SIMPLEX_EPS.
SIMPLEX_EPS = 1e-6


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 500
    singular_exponent_limit: float = -1.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_SPEC = QuadratureSpec()


def _quad(f, a, b, spec: QuadratureSpec, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                              limit=spec.max_subdivisions, points=points)


def integrate_singular_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    left_exponent: float = 0.0,
    right_exponent: float = 0.0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    distances: bool = False,
) -> float:
    """int_a^b f for f ~ (x-a)^left_exponent near a and ~ (b-x)^right_exponent near b.

    Each half of the interval is mapped by x - a = h w^(1/(1+e)), which
    cancels the power singularity, then integrated adaptively.  With
    ``distances=True`` the integrand is called as ``f(x, x - a, b - x)``
    where both distances are exact, so a factor like ``(b - x)^e`` keeps
    full relative precision right up to the endpoint.
    """
    for e in (left_exponent, right_exponent):
        if e <= spec.singular_exponent_limit:
            raise NonIntegrableEndpoint(f"endpoint exponent {e} <= -1 is not integrable")
    if b == a:
        return 0.0
    if b < a:
        raise PreconditionError("interval must satisfy a <= b")
    mid = 0.5 * (a + b)
    h = mid - a
    total, err = 0.0, 0.0
    for e, sign in ((left_exponent, 1.0), (right_exponent, -1.0)):
        p = 1.0 / (1.0 + e)
        origin = a if sign > 0 else b

        def g(w, p=p, origin=origin, sign=sign):
            if w <= 0.0:
                return 0.0
            near = h * w ** p
            x = origin + sign * near
            if distances:
                da, db = (near, 2 * h - near) if sign > 0 else (2 * h - near, near)
                val = f(x, da, db)
            else:
                val = f(x)
            return val * h * p * w ** (p - 1.0)

        v, e_ = _quad(g, 0.0, 1.0, spec)
        total += v
        err += e_
    if not math.isfinite(total) or err > max(100 * spec.rel_tol * abs(total), spec.abs_tol * 100):
        raise ToleranceNotMet(f"integral {total:.6g} with error estimate {err:.3g}")
    return total


@dataclass(frozen=True)
class SimplexIntegrand:
    m: int
    alpha: tuple[float, ...]
    t: float

    def __post_init__(self):
        alpha = tuple(float(x) for x in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if self.m < 1 or len(alpha) != self.m:
            raise PreconditionError("need m >= 1 exponents")
        if self.t <= 0:
            raise PreconditionError("horizon must be positive")
        for x in alpha:
            if not -1.0 + SIMPLEX_EPS < x < 1.0:
                raise PreconditionError(f"gap exponent {x} outside (-1 + {SIMPLEX_EPS}, 1)")

    @property
    def total(self) -> float:
        return math.fsum(self.alpha)


def simplex_integral_J(spec: SimplexIntegrand) -> float:
    """int over 0<r_1<...<r_m<t of prod (r_i - r_{i-1})^alpha_i, with r_0 = 0.

    Dirichlet form: prod Gamma(alpha_i + 1) t^(|alpha|+m) / Gamma(|alpha| + m + 1).
    """
    a = np.asarray(spec.alpha)
    s = spec.total + spec.m
    logv = np.sum(gammaln(a + 1.0)) - gammaln(s + 1.0) + s * math.log(spec.t)
    return float(math.exp(logv))


def simplex_integral_J_nested(spec: SimplexIntegrand, qspec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Same integral by iterated singular quadrature (practical for m <= 3)."""
    alpha = spec.alpha

    def density(k: int, x: float) -> float:
        # joint density of the k-th point sitting at x
        if x <= 0:
            return 0.0
        if k == 1:
            return x ** alpha[0]
        left = sum(alpha[: k - 1]) + (k - 2)
        return integrate_singular_1d(
            lambda y: density(k - 1, y) * (x - y) ** alpha[k - 1],
            0.0, x, left, alpha[k - 1], qspec)

    top = sum(alpha) + spec.m - 1
    return integrate_singular_1d(lambda x: density(spec.m, x), 0.0, spec.t, top, 0.0, qspec)


def simplex_bound(spec: SimplexIntegrand, kappa: float) -> float:
    s = spec.total + spec.m
    if kappa == 0:
        return 0.0
    return math.exp(spec.m * math.log(kappa) + s * math.log(spec.t) - gammaln(s + 1.0))


def simplex_bound_check(spec: SimplexIntegrand, kappa: float) -> bool:
    """True iff J_m <= kappa^m t^(|alpha|+m) / Gamma(|alpha|+m+1)."""
    J = simplex_integral_J(spec)
    bound = simplex_bound(spec, kappa)
    return J <= bound * (1.0 + 1e-12)


def sandwich_integral(alpha: float, beta: float, eps: float, x: float,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """int_0^eps u^(-alpha) (u + x)^(-beta) du."""
    f = lambda u: u ** -alpha * (u + x) ** -beta  # noqa: E731
    split = min(x, eps)
    val = integrate_singular_1d(f, 0.0, split, -alpha, 0.0, spec)
    if split < eps:
        # smooth beyond the scale x; break the tail at geometric points
        cuts = np.geomspace(split, eps, max(2, int(math.log10(eps / split)) + 2))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            val += _quad(f, lo, hi, spec)[0]
    return val


def sandwich_exponent_fit(alpha: float, beta: float, eps: float,
                          xs: Sequence[float]) -> float:
    """Least-squares slope of log int_0^eps u^-alpha (u+x)^-beta du against log x."""
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise PreconditionError("need 0 < alpha, beta < 1")
    if not alpha + beta > 1:
        raise PreconditionError("need alpha + beta > 1")
    xs = np.asarray(xs, dtype=float)
    if xs.size < 4 or np.any(xs <= 0) or np.any(xs >= 3 * eps):
        raise PreconditionError("need at least 4 points in (0, 3 eps)")
    if math.log10(xs.max() / xs.min()) < 2 - 1e-9:
        raise PreconditionError("x values must span at least two decades")
    vals = np.array([sandwich_integral(alpha, beta, eps, x) for x in xs])
    slope, _ = np.polyfit(np.log(xs), np.log(vals), 1)
    return float(slope)
