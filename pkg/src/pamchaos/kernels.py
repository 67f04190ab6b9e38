"""Scalar kernels: covariances, Gaussian moments, the pair kernel and friends.

Notation for the spatial exponent of one coordinate: ``alpha = 1 - 2*Hk``.
Every Fourier-side kernel uses the convention that one chaos level
contributes ``exp(-u |eta|^2 / 2) |eta - eta_prev|^alpha`` with ``u`` a
sum of backward time gaps.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import hyp1f1

from .errors import (
    DegenerateTimes,
    NonIntegrable,
    NonpositiveTime,
    OutOfRange,
    ToleranceNotMet,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)
# Gaussian mass beyond this many standard deviations is below 1e-32.
_TAIL = 12.0


def noise_constant(h: float) -> float:
    """Spectral normalization of the spatial noise, Gamma(2h+1) sin(pi h) / (2 pi).

    With this constant the measure ``c |xi|^(1-2h) dxi`` reproduces the
    covariance of fractional Brownian motion with Hurst index ``h``.
    """
    return math.gamma(2 * h + 1) * math.sin(math.pi * h) / (2 * math.pi)


def covariance_R(beta: float, a, b):
    """Fractional Brownian covariance (|a|^2b + |b|^2b - |a-b|^2b) / 2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = 0.5 * (np.abs(a) ** (2 * beta) + np.abs(b) ** (2 * beta)
                 - np.abs(a - b) ** (2 * beta))
    return out if out.ndim else float(out)


def gauss_abs_moment(alpha: float) -> float:
    """E|Z|^alpha for a standard normal Z."""
    if alpha <= -1:
        raise NonIntegrable(f"E|Z|^alpha diverges for alpha={alpha} <= -1")
    return 2 ** (alpha / 2) * math.gamma((alpha + 1) / 2) / math.sqrt(math.pi)


def _phi(z):
    return np.exp(-0.5 * np.square(z)) / SQRT_2PI


def _phi_s(z: float) -> float:
    return math.exp(-0.5 * z * z) / SQRT_2PI


def _quad(f, a, b, tol, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=tol, limit=400, **kw)
    return val, err


def _check(val, err, tol, what):
    # quad's estimate is conservative; allow a generous factor before failing
    if not math.isfinite(val) or err > max(1e3 * tol * abs(val), 1e-300):
        raise ToleranceNotMet(f"{what}: value {val:.6g} with error estimate {err:.3g}")


def shifted_abs_moment(alpha: float, shift: float) -> float:
    """E|Z - shift|^alpha = M(alpha) 1F1(-alpha/2; 1/2; -shift^2/2)."""
    if alpha <= -1:
        raise NonIntegrable(f"alpha={alpha} <= -1")
    return gauss_abs_moment(alpha) * float(hyp1f1(-0.5 * alpha, 0.5, -0.5 * shift * shift))


def shifted_abs_moment_quad(alpha: float, shift: float, tol: float = 1e-10) -> float:
    """E|Z - shift|^alpha by quadrature split at the singular point z = shift."""
    if alpha <= -1:
        raise NonIntegrable(f"alpha={alpha} <= -1")
    if alpha == 0:
        return 1.0
    m = abs(float(shift))
    total, errs = 0.0, 0.0
    # right of the singularity: y = z - m
    v, e = _quad(lambda y: _phi_s(y + m), 0.0, _TAIL, tol, weight="alg", wvar=(alpha, 0.0))
    total += v
    errs += e
    # left of the singularity: y = m - z, Gaussian peak sits at y = m
    near = min(1.0, m) if m > 0 else 1.0
    v, e = _quad(lambda y: _phi_s(m - y), 0.0, near, tol, weight="alg", wvar=(alpha, 0.0))
    total += v
    errs += e
    if m + _TAIL > near:
        pts = [m] if near < m < m + _TAIL else None
        v, e = _quad(lambda y: y ** alpha * _phi_s(m - y), near, m + _TAIL, tol, points=pts)
        total += v
        errs += e
    _check(total, errs, tol, "shifted_abs_moment")
    return total


@functools.lru_cache(maxsize=4096)
def lambda_kernel_f(lam: float, Hk: float, tol: float = 1e-9) -> float:
    """E|X1 (lam X1 - sqrt(1-lam^2) X2)|^(1-2Hk) for independent standard normals.

    Computed by conditioning on X1: the inner expectation is a shifted
    absolute moment with a known singular point.  Returns ``inf`` at
    ``lam == 1`` when ``Hk >= 3/4``.
    """
    if not 0.0 <= lam <= 1.0:
        raise OutOfRange(f"lambda must lie in [0, 1], got {lam}")
    alpha = 1.0 - 2.0 * Hk
    if alpha == 0.0:
        return 1.0
    if lam == 1.0:
        return math.inf if 2 * alpha <= -1 else gauss_abs_moment(2 * alpha)
    if lam == 0.0:
        return gauss_abs_moment(alpha) ** 2
    sigma = math.sqrt((1.0 - lam) * (1.0 + lam))

    def inner(x):
        return sigma ** alpha * shifted_abs_moment(alpha, lam * x / sigma)

    def outer(x):
        return _phi_s(x) * inner(x)

    # below x0 the inner moment is smoothed by sigma; above it behaves like (lam x)^alpha
    x0 = min(_TAIL, max(4.0 * sigma / lam, 1e-3))
    total, errs = _quad(outer, 0.0, x0, tol, weight="alg", wvar=(alpha, 0.0))
    if x0 < _TAIL:
        cuts = np.geomspace(x0, _TAIL, 6)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            v, e = _quad(lambda x: x ** alpha * outer(x), lo, hi, tol)
            total += v
            errs += e
    _check(total, errs, tol, "lambda_kernel_f")
    return 2.0 * total


def pair_kernel_g(a: float, b: float, Hk: float, tol: float = 1e-9) -> float:
    """Second-chaos spatial kernel for one coordinate.

    g = int int exp(-a eta2^2/2 - b eta1^2/2) |eta1|^al |eta2-eta1|^al d eta1 d eta2
      = 2 pi a^(Hk-1) b^(2Hk-3/2) (a+b)^(1/2-Hk) f(sqrt(a/(a+b)))
    """
    if a <= 0 or b <= 0:
        raise OutOfRange("pair kernel needs a > 0 and b > 0")
    lam = math.sqrt(a / (a + b))
    return (2 * math.pi * a ** (Hk - 1) * b ** (2 * Hk - 1.5) * (a + b) ** (0.5 - Hk)
            * lambda_kernel_f(lam, Hk, tol))


def lambda_kernel_min(Hk: float, tol: float = 1e-9) -> float:
    """min over [0, 1] of the lambda kernel (positive for every Hk in (0, 1))."""
    from scipy.optimize import minimize_scalar

    if Hk == 0.5:
        return 1.0
    res = minimize_scalar(lambda x: lambda_kernel_f(float(x), Hk, tol),
                          bounds=(0.0, 1.0 - 1e-12), method="bounded",
                          options={"xatol": 1e-6})
    cands = [res.fun, lambda_kernel_f(0.0, Hk, tol), lambda_kernel_f(1.0, Hk, tol)]
    return float(min(cands))


def fourier_chaos_kernel(t: float, x, s, xi) -> complex:
    """Spatial Fourier transform of the n-th chaos kernel with unit initial datum.

    ``s`` holds n time points in (0, t) in any order, ``xi`` an (n, d)
    array of frequencies matched to them.
    """
    s = np.asarray(s, dtype=float).ravel()
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(s <= 0) or np.any(s >= t):
        raise DegenerateTimes("time points must lie strictly inside (0, t)")
    order = np.argsort(s, kind="stable")
    ss = s[order]
    if np.any(np.diff(ss) == 0):
        raise DegenerateTimes("two time coordinates coincide")
    gaps = np.diff(np.append(ss, t))
    partial = np.cumsum(xi[order], axis=0)
    decay = np.exp(-0.5 * np.sum(gaps * np.sum(partial ** 2, axis=1)))
    phase = np.exp(-1j * float(np.dot(x, xi.sum(axis=0))))
    return complex(decay * phase)


def heat_kernel(t: float, x, d: int | None = None):
    """Gaussian density (2 pi t)^(-d/2) exp(-|x|^2 / (2t)).

    ``x`` has shape (..., d); scalars and 1-d arrays are read as d = 1
    points unless ``d`` says otherwise.
    """
    if t <= 0:
        raise NonpositiveTime(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    if d is None:
        d = 1 if x.ndim <= 1 else x.shape[-1]
    r2 = np.square(x) if (x.ndim <= 1 and d == 1) else np.sum(np.square(x), axis=-1)
    out = (2 * math.pi * t) ** (-d / 2) * np.exp(-r2 / (2 * t))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class GammaKernel:
    """Temporal covariance density; a Dirac mass when H0 = 1/2."""

    H0: float

    @property
    def mode(self) -> str:
        return "Dirac" if self.H0 == 0.5 else "Density"

    @property
    def coefficient(self) -> float:
        return self.H0 * (2 * self.H0 - 1)

    def __call__(self, r):
        if self.mode == "Dirac":
            raise TypeError("the white-in-time kernel is a Dirac mass, not a function")
        return self.coefficient * np.abs(np.asarray(r, dtype=float)) ** (2 * self.H0 - 2)

    def mass(self, s, lo: float, hi: float):
        """int_lo^hi gamma0(s - r) dr for lo <= s <= hi (1 in Dirac mode)."""
        s = np.asarray(s, dtype=float)
        if self.mode == "Dirac":
            return np.ones_like(s)
        e = 2 * self.H0 - 1
        return self.H0 * ((s - lo) ** e + (hi - s) ** e)


def gauss_power_constant(Hk: float) -> float:
    """sqrt(2 pi) E|Z|^(1-2Hk): the first-chaos factor g_1(u) = const * u^(Hk-1)."""
    return SQRT_2PI * gauss_abs_moment(1.0 - 2.0 * Hk)
