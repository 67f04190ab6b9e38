"""The cut-off four-fold time integral behind the second-chaos lower bound.

    Upsilon = int_{s1<s2, r1<r2} (t-s1+t-r1)^A1 (t-s2+t-r2)^A2 (s2-s1+r2-r1)^B
                                 |s1-r1|^c |s2-r2|^c

with A1 = d/2 - H, A2 = H - d, B = 2H - 3d/2 (H the summed spatial exponent)
and c = 2H0 - 2.  Cut-offs: s2-s1+r2-r1 >= eps and |s_i - r_i| >= eps.

Coordinates x_i = s_i - r_i, b = s2-s1+r2-r1 and w = t-s2+t-r2 map the
domain onto |x2 - x1| < b, |x2| <= w <= 2t - b - |x1| with Jacobian 1/4.
The x2-integral of |x2|^c is elementary, the reflection x -> -x halves the
x1 range, and what is left is a three-dimensional integral evaluated by
tensor Gauss-Legendre rules in logarithmic variables on panels that break
at every kink of the integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..quadrature import QuadratureSpec, integrate_singular_1d

SLOPE_EPS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
# cut-offs deep enough for the eps^(2H0-1) corrections to fade when H0 is near 1/2
DEEP_EPS = tuple(10.0 ** -k for k in range(6, 13))


@dataclass(frozen=True)
class UpsilonSpec:
    t: float
    H0: float
    H: tuple[float, ...]
    epsilon: float
    nodes: int = 16

    def __post_init__(self):
        object.__setattr__(self, "H", tuple(float(h) for h in np.atleast_1d(self.H)))
        if not self.t > 0:
            raise PreconditionError("horizon must be positive")
        if not 0 < self.epsilon < self.t / 8:
            raise PreconditionError("epsilon must lie in (0, t/8)")
        if not 0.5 <= self.H0 < 1:
            raise PreconditionError("H0 must lie in [1/2, 1)")

    @property
    def d(self) -> int:
        return len(self.H)

    @property
    def exponents(self):
        d, H = self.d, sum(self.H)
        return d / 2 - H, H - d, 2 * H - 1.5 * d


def _log_panels(breaks: np.ndarray, n: int):
    """Nodes and weights of n-point log-variable Gauss-Legendre rules per panel.

    ``breaks`` has shape (..., K) sorted ascending and positive; panels with
    equal ends get zero weight.  Returns arrays of shape (..., (K-1) n).
    """
    g, gw = np.polynomial.legendre.leggauss(n)
    u, uw = 0.5 * (g + 1), 0.5 * gw
    lo, hi = breaks[..., :-1, None], breaks[..., 1:, None]
    ratio = np.log(hi / lo)
    x = lo * np.exp(ratio * u)
    w = x * ratio * uw
    shape = breaks.shape[:-1] + (-1,)
    return x.reshape(shape), w.reshape(shape)


def _ladder(lo, hi, extra, factor=4.0):
    """Geometric breakpoints from lo to hi plus extra kinks, clipped and sorted."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    span = np.log(np.maximum(hi / lo, 1.0))
    steps = int(math.ceil(float(np.max(span)) / math.log(factor))) if np.max(span) > 0 else 1
    k = np.arange(steps + 1)
    geo = lo[..., None] * np.exp(np.minimum(k * math.log(factor), span[..., None]))
    pts = [geo] + [np.asarray(e, dtype=float)[..., None] for e in extra]
    allpts = np.concatenate([np.broadcast_to(p, lo.shape + (p.shape[-1],)) for p in pts], axis=-1)
    allpts = np.clip(allpts, lo[..., None], hi[..., None])
    return np.sort(allpts, axis=-1)


def _abs_power_integral(lo, hi, c):
    """int_lo^hi |x|^c dx for lo <= hi (c > -1)."""
    e = c + 1.0
    F = lambda x: np.sign(x) * np.abs(x) ** e / e  # noqa: E731
    return F(hi) - F(lo)


def _x2_mass(x1, b, w, eps, c):
    """int |x2|^c over [x1-b, x1+b] cap [-w, w] with |x2| >= eps."""
    lo = np.maximum(x1 - b, -w)
    hi = np.minimum(x1 + b, w)
    hi = np.maximum(hi, lo)
    total = _abs_power_integral(lo, hi, c)
    clo = np.maximum(lo, -eps)
    chi = np.minimum(hi, eps)
    chi = np.maximum(chi, clo)
    return total - _abs_power_integral(clo, chi, c)


def _upsilon_colored(spec: UpsilonSpec) -> float:
    t, eps, n = spec.t, spec.epsilon, spec.nodes
    A1, A2, B = spec.exponents
    c = 2 * spec.H0 - 2
    # outer b in [eps, 2t - 2eps], processed in blocks to bound memory
    b_all, wb_all = _log_panels(_ladder(np.array(eps), np.array(2 * t - 2 * eps), []), n)
    total = 0.0
    for i in range(0, b_all.size, 16):
        total += _colored_block(b_all[i:i + 16], wb_all[i:i + 16], t, eps, n, A1, A2, B, c)
    return 0.5 * total


def _colored_block(b, wb, t, eps, n, A1, A2, B, c):
    # x1 in [eps, 2t - b - eps] with kinks where x1 - b crosses -eps and eps
    lo1 = np.full(b.shape, eps)
    x1, wx = _log_panels(_ladder(lo1, 2 * t - b - eps, [b - eps, b, b + eps]), n)
    bb = np.broadcast_to(b[:, None], x1.shape)
    # w in [eps, 2t - b - x1] with kinks at |x1 - b| and x1 + b
    w, ww = _log_panels(_ladder(np.full(x1.shape, eps), np.maximum(2 * t - bb - x1, eps),
                                [np.abs(x1 - bb), x1 + bb]), n)
    P = _x2_mass(x1[..., None], bb[..., None], w, eps, c)
    inner = np.sum(ww * (w + bb[..., None]) ** A1 * w ** A2 * P, axis=-1)
    mid = np.sum(wx * x1 ** c * inner, axis=-1)
    return float(np.sum(wb * b ** B * mid))


def _upsilon_white(spec: UpsilonSpec) -> float:
    """H0 = 1/2: r = s and Upsilon = 2^(A1+A2+B) int_{s2-s1 >= eps/2} (t-s1)^A1 (t-s2)^A2 (s2-s1)^B."""
    t, eps = spec.t, spec.epsilon
    A1, A2, B = spec.exponents
    qs = QuadratureSpec(rel_tol=1e-11)

    def inner(g):
        # p = t - s2 in (0, t - g)
        top = t - g
        return integrate_singular_1d(lambda p, l, r: (l + g) ** A1 * l ** A2, 0.0, top, A2, 0.0,
                                     qs, distances=True)

    val = integrate_singular_1d(lambda g: g ** B * inner(g), eps / 2, t, 0.0, A2 + 1.0, qs)
    return 2 ** (A1 + A2 + B) * val


def upsilon_cutoff(spec: UpsilonSpec) -> float:
    if spec.H0 == 0.5:
        return _upsilon_white(spec)
    return _upsilon_colored(spec)


@dataclass(frozen=True)
class UpsilonFit:
    eps: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    loglog_slope: float

    def to_dict(self) -> dict:
        return {"eps": list(self.eps), "values": list(self.values), "slope": self.slope,
                "loglog_slope": self.loglog_slope}


def upsilon_slope(t: float, H0: float, H, eps=DEEP_EPS, nodes: int = 12) -> UpsilonFit:
    """Growth exponent s in Upsilon(eps) = C0 + K eps^-s + (smaller corrections).

    ``slope`` is the least-squares slope of log[Upsilon(eps_{k+1}) - Upsilon(eps_k)]
    against log(1/eps_{k+1}); on a grid with constant ratio the finite part
    C0 cancels and the slope equals s.  ``loglog_slope`` is the plain slope
    of log Upsilon against log(1/eps), which C0 and the corrections bias.
    When 2 H0 - 1 is small the corrections decay like eps^(2H0-1), so the
    difference slope is only reliable once eps is far below the scale t.
    """
    eps = tuple(sorted(eps, reverse=True))
    if len(eps) < 3:
        raise PreconditionError("need at least three cut-off values")
    vals = np.array([upsilon_cutoff(UpsilonSpec(t, H0, tuple(np.atleast_1d(H)), e, nodes))
                     for e in eps])
    x = np.log(1.0 / np.array(eps))
    naive = float(np.polyfit(x, np.log(vals), 1)[0])
    diffs = np.diff(vals)
    if np.any(diffs <= 0):
        slope = math.nan
    else:
        slope = float(np.polyfit(x[1:], np.log(diffs), 1)[0])
    return UpsilonFit(eps, tuple(float(v) for v in vals), slope, naive)
