"""Second moments E[u_n(t, x)^2] of the chaos components with unit initial datum.

Three routes are available:

* ``SimplexQuadrature`` (white time only): exact for n = 1, a one-dimensional
  integral of the lambda kernel for n = 2 (any d), and the resolvent chain
  for n >= 3 (d = 1, H > 1/2).
* ``SpectralMonteCarlo``: ordered times drawn uniformly on the simplex and the
  frequency integral estimated by Gaussian-power importance sampling.
* ``TemporalMonteCarlo`` (H0 > 1/2): free r-times drawn proportionally to
  the temporal covariance, frequency part as above.

None of the moments depend on x because the initial datum is constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from scipy import integrate
from scipy.special import beta as beta_fn

from ..errors import DomainOrder, PreconditionError
from ..kernels import (
    gauss_power_constant,
    lambda_kernel_f,
    lambda_kernel_min,
    noise_constant,
    pair_kernel_g,
)
from ..params import HurstParams
from ..quadrature import QuadratureSpec, integrate_singular_1d
from . import montecarlo as mc
from .resolvent import white_moment_resolvent


class Method(str, enum.Enum):
    SIMPLEX_QUADRATURE = "SimplexQuadrature"
    TEMPORAL_MC = "TemporalMonteCarlo"
    SPECTRAL_MC = "SpectralMonteCarlo"


DEFAULT_MAX_ORDER = {
    Method.SIMPLEX_QUADRATURE: 6,
    Method.TEMPORAL_MC: 4,
    Method.SPECTRAL_MC: 2,
}


@dataclass(frozen=True)
class ChaosMomentRequest:
    n: int
    t: float
    params: HurstParams
    method: Method = Method.SIMPLEX_QUADRATURE
    samples: int = 200_000
    seed: int = 0
    max_order: int | None = None
    workers: int = 1
    x: tuple[float, ...] | None = None  # kept for symmetry with the solver; ignored

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError("chaos order must be a positive integer")
        if not self.t > 0:
            raise PreconditionError("horizon must be positive")
        limit = self.max_order if self.max_order is not None else DEFAULT_MAX_ORDER[self.method]
        if self.n > limit:
            raise PreconditionError(f"order {self.n} exceeds the {self.method.value} limit {limit}")
        if self.method is Method.SIMPLEX_QUADRATURE and not self.params.white:
            raise PreconditionError("simplex quadrature requires H0 = 1/2")
        if self.method is Method.TEMPORAL_MC and self.params.white:
            raise PreconditionError("temporal Monte Carlo requires H0 > 1/2")
        if self.method is not Method.SIMPLEX_QUADRATURE and self.samples < 2:
            raise PreconditionError("Monte Carlo needs at least two samples")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    method: Method
    std_error: float | None = None
    divergent: bool = False
    heuristic: bool = False
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "method": self.method.value,
            "divergent": self.divergent,
            "heuristic": self.heuristic,
            **({"notes": self.notes} if self.notes else {}),
        }


def _divergent(method, reason: str) -> MomentEstimate:
    return MomentEstimate(math.inf, method, divergent=True, notes={"reason": reason})


def white_divergence_reason(p: HurstParams, n: int) -> str | None:
    """Finiteness of the white-time moments: needs H_total - d > -1 and, from n = 2 on,
    2 H_total - 3d/2 > -1."""
    if p.excess + 1 <= 0:
        return "H_total - d <= -1"
    if n >= 2 and 2 * p.H_total - 1.5 * p.d + 1 <= 0:
        return "2 H_total - 3d/2 <= -1"
    return None


def first_chaos_white(p: HurstParams, t: float) -> float:
    """E[u_1(t)^2] = prod_k c_k sqrt(2 pi) M(alpha_k) 2^(H_k - 1) * t^(a+1) / (a+1), a = H_total - d."""
    a = p.excess
    const = math.prod(noise_constant(h) * gauss_power_constant(h) * 2 ** (h - 1) for h in p.H)
    return const * t ** (a + 1) / (a + 1)


def second_chaos_white(p: HurstParams, t: float, tol: float = 1e-8) -> float:
    """E[u_2(t)^2] as a one-dimensional integral in mu = (t - s_2) / (t - s_1).

    E = prod_k (2 pi c_k^2 4^(H_k-1)) t^(2a+2)/(2a+2)
        * int_0^1 prod_k mu^(H_k-1) (1-mu)^(2H_k-3/2) f_k(sqrt(mu)) dmu.
    """
    a = p.excess
    const = math.prod(2 * math.pi * noise_constant(h) ** 2 * 2 ** (2 * h - 2) for h in p.H)
    left = a
    # f_k(lambda) grows like (1 - lambda^2)^((3 - 4H)/2) when H > 3/4
    right = sum(2 * h - 1.5 + min(0.0, (3 - 4 * h) / 2) for h in p.H)

    def integrand(mu, dl, dr):
        out = 1.0
        lam = math.sqrt(mu)
        for h in p.H:
            out *= dl ** (h - 1) * dr ** (2 * h - 1.5) * lambda_kernel_f(lam, h, 1e-10)
        return out

    spec = QuadratureSpec(rel_tol=tol, abs_tol=1e-300)
    val = integrate_singular_1d(integrand, 0.0, 1.0, left, max(right, -0.999), spec, distances=True)
    return const * val * t ** (2 * a + 2) / (2 * a + 2)


def chaos_moment_white(req: ChaosMomentRequest) -> MomentEstimate:
    p = req.params
    if not p.white:
        raise PreconditionError("white-time moments need H0 = 1/2")
    reason = white_divergence_reason(p, req.n)
    if reason:
        return _divergent(req.method, reason)
    if req.method is Method.SPECTRAL_MC:
        st = mc.run_estimator("spectral", req.n, req.t, p.H, req.samples, req.seed,
                              workers=req.workers)
        return MomentEstimate(st.mean, req.method, st.std_error)
    if req.method is not Method.SIMPLEX_QUADRATURE:
        raise PreconditionError(f"{req.method.value} is not a white-time method")
    if req.n == 1:
        return MomentEstimate(first_chaos_white(p, req.t), req.method,
                              notes={"route": "closed form"})
    if req.n == 2:
        return MomentEstimate(second_chaos_white(p, req.t), req.method,
                              notes={"route": "lambda-kernel integral"})
    if p.d == 1 and p.H[0] > 0.5:
        return MomentEstimate(white_moment_resolvent(req.n, req.t, p.H[0]), req.method,
                              notes={"route": "resolvent"})
    raise PreconditionError("deterministic orders n >= 3 are implemented for d = 1, H > 1/2 only")


def chaos_moment(req: ChaosMomentRequest) -> MomentEstimate:
    """Dispatch on the time exponent."""
    if req.params.white:
        return chaos_moment_white(req)
    return chaos_moment_colored(req)


def chaos_moment_colored(req: ChaosMomentRequest) -> MomentEstimate:
    """Temporal Monte Carlo for H0 > 1/2 with a budget-doubling divergence heuristic.

    The estimate is accumulated over doubling budgets; when the running mean
    keeps rising by more than three standard errors at every doubling and
    the final relative error stays above 1/2, the result is flagged as
    (heuristically) divergent.
    """
    p = req.params
    if p.white:
        raise PreconditionError("colored-time moments need H0 > 1/2")
    if req.method is not Method.TEMPORAL_MC:
        raise PreconditionError("colored-time moments use TemporalMonteCarlo")
    fn = lambda rng, size: mc.temporal_colored_samples(rng, req.n, req.t, p.H0, p.H, size)  # noqa: E731
    # budgets b/4, b/2, b from disjoint substreams that nest
    quarter = max(req.samples // 4, 2)
    parts = [mc._run_chunks(req.seed + 7919 * i, quarter if i < 2 else req.samples - 2 * quarter, fn,
                            req.workers) for i in range(3)]
    cum = [parts[0], parts[0].merge(parts[1]), parts[0].merge(parts[1]).merge(parts[2])]
    st = cum[-1]
    rises = all(
        cum[i + 1].mean - cum[i].mean > 3 * math.hypot(cum[i + 1].std_error, cum[i].std_error)
        for i in range(2)
    )
    diverging = rises and st.std_error > 0.5 * abs(st.mean)
    return MomentEstimate(math.inf if diverging else st.mean, req.method,
                          None if diverging else st.std_error,
                          divergent=diverging, heuristic=True,
                          notes={"budget_means": [c.mean for c in cum]})


def first_chaos_colored_quadrature(p: HurstParams, t: float) -> float:
    """Deterministic n = 1 oracle for H0 > 1/2.

    E[u_1(t)^2] = C int_0^t int_0^t (x + y)^a gamma0(x - y) dx dy with
    C = prod_k c_k sqrt(2 pi) M(alpha_k), a = H_total - d.  The integrand is
    homogeneous of degree a + 2H0 - 2, so the value is K t^(a + 2H0)
    with K = 2 int_0^1 int_0^x (x+y)^a gamma0(x-y) dy dx.
    """
    a = p.excess
    if a + 2 * p.H0 <= 0:
        return math.inf
    C = math.prod(noise_constant(h) * gauss_power_constant(h) for h in p.H)
    kappa = p.H0 * (2 * p.H0 - 1)
    e = 2 * p.H0 - 2
    # inner over z = x - y in (0, x): (2x - z)^a z^e
    inner = lambda x: x ** (a + e + 1) * integrate.quad(  # noqa: E731
        lambda v: (2 - v) ** a, 0, 1, weight="alg", wvar=(e, 0.0), epsrel=1e-12)[0]
    K = 2 * kappa * integrate.quad(inner, 0, 1, epsrel=1e-12)[0]
    return C * K * t ** (a + 2 * p.H0)


def second_chaos_closed_white(p: HurstParams, t: float) -> float:
    """C B(a+1, 2 H_total - 3d/2 + 1) t^(2a+2) / (2a+2) with C = prod_k 2 pi c_k^2 4^(H_k-1).

    The constant is the lambda-kernel bound with f replaced by 1; the
    value is ``inf`` (divergent) unless both beta arguments are positive.
    """
    if not p.white:
        raise PreconditionError("closed form requires H0 = 1/2")
    if p.d < 2:
        raise PreconditionError("closed form is stated for d >= 2")
    a = p.excess
    b2 = 2 * p.H_total - 1.5 * p.d + 1
    if a + 1 <= 0 or b2 <= 0:
        return math.inf
    C = math.prod(2 * math.pi * noise_constant(h) ** 2 * 2 ** (2 * h - 2) for h in p.H)
    return C * beta_fn(a + 1, b2) * t ** (2 * a + 2) / (2 * a + 2)


def closed_white_integrand_quadrature(p: HurstParams, t: float) -> float:
    """Direct two-dimensional quadrature of
    C int_{0<s1<s2<t} (t-s1)^(d/2-H) (t-s2)^(H-d) (s2-s1)^(2H-3d/2) ds2 ds1."""
    d, H = p.d, p.H_total
    C = math.prod(2 * math.pi * noise_constant(h) ** 2 * 2 ** (2 * h - 2) for h in p.H)
    e1, e2, e3 = d / 2 - H, H - d, 2 * H - 1.5 * d
    spec = QuadratureSpec(rel_tol=1e-11)

    def inner(s1):
        if s1 >= t:
            return 0.0
        return integrate_singular_1d(
            lambda s2, l, r: r ** e2 * l ** e3, s1, t, e3, e2, spec, distances=True)

    outer = integrate_singular_1d(
        lambda s1, l, r: r ** e1 * inner(s1), 0.0, t, 0.0, e1 + e2 + e3 + 1, spec, distances=True)
    return C * outer


def second_chaos_lower_bound(s1: float, s2: float, r1: float, r2: float, t: float,
                             params: HurstParams) -> float:
    """prod_k 2 pi min f_k * A^(1/2-H_k) B^(H_k-1) D^(2H_k-3/2).

    A = t-s1+t-r1, B = t-s2+t-r2 and D = s2-s1+r2-r1.  It bounds the
    product of the pair kernels evaluated at (B, D) from below.
    """
    if not (0 <= s1 < s2 <= t and 0 <= r1 < r2 <= t):
        raise DomainOrder("need 0 <= s1 < s2 <= t and 0 <= r1 < r2 <= t")
    A, B, D = 2 * t - s1 - r1, 2 * t - s2 - r2, s2 - s1 + r2 - r1
    if B <= 0:
        raise DomainOrder("s2 = r2 = t leaves no room for the last gap")
    out = 1.0
    for h in params.H:
        out *= (2 * math.pi * lambda_kernel_min(h) * A ** (0.5 - h) * B ** (h - 1)
                * D ** (2 * h - 1.5))
    return out


def pair_kernel_product(s1, s2, r1, r2, t, params: HurstParams) -> float:
    """prod_k g_k(s1, s2, r1, r2) for ordered r (the pair kernel at a = B, b = D)."""
    B = 2 * t - s2 - r2
    D = s2 - s1 + r2 - r1
    return math.prod(pair_kernel_g(B, D, h) for h in params.H)


def time_scaling_exponent(p: HurstParams, n: int) -> float:
    """Exponent of t in E[u_n(t)^2]: (H_total - d + 1) n white, (H_total - d + 2H0) n colored."""
    return (p.excess + (1.0 if p.white else 2 * p.H0)) * n


__all__ = [
    "Method",
    "ChaosMomentRequest",
    "MomentEstimate",
    "chaos_moment",
    "chaos_moment_white",
    "chaos_moment_colored",
    "first_chaos_white",
    "second_chaos_white",
    "first_chaos_colored_quadrature",
    "second_chaos_closed_white",
    "closed_white_integrand_quadrature",
    "second_chaos_lower_bound",
    "pair_kernel_product",
    "time_scaling_exponent",
]
