"""Monte Carlo estimators for chaos second moments.

Every spatial coordinate contributes a Gaussian-weighted integral

    G(A) = int exp(-xi^T A xi / 2) prod_j |xi_j|^alpha dxi
         = (2 pi)^(n/2) det(A)^(-1/2) E[prod_j |xi_j|^alpha],   xi ~ N(0, A^-1),

and the expectation is estimated by sequential conditional sampling
through the Cholesky factor of A^-1.  Each conditional draw comes from a
defensive mixture of the standard normal and the law proportional to
|y|^alpha phi(y) centred on the singular point, which keeps the weights
bounded for alpha < 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..kernels import gauss_abs_moment, noise_constant

_SQRT_2PI = math.sqrt(2.0 * math.pi)
CHUNK = 250_000


@dataclass
class RunningStats:
    """Count, mean and sum of squared deviations; merging is associative."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x: np.ndarray) -> "RunningStats":
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        mu = float(np.mean(x))
        return cls(int(x.size), mu, float(np.sum((x - mu) ** 2)))

    def merge(self, other: "RunningStats") -> "RunningStats":
        n = self.count + other.count
        if n == 0:
            return RunningStats()
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return math.inf
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def _mixture_draw(rng, alpha, center, size):
    """Draw z from q = phi/2 + g(. - center)/2 and return (z, |z - center|^alpha phi(z) / q(z)).

    g(y) = |y|^alpha phi(y) / M(alpha).  The ratio is evaluated as
    phi(z) / (phi(z) |d|^-alpha / 2 + phi(d) / (2 M)), which stays finite
    at d = 0 for either sign of alpha.
    """
    pick = rng.random(size) < 0.5
    z = rng.standard_normal(size)
    # |Y|^2 / 2 ~ Gamma((1 + alpha) / 2) gives density |y|^alpha phi(y) / M(alpha)
    mag = np.sqrt(2.0 * rng.gamma((1.0 + alpha) / 2.0, size=size))
    y = np.where(rng.random(size) < 0.5, mag, -mag)
    z = np.where(pick, z, center + y)
    d = np.abs(z - center)
    m_alpha = gauss_abs_moment(alpha)
    with np.errstate(divide="ignore", over="ignore"):
        inv_pow = d ** -alpha
        denom = 0.5 * inv_pow + 0.5 * np.exp(0.5 * (z * z - d * d)) / m_alpha
        ratio = 1.0 / denom
    return z, ratio


def gaussian_power_expectation(rng, chol: np.ndarray, alpha: float) -> np.ndarray:
    """Unbiased single-draw estimates of E prod |xi_j|^alpha for xi = L z.

    ``chol`` has shape (N, n, n): one lower-triangular factor of the
    covariance per sample.  Returns N independent estimates.
    """
    N, n, _ = chol.shape
    if alpha == 0.0:
        return np.ones(N)
    z = np.zeros((N, n))
    w = np.ones(N)
    for j in range(n):
        diag = chol[:, j, j]
        m = np.einsum("ik,ik->i", chol[:, j, :j], z[:, :j]) if j else np.zeros(N)
        zj, ratio = _mixture_draw(rng, alpha, -m / diag, N)
        z[:, j] = zj
        w *= np.abs(diag) ** alpha * ratio
    return w


def _gaussian_integral(rng, A: np.ndarray, alphas) -> np.ndarray:
    """prod over coordinates of G(A) per sample; A has shape (N, n, n)."""
    n = A.shape[-1]
    cov = np.linalg.inv(A)
    chol = np.linalg.cholesky(cov)
    logdet = np.linalg.slogdet(A)[1]
    base = (0.5 * n * math.log(2 * math.pi)) - 0.5 * logdet
    out = np.ones(A.shape[0])
    for a in alphas:
        out *= np.exp(base) * gaussian_power_expectation(rng, chol, a)
    return out


def prefix_projector(n: int) -> np.ndarray:
    """Row i is the indicator of {0, ..., i}: partial sums of frequencies."""
    return np.tril(np.ones((n, n)))


def white_precision(u: np.ndarray) -> np.ndarray:
    """A = sum_i u_i P_i P_i^T for gaps u of shape (N, n)."""
    u = np.atleast_2d(u)
    n = u.shape[1]
    P = prefix_projector(n)
    return np.einsum("ni,ij,ik->njk", u, P, P)


def _run_chunks(seed: int, samples: int, fn, workers: int = 1) -> RunningStats:
    """Split ``samples`` into fixed chunks with per-chunk substreams and merge."""
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def one(i):
        return RunningStats.of(fn(np.random.default_rng(streams[i]), sizes[i]))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    total = RunningStats()
    for p in parts:
        total = total.merge(p)
    return total


def gk_equality_mc(n: int, u, Hk: float, samples: int = 100_000, seed: int = 0,
                   workers: int = 1) -> tuple[float, float]:
    """Estimate g = int exp(-sum u_i eta_i^2 / 2) prod |eta_i - eta_{i-1}|^(1-2Hk) d eta.

    Here eta_0 = 0.  Under the Gaussian weight the eta_i are independent
    N(0, 1/u_i), i.e. eta_i = X_i / sqrt(u_i), so
    g = (2 pi)^(n/2) prod u_i^(-1/2) E prod |X_i/sqrt(u_i) - X_{i-1}/sqrt(u_{i-1})|^alpha.
    Returns (estimate, standard error).
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size != n or np.any(u <= 0):
        raise ValueError("need n positive gap values")
    if not 0 < Hk < 1:
        raise ValueError("Hk must lie in (0, 1)")
    alpha = 1.0 - 2.0 * Hk
    # xi_i = eta_i - eta_{i-1}; the covariance of xi has Cholesky factor
    # L[i, i] = 1/sqrt(u_i), L[i, i-1] = -1/sqrt(u_{i-1})
    L = np.diag(u ** -0.5)
    for i in range(1, n):
        L[i, i - 1] = -u[i - 1] ** -0.5
    scale = (2 * math.pi) ** (n / 2) * float(np.prod(u ** -0.5))

    def fn(rng, size):
        chol = np.broadcast_to(L, (size, n, n))
        return scale * gaussian_power_expectation(rng, chol, alpha)

    st = _run_chunks(seed, samples, fn, workers)
    return st.mean, st.std_error


def sample_simplex(rng, n: int, t: float, size: int) -> np.ndarray:
    """Uniform ordered points 0 < s_1 < ... < s_n < t, shape (size, n)."""
    return np.sort(rng.random((size, n)), axis=1) * t


def spectral_white_samples(rng, n: int, t: float, H, size: int) -> np.ndarray:
    """Per-sample estimates of E[u_n(t)^2] for white-in-time noise."""
    H = np.asarray(H, dtype=float)
    s = sample_simplex(rng, n, t, size)
    gaps = np.diff(np.concatenate([s, np.full((size, 1), t)], axis=1), axis=1)
    A = white_precision(2.0 * gaps)
    const = float(np.prod([noise_constant(h) ** n for h in H])) * t ** n / math.factorial(n)
    return const * _gaussian_integral(rng, A, 1.0 - 2.0 * H)


def sample_r_given_s(rng, s: np.ndarray, t: float, H0: float):
    """Draw r_i with density proportional to |s_i - r_i|^(2H0-2) on [0, t].

    Returns r and the normalizing mass int_0^t gamma0(s - r) dr per entry,
    where gamma0(x) = H0 (2H0 - 1) |x|^(2H0 - 2).
    """
    e = 2.0 * H0 - 1.0
    left, right = s ** e, (t - s) ** e
    go_left = rng.random(s.shape) * (left + right) < left
    span = np.where(go_left, s, t - s)
    dist = span * rng.random(s.shape) ** (1.0 / e)
    r = np.where(go_left, s - dist, s + dist)
    mass = H0 * (left + right)
    return r, mass


def colored_precision(s: np.ndarray, r: np.ndarray, t: float) -> np.ndarray:
    """A = sum_i ds_i P_i P_i^T + sum_j dr_j Q_j Q_j^T.

    ``s`` is ordered; Q_j indicates the frequencies attached to the j
    earliest r-times, i.e. prefixes of the sorting permutation of r.
    """
    N, n = s.shape
    P = prefix_projector(n)
    ds = np.diff(np.concatenate([s, np.full((N, 1), t)], axis=1), axis=1)
    A = np.einsum("ni,ij,ik->njk", ds, P, P)
    order = np.argsort(r, axis=1)
    rs = np.take_along_axis(r, order, axis=1)
    dr = np.diff(np.concatenate([rs, np.full((N, 1), t)], axis=1), axis=1)
    rank = np.argsort(order, axis=1)
    Q = (rank[:, None, :] <= np.arange(n)[None, :, None]).astype(float)
    A += np.einsum("ni,nij,nik->njk", dr, Q, Q)
    return A


def temporal_colored_samples(rng, n: int, t: float, H0: float, H, size: int) -> np.ndarray:
    """Per-sample estimates of E[u_n(t)^2] for time exponent H0 > 1/2."""
    H = np.asarray(H, dtype=float)
    s = sample_simplex(rng, n, t, size)
    r, mass = sample_r_given_s(rng, s, t, H0)
    A = colored_precision(s, r, t)
    const = float(np.prod([noise_constant(h) ** n for h in H])) * t ** n / math.factorial(n)
    return const * np.prod(mass, axis=1) * _gaussian_integral(rng, A, 1.0 - 2.0 * H)


def run_estimator(kind: str, n: int, t: float, H, samples: int, seed: int,
                  H0: float = 0.5, workers: int = 1) -> RunningStats:
    if kind == "spectral":
        fn = lambda rng, size: spectral_white_samples(rng, n, t, H, size)  # noqa: E731
    elif kind == "temporal":
        fn = lambda rng, size: temporal_colored_samples(rng, n, t, H0, H, size)  # noqa: E731
    else:
        raise ValueError(f"unknown estimator {kind!r}")
    return _run_chunks(seed, samples, fn, workers)
