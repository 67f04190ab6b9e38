"""Monte Carlo simulation of the white-in-time equation in d = 1, H > 1/2.

    du = (1/2) u'' dt + u W(dt, x),   u(0, .) = 1,

on a periodic grid of M points and period L.  One step is

    u <- exp(dt/2 d^2/dx^2) [u (1 + amplitude * dW)]

with the heat semigroup applied exactly in Fourier space and the noise
evaluated at the left point (Ito).  The noise increment dW has spatial
covariance sum_k m_k cos(xi_k (x - y)) dt, where xi_k = 2 pi k / L runs over
the grid frequencies and m_k is the exact mass of the spectral measure
c_H |xi|^(1-2H) dxi on the cell [xi_k - pi/L, xi_k + pi/L].  For |x - y| << L
this reproduces H (2H - 1) |x - y|^(2H - 2) up to the frequency cut-off.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidSpec, PreconditionError, Unstable
from .kernels import noise_constant

OVERFLOW_GUARD = 1e150
CHUNK_PATHS = 500


@dataclass(frozen=True)
class SchemeSpec:
    L: float
    M: int
    dt: float
    t: float
    H: float
    paths: int
    seed: int = 0
    amplitude: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if not (self.L > 0 and self.t > 0 and self.dt > 0):
            raise InvalidSpec("L, t and dt must be positive")
        if self.M < 2 or self.M & (self.M - 1):
            raise InvalidSpec("M must be a power of two")
        if not 0.5 < self.H < 1:
            raise InvalidSpec("the solver needs a spatial exponent in (1/2, 1)")
        if self.dt > (self.L / self.M) ** 2 / 2 * (1 + 1e-12):
            raise InvalidSpec("dt exceeds (L/M)^2 / 2")
        if self.paths < 2:
            raise InvalidSpec("need at least two paths")
        if abs(self.t / self.dt - round(self.t / self.dt)) > 1e-9:
            raise InvalidSpec("t must be an integer multiple of dt")
        if self.amplitude < 0:
            raise InvalidSpec("amplitude must be nonnegative")

    @property
    def steps(self) -> int:
        return int(round(self.t / self.dt))

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.L / self.M)


def spectral_cell_masses(L: float, M: int, H: float) -> np.ndarray:
    """Mass of c_H |xi|^(1-2H) dxi on the cell around each FFT frequency."""
    xi = 2 * np.pi * np.fft.fftfreq(M, d=L / M)
    half = np.pi / L
    c, e = noise_constant(H), 2 - 2 * H
    F = lambda x: np.sign(x) * c * np.abs(x) ** e / e  # noqa: E731
    return F(xi + half) - F(xi - half)


def first_chaos_scheme_moment(spec: SchemeSpec) -> np.ndarray:
    """Exact E[v(t_k, x)^2], k = 0..steps, for the scheme's first chaos v.

    v evolves as v <- heat(v + dW) from v = 0, so
    E[v(t_k)^2] = sum_modes m dt sum_{j=1..k} exp(-xi^2 dt j).
    """
    q = np.exp(-spec.dt * spec.frequencies ** 2)
    with np.errstate(over="ignore"):
        m = spectral_cell_masses(spec.L, spec.M, spec.H) * spec.dt * np.float64(spec.amplitude) ** 2
    out = np.zeros(spec.steps + 1)
    acc = np.zeros_like(q)
    p = np.ones_like(q)
    for k in range(1, spec.steps + 1):
        p = p * q
        acc += p
        out[k] = float(np.sum(m * acc))
    return out


@dataclass(frozen=True)
class PathStatistics:
    times: np.ndarray
    mean: np.ndarray
    mean_se: np.ndarray
    second_moment: np.ndarray
    second_moment_se: np.ndarray
    point_second_moment: np.ndarray  # at x = 0 only
    point_second_moment_se: np.ndarray
    raw_second_moment: np.ndarray  # without the first-chaos control variate
    raw_second_moment_se: np.ndarray
    paths: int
    spec: SchemeSpec

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "mean", "mean_se", "second_moment", "second_moment_se", "paths"])
        for row in zip(self.times, self.mean, self.mean_se, self.second_moment,
                       self.second_moment_se):
            w.writerow([f"{v:.16e}" for v in row] + [self.paths])
        return buf.getvalue()


def _moments(sums: np.ndarray, n: int):
    """(mean, se) from per-path sums S1 = sum x, S2 = sum x^2."""
    mean = sums[0] / n
    var = np.maximum(sums[1] / n - mean ** 2, 0.0) * n / (n - 1)
    return mean, np.sqrt(var / n)


def _path_quantities(u: np.ndarray, v: np.ndarray, v2_exact: float) -> np.ndarray:
    """Per-path (avg u, avg u^2 corrected, avg u^2 raw, u(0)^2 corrected), shape (n, 4).

    The first chaos v of the scheme has mean zero and known second moment,
    and is orthogonal to every other chaos component, so
    u^2 - 2 v - v^2 + E[v^2] has the same mean as u^2 with far less variance.
    """
    cv = u * u - 2 * v - v * v + v2_exact
    return np.stack([u.mean(axis=1), cv.mean(axis=1), (u * u).mean(axis=1), cv[:, 0]], axis=1)


def _step(u, v, dW, heat):
    u = np.fft.ifft(heat * np.fft.fft(u * (1.0 + dW), axis=1), axis=1).real
    v = np.fft.ifft(heat * np.fft.fft(v + dW, axis=1), axis=1).real
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > OVERFLOW_GUARD:
        raise Unstable("paths exceed the overflow guard")
    return u, v


def _run_chunk(spec: SchemeSpec, seed, n: int, v2: np.ndarray) -> np.ndarray:
    """Per time slice: sums over paths of the quantities and their squares, shape (steps+1, 8)."""
    rng = np.random.default_rng(seed)
    heat = np.exp(-0.5 * spec.dt * spec.frequencies ** 2)
    noise_sd = np.sqrt(spectral_cell_masses(spec.L, spec.M, spec.H) * spec.dt) * spec.amplitude
    u = np.ones((n, spec.M))
    v = np.zeros((n, spec.M))
    out = np.zeros((spec.steps + 1, 8))
    for k in range(spec.steps + 1):
        if k:
            if spec.amplitude > 0:
                z = rng.standard_normal((n, spec.M)) + 1j * rng.standard_normal((n, spec.M))
                dW = np.fft.fft(noise_sd * z, axis=1).real
            else:
                dW = np.zeros_like(u)
            u, v = _step(u, v, dW, heat)
        with np.errstate(over="ignore", invalid="ignore"):
            Q = _path_quantities(u, v, v2[k])
            stats = np.concatenate([Q.sum(axis=0), (Q * Q).sum(axis=0)])
        if not np.all(np.isfinite(stats)) or np.max(np.abs(stats)) > OVERFLOW_GUARD:
            raise Unstable("path statistics exceed the overflow guard")
        out[k] = stats
    return out


def simulate_paths(spec: SchemeSpec) -> PathStatistics:
    """Per-time E[u] and E[u^2] with standard errors.

    E[u^2] is estimated by the spatial average per path (the field is
    stationary in x) with the first-chaos control variate described in
    :func:`_path_quantities`; standard errors are taken across paths.  The
    uncorrected estimate and the x = 0 estimate are reported alongside.
    """
    v2 = first_chaos_scheme_moment(spec)
    sizes = [min(CHUNK_PATHS, spec.paths - i) for i in range(0, spec.paths, CHUNK_PATHS)]
    seeds = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))
    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as ex:
            parts = list(ex.map(lambda j: _run_chunk(spec, *j, v2), jobs))
    else:
        parts = [_run_chunk(spec, *j, v2) for j in jobs]
    tot = np.sum(parts, axis=0)  # ordered reduction over chunks
    n = spec.paths
    res = [_moments(tot[:, [i, i + 4]].T, n) for i in range(4)]
    for _, se in res:
        se[0] = 0.0
    times = np.arange(spec.steps + 1) * spec.dt
    (mean, mean_se), (sec, sec_se), (raw, raw_se), (pt, pt_se) = res
    return PathStatistics(times, mean, mean_se, sec, sec_se, pt, pt_se, raw, raw_se, n, spec)


def _run_coupled(specs: Sequence[SchemeSpec], seed, n: int) -> np.ndarray:
    """Per-path corrected E[u^2] estimates at the final time for every level, shared noise.

    The finest level draws complex normals per step and mode; a coarser
    level sums them over its own (integer multiple) step and keeps only its
    own frequencies, which are a subset of the finest ones for a common L.
    The result has shape (n, levels).
    """
    fine = specs[-1]
    rng = np.random.default_rng(seed)
    lv = []
    for s in specs:
        k = np.rint(np.fft.fftfreq(s.M) * s.M).astype(int)
        lv.append({
            "idx": np.mod(k, fine.M),
            "sub": int(round(s.dt / fine.dt)),
            "heat": np.exp(-0.5 * s.dt * s.frequencies ** 2),
            "sd": np.sqrt(spectral_cell_masses(s.L, s.M, s.H) * fine.dt) * s.amplitude,
            "v2": first_chaos_scheme_moment(s)[-1],
            "u": np.ones((n, s.M)),
            "v": np.zeros((n, s.M)),
            "acc": np.zeros((n, s.M), dtype=complex),
        })
    for k in range(1, fine.steps + 1):
        z = rng.standard_normal((n, fine.M)) + 1j * rng.standard_normal((n, fine.M))
        for L in lv:
            L["acc"] += z[:, L["idx"]]
            if k % L["sub"]:
                continue
            dW = np.fft.fft(L["sd"] * L["acc"], axis=1).real
            L["u"], L["v"] = _step(L["u"], L["v"], dW, L["heat"])
            L["acc"][:] = 0.0
    return np.stack([_path_quantities(L["u"], L["v"], L["v2"])[:, 1] for L in lv], axis=1)


def _check_ladder(specs: Sequence[SchemeSpec]) -> None:
    for c, f in zip(specs[:-1], specs[1:]):
        same = (c.L, c.t, c.H, c.paths, c.seed, c.amplitude) == (f.L, f.t, f.H, f.paths, f.seed,
                                                                 f.amplitude)
        if not same:
            raise PreconditionError("ladder levels must share L, t, H, paths, seed and amplitude")
        if f.M < c.M or f.M % c.M or f.dt > c.dt:
            raise PreconditionError("ladder levels must refine M and dt monotonically")
    for s in specs:
        ratio = s.dt / specs[-1].dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise PreconditionError("every dt must be an integer multiple of the finest dt")


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple[dict, ...]
    values: tuple[float, ...]
    std_errors: tuple[float, ...]
    difference_std_errors: tuple[float, ...]
    order: float
    ratio: float
    extrapolated: float
    extrapolated_se: float
    error_bar: float
    monotone: bool

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def refinement_ladder(base: SchemeSpec, levels: int, dt_factor: int = 4,
                      m_factor: int = 2) -> list[SchemeSpec]:
    """Specs with dt divided by ``dt_factor`` and M multiplied by ``m_factor`` per level.

    The default keeps dt / (L/M)^2 fixed, the parabolic scaling.
    """
    return [replace(base, dt=base.dt / dt_factor ** k, M=base.M * m_factor ** k)
            for k in range(levels)]


def convergence_study(specs: Sequence[SchemeSpec]) -> ConvergenceReport:
    """Observed order and Richardson extrapolation of the final E[u^2].

    All levels are driven by the same noise (see :func:`_run_coupled`), so
    level differences carry little statistical error.  With v1, v2, v3 the
    last three levels, q = (v3 - v2) / (v2 - v1) is the observed error
    contraction per level and the geometric tail gives
    v3 + (v3 - v2) q / (1 - q).  The order is log(1/q) / log(r) with r the
    refinement factor of the spatial step.  ``extrapolated_se`` is the
    standard error of the per-path extrapolation at the observed q, and
    ``error_bar`` adds the size of the correction to it.
    """
    if len(specs) < 3:
        raise PreconditionError("a convergence study needs at least three levels")
    _check_ladder(specs)
    fine = specs[-1]
    sizes = [min(CHUNK_PATHS, fine.paths - i) for i in range(0, fine.paths, CHUNK_PATHS)]
    seeds = np.random.SeedSequence(fine.seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))
    if fine.workers > 1:
        with ThreadPoolExecutor(fine.workers) as ex:
            parts = list(ex.map(lambda j: _run_coupled(specs, *j), jobs))
    else:
        parts = [_run_coupled(specs, *j) for j in jobs]
    B = np.concatenate(parts, axis=0)
    n = B.shape[0]
    vals = B.mean(axis=0)
    ses = B.std(axis=0, ddof=1) / math.sqrt(n)
    dses = np.diff(B, axis=1).std(axis=0, ddof=1) / math.sqrt(n)
    v1, v2, v3 = vals[-3:]
    e1, e2 = v2 - v1, v3 - v2
    q = e2 / e1 if e1 != 0 else math.nan
    r = fine.M / specs[-2].M
    if 0 < q < 1:
        w = q / (1 - q)
        order = math.log(1 / q) / math.log(r)
    else:
        w, order = 0.0, math.nan
    Y = B[:, -1] + w * (B[:, -1] - B[:, -2])
    extrap = float(Y.mean())
    ext_se = float(Y.std(ddof=1) / math.sqrt(n))
    d = np.diff(vals)
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    levels = tuple({"M": s.M, "dt": s.dt, "L": s.L} for s in specs)
    return ConvergenceReport(levels, tuple(float(v) for v in vals), tuple(float(v) for v in ses),
                             tuple(float(v) for v in dses), order, q, extrap, ext_se,
                             ext_se + abs(extrap - v3), monotone)
