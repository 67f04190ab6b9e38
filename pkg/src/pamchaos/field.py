"""Samplers for the fractional Brownian sheet and an empirical covariance check.

The sheet W(t, x) has covariance R_H0(s, t) prod_i R_Hi(x_i, y_i), a tensor
product over axes.  Every sampler therefore builds one factor B_k per axis
with B_k B_k^T equal to that axis' covariance matrix and applies the factors
along the axes of a standard normal array, which realizes the Kronecker
product of the factors without forming it.

* Cholesky: B_k is the Cholesky factor of the axis covariance restricted to
  nonzero coordinates (zero coordinates have zero variance).
* CirculantEmbedding: per axis the grid must be uniform and contain or
  abut the origin; stationary fractional Gaussian increments are generated
  by Davies-Harte and cumulatively summed, anchored at the origin.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import struct
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmbeddingNotPSD, GridMismatch, PreconditionError, SizeLimit
from .kernels import covariance_R
from .params import HurstParams

log = logging.getLogger(__name__)

CHOLESKY_MAX_POINTS = 4096
CIRCULANT_MAX_AXIS = 2 ** 16
#: embedding eigenvalues below -EIG_TOL trigger the Cholesky fallback
EIG_TOL = 1e-10
MAGIC = b"PAMF"


class Method(str, enum.Enum):
    CHOLESKY = "Cholesky"
    CIRCULANT = "CirculantEmbedding"


@dataclass(frozen=True)
class FieldGrid:
    time_points: np.ndarray
    space_points: tuple[np.ndarray, ...]
    values: np.ndarray  # shape (len(time_points), *map(len, space_points))
    seed: int
    method: Method
    H0: float
    H: tuple[float, ...]

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return (self.time_points,) + tuple(self.space_points)

    @property
    def exponents(self) -> tuple[float, ...]:
        return (self.H0,) + tuple(self.H)

    def same_grid(self, other: "FieldGrid") -> bool:
        return (len(self.axes) == len(other.axes)
                and all(a.shape == b.shape and np.array_equal(a, b)
                        for a, b in zip(self.axes, other.axes)))

    def to_bytes(self) -> bytes:
        """Header (magic, ndim, sizes, exponents, seed, method) then float64 payload.

        Payload: the coordinate arrays axis by axis, then the values in
        row-major order.  All integers and floats are little endian.
        """
        sizes = [a.size for a in self.axes]
        head = MAGIC + struct.pack("<I", len(sizes)) + struct.pack(f"<{len(sizes)}I", *sizes)
        head += struct.pack(f"<{len(sizes)}d", *self.exponents)
        head += struct.pack("<QB", self.seed, 0 if self.method is Method.CHOLESKY else 1)
        coords = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in self.axes)
        return head + coords + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "FieldGrid":
        if blob[:4] != MAGIC:
            raise ValueError("not a field grid blob")
        (ndim,) = struct.unpack_from("<I", blob, 4)
        off = 8
        sizes = struct.unpack_from(f"<{ndim}I", blob, off)
        off += 4 * ndim
        expo = struct.unpack_from(f"<{ndim}d", blob, off)
        off += 8 * ndim
        seed, m = struct.unpack_from("<QB", blob, off)
        off += 9
        axes = []
        for n in sizes:
            axes.append(np.frombuffer(blob, "<f8", n, off).copy())
            off += 8 * n
        vals = np.frombuffer(blob, "<f8", int(np.prod(sizes)), off).reshape(sizes).copy()
        return cls(axes[0], tuple(axes[1:]), vals, seed,
                   Method.CHOLESKY if m == 0 else Method.CIRCULANT, expo[0], tuple(expo[1:]))

    def to_csv(self) -> str:
        """One row per grid point: t, x1..xd, value."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(1, len(self.space_points) + 1)] + ["value"])
        mesh = np.meshgrid(*self.axes, indexing="ij")
        for idx in np.ndindex(self.values.shape):
            w.writerow([f"{m[idx]:.16e}" for m in mesh] + [f"{self.values[idx]:.16e}"])
        return buf.getvalue()


def sheet_covariance(params: HurstParams, p, q) -> float:
    """Exact covariance between points p = (t, x...) and q."""
    expo = (params.H0,) + tuple(params.H)
    return float(np.prod([covariance_R(h, a, b) for h, a, b in zip(expo, p, q)]))


# -- per-axis factors -------------------------------------------------------

def _cholesky_factor(points: np.ndarray, h: float) -> np.ndarray:
    """B with B B^T = R_h on ``points`` (zero rows at the origin)."""
    nz = points != 0
    B = np.zeros((points.size, int(nz.sum())))
    if nz.any():
        P = points[nz]
        C = covariance_R(h, P[:, None], P[None, :])
        B[np.ix_(nz, np.arange(nz.sum()))] = np.linalg.cholesky(C)
    return B


@dataclass(frozen=True)
class _CirculantAxis:
    """Davies-Harte factor for a uniform axis k*h, k = k_lo..k_hi (k_lo <= 0 <= k_hi)."""

    sqrt_eig: np.ndarray  # length 2m
    m: int
    zero_index: int
    select: np.ndarray  # indices of the requested points in the full lattice

    @property
    def inputs(self) -> int:
        return 2 * self.sqrt_eig.size

    def apply(self, X: np.ndarray, axis: int) -> np.ndarray:
        X = np.moveaxis(X, axis, -1)
        n2 = self.sqrt_eig.size
        Z = (X[..., :n2] + 1j * X[..., n2:]) * self.sqrt_eig
        inc = np.fft.fft(Z, axis=-1).real[..., : self.m]
        path = np.concatenate([np.zeros(inc.shape[:-1] + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
        path = path - path[..., self.zero_index: self.zero_index + 1]
        return np.moveaxis(path[..., self.select], -1, axis)


def _uniform_lattice(points: np.ndarray):
    """(step, k_lo, k_hi, select) when points are integer multiples of a common step."""
    full = np.union1d(points, [0.0])
    if full.size < 2:
        return None
    step = float(np.min(np.diff(full)))
    k = points / step
    kr = np.rint(k)
    if not np.allclose(k, kr, rtol=0, atol=1e-9):
        return None
    k_lo, k_hi = int(min(kr.min(), 0)), int(max(kr.max(), 0))
    return step, k_lo, k_hi, (kr - k_lo).astype(int)


def _circulant_factor(points: np.ndarray, hurst: float) -> _CirculantAxis:
    lat = _uniform_lattice(points)
    if lat is None:
        raise PreconditionError("circulant embedding needs a uniform grid on multiples of its spacing")
    step, k_lo, k_hi, select = lat
    m = k_hi - k_lo  # number of increments
    if m + 1 > CIRCULANT_MAX_AXIS:
        raise SizeLimit(f"axis with {m + 1} points exceeds {CIRCULANT_MAX_AXIS}")
    m = max(m, 1)
    k = np.arange(m + 1, dtype=float)
    e = 2 * hurst
    gam = 0.5 * step ** e * (np.abs(k + 1) ** e - 2 * k ** e + np.abs(k - 1) ** e)
    row = np.concatenate([gam, gam[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -EIG_TOL:
        raise EmbeddingNotPSD(f"embedding eigenvalue {eig.min():.3e} for H={hurst}")
    if eig.min() < 0:
        log.warning("clipping embedding eigenvalues down to %.3e", eig.min())
        eig = np.maximum(eig, 0.0)
    return _CirculantAxis(np.sqrt(eig / row.size), m, -k_lo, select)


def _axis_factors(axes, exponents, method: Method):
    factors = []
    for pts, h in zip(axes, exponents):
        if method is Method.CIRCULANT:
            try:
                factors.append(_circulant_factor(pts, h))
                continue
            except EmbeddingNotPSD as exc:
                warnings.warn(f"{exc}; falling back to Cholesky on this axis", RuntimeWarning)
        factors.append(_cholesky_factor(pts, h))
    return factors


def _check_grid(time_points, space_points, params: HurstParams, method: Method):
    axes = (np.asarray(time_points, dtype=float),) + tuple(np.asarray(x, dtype=float)
                                                           for x in space_points)
    if len(axes) != params.d + 1:
        raise GridMismatch(f"need {params.d} spatial axes, got {len(axes) - 1}")
    for a in axes:
        if a.ndim != 1 or a.size == 0 or np.any(np.diff(a) <= 0) or not np.all(np.isfinite(a)):
            raise PreconditionError("grid axes must be nonempty, finite and increasing")
    if np.any(axes[0] < 0):
        raise PreconditionError("time points must be nonnegative")
    total = int(np.prod([a.size for a in axes]))
    if method is Method.CHOLESKY and total > CHOLESKY_MAX_POINTS:
        raise SizeLimit(f"{total} grid points exceed the Cholesky limit {CHOLESKY_MAX_POINTS}")
    if method is Method.CIRCULANT and max(a.size for a in axes) > CIRCULANT_MAX_AXIS:
        raise SizeLimit(f"axis length exceeds {CIRCULANT_MAX_AXIS}")
    return axes


def _apply_factors(factors, Z: np.ndarray, lead: int) -> np.ndarray:
    X = Z
    for k, f in enumerate(factors):
        ax = lead + k
        if isinstance(f, _CirculantAxis):
            X = f.apply(X, ax)
        else:
            X = np.moveaxis(np.tensordot(X, f, axes=([ax], [1])), -1, ax)
    return X


def _input_shape(factors) -> tuple[int, ...]:
    return tuple(f.inputs if isinstance(f, _CirculantAxis) else f.shape[1] for f in factors)


def sample_sheet(time_points: Sequence[float], space_points: Sequence[Sequence[float]],
                 params: HurstParams, method: Method | str = Method.CHOLESKY,
                 seed: int = 0) -> FieldGrid:
    """One sample of the sheet on the product grid."""
    method = Method(method)
    axes = _check_grid(time_points, space_points, params, method)
    expo = (params.H0,) + tuple(params.H)
    factors = _axis_factors(axes, expo, method)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal(_input_shape(factors))
    vals = _apply_factors(factors, Z, 0)
    return FieldGrid(axes[0], axes[1:], vals, int(seed), method, params.H0, tuple(params.H))


def child_seeds(seed: int, count: int) -> list[int]:
    """64-bit seeds of independent substreams derived from ``seed``."""
    return [int(s.generate_state(1, np.uint64)[0])
            for s in np.random.SeedSequence(seed).spawn(count)]


def sample_sheets(time_points, space_points, params: HurstParams,
                  method: Method | str = Method.CHOLESKY, seed: int = 0,
                  count: int = 1, batch: int = 1000) -> list[FieldGrid]:
    """``count`` independent samples; sample i equals sample_sheet(..., child_seeds(seed)[i])."""
    method = Method(method)
    axes = _check_grid(time_points, space_points, params, method)
    expo = (params.H0,) + tuple(params.H)
    factors = _axis_factors(axes, expo, method)
    shape = _input_shape(factors)
    seeds = child_seeds(seed, count)
    out = []
    for i in range(0, count, batch):
        chunk = seeds[i:i + batch]
        Z = np.stack([np.random.default_rng(s).standard_normal(shape) for s in chunk])
        vals = _apply_factors(factors, Z, 1)
        out.extend(FieldGrid(axes[0], axes[1:], v, s, method, params.H0, tuple(params.H))
                   for v, s in zip(vals, chunk))
    return out


@dataclass(frozen=True)
class CovarianceReport:
    pairs: int
    within: int
    fraction: float
    passed: bool
    max_abs_z: float
    samples: int
    z_scores: tuple[float, ...]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["z_scores"] = list(self.z_scores)
        return d


MIN_SAMPLES = 100
PASS_FRACTION = 0.99
Z_LIMIT = 3.0


def covariance_validate(samples: Sequence[FieldGrid], params: HurstParams,
                        max_pairs: int = 2000, seed: int = 0) -> CovarianceReport:
    """z-scores of empirical E[W(p) W(q)] against the exact covariance.

    Pairs are all unordered pairs of grid points with nonzero coordinates
    (including p = q), subsampled deterministically to ``max_pairs``.  The
    standard error of each pair is the sample standard deviation of
    W(p) W(q) over sqrt(N).
    """
    if len(samples) < MIN_SAMPLES:
        raise PreconditionError(f"need at least {MIN_SAMPLES} samples, got {len(samples)}")
    ref = samples[0]
    if any(not ref.same_grid(s) for s in samples[1:]):
        raise GridMismatch("samples are on different grids")
    if len(ref.axes) != params.d + 1:
        raise GridMismatch("parameter dimension does not match the grid")
    data = np.stack([s.values.reshape(-1) for s in samples])
    mesh = np.stack([m.reshape(-1) for m in np.meshgrid(*ref.axes, indexing="ij")], axis=1)
    keep = np.flatnonzero(np.all(mesh != 0, axis=1))
    i, j = np.triu_indices(keep.size)
    if i.size > max_pairs:
        pick = np.sort(np.random.default_rng(seed).choice(i.size, max_pairs, replace=False))
        i, j = i[pick], j[pick]
    a, b = keep[i], keep[j]
    prods = data[:, a] * data[:, b]
    N = data.shape[0]
    emp = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(N)
    expo = (params.H0,) + tuple(params.H)
    exact = np.prod([covariance_R(h, mesh[a, k], mesh[b, k]) for k, h in enumerate(expo)], axis=0)
    z = (emp - exact) / se
    within = int(np.sum(np.abs(z) <= Z_LIMIT))
    frac = within / z.size
    return CovarianceReport(int(z.size), within, frac, frac >= PASS_FRACTION,
                            float(np.max(np.abs(z))), N, tuple(float(v) for v in z))
