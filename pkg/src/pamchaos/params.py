"""Hurst parameter tuples and the solvability classifier.

The classifier encodes the sharp white-in-time criterion and the
sufficient / necessary pair for time exponents above 1/2.  All the
inequalities are strict; values sitting exactly on a sufficient boundary
fall through to the next test.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyDimension, OutOfRange, TimeRoughness

#: |H_total - (d-1)| below this counts as the critical case.
CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class HurstParams:
    d: int
    H0: float
    H: tuple[float, ...]
    d_star: int = field(init=False)
    H_star: float = field(init=False)
    H_total: float = field(init=False)

    def __post_init__(self):
        rough = [h for h in self.H if h < 0.5]
        object.__setattr__(self, "d_star", len(rough))
        object.__setattr__(self, "H_star", math.fsum(rough))
        object.__setattr__(self, "H_total", math.fsum(self.H))

    @property
    def white(self) -> bool:
        return self.H0 == 0.5

    @property
    def excess(self) -> float:
        """H_total - d, the exponent that governs every moment integral."""
        return self.H_total - self.d

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "H0": self.H0,
            "H": list(self.H),
            "d_star": self.d_star,
            "H_star": self.H_star,
            "H_total": self.H_total,
        }


def validate(d: int, H0: float, H: Sequence[float] | float) -> HurstParams:
    """Check a raw parameter tuple and return normalized :class:`HurstParams`."""
    if isinstance(H, (int, float)):
        H = [float(H)]
    H = tuple(float(h) for h in H)
    if int(d) != d or d < 0:
        raise OutOfRange(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    if d == 0:
        raise EmptyDimension("spatial dimension d must be at least 1")
    if len(H) != d:
        raise DimensionMismatch(f"expected {d} spatial exponents, got {len(H)}")
    H0 = float(H0)
    if not math.isfinite(H0) or not 0.0 < H0 < 1.0:
        raise OutOfRange(f"H0 must lie in (0, 1), got {H0}")
    if H0 < 0.5:
        raise TimeRoughness(
            f"H0={H0} < 1/2: rough-in-time noise is outside the supported regime"
        )
    for i, h in enumerate(H, start=1):
        if not math.isfinite(h) or not 0.0 < h < 1.0:
            raise OutOfRange(f"H_{i} must lie in (0, 1), got {h}")
    p = HurstParams(d, H0, H)
    if not p.H_total < d - p.d_star / 2:
        raise OutOfRange("inconsistent aggregates: H_total >= d - d_star/2")
    return p


class Verdict(str, enum.Enum):
    GLOBAL_UNIQUE = "GlobalUnique"
    LOCAL_UNIQUE = "LocalUnique"
    NO_LOCAL_SOLUTION = "NoLocalSolution"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SolvabilityVerdict:
    verdict: Verdict
    matched_condition: str
    chen_sufficient: tuple[bool, bool]
    margins: dict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "matched_condition": self.matched_condition,
            "chen_sufficient": list(self.chen_sufficient),
            "margins": dict(self.margins),
        }


def sufficient_threshold(p: HurstParams) -> float:
    """Right-hand side of the global sufficient condition on H_total."""
    if p.d >= 2:
        return p.d - 1.0
    return 0.25 if p.white else 0.75 - p.H0


def necessary_threshold(p: HurstParams) -> float:
    """Right-hand side of the necessary condition on H_total + 2 H0."""
    return 1.25 if p.d == 1 else (3 * p.d + 2) / 4.0


def is_critical(p: HurstParams) -> bool:
    return p.d >= 2 and abs(p.H_total - (p.d - 1)) <= CRITICAL_TOL


def margins(p: HurstParams) -> dict:
    m = {
        "sufficient": p.H_total - sufficient_threshold(p),
        "critical": p.H_total - (p.d - 1),
        "necessary": p.H_total + 2 * p.H0 - necessary_threshold(p),
    }
    m["chen_global"] = _chen_global_lhs_margin(p)
    m["chen_local"] = _chen_local_margin(p)
    return m


def _chen_global_lhs_margin(p: HurstParams) -> float:
    rough = p.d_star - 2 * p.H_star
    if p.white:
        return 2.0 - (2 * (p.d - p.H_total) + rough)
    return 4.0 - (4 * (1 - p.H0) + 2 * (p.d - p.H_total) + rough)


def _chen_local_margin(p: HurstParams) -> float:
    return 2.0 - (4 * (1 - p.H0) + (p.d_star - 2 * p.H_star))


def chen_conditions(p: HurstParams) -> tuple[bool, bool]:
    """Earlier global sufficient condition and its critical local companion."""
    if p.white:
        return _chen_global_lhs_margin(p) > 0, False
    global_ok = p.H_total > p.d - 1 and _chen_global_lhs_margin(p) > 0
    local_ok = is_critical(p) and _chen_local_margin(p) > 0
    return global_ok, local_ok


def classify(p: HurstParams) -> SolvabilityVerdict:
    chen = chen_conditions(p)
    m = margins(p)
    suff = "eq1.4" if p.white else "eq1.7"
    if p.white:
        if m["sufficient"] > 0:
            return SolvabilityVerdict(Verdict.GLOBAL_UNIQUE, suff, chen, m)
        return SolvabilityVerdict(Verdict.NO_LOCAL_SOLUTION, "eq1.4-fail", chen, m)
    if is_critical(p):
        return SolvabilityVerdict(Verdict.LOCAL_UNIQUE, "eq1.7b", chen, m)
    if m["sufficient"] > 0:
        return SolvabilityVerdict(Verdict.GLOBAL_UNIQUE, suff, chen, m)
    if m["necessary"] <= 0:
        return SolvabilityVerdict(Verdict.NO_LOCAL_SOLUTION, "eq1.9-fail", chen, m)
    return SolvabilityVerdict(Verdict.INDETERMINATE, "gap", chen, m)


VERDICT_CODES = tuple(Verdict)


def classify_grid(d: int, H0, H_total) -> np.ndarray:
    """Vectorized verdicts (indices into VERDICT_CODES) for broadcast arrays of H0 and H_total.

    The verdict depends on the exponents only through d, H0 and H_total, so
    this agrees with :func:`classify` for every admissible exponent vector.
    """
    H0 = np.asarray(H0, dtype=float)
    Ht = np.asarray(H_total, dtype=float)
    H0, Ht = np.broadcast_arrays(H0, Ht)
    code = {v: i for i, v in enumerate(VERDICT_CODES)}
    white = H0 == 0.5
    suff = np.where(white, 0.25, 0.75 - H0) if d == 1 else np.full(H0.shape, d - 1.0)
    nec = 1.25 if d == 1 else (3 * d + 2) / 4.0
    crit = (d >= 2) & (np.abs(Ht - (d - 1)) <= CRITICAL_TOL)
    out = np.full(H0.shape, code[Verdict.INDETERMINATE])
    out[Ht + 2 * H0 - nec <= 0] = code[Verdict.NO_LOCAL_SOLUTION]
    out[Ht - suff > 0] = code[Verdict.GLOBAL_UNIQUE]
    out[~white & crit] = code[Verdict.LOCAL_UNIQUE]
    out[white] = np.where(Ht[white] - suff[white] > 0, code[Verdict.GLOBAL_UNIQUE],
                          code[Verdict.NO_LOCAL_SOLUTION])
    return out
