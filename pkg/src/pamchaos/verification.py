"""The acceptance suite: ten end-to-end checks with fixed tolerances and budgets.

Each check returns a :class:`CriterionResult`; a criterion passes only when
its numerical condition holds and it finished within its runtime budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erfc

from . import bounds, field as fieldmod, solver
from .chaos import moments as cm
from .chaos.resolvent import white_moment_resolvent
from .chaos.series import moment_upper_bound_series
from .chaos.upsilon import UpsilonSpec, upsilon_cutoff, upsilon_slope
from .kernels import pair_kernel_g
from .params import VERDICT_CODES, Verdict, classify, classify_grid, validate
from .quadrature import QuadratureSpec, integrate_singular_1d


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number}: {self.name} ({self.seconds:.1f}s / {self.budget:.0f}s)"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _timed(number: int, name: str, budget: float, fn: Callable[[], tuple[bool, dict]]):
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok) and dt <= budget, dt, budget, detail)


# 1 ------------------------------------------------------------------------

def _expected_verdict(d: int, H0: float, Htot: float) -> Verdict:
    """Verdict from the threshold formulas, written out independently of params."""
    if H0 == 0.5:
        lim = 0.25 if d == 1 else d - 1
        return Verdict.GLOBAL_UNIQUE if Htot > lim else Verdict.NO_LOCAL_SOLUTION
    if d >= 2 and abs(Htot - (d - 1)) <= 1e-12:
        return Verdict.LOCAL_UNIQUE
    if Htot > (0.75 - H0 if d == 1 else d - 1):
        return Verdict.GLOBAL_UNIQUE
    if Htot + 2 * H0 <= (1.25 if d == 1 else (3 * d + 2) / 4):
        return Verdict.NO_LOCAL_SOLUTION
    return Verdict.INDETERMINATE


def check_phase(n: int = 200):
    def run():
        codes = VERDICT_CODES
        bad = 0
        detail = {}
        for d in (1, 2, 3):
            h0s = np.linspace(0.5, 0.995, n)
            lo, hi = (0.0025, 0.9975) if d == 1 else (d - 1.5, d - 0.5)
            htots = np.linspace(lo, hi, n)
            htots[np.argmin(np.abs(htots - (d - 1)))] = d - 1  # put the critical line on the grid
            grid = classify_grid(d, h0s[:, None], htots[None, :])
            for i, h0 in enumerate(h0s):
                for j, ht in enumerate(htots):
                    bad += codes[grid[i, j]] is not _expected_verdict(d, float(h0), float(ht))
            detail[f"d{d}_points"] = int(grid.size)
        # analytic boundary positions through the scalar classifier
        e = 1e-9
        probes = [
            (1, 0.5, 0.25, Verdict.NO_LOCAL_SOLUTION, Verdict.GLOBAL_UNIQUE),
            (2, 0.5, 1.0, Verdict.NO_LOCAL_SOLUTION, Verdict.GLOBAL_UNIQUE),
            (1, 0.6, 0.15, Verdict.INDETERMINATE, Verdict.GLOBAL_UNIQUE),
            (1, 0.6, 0.05, Verdict.NO_LOCAL_SOLUTION, Verdict.INDETERMINATE),
            # d = 3, H0 = 0.7: necessary line H_total = 11/4 - 1.4 = 1.35
            (3, 0.7, 1.35, Verdict.NO_LOCAL_SOLUTION, Verdict.INDETERMINATE),
        ]
        boundary_ok = True
        for d, h0, thr, below, above in probes:
            lo = classify(validate(d, h0, [(thr - e) / d] * d)).verdict
            hi = classify(validate(d, h0, [(thr + e) / d] * d)).verdict
            boundary_ok &= lo is below and hi is above
        crit = classify(validate(2, 0.8, [0.5, 0.5])).verdict is Verdict.LOCAL_UNIQUE
        detail.update(mismatches=bad, boundaries_exact=boundary_ok, critical_line=crit)
        return bad == 0 and boundary_ok and crit, detail
    return _timed(1, "phase boundaries on 200x200 sweeps (d = 1, 2, 3)", 1.0, run)


# 2 ------------------------------------------------------------------------

def check_gaussian_calibration(seed: int = 0):
    def run():
        rng = np.random.default_rng(seed)
        ab = rng.uniform(0.05, 5.0, size=(100, 2))
        err1 = max(abs(pair_kernel_g(a, b, 0.5, 1e-12) / (2 * math.pi / math.sqrt(a * b)) - 1)
                   for a, b in ab)
        err2 = 0.0
        for _ in range(100):
            a, b = rng.uniform(0.05, 5.0, 2)
            c = rng.uniform(0.1, 10.0)
            h = rng.uniform(0.05, 0.95)
            lhs = pair_kernel_g(c * a, c * b, h, 1e-11)
            rhs = c ** (2 * h - 2) * pair_kernel_g(a, b, h, 1e-11)
            err2 = max(err2, abs(lhs / rhs - 1))
        return err1 <= 1e-10 and err2 <= 1e-6, {"gaussian_rel_err": err1, "scaling_rel_err": err2}
    return _timed(2, "pair kernel Gaussian calibration and scaling", 10.0, run)


# 3 ------------------------------------------------------------------------

def check_closed_form():
    def run():
        errs = {}
        for ht in (1.2, 1.5, 1.8):
            p = validate(2, 0.5, [ht / 2, ht / 2])
            a = cm.second_chaos_closed_white(p, 1.0)
            b = cm.closed_white_integrand_quadrature(p, 1.0)
            errs[ht] = abs(a / b - 1)
        return max(errs.values()) <= 1e-6, {"rel_err": errs}
    return _timed(3, "closed-form second chaos vs 2-D quadrature", 30.0, run)


# 4 ------------------------------------------------------------------------

def check_upsilon():
    def run():
        fit = upsilon_slope(1.0, 0.55, 0.1)
        u1 = upsilon_cutoff(UpsilonSpec(1.0, 0.8, (0.6,), 1e-4))
        u2 = upsilon_cutoff(UpsilonSpec(1.0, 0.8, (0.6,), 5e-5))
        rel = abs(u2 / u1 - 1)
        ok = abs(fit.slope - 0.1) <= 0.03 and rel < 0.01
        return ok, {"slope": fit.slope, "loglog_slope_first_decades": fit.loglog_slope,
                    "halving_rel_change": rel}
    return _timed(4, "cut-off integral exponent and convergence", 120.0, run)


# 5 ------------------------------------------------------------------------

def check_triangulation(samples: int = 10_000_000, seed: int = 5):
    def run():
        p = validate(1, 0.5, [0.75])
        out = {}
        ok = True
        for n in (1, 2):
            det = cm.chaos_moment(cm.ChaosMomentRequest(n, 1.0, p)).value
            mc = cm.chaos_moment(cm.ChaosMomentRequest(n, 1.0, p, cm.Method.SPECTRAL_MC,
                                                       samples=samples, seed=seed + n))
            z = (mc.value - det) / mc.std_error
            out[n] = {"quadrature": det, "monte_carlo": mc.value, "se": mc.std_error, "z": z}
            ok &= abs(z) <= 3
        return ok, out
    return _timed(5, "quadrature vs spectral Monte Carlo (n <= 2)", 300.0, run)


# 6 ------------------------------------------------------------------------

def _fit_slope(ts, vals):
    return float(np.polyfit(np.log(ts), np.log(vals), 1)[0])


def check_time_scaling(samples: int = 400_000, seed: int = 6):
    def run():
        ts = np.array([0.5, 1.0, 2.0, 4.0])
        out = {}
        ok = True
        white = [(validate(1, 0.5, [0.75]), (1, 2, 3)), (validate(2, 0.5, [0.75, 0.75]), (1, 2))]
        for p, orders in white:
            for n in orders:
                vals = [cm.chaos_moment(cm.ChaosMomentRequest(n, t, p)).value for t in ts]
                s, e = _fit_slope(ts, vals), cm.time_scaling_exponent(p, n)
                out[f"white d={p.d} n={n}"] = (s, e)
                ok &= abs(s / e - 1) <= 0.03
        for H0, H in ((0.7, 0.6), (0.8, 0.3)):
            p = validate(1, H0, [H])
            vals = [cm.chaos_moment(cm.ChaosMomentRequest(1, t, p, cm.Method.TEMPORAL_MC,
                                                          samples=samples, seed=seed)).value
                    for t in ts]
            s, e = _fit_slope(ts, vals), cm.time_scaling_exponent(p, 1)
            out[f"colored H0={H0} H={H} n=1"] = (s, e)
            ok &= abs(s / e - 1) <= 0.03
        return ok, out
    return _timed(6, "time-scaling exponents", 300.0, run)


# 7 ------------------------------------------------------------------------

SOLVER_LADDER = dict(L=32.0, M=128, levels=3, paths=10_000, seed=7)


def solver_ladder(paths: int = SOLVER_LADDER["paths"], seed: int = SOLVER_LADDER["seed"],
                  t: float = 0.5, H: float = 0.75, workers: int = 1):
    L, M = SOLVER_LADDER["L"], SOLVER_LADDER["M"]
    dt = t / round(t / ((L / M) ** 2 / 2))
    base = solver.SchemeSpec(L, M, dt, t, H, paths, seed=seed, workers=workers)
    return solver.refinement_ladder(base, SOLVER_LADDER["levels"])


def check_solver(paths: int = SOLVER_LADDER["paths"]):
    def run():
        target = 1.0 + sum(white_moment_resolvent(n, 0.5, 0.75) for n in range(1, 6))
        rep = solver.convergence_study(solver_ladder(paths))
        rel = abs(rep.extrapolated / target - 1)
        return rel <= 0.05, {"chaos_sum": target, "extrapolated": rep.extrapolated,
                             "extrapolated_se": rep.extrapolated_se, "levels": rep.values,
                             "order": rep.order, "rel_err": rel}
    return _timed(7, "solver vs chaos second moment", 600.0, run)


# 8 ------------------------------------------------------------------------

def check_field(count: int = 10_000, seed: int = 8):
    def run():
        T = [0.25, 0.5, 0.75, 1.0]
        X = [-1.0, -0.5, 0.0, 0.5, 1.0]
        out = {}
        ok = True
        for H0, H in ((0.5, 0.5), (0.7, 0.3), (0.9, 0.8)):
            p = validate(1, H0, [H])
            for m in fieldmod.Method:
                s = fieldmod.sample_sheets(T, [X], p, m, seed=seed, count=count)
                r = fieldmod.covariance_validate(s, p)
                out[f"{H0},{H},{m.value}"] = r.fraction
                ok &= r.passed
        return ok, out
    return _timed(8, "sheet covariance validation", 300.0, run)


# 9 ------------------------------------------------------------------------

def check_bounds():
    def run():
        p = validate(1, 0.5, [0.6])
        terms = moment_upper_bound_series(p, 1.0, 2.0, 4)
        norms = [math.sqrt(cm.chaos_moment(cm.ChaosMomentRequest(n, 1.0, p)).value)
                 for n in range(1, 5)]
        per_order = all(nv <= b for nv, b in zip(norms, terms[1:]))
        sums_ok = True
        for q in (validate(1, 0.5, [0.6]), validate(1, 0.7, [0.6]), validate(2, 0.8, [0.8, 0.8])):
            for t in (0.1, 0.5, 1.0, 2.0):
                for pn in (2.0, 4.0, 8.0, 16.0):
                    s = moment_upper_bound_series(q, t, pn, 40).sum()
                    sums_ok &= math.log(s) <= bounds.log_moment_bound(q, t, pn)
        ps = np.array([4.0, 8.0, 16.0, 32.0])
        ll = [math.log(bounds.log_moment_bound(p, 1.0, x)) for x in ps]
        slope = float(np.polyfit(np.log(ps), ll, 1)[0])
        expect = (p.excess + 2) / (p.excess + 1)
        ok = per_order and sums_ok and abs(slope / expect - 1) <= 0.02
        return ok, {"norms": norms, "terms": terms[1:].tolist(), "partial_sums_ok": sums_ok,
                    "p_slope": slope, "p_expected": expect}
    return _timed(9, "bound consistency", 120.0, run)


# 10 -----------------------------------------------------------------------

def check_special_functions():
    def run():
        e1 = abs(bounds.mittag_leffler(bounds.MLSeriesSpec(1.0, 1.0)) - math.e)
        oracle = math.e * erfc(-1.0)  # E_{1/2}(x) = exp(x^2) erfc(-x)
        e2 = abs(bounds.mittag_leffler(bounds.MLSeriesSpec(0.5, 1.0)) - oracle)
        e2b = abs(oracle - 5.00898)
        beta = integrate_singular_1d(lambda x, l, r: 1.0 / math.sqrt(l * r), 0.0, 1.0, -0.5, -0.5,
                                     QuadratureSpec(rel_tol=1e-13), distances=True)
        e3 = abs(beta - math.pi)
        ok = e1 <= 1e-10 and e2 <= 1e-5 and e2b <= 1e-5 and e3 <= 1e-12
        return ok, {"ml_1_1": e1, "ml_half_1": e2, "beta_half_half": e3}
    return _timed(10, "special functions", 10.0, run)


CHECKS = {
    1: check_phase,
    2: check_gaussian_calibration,
    3: check_closed_form,
    4: check_upsilon,
    5: check_triangulation,
    6: check_time_scaling,
    7: check_solver,
    8: check_field,
    9: check_bounds,
    10: check_special_functions,
}

SUITES = {
    "primary": tuple(CHECKS),
    "quick": (1, 2, 3, 9, 10),
}


def run_suite(name: str = "primary", report: Callable[[CriterionResult], None] | None = None):
    results = []
    for k in SUITES[name]:
        r = CHECKS[k]()
        if report:
            report(r)
        results.append(r)
    return results
