"""Command-line front end: ``pamchaos <command> [options]``.

Commands: check, phase, chaos, upsilon, field, simulate, verify.  Options
resolve as command-line flag > config file key > default.  Every output
embeds the resolved configuration; wall-clock data lives only in the JSON
``metadata`` field so payloads are reproducible byte for byte.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds, field as fieldmod, solver, verification
from .chaos import moments as cm
from .chaos.series import moment_upper_bound_series
from .chaos.upsilon import DEEP_EPS, UpsilonSpec, upsilon_cutoff, upsilon_slope
from .errors import NumericalError, PamError
from .params import VERDICT_CODES, classify, classify_grid, validate

DEFAULT_SEED = 20240601
EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 2, 3, 4

DEFAULTS = {
    "check": {"d": 1, "h0": 0.5, "h": "0.5"},
    "phase": {"d": 1, "h0": None, "h0_range": "0.5:0.99:100", "htot_range": None,
              "h1_range": None, "h2_range": None, "svg": None},
    "chaos": {"n_max": 4, "h0": 0.5, "h": "0.75", "t": 1.0, "method": None, "samples": 200000,
              "bound_p": 2.0, "K": None, "C": None},
    "upsilon": {"h0": 0.55, "h": "0.1", "t": 1.0, "eps_ladder": "1e-2:1e-4", "nodes": 12,
                "asymptotic": True},
    "field": {"h0": 0.5, "h": "0.5", "t_points": "0.25,0.5,0.75,1", "x_points": "-1,-0.5,0,0.5,1",
              "method": "Cholesky", "count": 1, "validate": False, "binary": None},
    "simulate": {"h": 0.75, "t": 0.5, "L": 32.0, "M": 128, "dt": None, "paths": 1000,
                 "amplitude": 1.0, "levels": 1},
    "verify": {"suite": "primary"},
}
COMMON = {"format": "csv", "output": None, "jobs": 1}


# -- parsing ---------------------------------------------------------------

def _floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _range(text: str, points: int | None = None) -> np.ndarray:
    """'a:b[:n]' as a linear grid of n points (default ``points``)."""
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"range must be a:b[:n], got {text!r}")
    a, b = float(parts[0]), float(parts[1])
    n = int(parts[2]) if len(parts) == 3 else (points or 50)
    if n < 2 or not a < b:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return np.linspace(a, b, n)


def _ladder(text: str) -> list[float]:
    """'hi:lo[:n]' as a geometric ladder; n defaults to two points per decade plus one."""
    parts = str(text).split(":")
    hi, lo = float(parts[0]), float(parts[1])
    if not hi > lo > 0:
        raise argparse.ArgumentTypeError("epsilon ladder must be hi:lo with hi > lo > 0")
    n = int(parts[2]) if len(parts) == 3 else int(round(2 * math.log10(hi / lo))) + 1
    return [float(v) for v in np.geomspace(hi, lo, max(n, 3))]


def read_config(path: str) -> dict:
    """JSON object or flat key=value lines ('#' comments allowed)."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config JSON must be an object")
        return {k.replace("-", "_"): v for k, v in data.items()}
    except json.JSONDecodeError:
        out = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            out[key.strip().replace("-", "_")] = _coerce(val.strip())
        return out


def _coerce(val: str):
    low = val.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    return val


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default=S)
    common.add_argument("--output", "-o", default=S, help="write to this path instead of stdout")
    common.add_argument("--config", default=S, help="JSON or key=value file")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--jobs", type=int, default=S, help="worker threads for Monte Carlo")

    p = argparse.ArgumentParser(prog="pamchaos", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="classify a parameter tuple")
    c.add_argument("--d", type=int, default=S)
    c.add_argument("--h0", type=float, default=S)
    c.add_argument("--h", default=S, help="comma-separated spatial exponents")

    c = sub.add_parser("phase", parents=[common], help="solvability phase diagram")
    c.add_argument("--d", type=int, default=S)
    c.add_argument("--h0", type=float, default=S, help="fixed H0 for an (H1, H2) sweep")
    c.add_argument("--h0-range", default=S)
    c.add_argument("--htot-range", default=S)
    c.add_argument("--h1-range", default=S)
    c.add_argument("--h2-range", default=S)
    c.add_argument("--svg", default=S, help="also write an SVG heat map here")

    c = sub.add_parser("chaos", parents=[common], help="chaos second-moment table")
    c.add_argument("--n-max", type=int, default=S)
    c.add_argument("--h0", type=float, default=S)
    c.add_argument("--h", default=S)
    c.add_argument("--t", type=float, default=S)
    c.add_argument("--method", choices=[m.value for m in cm.Method], default=S)
    c.add_argument("--samples", type=int, default=S)
    c.add_argument("--bound-p", type=float, default=S, help="norm order of the bound columns")
    c.add_argument("--K", type=float, default=S, help="override the per-order bound constant")
    c.add_argument("--C", type=float, default=S, help="override the moment-bound constant")

    c = sub.add_parser("upsilon", parents=[common], help="cut-off integral ladder")
    c.add_argument("--h0", type=float, default=S)
    c.add_argument("--h", default=S)
    c.add_argument("--t", type=float, default=S)
    c.add_argument("--eps-ladder", default=S, help="hi:lo[:n], geometric")
    c.add_argument("--nodes", type=int, default=S)
    c.add_argument("--no-asymptotic", dest="asymptotic", action="store_false", default=S,
                   help="skip the deep-cutoff slope")

    c = sub.add_parser("field", parents=[common], help="sample the fractional Brownian sheet")
    c.add_argument("--h0", type=float, default=S)
    c.add_argument("--h", default=S)
    c.add_argument("--t-points", default=S)
    c.add_argument("--x-points", default=S, help="per-axis comma lists separated by ';'")
    c.add_argument("--method", choices=[m.value for m in fieldmod.Method], default=S)
    c.add_argument("--count", type=int, default=S)
    c.add_argument("--validate", action="store_true", default=S)
    c.add_argument("--binary", default=S, help="also write the samples in binary layout here")

    c = sub.add_parser("simulate", parents=[common], help="Monte Carlo solver")
    c.add_argument("--h", type=float, default=S)
    c.add_argument("--t", type=float, default=S)
    c.add_argument("--L", type=float, default=S)
    c.add_argument("--M", type=int, default=S)
    c.add_argument("--dt", type=float, default=S)
    c.add_argument("--paths", type=int, default=S)
    c.add_argument("--amplitude", type=float, default=S)
    c.add_argument("--levels", type=int, default=S, help=">= 3 runs a convergence study")

    c = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    c.add_argument("--suite", choices=sorted(verification.SUITES), default=S)
    return p


def resolve(ns: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(ns).items() if k != "command"}
    cfg = read_config(given.pop("config")) if "config" in given else {}
    seed = int(os.environ.get("PAM_SEED", DEFAULT_SEED))
    out = {"command": ns.command, "seed": seed, **COMMON, **DEFAULTS[ns.command]}
    out.update({k: v for k, v in cfg.items() if k in out})
    out.update(given)
    return out


# -- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(config: dict, columns: list[str], rows: list[list], extra: dict | None = None) -> str:
    if config["format"] == "json":
        payload = {"config": _jsonable(config),
                   "records": [_jsonable(dict(zip(columns, r))) for r in rows],
                   **({"summary": _jsonable(extra)} if extra else {}),
                   "metadata": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# config=" + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    if extra:
        buf.write("# summary=" + json.dumps(_jsonable(extra), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def emit(config: dict, text: str) -> None:
    if config.get("output"):
        Path(config["output"]).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------

def _params(cfg):
    H = _floats(cfg["h"])
    return validate(cfg.get("d", len(H)), cfg["h0"], H)


def cmd_check(cfg) -> int:
    p = _params(cfg)
    v = classify(p)
    rec = v.to_dict()
    cols = ["d", "H0", "H", "H_total", "verdict", "matched_condition", "chen_global", "chen_local"]
    cols += [f"margin_{k}" for k in rec["margins"]]
    row = [p.d, p.H0, ",".join(_fmt(h) for h in p.H), p.H_total, rec["verdict"],
           rec["matched_condition"], *rec["chen_sufficient"], *rec["margins"].values()]
    emit(cfg, render(cfg, cols, [row]))
    return 0


COLORS = {"GlobalUnique": "#2b8a3e", "LocalUnique": "#f59f00", "NoLocalSolution": "#c92a2a",
          "Indeterminate": "#adb5bd", "invalid": "#ffffff"}


def phase_svg(xs, ys, labels, xlabel: str, ylabel: str, cell: int = 4) -> str:
    """Heat map: one rect per grid cell, x along columns, y up the rows."""
    nx, ny = len(xs), len(ys)
    W, Hh, pad = nx * cell, ny * cell, 60
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + pad + 170}" '
           f'height="{Hh + pad + 20}" font-family="sans-serif" font-size="11">']
    for j in range(ny):
        for i in range(nx):
            y = 10 + (ny - 1 - j) * cell
            out.append(f'<rect x="{pad + i * cell}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{COLORS[labels[j][i]]}"/>')
    out.append(f'<text x="{pad + W / 2}" y="{Hh + 40}" text-anchor="middle">{xlabel} '
               f'[{xs[0]:.3g}, {xs[-1]:.3g}]</text>')
    out.append(f'<text x="12" y="{10 + Hh / 2}" transform="rotate(-90 12 {10 + Hh / 2})" '
               f'text-anchor="middle">{ylabel} [{ys[0]:.3g}, {ys[-1]:.3g}]</text>')
    for k, (name, col) in enumerate(COLORS.items()):
        out.append(f'<rect x="{pad + W + 15}" y="{15 + 18 * k}" width="12" height="12" '
                   f'fill="{col}" stroke="#000"/><text x="{pad + W + 32}" y="{25 + 18 * k}">'
                   f'{name}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def cmd_phase(cfg) -> int:
    d = int(cfg["d"])
    rows, labels = [], []
    if cfg.get("h1_range") or cfg.get("h2_range"):
        if d != 2 or cfg.get("h0") is None or not (cfg.get("h1_range") and cfg.get("h2_range")):
            raise argparse.ArgumentTypeError("an (H1, H2) sweep needs --d 2, --h0 and both ranges")
        xs, ys = _range(cfg["h1_range"]), _range(cfg["h2_range"])
        cols = ["H1", "H2", "H_total", "verdict", "margin_sufficient", "margin_necessary"]
        for h2 in ys:
            lab = []
            for h1 in xs:
                try:
                    p = validate(2, cfg["h0"], [h1, h2])
                except PamError:
                    rows.append([h1, h2, h1 + h2, "invalid", None, None])
                    lab.append("invalid")
                    continue
                v = classify(p)
                rows.append([h1, h2, p.H_total, v.verdict.value, v.margins["sufficient"],
                             v.margins["necessary"]])
                lab.append(v.verdict.value)
            labels.append(lab)
        xl, yl = "H1", "H2"
    else:
        xs = _range(cfg["htot_range"]) if cfg.get("htot_range") else \
            np.linspace(0.005 * d, d * (0.995 if d == 1 else (d - 0.5) / d), 100)
        ys = _range(cfg["h0_range"])
        if ys[0] < 0.5 or ys[-1] >= 1 or xs[0] <= 0 or xs[-1] >= d:
            raise argparse.ArgumentTypeError("sweep ranges must satisfy 1/2 <= H0 < 1, 0 < H_total < d")
        grid = classify_grid(d, ys[:, None], xs[None, :])
        nec = 1.25 if d == 1 else (3 * d + 2) / 4
        cols = ["H0", "H_total", "verdict", "margin_sufficient", "margin_necessary"]
        for j, h0 in enumerate(ys):
            lab = []
            for i, ht in enumerate(xs):
                suff = (0.25 if h0 == 0.5 else 0.75 - h0) if d == 1 else d - 1
                name = VERDICT_CODES[grid[j, i]].value
                rows.append([h0, ht, name, ht - suff, ht + 2 * h0 - nec])
                lab.append(name)
            labels.append(lab)
        xl, yl = "H_total", "H0"
    if cfg.get("svg"):
        Path(cfg["svg"]).write_text(phase_svg(list(xs), list(ys), labels, xl, yl))
    emit(cfg, render(cfg, cols, rows))
    return 0


def cmd_chaos(cfg) -> int:
    p = _params(cfg)
    method = cm.Method(cfg["method"]) if cfg.get("method") else (
        cm.Method.SIMPLEX_QUADRATURE if p.white else cm.Method.TEMPORAL_MC)
    n_max = int(cfg["n_max"])
    try:
        terms = moment_upper_bound_series(p, cfg["t"], cfg["bound_p"], n_max, K=cfg.get("K"))
    except PamError:
        terms = [None] * (n_max + 1)
    rows = [[0, 1.0, 0.0, method.value, None, terms[0], False]]
    prev = 1.0
    for n in range(1, n_max + 1):
        est = cm.chaos_moment(cm.ChaosMomentRequest(n, cfg["t"], p, method, samples=cfg["samples"],
                                                    seed=cfg["seed"] + n, max_order=n_max,
                                                    workers=cfg["jobs"]))
        ratio = est.value / prev if prev and math.isfinite(est.value) else None
        rows.append([n, est.value, est.std_error, method.value, ratio, terms[n], est.divergent])
        prev = est.value
    extra = None
    try:
        extra = {"moment_bound": bounds.moment_bound(p, cfg["t"], cfg["bound_p"], C=cfg.get("C"),
                                                     K=cfg.get("K"))}
    except PamError as exc:
        extra = {"moment_bound": None, "reason": str(exc)}
    cols = ["n", "second_moment", "std_error", "method", "ratio", "bound_term", "divergent"]
    emit(cfg, render(cfg, cols, rows, extra))
    return 0


def cmd_upsilon(cfg) -> int:
    H = tuple(_floats(cfg["h"]))
    ladder = _ladder(cfg["eps_ladder"])
    vals = [upsilon_cutoff(UpsilonSpec(cfg["t"], cfg["h0"], H, e, cfg["nodes"])) for e in ladder]
    x = np.log(1.0 / np.array(ladder))
    extra = {"ladder_loglog_slope": float(np.polyfit(x, np.log(vals), 1)[0])}
    diffs = np.diff(vals)
    extra["ladder_difference_slope"] = (float(np.polyfit(x[1:], np.log(diffs), 1)[0])
                                        if np.all(diffs > 0) else None)
    if cfg["asymptotic"]:
        fit = upsilon_slope(cfg["t"], cfg["h0"], H, DEEP_EPS, cfg["nodes"])
        extra["slope"] = fit.slope
        extra["slope_eps"] = list(fit.eps)
    else:
        extra["slope"] = extra["ladder_difference_slope"]
    rows = [[e, v] for e, v in zip(ladder, vals)]
    emit(cfg, render(cfg, ["epsilon", "upsilon"], rows, extra))
    return 0


def cmd_field(cfg) -> int:
    H = _floats(cfg["h"])
    p = validate(len(H), cfg["h0"], H)
    T = _floats(cfg["t_points"])
    X = [_floats(a) for a in str(cfg["x_points"]).split(";")]
    if len(X) == 1 and p.d > 1:
        X = X * p.d
    samples = fieldmod.sample_sheets(T, X, p, cfg["method"], seed=cfg["seed"],
                                     count=int(cfg["count"]))
    if cfg.get("binary"):
        Path(cfg["binary"]).write_bytes(b"".join(s.to_bytes() for s in samples))
    extra = None
    if cfg["validate"]:
        extra = fieldmod.covariance_validate(samples, p).to_dict()
        extra.pop("z_scores")
    mesh = np.meshgrid(*samples[0].axes, indexing="ij")
    cols = ["sample", "seed", "t"] + [f"x{i}" for i in range(1, p.d + 1)] + ["value"]
    rows = []
    for k, s in enumerate(samples):
        for idx in np.ndindex(s.values.shape):
            rows.append([k, s.seed] + [m[idx] for m in mesh] + [s.values[idx]])
    emit(cfg, render(cfg, cols, rows, extra))
    return 0


SOLVER_METHOD = "SpectralItoMonteCarlo"


def cmd_simulate(cfg) -> int:
    L, M, t = float(cfg["L"]), int(cfg["M"]), float(cfg["t"])
    dt = cfg.get("dt") or t / math.ceil(t / ((L / M) ** 2 / 2))
    spec = solver.SchemeSpec(L, M, dt, t, cfg["h"], int(cfg["paths"]), seed=cfg["seed"],
                             amplitude=cfg["amplitude"], workers=cfg["jobs"])
    if int(cfg["levels"]) >= 3:
        rep = solver.convergence_study(solver.refinement_ladder(spec, int(cfg["levels"])))
        rows = [[lv["M"], lv["dt"], v, se, SOLVER_METHOD]
                for lv, v, se in zip(rep.levels, rep.values, rep.std_errors)]
        extra = {k: v for k, v in rep.to_dict().items() if k not in ("levels", "values",
                                                                       "std_errors")}
        emit(cfg, render(cfg, ["M", "dt", "second_moment", "second_moment_se", "method"], rows,
                         extra))
        return 0
    st = solver.simulate_paths(spec)
    rows = [list(r) + [st.paths, SOLVER_METHOD]
            for r in zip(st.times, st.mean, st.mean_se, st.second_moment, st.second_moment_se)]
    emit(cfg, render(cfg, ["t", "mean", "mean_se", "second_moment", "second_moment_se", "paths",
                           "method"], rows))
    return 0


def cmd_verify(cfg) -> int:
    def report(r):
        print(r.line(), file=sys.stderr, flush=True)

    results = verification.run_suite(cfg["suite"], report)
    rows = [[r.number, r.name, r.passed, r.seconds, r.budget, json.dumps(_jsonable(r.detail))]
            for r in results]
    emit(cfg, render(cfg, ["criterion", "name", "passed", "seconds", "budget", "detail"], rows))
    return 0 if all(r.passed for r in results) else EXIT_ACCEPTANCE


COMMANDS = {"check": cmd_check, "phase": cmd_phase, "chaos": cmd_chaos, "upsilon": cmd_upsilon,
            "field": cmd_field, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve(ns)
        return COMMANDS[ns.command](cfg)
    except (NumericalError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PamError, ValueError, argparse.ArgumentTypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
