"""Command-line harness.

Single runs print one JSON document {"command", "argv", "result"}; sweeps
print CSV.  Floats are written with 17 significant digits so every document
replays bit-identically through ``--replay``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import _walk, group, hyp, model, pairing, strip
from .errors import InputError, NonPositiveData, WPLabError

# ------------------------------------------------------------ formatting


def fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep a float literal so the value parses back as a float, sign of zero included
    return s if any(ch in s for ch in ".e") else s + ".0"


def dumps(obj) -> str:
    """JSON with 17-digit floats."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag])
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(x) -> str:
    return fmt(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_csv(header: Sequence[str], rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])


# ------------------------------------------------------------ fitting


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return asdict(self)


def fit_order(xs: Sequence[float], ys: Sequence[float],
              window: tuple[int, int] | None = None) -> FitResult:
    """Least squares of log y on log x over ``window`` (half-open indices)."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InputError("xs and ys must be equal-length sequences")
    lo, hi = window if window is not None else (0, len(xs))
    xw, yw = xs[lo:hi], ys[lo:hi]
    if len(xw) < 3:
        raise NonPositiveData("fit needs at least three points")
    if not (np.all(xw > 0) and np.all(yw > 0)):
        raise NonPositiveData("fit needs positive data")
    lx, ly = np.log(xw), np.log(yw)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return FitResult(float(slope), float(intercept), min(1.0, max(0.0, r2)), (lo, hi))


# ------------------------------------------------------------ helpers


def parse_grid(text: str) -> np.ndarray:
    """from:to:count with an optional fourth field ``log`` or ``lin``."""
    parts = text.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError) as exc:
        raise InputError(f"grid {text!r} is not from:to:count[:log]") from exc
    scale = parts[3] if len(parts) > 3 else "lin"
    if not lo < hi or n < 2 or scale not in ("lin", "log"):
        raise InputError(f"grid {text!r} needs from < to, count >= 2 and lin|log")
    if scale == "log":
        if lo <= 0.0:
            raise InputError("log grid needs a positive lower end")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON argument: {exc}") from exc


def _surface(text: str) -> group.MarkedGroup:
    return group.build(group.spec_from_dict(_json_arg(text)))


def _model_point(text: str) -> model.Point:
    if text.strip().lower() == "stratum":
        return model.STRATUM
    try:
        r, th = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"point {text!r} is not r,theta or 'stratum'") from exc
    return model.ModelPoint(r, th)


# ------------------------------------------------------------ commands


def cmd_surface(a):
    g = _surface(a.surface)
    gens = {n: list(m.entries) for n, m in g.generators}
    res = {"spec": g.spec.to_dict(), "generators": gens,
           "traces": {n: m.trace for n, m in g.generators},
           "lengths": {n: hyp.translation_length(m) for n, m in g.generators},
           "distinguished": g.distinguished}
    if isinstance(g.spec, group.PuncturedTorus):
        res["commutator_trace"] = group.commutator_trace(g)
    else:
        res["boundary_traces"] = [abs(g.evaluate(w).trace) for w in ("X", "Y", "XY")]
    if a.words is not None:
        items = group.enumerate_words(g, a.words)
        res["word_count"] = len(items)
        res["matrix_collisions"] = group.count_matrix_collisions(items)
    return res


def cmd_pairing(a):
    return pairing.riera_pairing(_surface(a.surface), a.alpha, a.beta, a.depth).to_dict()


def cmd_cosine(a):
    g = _surface(a.surface)
    res = pairing.cosine_report(g, a.alpha, a.beta, a.depth).to_dict()
    if isinstance(g.spec, group.PuncturedTorus):
        res["twist_fd"] = pairing.twist_derivative_fd(g.spec, a.beta, a.h)
    return res


def cmd_pseries(a):
    g = _surface(a.surface)
    rep = pairing.p_series(g, a.alpha, complex(a.x, a.y), a.depth)
    la = hyp.translation_length(g.evaluate(a.alpha))
    res = rep.to_dict()
    res["ratio"] = rep.value / (1.0 + la * math.exp(la / 2.0))
    return res


def cmd_strip(a):
    phi = strip.FourierQD.from_dict(_json_arg(a.phi))
    rep = strip.second_variation(phi)
    res = {"report": rep.to_dict(), "corollary_margin": strip.corollary_margin(phi, rep),
           "complex_margin": strip.complex_margin(phi, rep),
           "margin_scale": strip.margin_scale(phi, rep)}
    if a.oracle:
        res["oracle"] = strip.quadrature_oracle(phi, (a.grid, a.grid), a.rule).to_dict()
    return res


def cmd_model(a):
    if a.what == "geodesic":
        s0 = model.ModelState(model.ModelPoint(a.r0, a.theta0), a.rdot, a.thetadot)
        return model.geodesic_flow(s0, a.T, a.h, a.every)
    if a.what == "distance":
        p, q = _model_point(a.p), _model_point(a.q)
        return {"distance": model.distance(p, q)}
    if a.what == "angle":
        g0 = model.radial_geodesic(0.0)
        g1 = model.radial_geodesic(a.dtheta)
        return {"t": a.t, "angle": model.comparison_angle(model.STRATUM, g0(a.t), g1(a.t))}
    if a.what == "lambda":
        return model.lambda_dictionary(a.r)
    if a.what == "kahler":
        return {"residual": model.kahler_identity_check(a.r)}
    p = model.ModelPoint(a.r, 0.0)
    return {"r": a.r, "curvature": model.sectional_curvature(p),
            "closed_form": model.curvature_closed_form(a.r)}


# ------------------------------------------------------------ sweeps

SWEEP_COLUMNS = {
    "pairing-remainder": ("l", "remainder", "value", "last_shell", "terms"),
    "pairing": ("l", "value", "coset_sum", "last_shell", "terms"),
    "cosine": ("l", "cosine_sum", "twist_fd", "gap"),
    "pseries-ratio": ("l", "ratio", "value", "last_shell"),
    "model-angle": ("t", "angle"),
}


def _sweep_point(job):
    target, x, tau, depth, alpha, beta, extra = job
    if target == "model-angle":
        g0, g1 = model.radial_geodesic(0.0), model.radial_geodesic(extra)
        return (x, model.comparison_angle(model.STRATUM, g0(x), g1(x)))
    spec = group.PuncturedTorus(float(x), tau)
    g = group.build(spec)
    if target == "pairing-remainder":
        est = pairing.riera_pairing(g, alpha, alpha, depth)
        return (x, pairing.TWO_OVER_PI * est.coset_sum, est.value, est.last_shell, est.terms)
    if target == "pairing":
        est = pairing.riera_pairing(g, alpha, beta, depth)
        return (x, est.value, est.coset_sum, est.last_shell, est.terms)
    if target == "cosine":
        cs = pairing.cosine_sum(g, alpha, beta, depth)
        fd = pairing.twist_derivative_fd(spec, beta, 1e-4)
        return (x, cs, fd, abs(cs - fd))
    rep = pairing.p_series(g, alpha, complex(0.0, 1.0), depth)
    lv = float(x)
    return (x, rep.value / (1.0 + lv * math.exp(lv / 2.0)), rep.value, rep.last_shell)


def cmd_sweep(a, out):
    if a.target == "model-angle":
        grid = parse_grid(a.t or "1e-3:1e-1:10:log")
    else:
        if not a.l:
            raise InputError(f"--l is required for target {a.target}")
        grid = parse_grid(a.l)
    jobs = [(a.target, float(x), a.tau, a.depth, a.alpha, a.beta, a.dtheta) for x in grid]
    workers = _walk.thread_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    cols = SWEEP_COLUMNS[a.target]
    if a.format == "json":
        out.write(dumps([dict(zip(cols, r)) for r in rows]) + "\n")
    else:
        write_csv(cols, rows, out)


def cmd_fit(a, inp):
    reader = csv.DictReader(inp)
    rows = list(reader)
    if not rows:
        raise NonPositiveData("fit needs CSV rows on stdin")
    names = reader.fieldnames
    xcol = a.x or names[0]
    ycol = a.y or names[1]
    for c in (xcol, ycol):
        if c not in names:
            raise InputError(f"column {c!r} not in {names}")
    pairs = sorted((float(r[xcol]), float(r[ycol])) for r in rows)
    xs, ys = [p[0] for p in pairs], [p[1] for p in pairs]
    if a.window:
        lo, hi = (int(v) for v in a.window.split(":"))
    else:
        lo, hi = 0, math.ceil(len(xs) / 2)
    return fit_order(xs, ys, (lo, hi)).to_dict()


# ------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wplab", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--replay", help="re-run the command recorded in a JSON document")
    sub = p.add_subparsers(dest="command")

    def surf(sp):
        sp.add_argument("--surface", required=True,
                        help='JSON, e.g. {"kind":"punctured_torus","l":1,"tau":0}')

    sp = sub.add_parser("surface", help="generators, traces and word counts")
    surf(sp)
    sp.add_argument("--words", type=int, help="enumerate reduced words to this length")

    for name, hlp in (("pairing", "gradient pairing series"), ("cosine", "crossing cosine sum")):
        sp = sub.add_parser(name, help=hlp)
        surf(sp)
        sp.add_argument("--alpha", default="A")
        sp.add_argument("--beta", default="A" if name == "pairing" else "B")
        sp.add_argument("--depth", type=int, default=10)
        if name == "cosine":
            sp.add_argument("--h", type=float, default=1e-4, help="twist finite-difference step")

    sp = sub.add_parser("pseries", help="exponential-distance series at a basepoint")
    surf(sp)
    sp.add_argument("--alpha", default="A")
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--y", type=float, default=1.0)
    sp.add_argument("--depth", type=int, default=12)

    sp = sub.add_parser("strip", help="variations of length for a Fourier datum")
    sp.add_argument("--phi", required=True, help='JSON {"l": 1, "coeffs": [[n, re, im], ...]}')
    sp.add_argument("--oracle", action="store_true", help="also run the quadrature oracle")
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--rule", choices=("gauss", "trapezoid"), default="gauss")

    sp = sub.add_parser("model", help="model metric computations",
                        description="geodesic prints CSV with columns t,r,theta,rdot,thetadot,E,L")
    msub = sp.add_subparsers(dest="what", required=True)
    m = msub.add_parser("geodesic", help="RK4 trajectory as CSV (t,r,theta,rdot,thetadot,E,L)")
    for f, d in (("r0", 1.0), ("theta0", 0.0), ("rdot", -0.5), ("thetadot", 0.0), ("T", 1.0), ("h", 1e-4)):
        m.add_argument(f"--{f}", type=float, default=d)
    m.add_argument("--every", type=int, default=100, help="emit every n-th step")
    m = msub.add_parser("distance", help="distance between r,theta points or 'stratum'")
    m.add_argument("--p", required=True)
    m.add_argument("--q", required=True)
    m = msub.add_parser("angle", help="comparison angle of two radial rays from the stratum")
    m.add_argument("--dtheta", type=float, default=math.pi)
    m.add_argument("--t", type=float, default=1e-2)
    for name in ("lambda", "kahler", "curvature"):
        m = msub.add_parser(name)
        m.add_argument("--r", type=float, default=1.0)

    sp = sub.add_parser(
        "sweep", help="parameter sweep as CSV",
        description="columns: " + "; ".join(f"{k}: {','.join(v)}" for k, v in SWEEP_COLUMNS.items()))
    sp.add_argument("--target", choices=sorted(SWEEP_COLUMNS), required=True)
    sp.add_argument("--l", help="length grid from:to:count[:log]")
    sp.add_argument("--t", help="time grid for model-angle")
    sp.add_argument("--tau", type=float, default=0.0)
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--alpha", default="A")
    sp.add_argument("--beta", default="B")
    sp.add_argument("--dtheta", type=float, default=math.pi)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("fit", help="log-log slope of CSV read from stdin",
                        description="default window is the smallest-x half of the rows")
    sp.add_argument("--x", help="x column (default: first)")
    sp.add_argument("--y", help="y column (default: second)")
    sp.add_argument("--window", help="row range lo:hi after sorting by x")
    return p


def _strip_io_flags(argv: list[str]) -> list[str]:
    out, skip = [], False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in ("--out", "--replay"):
            skip = True
            continue
        if tok.startswith("--out=") or tok.startswith("--replay="):
            continue
        out.append(tok)
    return out


def execute(argv: list[str], stdin=None) -> tuple[str, dict | None]:
    """Run ``argv`` and return (text output, JSON document or None)."""
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command is None:
        parser.error("a subcommand is required")
    stdin = sys.stdin if stdin is None else stdin
    buf = io.StringIO()
    if a.command == "sweep":
        cmd_sweep(a, buf)
        return buf.getvalue(), None
    if a.command == "fit":
        result = cmd_fit(a, stdin)
    else:
        result = globals()[f"cmd_{a.command}"](a)
    if isinstance(result, model.Trajectory):
        write_csv(("t", "r", "theta", "rdot", "thetadot", "E", "L"), result.rows(), buf)
        return buf.getvalue(), None
    doc = {"command": a.command, "argv": argv, "result": result}
    return dumps(doc) + "\n", doc


def run(argv: Sequence[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        pre.add_argument("--out")
        pre.add_argument("--replay")
        io_args, _ = pre.parse_known_args(argv)
        if io_args.replay:
            with open(io_args.replay) as fh:
                recorded = json.load(fh)
            text, _ = execute(list(recorded["argv"]), stdin)
            if text != dumps(recorded) + "\n":
                stderr.write("replay differs from the recorded result\n")
                _emit(text, io_args.out, stdout)
                return 3
        else:
            text, _ = execute(_strip_io_flags(argv), stdin)
        _emit(text, io_args.out, stdout)
        return 0
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    except WPLabError as exc:
        stderr.write(f"{type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except BrokenPipeError:
        # downstream reader closed early, as with `| head`
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        stderr.write(f"input error: {exc}\n")
        return 2


def _emit(text: str, path: str | None, stdout) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
