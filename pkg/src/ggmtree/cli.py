"""Command-line front end.

Every command writes CSV (default) or JSON to stdout.  Exit codes: 0 on
success, 2 for configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from . import boundary_law as bl
from . import ggm_layer as gl
from . import simplex_dynamics as sd
from . import thresholds as th
from .errors import ConfigError, GGMError, NumericalError
from .transfer_ops import (
    FuzzyOperator,
    TransferOperator,
    fold_frequency,
    fourier,
    fourier_direct,
    fuzzy,
    load_custom_table,
)
from .tree import FiniteSubtree

DEFAULT_TOL = 1e-12
TOL_ENV = "GGM_TREE_TOL"

_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_FUNCS = {
    name: getattr(math, name)
    for name in ("sqrt", "exp", "log", "cosh", "sinh", "tanh", "acosh", "asinh", "atanh", "cos", "sin", "acos")
}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def parse_number(text) -> float:
    """Evaluate a numeric expression such as ``1536/(73*pi**2)`` or ``acosh(4)``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError("unsupported expression")

    try:
        return float(ev(ast.parse(str(text).strip(), mode="eval")))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, OverflowError) as exc:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from exc


def parse_vector(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(t) for t in text]
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ConfigError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise ConfigError(f"{TOL_ENV} must be positive")
    return tol


# ---------------------------------------------------------------- models


def make_operator(args) -> Optional[TransferOperator]:
    model = args.model
    if model == "sos":
        return TransferOperator.sos(_need(args, "beta"))
    if model == "invsq":
        return TransferOperator.inverse_square(_need(args, "a"))
    if model == "custom":
        if not getattr(args, "table", None):
            raise ConfigError("--model custom needs --table FILE")
        return load_custom_table(args.table)
    if model == "fuzzy":
        return None
    raise ConfigError(f"unknown model {model!r}")


def _need(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise ConfigError(f"--model {args.model} needs --{name}")
    return value


def make_fuzzy(args, op: Optional[TransferOperator], q: Optional[int] = None) -> FuzzyOperator:
    if op is None:
        if not getattr(args, "values", None):
            raise ConfigError("--model fuzzy needs --values v0,v1,...")
        fz = FuzzyOperator.from_values(args.values)
        if q is not None and fz.q != q:
            raise ConfigError(f"--values has {fz.q} entries but q={q}")
        return fz
    q = q if q is not None else args.q
    if q is None:
        raise ConfigError("--q is required")
    return fuzzy(op, q)


def _require_operator(args, op):
    if op is None:
        raise ConfigError(f"this command needs a transfer operator, not --model {args.model}")
    return op


def _validate(args):
    d = getattr(args, "d", None)
    if d is not None and d < 2:
        raise ConfigError("--d must be at least 2")
    q = getattr(args, "q", None)
    if q is not None and q < 2:
        raise ConfigError("--q must be at least 2")


# ---------------------------------------------------------------- output


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in x)
    return x


def emit(out, fmt: str, header: Sequence[str], rows, doc=None):
    if fmt == "json":
        payload = doc if doc is not None else [dict(zip(header, r)) for r in rows]
        out.write(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# ---------------------------------------------------------------- commands


def cmd_spectrum(args, out):
    op = make_operator(args)
    fz = make_fuzzy(args, op)
    report = sd.spectrum_at_eq(fz, args.d, op)
    if args.figure:
        header = ["j", "k", "ratio", "threshold"]
        rows = [(e.j, 2 * math.pi * e.j / fz.q, report.fourier_ratio[e.j - 1], 1.0 / args.d) for e in report.eigenvalues]
        emit(out, args.format, header, rows)
        return
    header = ["j", "k", "ratio", "eigenvalue", "multiplicity", "class"]
    rows = [
        (e.j, 2 * math.pi * e.j / fz.q, report.fourier_ratio[e.j - 1], e.value, e.multiplicity, report.classify(e.j))
        for e in report.eigenvalues
    ]
    emit(out, args.format, header, rows, doc=report.to_dict() if args.format == "json" else None)


def _threshold_summary(model: str, params: dict, d: int, q_max: int) -> dict:
    op = _operator_from(model, params)
    rep = th.threshold_report(op, d, q_max)
    return rep.to_dict()


def _operator_from(model: str, params: dict) -> TransferOperator:
    if model == "sos":
        return TransferOperator.sos(params["beta"])
    if model == "invsq":
        return TransferOperator.inverse_square(params["a"])
    return load_custom_table(params["table"])


def _parse_grid(items: Sequence[str]):
    axes = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"grid option {item!r} must look like name=start:stop:step or name=v1,v2")
        name, rng = item.split("=", 1)
        if ":" in rng:
            start, stop, step = (parse_number(t) for t in rng.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(n)]
        else:
            values = parse_vector(rng)
        axes.append((name.strip(), values))
    return axes


def cmd_thresholds(args, out):
    base = {}
    if args.model == "sos":
        base["beta"] = args.beta
    elif args.model == "invsq":
        base["a"] = args.a
    elif args.model == "custom":
        base["table"] = args.table
    else:
        raise ConfigError("thresholds needs --model sos, invsq or custom")
    axes = _parse_grid(args.grid or [])
    tasks = []
    for combo in itertools.product(*[v for _, v in axes]) if axes else [()]:
        params = dict(base)
        d = args.d
        for (name, _), value in zip(axes, combo):
            if name == "d":
                d = int(value)
            else:
                params[name] = value
        if any(v is None for v in params.values()):
            raise ConfigError(f"missing model parameter for --model {args.model}")
        if d is None or d < 2:
            raise ConfigError("--d must be at least 2")
        tasks.append((args.model, params, d, args.q_max))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_threshold_summary, *zip(*tasks)))
    else:
        results = [_threshold_summary(*t) for t in tasks]
    if args.format == "json":
        emit(out, "json", [], [], doc=results if axes else results[0])
        return
    if args.per_q:
        header = ["model", "params", "d", "q", "max_modulus", "unstable_dim", "neutral", "exists", "dobrushin_unique"]
        rows = []
        for r in results:
            uniq = {x["q"]: x["unique"] for x in r["dobrushin_unique_at"]}
            for row in r["per_q"]:
                rows.append(
                    (
                        r["model"],
                        _params_text(r["params"]),
                        r["d"],
                        row["q"],
                        row["max_modulus"],
                        row["unstable_dim"],
                        row["neutral"],
                        int(row["exists"]),
                        "" if uniq.get(row["q"]) is None else int(uniq[row["q"]]),
                    )
                )
        emit(out, "csv", header, rows)
        return
    header = ["model", "params", "d", "region_all_q", "minimal_period", "closed_form", "scan_minimal_q", "scan_eventual_q", "notes"]
    rows = [
        (
            r["model"],
            _params_text(r["params"]),
            r["d"],
            int(r["region_all_q"]),
            r["minimal_period"],
            "" if r["closed_form"] is None else r["closed_form"],
            "" if r["scan_minimal_q"] is None else r["scan_minimal_q"],
            "" if r["scan_eventual_q"] is None else r["scan_eventual_q"],
            "; ".join(r["notes"]),
        )
        for r in results
    ]
    emit(out, "csv", header, rows)


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()) if v is not None)


def _seed_point(args, fz: FuzzyOperator, report):
    """Seed on the unstable chart from --u, --start or --eps/--coeffs."""
    if getattr(args, "u", None):
        return np.asarray(args.u, dtype=float), None
    eps = args.eps
    if getattr(args, "start", None) is not None:
        if fz.q != 2:
            raise ConfigError("--start only applies to q = 2")
        eps = (args.start - 0.5) * math.sqrt(2.0)
    if eps == 0:
        return sd.equidistribution(fz.q), None
    modes = sd.unstable_subspace(report)
    coeffs = _coeffs(args, len(modes))
    if eps < 0:
        eps, coeffs = -eps, -coeffs
    return sd.seed_on_manifold(report, modes, eps, coeffs), (eps, coeffs)


def _coeffs(args, n: int) -> np.ndarray:
    if getattr(args, "coeffs", None):
        c = np.asarray(args.coeffs, dtype=float)
        if c.size != n:
            raise ConfigError(f"--coeffs needs {n} entries (unstable dimension)")
        norm = np.linalg.norm(c)
        if norm == 0:
            raise ConfigError("--coeffs must not vanish")
        return c / norm
    c = np.zeros(n)
    c[0] = 1.0
    return c


def _orbit(args, fz, report, n_steps, tol):
    seed, chart = _seed_point(args, fz, report)
    method = getattr(args, "method", "auto")
    if method == "auto":
        method = "newton" if chart is None or report.unstable_dim == fz.q - 1 else "manifold"
    if method == "manifold":
        if chart is None:
            raise ConfigError("--method manifold needs an eps seed on the unstable chart")
        return sd.manifold_orbit(fz, args.d, report, chart[0], chart[1], n_steps)
    return sd.backward_orbit(fz, args.d, seed, n_steps, tol)


def _law(args, fz, tol, depth):
    report = sd.spectrum_at_eq(fz, args.d)
    if getattr(args, "u", None) is None and args.eps == 0 and getattr(args, "start", None) is None:
        return bl.free_law(fz.q, args.d, depth), None
    orbit = _orbit(args, fz, report, depth - 1, tol)
    return bl.build(orbit, args.d, fz, depth), orbit


def cmd_trajectory(args, out):
    tol = args.tol
    op = make_operator(args)
    fz = make_fuzzy(args, op)
    law, orbit = _law(args, fz, tol, args.depth)
    eq = sd.equidistribution(fz.q)
    points = orbit.points if orbit is not None else [eq] * law.depth
    if args.figure:
        if fz.q != 2:
            raise ConfigError("--figure for trajectory draws the q = 2 map")
        rows = []
        for x in np.linspace(0.0, 1.0, 201)[1:-1]:
            rows.append(("graph", float(x), float(sd.apply_S(fz, args.d, np.array([x, 1 - x]))[0])))
        for p1, p0 in zip(points[1 : args.steps + 1], points[: args.steps]):
            rows.append(("orbit", float(p1[0]), float(p0[0])))
        emit(out, args.format, ["series", "x", "y"], rows)
        return
    conv = bl.outbound_convergence(law)
    verdict = "PASS" if conv.monotone_tail and conv.distances[-1] < conv.distances[0] + 1e-15 else "FAIL"
    header = ["n", "orbit_distance", "inbound_distance", "outbound_distance", "orbit", "inbound", "outbound"]
    rows = []
    for n in range(law.depth):
        p = points[n]
        inbound = law.inbound[n + 1]
        rows.append(
            (
                n,
                float(np.linalg.norm(p - eq)),
                float(np.linalg.norm(inbound - eq)),
                float(conv.distances[n]),
                p,
                inbound,
                law.outbound[n],
            )
        )
    doc = None
    if args.format == "json":
        doc = {
            "law": law.to_dict(),
            "orbit_residuals": orbit.residuals if orbit is not None else [],
            "orbit_complete": orbit.complete if orbit is not None else True,
            "outbound_distances": conv.distances,
            "outbound_rate": conv.rate,
            "convergence": verdict,
        }
    emit(out, args.format, header, rows, doc)
    sys.stderr.write(f"convergence: {verdict}\n")


def _ggm_setup(args, need_op=True):
    op = make_operator(args)
    if need_op:
        _require_operator(args, op)
    fz = make_fuzzy(args, op)
    return op, fz


def cmd_ggm_marginal(args, out):
    op, fz = _ggm_setup(args)
    law, _ = _law(args, fz, args.tol, max(args.depth, args.edge_depth + 2))
    em = gl.edge_marginal(op, fz, law.away_from_root(args.edge_depth), law.toward_root(args.edge_depth + 1), args.tail_tol)
    rows = [(int(j), float(p)) for j, p in zip(em.support, em.probs) if abs(j) <= args.show]
    emit(out, args.format, ["j", "prob"], rows, doc=em.to_dict() if args.format == "json" else None)


def cmd_ggm_sample(args, out):
    op, fz = _ggm_setup(args)
    sub = FiniteSubtree.ball(args.d, args.radius)
    law, _ = _law(args, fz, args.tol, max(args.depth, sub.max_depth))
    batch = gl.sample(op, fz, law, sub, args.n, args.seed, args.tail_tol)
    if args.format == "json":
        hist = {}
        for i, e in enumerate(sub.edges):
            vals, counts = np.unique(batch.increments[:, i], return_counts=True)
            hist[gl._name(e.parent) + "->" + gl._name(e.child)] = {int(v): int(c) for v, c in zip(vals, counts)}
        emit(out, "json", [], [], doc={"seed": args.seed, "n": args.n, "histograms": hist})
        return
    out.write(batch.to_csv())


def cmd_ggm_ti(args, out):
    op = make_operator(args)
    fz = make_fuzzy(args, op)
    report = sd.spectrum_at_eq(fz, args.d)
    if getattr(args, "u", None) is None and args.eps == 0:
        u = sd.equidistribution(fz.q)
    else:
        u, _ = _seed_point(args, fz, report)
    score = gl.ti_scalar(fz, u, args.d)
    verdict = "NOT-TI" if score.value > args.ti_tol else "INCONCLUSIVE"
    header = ["value", "shift", "verdict"]
    doc = {"value": score.value, "shift": score.shift, "inner_products": list(score.inner_products), "verdict": verdict}
    emit(out, args.format, header, [(score.value, score.shift, verdict)], doc if args.format == "json" else None)


def cmd_ggm_fingerprint(args, out):
    op = _require_operator(args, make_operator(args))
    s, t, d = args.s, args.t, args.d
    laws = []
    for period, eps in ((s, args.eps_s), (t, args.eps_t)):
        fz = fuzzy(op, period)
        if eps == 0:
            laws.append(bl.free_law(period, d, 8))
            continue
        report = sd.spectrum_at_eq(fz, d, op)
        coeffs = _coeffs(args, len(sd.unstable_subspace(report)))
        laws.append(bl.build(sd.manifold_orbit(fz, d, report, eps, coeffs, 7), d, fz, 8))
    res = gl.period_fingerprint(fuzzy(op, s * t), laws[0], laws[1])
    shift = "" if res.shift is None else res.shift
    doc = {
        "verdict": res.verdict,
        "shift": res.shift,
        "fingerprint_s": res.fingerprint_s,
        "fingerprint_t": res.fingerprint_t,
    }
    emit(out, args.format, ["verdict", "shift"], [(res.verdict, shift)], doc if args.format == "json" else None)


def cmd_ggm_deloc(args, out):
    op, fz = _ggm_setup(args)
    law, _ = _law(args, fz, args.tol, max(args.depth, args.n))
    rows = []
    for n in range(1, args.n + 1):
        dist = gl.path_increment_distribution(op, fz, law, n, args.tail_tol)
        rows.append((n, dist.max_prob, dist.prob(0), dist.tail_mass))
    emit(out, args.format, ["n", "max_prob", "prob_zero", "tail_mass"], rows)


def cmd_table1(args, out):
    op = _require_operator(args, make_operator(args))
    if op.model not in ("sos", "invsq"):
        raise ConfigError("table1 covers --model sos and --model invsq")
    rows = []
    for q in range(2, args.q_max + 1):
        closed = fuzzy(op, q, method="closed").values
        direct = fuzzy(op, q, method="direct").values
        for r in range(q):
            rows.append(("fuzzy", q, r, float(closed[r]), float(direct[r]), float(abs(closed[r] - direct[r]))))
    for i in range(args.n_k + 1):
        k = math.pi * i / args.n_k
        c = fourier(op, k)
        dsum = fourier_direct(op, k, args.tol * 100)
        rows.append(("fourier", "", k, c, dsum, abs(c - dsum)))
    emit(out, args.format, ["kind", "q", "index", "closed_form", "direct_sum", "abs_diff"], rows)


# ---------------------------------------------------------------- parser


def _add_model(p, need_q=True):
    p.add_argument("--model", choices=["sos", "invsq", "custom", "fuzzy"], default="sos")
    p.add_argument("--beta", type=parse_number, help="SOS inverse temperature")
    p.add_argument("--a", type=parse_number, help="inverse-square coupling")
    p.add_argument("--table", help="custom table file ('offset value' lines, optional tail header)")
    p.add_argument("--values", type=parse_vector, help="fuzzy operator values v0,v1,... (--model fuzzy)")
    p.add_argument("--d", type=int, default=2, help="tree parameter (each vertex has d+1 neighbours)")
    if need_q:
        p.add_argument("--q", type=int, help="height period")


def _add_seed(p):
    p.add_argument("--eps", type=parse_number, default=0.0, help="distance of the seed from eq on the unstable chart")
    p.add_argument("--coeffs", type=parse_vector, help="unstable-mode coefficients (normalized)")
    p.add_argument("--u", type=parse_vector, help="explicit seed point (overrides --eps)")
    p.add_argument("--depth", type=int, default=bl.DEFAULT_DEPTH, help="boundary-law depth")
    p.add_argument("--method", choices=["auto", "newton", "manifold"], default="auto")


class _Subparsers:
    """Adds the shared output options to every subcommand."""

    def __init__(self, action, common):
        self.action, self.common = action, common

    def add_parser(self, name, **kwargs):
        return self.action.add_parser(name, parents=[self.common], **kwargs)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default=argparse.SUPPRESS)
    common.add_argument("--tol", type=parse_number, default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="ggmtree", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--config", help="JSON file of option defaults; flags override it")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for parameter sweeps")
    parser.add_argument("--tol", type=parse_number, default=None, help=f"solver tolerance (default ${TOL_ENV} or 1e-12)")
    sub = _Subparsers(parser.add_subparsers(dest="command", required=True), common)

    p = sub.add_parser(
        "spectrum",
        help="eigenvalues of the linearization at eq",
        description="Columns: j, k, ratio = Qhat(k)/Qhat(0), eigenvalue = d*ratio, multiplicity, class. "
        "With --figure: j, k, ratio, threshold = 1/d (one bar per j = 1..q/2).",
    )
    _add_model(p)
    p.add_argument("--figure", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser(
        "thresholds",
        help="existence regions and minimal periods",
        description="Columns: model, params, d, region_all_q, minimal_period, closed_form, scan_minimal_q, "
        "scan_eventual_q, notes.  With --per-q: one row per (model, params, d, q).",
    )
    _add_model(p, need_q=False)
    p.add_argument("--q-max", type=int, default=64)
    p.add_argument("--grid", action="append", help="sweep, e.g. beta=0.3:1.5:0.3 or d=2,3,4 (repeatable)")
    p.add_argument("--per-q", action="store_true")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser(
        "trajectory",
        help="backward orbit and boundary law",
        description="Columns: n, orbit_distance, inbound_distance, outbound_distance, orbit, inbound, outbound "
        "(vectors space separated).  With --figure (q = 2): series, x, y where series 'graph' samples "
        "x -> S(x)[0] and 'orbit' lists the steps (points[k+1][0], points[k][0]).",
    )
    _add_model(p)
    _add_seed(p)
    p.add_argument("--start", type=parse_number, help="q = 2 only: first component of the seed")
    p.add_argument("--steps", type=int, default=3, help="orbit steps drawn with --figure")
    p.add_argument("--figure", action="store_true")
    p.set_defaults(func=cmd_trajectory)

    g = sub.add_parser("ggm", help="gradient Gibbs measure computations")
    gsub = _Subparsers(g.add_subparsers(dest="ggm_command", required=True), common)
    commands = [
        ("marginal", cmd_ggm_marginal, "edge marginal (columns: j, prob)"),
        ("sample", cmd_ggm_sample, "samples on a ball (columns: sample, parent, child, increment)"),
        ("ti-test", cmd_ggm_ti, "translation-invariance detector (columns: value, shift, verdict)"),
        ("fingerprint", cmd_ggm_fingerprint, "coprime-period identifiability (columns: verdict, shift)"),
        ("deloc", cmd_ggm_deloc, "path increment point masses (columns: n, max_prob, prob_zero, tail_mass)"),
    ]
    for name, func, desc in commands:
        p = gsub.add_parser(name, help=desc, description=desc)
        _add_model(p)
        _add_seed(p)
        p.add_argument("--tail-tol", type=parse_number, default=gl.DEFAULT_TAIL_TOL)
        p.set_defaults(func=func)
        if name == "marginal":
            p.add_argument("--edge-depth", type=int, default=0, help="depth of the edge's tail vertex")
            p.add_argument("--show", type=int, default=10, help="largest |j| printed in CSV")
        elif name == "sample":
            p.add_argument("--radius", type=int, default=1)
            p.add_argument("--n", type=int, default=10)
            p.add_argument("--seed", type=int, default=0)
        elif name == "ti-test":
            p.add_argument("--ti-tol", type=parse_number, default=1e-12)
        elif name == "fingerprint":
            p.add_argument("--s", type=int, default=2)
            p.add_argument("--t", type=int, default=3)
            p.add_argument("--eps-s", type=parse_number, default=0.05)
            p.add_argument("--eps-t", type=parse_number, default=0.0)
        elif name == "deloc":
            p.add_argument("--n", type=int, default=12, help="largest path length")

    p = sub.add_parser(
        "table1",
        help="closed forms vs direct sums",
        description="Columns: kind (fuzzy|fourier), q, index (class r or frequency k), closed_form, direct_sum, abs_diff.",
    )
    _add_model(p, need_q=False)
    p.add_argument("--q-max", type=int, default=16)
    p.add_argument("--n-k", type=int, default=8, help="Fourier rows at k = i*pi/n_k")
    p.set_defaults(func=cmd_table1)
    return parser


def _all_parsers(parser):
    yield parser
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                yield from _all_parsers(child)


def _apply_config(parser, path):
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config file must hold a JSON object")
    config = {k.replace("-", "_"): v for k, v in config.items()}
    for p in _all_parsers(parser):
        known = {a.dest: a for a in p._actions}
        values = {}
        for k, v in config.items():
            if k in known and k not in ("command", "ggm_command", "func"):
                action = known[k]
                values[k] = action.type(v) if action.type and isinstance(v, (str, int, float)) else v
        p.set_defaults(**values)


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(parser, known.config)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        if args.tol is None:
            args.tol = default_tol()
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        _validate(args)
        buf = io.StringIO()
        args.func(args, buf)
        out.write(buf.getvalue())
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except GGMError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
