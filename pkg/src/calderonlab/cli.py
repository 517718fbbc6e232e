"""Command line front end: ``calderonlab <subcommand> [flags]``.

Every subcommand writes one table (CSV by default, or JSON with ``"schema": 1``)
to ``--out`` or stdout, except ``report`` which writes ``aggregate.json`` and
``instances.csv`` into the ``--out`` directory.

Exit status: 0 on success, 1 on malformed input, 2 when a check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .admissible import (
    AdmissibleFunction,
    comparables_constants,
    comparables_ratio,
    inf_bound,
    inf_bound_constant,
    lambda_threshold,
    scaling_bound_holds,
    slope_bounds,
    sup_bound,
)
from .calderon import CalderonParams, ak_norm, p_op, q_op
from .harness import (
    corpus_run,
    default_t_grid,
    parse_preset,
    reference_config,
    verify_instance,
    write_report,
)
from .operators import HardyLittlewood, Identity, Sparse, sparse_generate
from .stepfn import GridFunction, StepFunction, rearrange
from .weights import (
    bR_constant,
    bstar_constant,
    decay_bound_check,
    parse_weight,
    wbar,
)


class InputError(Exception):
    """Malformed command line input (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def _parse_number(text):
    try:
        return float(text)
    except ValueError:
        raise InputError(f"not a number: {text!r}") from None


def _fields(rest, what):
    fields = {}
    for part in filter(None, (p.strip() for p in rest.split(";"))):
        key, eq, val = part.partition("=")
        if not eq:
            raise InputError(f"malformed {what} field {part!r}; expected key=value")
        fields[key.strip()] = val.strip()
    return fields


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def parse_function(text):
    """``grid:left=L;width=W;values=v1,...`` or ``step:breaks=0,b1,...;values=v1,...``."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise InputError(f"function spec {text!r} lacks a 'grid:' or 'step:' prefix")
    fields = _fields(rest, "function")
    kind = kind.strip()
    if kind == "grid":
        if not {"width", "values"} <= set(fields) or set(fields) - {"left", "width", "values"}:
            raise InputError("grid function takes left=L;width=W;values=...")
        return GridFunction(float(fields.get("left", 0.0)), float(fields["width"]), _floats(fields["values"]))
    if kind == "step":
        if set(fields) != {"breaks", "values"}:
            raise InputError("step function takes breaks=0,...;values=...")
        return StepFunction(_floats(fields["breaks"]), _floats(fields["values"]))
    raise InputError(f"unknown function kind {kind!r}")


def _params(args):
    if args.preset:
        return parse_preset(args.preset).params
    phi = AdmissibleFunction.parse(args.phi) if args.phi else AdmissibleFunction(1.0)
    return CalderonParams(_parse_number(args.q1), _parse_number(args.q2), phi)


def _t_grid(f, args):
    if args.t:
        t = np.array(sorted({_parse_number(v) for v in args.t.split(",")}))
        if np.any(t <= 0):
            raise InputError("t values must be positive")
        return t
    return default_t_grid(f, args.points)


class Table:
    def __init__(self, columns, rows=None, extra=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows or []]
        self.extra = dict(extra or {})
        self.failed = False

    def render(self, fmt, command):
        if fmt == "json":
            doc = {"schema": 1, "command": command, "columns": self.columns,
                   "rows": [[_json_value(v) for v in r] for r in self.rows]}
            doc.update({k: _json_value(v) for k, v in self.extra.items()})
            return json.dumps(doc, indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, float, np.floating, np.integer)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(_fmt(v))
    return v


# ----------------------------------------------------------------------------
# subcommands


def cmd_rearrange(args):
    f = parse_function(args.function)
    fstar = rearrange(f)
    t = np.union1d(_t_grid(f, args), fstar.breakpoints[1:])
    table = Table(["t", "fstar", "fstarstar"])
    for ti, a, b in zip(t, fstar(t), fstar.integral(t) / t):
        table.rows.append([ti, a, b])
    table.extra["pieces"] = [[float(x) for x in fstar.lengths], [float(v) for v in fstar.values]]
    return table


def cmd_weights(args):
    w = parse_weight(args.weight)
    p = _parse_number(args.p)
    table = Table(["quantity", "parameter", "value"])
    table.rows.append(["B_R", p, bR_constant(w, p)])
    qs = [2.0, 4.0, math.inf]
    if args.q is not None:
        q = _parse_number(args.q)
        if not q > 0:
            raise InputError("--q must be positive")
        qs = sorted(set(qs) | {q})
    for q in qs:
        table.rows.append(["B_star", q, bstar_constant(w, q)])
    for lam in np.geomspace(1e-3, 0.9, 16):
        table.rows.append(["wbar", lam, wbar(w, lam)])
    return table


def cmd_calderon(args):
    params = _params(args)
    f = parse_function(args.function) if args.function else GridFunction(0.0, 1.0, [1.0])
    fstar = rearrange(f)
    t = _t_grid(f, args)
    P = p_op(params.q1, fstar, t)
    Q = q_op(params.q2, params.phi, fstar, t)
    columns = ["t", "p", "q", "s"]
    ak = None
    if args.weight:
        ak = ak_norm(params, parse_weight(args.weight))
        columns.append("ak")
    table = Table(columns, extra={"params": str(params)})
    for row in zip(t, P, Q, P + Q):
        table.rows.append(list(row) + ([ak] if ak is not None else []))
    if ak is not None:
        table.extra["ak"] = ak
    return table


def _lemma_rows(phi, weights, rng, samples):
    rows = []

    def add(lemma, parameter, margin):
        rows.append([lemma, parameter, margin, margin >= 0])

    b = slope_bounds(phi)
    add("slope_bounds", str(phi), b.beta_hi - b.gamma_lo)

    c = rng.uniform(0.1, 10.0, samples)
    x = rng.uniform(1.0, 1e4, samples)
    keep = c * x >= 1
    ok = scaling_bound_holds(phi, c[keep], x[keep])
    add("scaling_bound", f"{int(keep.sum())} samples", 0.0 if ok.all() else -1.0)

    for q in (2.0, math.inf):
        lo, hi = comparables_constants(phi, q)
        worst = math.inf
        for r in np.geomspace(1.0 + 1e-3, 1e8, samples):
            lhs, rhs = comparables_ratio(phi, q, r)
            ratio = lhs / rhs
            worst = min(worst, ratio - lo * (1 - 1e-9), hi * (1 + 1e-9) - ratio)
        add("comparables", f"q={_fmt(q)}", worst)
        lam = lambda_threshold(phi, q)
        add("lambda_threshold", f"q={_fmt(q)}", math.log(1e6 / lam))

    worst = math.inf
    for _ in range(samples):
        xv = rng.uniform(-20.0, 20.0)
        mu = rng.uniform(0.05, 1.0)
        num, bound = inf_bound(phi, xv, mu)
        worst = min(worst, inf_bound_constant(phi, mu) * bound * (1 + 1e-9) - num)
    add("inf_bound", f"{samples} samples", worst)

    worst = math.inf
    for yv in rng.uniform(1.0, 50.0, samples):
        num, bound = sup_bound(phi, yv)
        worst = min(worst, bound * (1 + 1e-9) - num)
    add("sup_bound", f"{samples} samples", worst)

    for w in weights:
        for q in (2.0, 4.0, math.inf):
            if not math.isfinite(bstar_constant(w, q)):
                continue
            rep = decay_bound_check(w, q)
            # worst_margin is the largest wbar/bound ratio
            add("decay_bound", f"{w} q={_fmt(q)}", 1.0 - rep.worst_margin)
    return rows


def cmd_lemmas(args):
    phi = AdmissibleFunction.parse(args.phi) if args.phi else AdmissibleFunction(1.0)
    weights = [parse_weight(args.weight)] if args.weight else [parse_weight(f"power:tau={t}") for t in (0.125, 0.25, 0.5, 1)]
    rng = np.random.default_rng(args.seed)
    table = Table(["lemma", "parameter", "margin", "pass"], _lemma_rows(phi, weights, rng, args.samples))
    table.failed = not all(r[3] for r in table.rows)
    return table


def cmd_verify(args):
    params = _params(args)
    f = parse_function(args.function) if args.function else GridFunction(0.0, 1.0, [1.0])
    if not isinstance(f, GridFunction):
        raise InputError("verify needs a grid function")
    if args.operator == "identity":
        T = Identity()
    elif args.operator == "hl_maximal":
        T = HardyLittlewood()
    else:
        family = sparse_generate(args.depth, args.eta, args.seed)
        T = Sparse(family)
    rep = verify_instance(T, f, params, _t_grid(f, args))
    table = Table(["t", "lhs", "rhs", "ratio"], zip(rep.t_grid, rep.lhs, rep.rhs, rep.ratio))
    table.extra.update(operator=rep.operator_id, params=str(params), sup_ratio=rep.sup_ratio)
    return table


def cmd_report(args):
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
    else:
        config = reference_config()
    if args.seed is not None:
        config["seed"] = args.seed
    aggregate, reports = corpus_run(config, threads=args.threads)
    write_report(aggregate, reports, args.out or "report")
    return None


# ----------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="calderonlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, params=False, grid=False):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if params:
            p.add_argument("--preset", help="e.g. fefferman-stein, cz-power-k:k=2, multiplier-class:gamma=3;beta=1")
            p.add_argument("--q1", default="1")
            p.add_argument("--q2", default="inf")
            p.add_argument("--phi", help='admissible function "gamma=G;betas=B1,B2"')
        if grid:
            p.add_argument("--t", help="comma separated t values (default: log grid)")
            p.add_argument("--points", type=int, default=64)

    p = sub.add_parser("rearrange", help="decreasing rearrangement table (t, f*, f**)")
    p.add_argument("--function", required=True)
    common(p, grid=True)

    p = sub.add_parser("weights", help="B-constants and the W-bar envelope of a weight")
    p.add_argument("--weight", required=True)
    p.add_argument("--p", default="1")
    p.add_argument("--q", default=None)
    common(p)

    p = sub.add_parser("calderon", help="P, Q, S of f* on a t grid, and A_k for --weight")
    p.add_argument("--function")
    p.add_argument("--weight")
    common(p, params=True, grid=True)

    p = sub.add_parser("lemmas", help="margin table of the admissible and weight lemmas")
    p.add_argument("--phi")
    p.add_argument("--weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=40)
    common(p)

    p = sub.add_parser("verify", help="compare (Tf)* with S(f*) for one instance")
    p.add_argument("--operator", choices=("identity", "hl_maximal", "sparse"), default="hl_maximal")
    p.add_argument("--function")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--eta", type=float, default=0.5)
    common(p, params=True, grid=True)

    p = sub.add_parser("report", help="run a corpus and write aggregate.json and instances.csv")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory (default: ./report)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


COMMANDS = {
    "rearrange": cmd_rearrange,
    "weights": cmd_weights,
    "calderon": cmd_calderon,
    "lemmas": cmd_lemmas,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        table = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"calderonlab: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        print(f"calderonlab: error: {exc}", file=sys.stderr)
        return 1
    if table is None:
        return 0
    text = table.render(args.format, args.command)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 2 if table.failed else 0


if __name__ == "__main__":
    sys.exit(main())
