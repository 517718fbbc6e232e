"""Pointwise estimates ``(Tf)*(t) <= C S(f*)(t)`` checked on concrete operators.

Presets map each operator class to its ``(q1, q2, phi)`` triple. Empirical
constants are recorded, never asserted, so corpus growth cannot weaken a
threshold silently; thresholds live in the acceptance tests.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .admissible import AdmissibleFunction, inf_bound, inf_bound_constant, transform_tilde
from .calderon import CalderonParams, s_op
from .operators import HardyLittlewood, Identity, Sparse, sparse_generate
from .stepfn import GridFunction, rearrange

__all__ = [
    "Preset",
    "preset",
    "preset_params",
    "parse_preset",
    "VerificationReport",
    "default_t_grid",
    "verify_instance",
    "corpus_run",
    "reference_config",
    "write_report",
    "tau_envelope",
    "tau_envelope_closed_form",
    "tau_envelope_constant",
    "PRESET_KINDS",
]

PRESET_KINDS = (
    "fefferman-stein",
    "sparse",
    "cz-power-k",
    "bochner-riesz-rough",
    "multiplier-m7",
    "multiplier-class",
)


@dataclass(frozen=True)
class Preset:
    """``(q1, q2, phi)`` for one operator class.

    ``q_log_exponent`` is the power of ``1 + log(s/t)`` multiplying ``f*(s)``
    in the conjugate term; ``tilde`` is the modified function when the
    estimate comes from an ``L^{p0}`` hypothesis.
    """

    kind: str
    params: CalderonParams
    q_log_exponent: float
    tilde: object = None


def _log_exponent(params):
    gamma = params.phi.gamma
    return gamma - 1.0 if math.isinf(params.q2) else gamma


def preset(kind, *, k=1, gamma=None, beta=None):
    if kind in ("fefferman-stein", "sparse"):
        params = CalderonParams(1, math.inf, AdmissibleFunction(1.0))
        return Preset(kind, params, _log_exponent(params))
    if kind == "cz-power-k":
        k = int(k)
        if k < 1:
            raise ValueError("cz-power-k needs k >= 1")
        params = CalderonParams(1, math.inf, AdmissibleFunction(float(k)))
        return Preset(kind, params, _log_exponent(params))
    if kind == "bochner-riesz-rough":
        params = CalderonParams(1, math.inf, AdmissibleFunction(2.0))
        return Preset(kind, params, _log_exponent(params))
    if kind == "multiplier-m7":
        # L^2 bound with constant ||u||_{A1}^7: p0 = 2, alpha = 1, phi = x^7,
        # so the conjugate term carries tilde(x) = x^6
        phi = AdmissibleFunction(7.0)
        params = CalderonParams(2, math.inf, phi)
        return Preset(kind, params, _log_exponent(params), transform_tilde(phi, 2, 1))
    if kind == "multiplier-class":
        if gamma is None or beta is None:
            raise ValueError("multiplier-class needs gamma and beta")
        gamma, beta = float(gamma), float(beta)
        if not (beta > 0 and gamma > 2 * beta):
            raise ValueError("multiplier-class needs beta > 0 and gamma > 2*beta")
        params = CalderonParams(2, 2 * gamma / (gamma - 2 * beta), AdmissibleFunction(10.0))
        return Preset(kind, params, _log_exponent(params))
    raise ValueError(f"unknown preset kind {kind!r}; expected one of {', '.join(PRESET_KINDS)}")


def parse_preset(text):
    """``"kind"`` or ``"kind:key=value;key=value"``, e.g. ``cz-power-k:k=2``."""
    kind, _, rest = text.strip().partition(":")
    kwargs = {}
    for item in filter(None, (s.strip() for s in rest.split(";"))):
        key, eq, value = item.partition("=")
        if not eq or key.strip() not in ("k", "gamma", "beta"):
            raise ValueError(f"bad preset parameter {item!r}")
        kwargs[key.strip()] = float(value)
    return preset(kind.strip(), **kwargs)


def preset_params(kind, **kwargs):
    return preset(kind, **kwargs).params


# ----------------------------------------------------------------------------
# single instances


@dataclass
class VerificationReport:
    operator_id: str
    function_id: str
    params: CalderonParams
    t_grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray = field(init=False)
    sup_ratio: float = field(init=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.lhs = np.asarray(self.lhs, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if not (self.t_grid.shape == self.lhs.shape == self.rhs.shape):
            raise ValueError("t_grid, lhs and rhs must have equal lengths")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = self.lhs / self.rhs
        ratio[(self.lhs == 0)] = 0.0
        ratio[(self.lhs > 0) & (self.rhs == 0)] = math.inf
        self.ratio = ratio
        self.sup_ratio = float(ratio.max()) if ratio.size else 0.0


def default_t_grid(f, points=256, span_decades=3.0):
    """Log-spaced grid over ``[|supp f| 10^-span, |supp f| 10^span]``."""
    supp = f.support_measure()
    if supp == 0:
        supp = f.width * max(f.n_cells, 1)
    return np.geomspace(supp * 10.0**-span_decades, supp * 10.0**span_decades, int(points))


def verify_instance(T, f, params, t_grid=None, *, function_id="f", metadata=None):
    t = default_t_grid(f) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t grid must be positive and increasing")
    lhs = np.asarray(T.rearranged(f, t), dtype=float)
    rhs = np.asarray(s_op(params, rearrange(f), t), dtype=float)
    return VerificationReport(T.name, function_id, params, t, lhs, rhs, metadata=dict(metadata or {}))


# ----------------------------------------------------------------------------
# corpora

_DEFAULT_PRESET = {"identity": "fefferman-stein", "hl_maximal": "fefferman-stein", "sparse": "sparse"}


def reference_config():
    text = resources.files("calderonlab").joinpath("configs/reference_corpus.json").read_text()
    return json.loads(text)


def _random_grid_function(rng, n_cells, left=0.0, length=1.0):
    values = rng.exponential(size=n_cells) * (rng.random(n_cells) < 0.7)
    if not values.any():
        values[rng.integers(n_cells)] = 1.0
    return GridFunction(left, length / n_cells, values)


def _plan(config):
    """Instance list ``(id, operator, index)`` in a fixed order."""
    ops = list(config.get("operators", []))
    counts = config.get("counts", {})
    plan = []
    for op in ops:
        if op not in _DEFAULT_PRESET:
            raise ValueError(f"unknown operator {op!r}")
        n = int(counts.get(op, 0) if isinstance(counts, dict) else counts)
        plan.extend((op, i) for i in range(n))
    return [(iid, op, i) for iid, (op, i) in enumerate(plan)]


def _run_instance(config, op, index, seed_seq):
    rng = np.random.default_rng(seed_seq)
    grid_cfg = config.get("t_grid", {})
    points = int(grid_cfg.get("points", 256))
    span = float(grid_cfg.get("span_decades", 3.0))
    presets = {**_DEFAULT_PRESET, **config.get("presets", {})}
    params = parse_preset(presets[op]).params
    meta = {"operator": op, "index": index}
    if op == "sparse":
        d_lo, d_hi = (int(d) for d in config.get("depth_range", (4, 8)))
        depth = d_lo + index % (d_hi - d_lo + 1)
        family = sparse_generate(depth, float(config.get("eta", 0.5)), int(rng.integers(2**63)))
        f = _random_grid_function(rng, 1 << depth)
        T = Sparse(family)
        meta.update(depth=depth, cubes=len(family), cells=f.n_cells)
    else:
        n_cells = int(config.get("cells", 64))
        f = _random_grid_function(rng, n_cells)
        T = Identity() if op == "identity" else HardyLittlewood()
        meta.update(cells=n_cells)
    t = default_t_grid(f, points, span)
    return verify_instance(T, f, params, t, function_id=f"{op}-{index}", metadata=meta)


def _thread_count(threads):
    if threads is None:
        threads = int(os.environ.get("CALDERONLAB_THREADS", "1") or 1)
    return max(1, int(threads))


def corpus_run(config, *, threads=None):
    """Run every instance of ``config``; returns ``(aggregate, reports)``.

    Instance seeds are spawned from ``config["seed"]`` in instance-id order,
    so results do not depend on scheduling. A failing instance is recorded
    with its error message and the run continues.
    """
    plan = _plan(config)
    seeds = np.random.SeedSequence(int(config.get("seed", 0))).spawn(len(plan))

    def job(item):
        iid, op, index = item
        try:
            return iid, _run_instance(config, op, index, seeds[iid]), None
        except Exception as exc:  # recorded, not raised
            return iid, None, f"{type(exc).__name__}: {exc}"

    n_threads = _thread_count(threads)
    if n_threads == 1 or len(plan) <= 1:
        results = [job(item) for item in plan]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(job, plan))
    results.sort(key=lambda r: r[0])

    instances = []
    reports = []
    for (iid, op, index), (_, rep, err) in zip(plan, results):
        row = {"id": iid, "operator": op, "index": index}
        if rep is None:
            row["error"] = err
        else:
            row.update(function_id=rep.function_id, params=str(rep.params),
                       sup_ratio=rep.sup_ratio, **{k: v for k, v in rep.metadata.items()
                                                   if k not in ("operator", "index")})
        instances.append(row)
        reports.append(rep)

    summary = {}
    for op in dict.fromkeys(op for _, op, _ in plan):
        rows = [r for r in instances if r["operator"] == op]
        ok = [r["sup_ratio"] for r in rows if "sup_ratio" in r]
        entry = {
            "count": len(rows),
            "failures": len(rows) - len(ok),
            "max_sup_ratio": max(ok) if ok else None,
            "median_sup_ratio": float(np.median(ok)) if ok else None,
        }
        if op == "sparse":
            by_depth = {}
            for r in rows:
                if "sup_ratio" in r:
                    key = str(r["depth"])
                    by_depth[key] = max(by_depth.get(key, 0.0), r["sup_ratio"])
            entry["max_sup_ratio_by_depth"] = dict(sorted(by_depth.items(), key=lambda kv: int(kv[0])))
        summary[op] = entry

    aggregate = {"schema": 1, "config": config, "operators": summary, "instances": instances}
    return aggregate, reports


def _fmt(x):
    return format(float(x), ".17g")


def instances_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "operator", "t", "lhs", "rhs", "ratio"])
    for iid, rep in enumerate(reports):
        if rep is None:
            continue
        for row in zip(rep.t_grid, rep.lhs, rep.rhs, rep.ratio):
            writer.writerow([iid, rep.operator_id, *map(_fmt, row)])
    return buf.getvalue()


def write_report(aggregate, reports, out_dir):
    """Write ``aggregate.json`` and ``instances.csv`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "aggregate.json"), "w") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "instances.csv"), "w") as fh:
        fh.write(instances_csv(reports))


# ----------------------------------------------------------------------------
# the tau-infimum envelope


def tau_envelope(E_measure, t, phi):
    """``inf_{0 < tau <= 1} phi(1/tau) (E/t)^tau``."""
    if not (E_measure > 0 and t > 0):
        raise ValueError("E_measure and t must be positive")
    numeric, _ = inf_bound(phi, math.log(E_measure / t), 1.0)
    return numeric


def tau_envelope_closed_form(E_measure, t, phi):
    """``E/t`` for ``t >= E`` and ``phi(1 + log(E/t))`` for ``t < E``."""
    if t >= E_measure:
        return E_measure / t
    return float(phi(1.0 + math.log(E_measure / t)))


def tau_envelope_constant(phi):
    """Constant ``K`` with ``tau_envelope <= K * closed form``."""
    return inf_bound_constant(phi, 1.0)
