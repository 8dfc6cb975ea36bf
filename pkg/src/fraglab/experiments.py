"""Experiment documents: validation, dispatch, reports, sweeps.

An experiment is a JSON object with a schema version, a kind, a params
object, and optionally an output path and a seed.  Validation is strict:
unknown fields anywhere are rejected rather than ignored, so a typo fails
loudly instead of silently running the default.  Reports echo the inputs
next to the results and are deterministic apart from the wall time field.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import benford, boxfrag, diophantine, orderstats, stick
from ._version import VERSION
from .errors import ConfigError

SCHEMA_VERSION = 1

KINDS = (
    "stick_exact",
    "stick_truncated",
    "stick_bruteforce",
    "box_mc",
    "analytic",
    "diophantine",
)


@dataclass(frozen=True)
class Experiment:
    kind: str
    params: dict
    output_path: str | None = None
    seed: int | None = None


def _reject_unknown(doc, allowed, where):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")


def _need(doc, key, where):
    if key not in doc:
        raise ConfigError(f"missing required field {key!r} in {where}")
    return doc[key]


def _number(value, key, where, integer=False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r} in {where} must be a number")
    if integer and not isinstance(value, int):
        raise ConfigError(f"field {key!r} in {where} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"field {key!r} in {where} must be >= {minimum}")
    return value


_PARAM_FIELDS = {
    "stick_exact": {"N", "p", "a", "b", "B", "budget"},
    "stick_bruteforce": {"N", "p", "a", "b", "B", "budget"},
    "stick_truncated": {"N", "p", "a", "b", "B", "epsilon", "delta"},
    "box_mc": {"m", "N", "B", "trials", "cut", "statistic"},
    "analytic": {
        "op", "m", "d", "y", "N", "C", "a", "b",
        "abs_tol", "rel_tol", "lower_cut", "scheme",
    },
    "diophantine": {"x", "q_max", "tol"},
}


def parse_experiment(doc):
    """Validate a config document into an Experiment.  Strict on fields."""
    if not isinstance(doc, dict):
        raise ConfigError("experiment document must be a JSON object")
    _reject_unknown(
        doc, {"schema_version", "kind", "params", "output_path", "seed"}, "experiment"
    )
    version = _need(doc, "schema_version", "experiment")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version!r}, this build speaks {SCHEMA_VERSION}"
        )
    kind = _need(doc, "kind", "experiment")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    params = _need(doc, "params", "experiment")
    if not isinstance(params, dict):
        raise ConfigError("params must be a JSON object")
    _reject_unknown(params, _PARAM_FIELDS[kind], f"{kind} params")
    output_path = doc.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path must be a string")
    seed = doc.get("seed")
    if seed is not None:
        seed = _number(seed, "seed", "experiment", integer=True, minimum=0)
    return Experiment(kind=kind, params=dict(params), output_path=output_path, seed=seed)


def load_experiment(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_experiment(doc)


# ---------------------------------------------------------------------------
# Kind-specific execution.
# ---------------------------------------------------------------------------

def _stick_common(params, kind):
    where = f"{kind} params"
    N = _number(_need(params, "N", where), "N", where, integer=True, minimum=0)
    p = _need(params, "p", where)
    if not isinstance(p, (list, tuple)):
        raise ConfigError(f"field 'p' in {where} must be a list of proportions")
    try:
        props = stick.as_proportions(p)
    except ValueError as exc:
        raise ConfigError(f"bad proportions in {where}: {exc}") from exc
    a = _number(_need(params, "a", where), "a", where)
    b = _number(_need(params, "b", where), "b", where)
    base = _number(params.get("B", 10), "B", where, integer=True, minimum=2)
    try:
        benford.validate_interval(a, b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return N, props, float(a), float(b), base


def _run_stick_exact(exp):
    N, p, a, b, base = _stick_common(exp.params, exp.kind)
    budget = _number(
        exp.params.get("budget", stick.DEFAULT_TERM_BUDGET),
        "budget", "stick params", integer=True, minimum=1,
    )
    value = stick.exact_interval_probability(p, N, a, b, base=base, budget=budget)
    result = {
        "N": N, "m": p.m, "p": list(p.parts), "B": base, "a": a, "b": b,
        "value": value, "method": "exact",
    }
    dist = None
    if exp.output_path:
        dist = stick.exact_mantissa_distribution(p, N, base=base, budget=budget)
    return result, dist


def _run_stick_bruteforce(exp):
    N, p, a, b, base = _stick_common(exp.params, exp.kind)
    budget = _number(
        exp.params.get("budget", stick.DEFAULT_TERM_BUDGET),
        "budget", "stick params", integer=True, minimum=1,
    )
    dist = stick.brute_force_mantissa(p, N, base=base, budget=budget)
    result = {
        "N": N, "m": p.m, "p": list(p.parts), "B": base, "a": a, "b": b,
        "value": dist.interval_mass(a, b), "method": "bruteforce",
    }
    return result, (dist if exp.output_path else None)


def _run_stick_truncated(exp):
    N, p, a, b, base = _stick_common(exp.params, exp.kind)
    where = "stick_truncated params"
    epsilon = _number(_need(exp.params, "epsilon", where), "epsilon", where)
    delta = _number(_need(exp.params, "delta", where), "delta", where)
    try:
        tp = stick.TruncationParams(epsilon=float(epsilon), delta=float(delta))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = stick.truncated_estimate(p, N, a, b, tp, base=base)
    result = {
        "N": N, "m": p.m, "p": list(p.parts), "B": base, "a": a, "b": b,
        "epsilon": float(epsilon), "delta": float(delta),
        "value": res.value, "method": "truncated",
        "dropped_mass_bound": res.dropped_mass_bound,
        "epsilon_cut_bound": res.epsilon_cut_bound,
        "chebyshev_bound": res.chebyshev_bound,
        "block_error_bound": res.block_error_bound,
        "blocks_used": res.blocks_used,
    }
    return result, None


def _parse_cut(doc, base):
    if not isinstance(doc, dict):
        raise ConfigError("cut must be a JSON object")
    kind = _need(doc, "kind", "cut")
    if kind == "log_uniform":
        _reject_unknown(doc, {"kind", "lo", "hi"}, "cut")
        return boxfrag.CutDistribution.log_uniform(
            _number(_need(doc, "lo", "cut"), "lo", "cut"),
            _number(_need(doc, "hi", "cut"), "hi", "cut"),
            base=base,
        )
    if kind == "beta":
        _reject_unknown(doc, {"kind", "alpha", "beta"}, "cut")
        return boxfrag.CutDistribution.beta(
            _number(_need(doc, "alpha", "cut"), "alpha", "cut"),
            _number(_need(doc, "beta", "cut"), "beta", "cut"),
            base=base,
        )
    if kind == "fixed":
        _reject_unknown(doc, {"kind", "p"}, "cut")
        return boxfrag.CutDistribution.fixed(
            _number(_need(doc, "p", "cut"), "p", "cut"), base=base
        )
    if kind == "table":
        _reject_unknown(doc, {"kind", "values", "weights"}, "cut")
        values = _need(doc, "values", "cut")
        weights = _need(doc, "weights", "cut")
        if not isinstance(values, list) or not isinstance(weights, list):
            raise ConfigError("table cut needs 'values' and 'weights' lists")
        return boxfrag.CutDistribution.table(values, weights, base=base)
    raise ConfigError(f"unknown cut kind {kind!r}")


def _parse_statistic(doc):
    if not isinstance(doc, dict):
        raise ConfigError("statistic must be a JSON object")
    kind = _need(doc, "kind", "statistic")
    if kind == "z_vector":
        _reject_unknown(doc, {"kind"}, "statistic")
        return kind, None
    if kind in ("vol_d", "max_face"):
        _reject_unknown(doc, {"kind", "d"}, "statistic")
        d = _number(_need(doc, "d", "statistic"), "d", "statistic", integer=True, minimum=1)
        return kind, d
    raise ConfigError(f"unknown statistic kind {kind!r}")


def _run_box_mc(exp):
    where = "box_mc params"
    params = exp.params
    m = _number(_need(params, "m", where), "m", where, integer=True, minimum=1)
    N = _number(_need(params, "N", where), "N", where, integer=True, minimum=1)
    trials = _number(_need(params, "trials", where), "trials", where, integer=True, minimum=1)
    base = _number(params.get("B", 10), "B", where, integer=True, minimum=2)
    if exp.seed is None:
        raise ConfigError("box_mc experiments require a top-level seed")
    cut = _parse_cut(_need(params, "cut", where), base)
    statistic, d = _parse_statistic(_need(params, "statistic", where))
    cfg = boxfrag.ProcessConfig(
        m=m, N=N, cut=cut, base=base, trials=trials,
        seed=exp.seed, statistic=statistic, d=d,
    )
    echo = {
        "m": m, "N": N, "B": base, "trials": trials,
        "cut": {"kind": cut.kind, "mu_P": cut.mu_P, "sigma_P": cut.sigma_P,
                "support_bound": cut.support_bound},
        "statistic": {"kind": statistic, **({"d": d} if d is not None else {})},
    }
    if statistic == "z_vector":
        z = boxfrag.simulate_z_matrix(cfg).ravel()
        z.sort()
        grid = ndtr(z)
        n = z.size
        up = np.arange(1, n + 1) / n - grid
        down = grid - np.arange(0, n) / n
        result = {
            **echo,
            "ks_to_normal": float(max(up.max(), down.max())),
            "mean": float(z.mean()),
            "std": float(z.std(ddof=0)),
            "method": "box_mc",
        }
        return result, None
    dist = boxfrag.monte_carlo_mantissa(cfg)
    result = {
        **echo,
        "ks_to_benford": dist.ks_to_benford(),
        "atom_count": int(dist.mantissas.size),
        "method": "box_mc",
    }
    return result, dist


def _run_analytic(exp):
    where = "analytic params"
    params = exp.params
    op = _need(params, "op", where)
    m = _number(_need(params, "m", where), "m", where, integer=True, minimum=1)
    d = _number(_need(params, "d", where), "d", where, integer=True, minimum=1)
    spec_kwargs = {}
    for key in ("abs_tol", "rel_tol", "lower_cut"):
        if key in params:
            spec_kwargs[key] = _number(params[key], key, where)
    if "scheme" in params:
        spec_kwargs["scheme"] = params["scheme"]
    try:
        spec = orderstats.QuadratureSpec(**spec_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        if op in ("main_cdf", "main_density"):
            y = _number(_need(params, "y", where), "y", where)
            fn = orderstats.main_cdf if op == "main_cdf" else orderstats.main_density
            res = fn(m, d, float(y), spec)
            echo = {"op": op, "m": m, "d": d, "y": float(y)}
        elif op == "equidistribution_sum":
            N = _number(_need(params, "N", where), "N", where, integer=True, minimum=1)
            C = _number(_need(params, "C", where), "C", where)
            a = _number(_need(params, "a", where), "a", where)
            b = _number(_need(params, "b", where), "b", where)
            res = orderstats.equidistribution_sum(m, d, N, float(C), float(a), float(b), spec)
            echo = {"op": op, "m": m, "d": d, "N": N, "C": float(C),
                    "a": float(a), "b": float(b)}
        else:
            raise ConfigError(f"unknown analytic op {op!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = {**echo, "value": res.value, "achieved_tol": res.achieved_tol,
              "scheme": res.scheme, "method": "analytic"}
    return result, None


def _run_diophantine(exp):
    where = "diophantine params"
    params = exp.params
    x = _number(_need(params, "x", where), "x", where)
    q_max = _number(_need(params, "q_max", where), "q_max", where, integer=True, minimum=1)
    tol = _number(_need(params, "tol", where), "tol", where, minimum=0.0)
    verdict = diophantine.rationality_verdict(float(x), q_max, float(tol))
    result = {**verdict.to_dict(), "method": "diophantine"}
    return result, None


_RUNNERS = {
    "stick_exact": _run_stick_exact,
    "stick_bruteforce": _run_stick_bruteforce,
    "stick_truncated": _run_stick_truncated,
    "box_mc": _run_box_mc,
    "analytic": _run_analytic,
    "diophantine": _run_diophantine,
}


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (int, str)):
        return str(value)
    return json.dumps(value)


def write_rows_csv(rows, header, fileobj):
    fileobj.write(",".join(header) + "\n")
    for row in rows:
        fileobj.write(",".join(_fmt(row.get(key, "")) for key in header) + "\n")


def _flat_scalars(result):
    out = {}
    for key, value in result.items():
        if isinstance(value, (dict, list, tuple)):
            out[key] = json.dumps(value, separators=(",", ":"))
        else:
            out[key] = value
    return out


def _open_output(path):
    parent = os.path.dirname(path)
    try:
        if parent:
            os.makedirs(parent, exist_ok=True)
        return open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write output_path {path!r}: {exc}") from exc


def run_experiment(exp, figures=True):
    """Execute one experiment and return its report dictionary.

    When the experiment has an output path, the delimited artifact is
    written there and, for distribution-valued experiments and unless
    suppressed, a rendered figure lands next to it.
    """
    if exp.kind not in _RUNNERS:
        raise ConfigError(f"unknown experiment kind {exp.kind!r}")
    start = time.perf_counter()
    result, dist = _RUNNERS[exp.kind](exp)
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": exp.kind,
        "seed": exp.seed,
        "result": result,
        "wall_time_s": 0.0,
        "library_version": VERSION,
    }
    if exp.output_path:
        artifacts = {}
        if dist is not None:
            with _open_output(exp.output_path) as fh:
                dist.write_csv(fh)
            artifacts["csv"] = exp.output_path
            if figures:
                from . import plots  # deferred: matplotlib is heavy

                base = result.get("B", 10)
                fig = plots.mantissa_figure(dist, base, title=exp.kind)
                artifacts["figure"] = plots.save_figure(
                    fig, os.path.splitext(exp.output_path)[0] + ".png"
                )
        else:
            row = _flat_scalars(result)
            header = list(row)
            with _open_output(exp.output_path) as fh:
                write_rows_csv([row], header, fh)
            artifacts["csv"] = exp.output_path
        report["artifacts"] = artifacts
    report["wall_time_s"] = time.perf_counter() - start
    return report


def sweep(exp, axis, values, figures=True):
    """Run the experiment once per axis value; one combined CSV row each.

    The seed is reused as-is across runs, so stochastic experiments see
    common random numbers along the sweep; vary the seed field itself to
    decorrelate.  Returns (rows, header).
    """
    if not values:
        raise ConfigError("sweep needs at least one axis value")
    if axis not in _PARAM_FIELDS.get(exp.kind, set()):
        raise ConfigError(f"axis {axis!r} is not a parameter of kind {exp.kind}")
    rows = []
    header = [axis]
    for v in values:
        params = dict(exp.params)
        params[axis] = v
        one = replace(exp, params=params, output_path=None)
        report = run_experiment(one, figures=False)
        row = {axis: v, **_flat_scalars(report["result"])}
        row[axis] = v  # result echoes params; the sweep column keeps the input
        rows.append(row)
        for key in row:
            if key not in header:
                header.append(key)
    if exp.output_path:
        with _open_output(exp.output_path) as fh:
            write_rows_csv(rows, header, fh)
        if figures:
            from . import plots

            numeric = {}
            for key in header:
                if key == axis:
                    continue
                col = [row.get(key) for row in rows]
                if all(isinstance(c, (int, float)) and not isinstance(c, bool)
                       and c is not None and math.isfinite(float(c)) for c in col):
                    numeric[key] = [float(c) for c in col]
            if numeric:
                fig = plots.sweep_figure(axis, [row[axis] for row in rows], numeric,
                                         title=f"{exp.kind} sweep")
                plots.save_figure(fig, os.path.splitext(exp.output_path)[0] + ".png")
    return rows, header
