"""Command-line front end: ``heavysum <command> --config FILE``.

The YAML config is authoritative; flags only override scalars. Every output
file starts with a header naming the toolkit version, the command and the
SHA-256 of the effective config, and contains nothing time-dependent, so
equal configs give byte-identical files.
"""

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import bounds as bnd
from . import conditions as cnd
from . import convolve as cnv
from . import simulate as sim
from .distmodel import FAMILIES, model_from_spec
from .errors import ConfigError, DomainError, NotFoundError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_NUMERIC = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# config schema: key -> (kind, default, help)

_NUM = "number"
_INT = "integer"
_NUMS = "list of numbers"
_INTS = "list of integers"
_STR = "string"
_MAP = "mapping"

COMMON = {
    "model": (_MAP, None, "distribution: {family: ..., params}; families: " + ", ".join(sorted(FAMILIES))),
    "model_file": (_STR, None, "YAML file holding the model mapping (alternative to 'model')"),
    "out": (_STR, ".", "output directory"),
    "format": (_STR, "csv", "csv, json or both"),
    "seed": (_INT, 0, "master seed of the counter-based streams"),
    "threads": (_INT, 1, "worker cap; never changes results"),
}

THRESHOLD_KEYS = {
    "functional": (_STR, "tail", "tail (n sf(t)), lognormal_rule (n log^3 t / t^2), "
                                 "finite_variance (n psi(t) eta(lam t) / t), tail_condition"),
    "delta": (_NUM, 0.01, "level the functional must reach"),
    "lambda": (_NUM, 0.5, "hazard evaluation point fraction, in (0, 1)"),
    "t_min": (_NUM, None, "start of the search range"),
}

SECTIONS = {
    "conditions": {
        "lambda": (_NUM, 0.5, "hazard evaluated at lambda*s, in (0, 1)"),
        "n_grid": (_INTS, [10, 100, 1000], "sample sizes"),
        "s_grid": (_NUMS, None, "explicit s values shared by every n"),
        "threshold": (_MAP, {"functional": "tail", "delta": 0.1},
                      "rule giving t_n; s runs over t_n * 10^(k/per_decade)"),
        "decades": (_NUM, 3.0, "decades of s above t_n"),
        "per_decade": (_INT, 4, "s points per decade"),
        "w_strategy": (_STR, "grid", "grid (log grid on [s/a, s]) or fixed (w = w_multiple*s/a)"),
        "w_points": (_INT, 40, "size of the truncation-level grid"),
        "w_multiple": (_NUM, 1.0, "multiple of s/a for the fixed strategy"),
        "delta_report": (_NUM, 0.5, "largest final value a decreasing-to-zero verdict allows"),
        "t_grid": (_NUMS, None, "t values for the hazard-lemma and finite-variance hypothesis checks"),
    },
    "bounds": {
        "lambda": (_NUM, 0.5, "hazard evaluated at lambda*s, in (0, 1)"),
        "delta": (_NUM, bnd.DEFAULT_DELTA, "moment-clause constant, in (0, 1 - e^-2)"),
        "zeta": (_NUM, bnd.DEFAULT_ZETA, "lower-bound shift m' = s + zeta*min(s, 1/eta(lambda s))"),
        "n_grid": (_INTS, [2, 5, 10], "sample sizes"),
        "a_grid": (_NUMS, None, "values of a = -log(n sf(s)); s is solved per n"),
        "s_grid": (_NUMS, None, "explicit s values (used when a_grid is absent)"),
        "estimator": (_STR, "chebyshev", "certifier for P[S_{n-1} > -x]: chebyshev or montecarlo"),
        "trials": (_INT, 100000, "replicates for montecarlo certification"),
        "simulate": (_MAP, None, "optional {trials, estimator}: adds a sandwich table with MC 99% CIs"),
    },
    "convolve": {
        "n_grid": (_INTS, [2], "numbers of summands, 1..8"),
        "t_grid": (_NUMS, [100.0], "evaluation points"),
        "knots": (_INT, cnv.DEFAULT_KNOTS, "grid knots for n >= 3"),
        "tolerance": (_NUM, cnv.REFINE_TOL, "largest accepted relative refinement difference"),
    },
    "simulate": {
        "n_grid": (_INTS, [2], "numbers of summands"),
        "s_grid": (_NUMS, None, "thresholds s shared by every n"),
        "threshold": (_MAP, None, "rule giving s = t_n per n (used when s_grid is absent)"),
        "trials": (_INT, 100000, "replicates per cell"),
        "estimators": (list, ["bigjump"], "crude and/or bigjump"),
    },
    "demo-thm11": {
        "n_max": (_INT, 4, "largest number of summands, 1..6"),
        "s_min": (_NUM, None, "grid start (default: support start or 1)"),
        "s_max": (_NUM, None, "grid end (default: the 1 - 1e-12 quantile)"),
        "points": (_INT, 121, "log-spaced grid points"),
        "tolerance": (_NUM, None, "constant tolerance (default 1/n)"),
        "knots": (_INT, cnv.DEFAULT_KNOTS, "grid knots for n >= 3"),
        "shift": (_NUM, 1.0, "shift x for the long-tail ratio sf(t+x)/sf(t)"),
    },
    "threshold": {
        **{k: v for k, v in THRESHOLD_KEYS.items()},
        "n_grid": (_INTS, [100], "sample sizes"),
    },
}


def _help_epilog():
    lines = ["config keys (YAML):", "  top level:"]
    for key, (kind, default, text) in COMMON.items():
        lines.append(f"    {key:<14} {text} [{_kind_name(kind)}]")
    lines.append(f"    {'<command>':<14} mapping of command-specific keys below")
    for name, keys in SECTIONS.items():
        lines.append(f"  {name}:")
        for key, (kind, default, text) in keys.items():
            shown = "" if default is None else f", default {default!r}"
            lines.append(f"    {key:<14} {text} [{_kind_name(kind)}{shown}]")
    lines.append("  threshold rule mappings take: " + ", ".join(THRESHOLD_KEYS))
    lines.append("exit codes: 0 ok, 1 config error, 2 domain/regime/precondition, 3 numeric failure")
    return "\n".join(lines)


def _kind_name(kind):
    return "list" if kind is list else kind


# ---------------------------------------------------------------------------
# loading and validation


def _key_lines(text):
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for knode, vnode in node.value:
                path = f"{prefix}.{knode.value}" if prefix else str(knode.value)
                lines[path] = knode.start_mark.line + 1
                walk(vnode, path)

    try:
        walk(yaml.compose(text), "")
    except yaml.YAMLError:
        pass
    return lines


class _Config:
    def __init__(self, data, lines, source, base_dir):
        self.data = data
        self.lines = lines
        self.source = source
        self.base_dir = base_dir

    def error(self, path, message):
        line = self.lines.get(path)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {path}: {message}")


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be a mapping")
    return _Config(data, _key_lines(text), str(path), path.parent)


def _coerce(cfg, path, kind, value):
    def bad(what):
        return cfg.error(path, f"expected {what}, got {value!r}")

    if value is None:
        return None
    if kind == _NUM:
        if isinstance(value, str):
            # YAML 1.1 reads "1.0e6" (no sign in the exponent) as a string
            try:
                return float(value)
            except ValueError:
                raise bad("a number") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad("a number")
        return float(value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad("an integer")
        return int(value)
    if kind == _STR:
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if kind == _MAP:
        if not isinstance(value, dict):
            raise bad("a mapping")
        return value
    if kind in (_NUMS, _INTS, list):
        if not isinstance(value, list) or not value:
            raise bad("a non-empty list")
        if kind is list:
            return list(value)
        inner = _NUM if kind == _NUMS else _INT
        return [_coerce(cfg, path, inner, v) for v in value]
    raise AssertionError(kind)


def resolve(cfg, command, overrides):
    """Validate ``cfg`` for ``command`` and return the effective settings dict."""
    data = cfg.data
    allowed = set(COMMON) | set(SECTIONS)
    for key in data:
        if key not in allowed:
            raise cfg.error(key, f"unknown key; allowed: {sorted(allowed)}")
    eff = {}
    for key, (kind, default, _) in COMMON.items():
        eff[key] = _coerce(cfg, key, kind, data.get(key, default))
    section = data.get(command) or {}
    if not isinstance(section, dict):
        raise cfg.error(command, "expected a mapping")
    schema = SECTIONS[command]
    for key in section:
        if key not in schema:
            raise cfg.error(f"{command}.{key}", f"unknown key; allowed: {sorted(schema)}")
    block = {}
    for key, (kind, default, _) in schema.items():
        block[key] = _coerce(cfg, f"{command}.{key}", kind, section.get(key, default))
    for key in ("seed", "threads", "format", "out"):
        if overrides.get(key) is not None:
            eff[key] = overrides[key]
    if overrides.get("tolerance") is not None:
        target = {"conditions": "delta_report", "threshold": "delta"}.get(command, "tolerance")
        block[target] = float(overrides["tolerance"])
    eff[command] = block
    _check_values(cfg, command, eff)
    eff["model"] = _model_spec(cfg, eff)
    eff.pop("model_file", None)
    return eff


def _check_values(cfg, command, eff):
    if eff["format"] not in ("csv", "json", "both"):
        raise cfg.error("format", "must be csv, json or both")
    if eff["seed"] < 0:
        raise cfg.error("seed", "must be non-negative")
    if eff["threads"] < 1:
        raise cfg.error("threads", "must be >= 1")
    block = eff[command]
    lam = block.get("lambda")
    if lam is not None and not 0.0 < lam < 1.0:
        raise cfg.error(f"{command}.lambda", f"lambda must lie in (0, 1), got {lam}")
    if command == "bounds" and not 0.0 < block["delta"] < 1.0 - math.exp(-2.0):
        raise cfg.error("bounds.delta", "delta must lie in (0, 1 - e^-2)")
    if command == "bounds" and block["zeta"] <= 0:
        raise cfg.error("bounds.zeta", "zeta must be positive")
    for key in ("threshold",):
        rule = block.get(key)
        if rule is not None:
            for k in rule:
                if k not in THRESHOLD_KEYS:
                    raise cfg.error(f"{command}.{key}.{k}", f"unknown key; allowed: {sorted(THRESHOLD_KEYS)}")
            if "lambda" in rule and not 0.0 < rule["lambda"] < 1.0:
                raise cfg.error(f"{command}.{key}.lambda", "lambda must lie in (0, 1)")
    for key in ("n_grid", "s_grid", "t_grid", "a_grid"):
        vals = block.get(key)
        if vals is not None and any(b <= a for a, b in zip(vals, vals[1:])):
            raise cfg.error(f"{command}.{key}", "must be strictly increasing")
    if command == "simulate":
        if block["s_grid"] is None and block["threshold"] is None:
            raise cfg.error("simulate", "needs s_grid or threshold")
        for e in block["estimators"]:
            if e not in sim.ESTIMATORS:
                raise cfg.error("simulate.estimators", f"unknown estimator {e!r}")
    if command == "bounds" and block["estimator"] not in ("chebyshev", "montecarlo"):
        raise cfg.error("bounds.estimator", "must be chebyshev or montecarlo")


def _model_spec(cfg, eff):
    if (eff["model"] is None) == (eff["model_file"] is None):
        raise cfg.error("model", "give exactly one of 'model' and 'model_file'")
    if eff["model"] is not None:
        spec, base = eff["model"], cfg.base_dir
    else:
        path = Path(eff["model_file"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        try:
            spec = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise cfg.error("model_file", str(exc)) from exc
        if isinstance(spec, dict) and "model" in spec:
            spec = spec["model"]
        base = path.parent
    try:
        model_from_spec(spec, base_dir=base)
    except ConfigError as exc:
        raise cfg.error("model", str(exc)) from exc
    if isinstance(spec, dict) and "table_file" in spec:
        spec = {**spec, "table_file": str((Path(base) / spec["table_file"]).resolve())}
    return spec


# ---------------------------------------------------------------------------
# output


def config_hash(eff):
    """Hash of everything that can change results (not ``out`` or ``threads``)."""
    eff = {k: v for k, v in eff.items() if k not in ("out", "threads")}
    blob = json.dumps(eff, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()


def _header(command, eff):
    return [f"heavysum {__version__}", f"command {command}", f"config-sha256 {config_hash(eff)}"]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_outputs(eff, command, name, csv_text, json_obj):
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    written = []
    header = _header(command, eff)
    if eff["format"] in ("csv", "both"):
        path = out / f"{name}.csv"
        path.write_text("".join(f"# {h}\n" for h in header) + csv_text)
        written.append(path)
    if eff["format"] in ("json", "both"):
        path = out / f"{name}.json"
        doc = {"meta": dict(zip(("toolkit", "command", "config_sha256"),
                                (h.split(" ", 1)[1] for h in header))),
               "data": _clean(json_obj)}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def _rows_csv(rows, columns):
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_cell(r.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


# ---------------------------------------------------------------------------
# commands


def _threshold_fn(model, rule):
    rule = dict(rule)
    functional = rule.pop("functional", "tail")
    delta = rule.pop("delta", 0.01)
    lam = rule.pop("lambda", 0.5)
    t_min = rule.pop("t_min", None)
    return lambda n: cnd.solve_threshold(model, functional, n, delta, t_min=t_min, lam=lam, rel_tol=1e-9)


def cmd_conditions(eff, model):
    b = eff["conditions"]
    common = dict(lam=b["lambda"], w_strategy=b["w_strategy"], w_points=b["w_points"],
                  w_multiple=b["w_multiple"], delta_report=b["delta_report"])
    if b["s_grid"] is not None:
        cfg = cnd.ConditionConfig(n_grid=tuple(b["n_grid"]),
                                  s_grid={n: tuple(b["s_grid"]) for n in b["n_grid"]}, **common)
    else:
        cfg = cnd.ConditionConfig.from_thresholds(b["n_grid"], _threshold_fn(model, b["threshold"]),
                                                  b["decades"], b["per_decade"], **common)
    reports = cnd.evaluate_conditions(model, cfg)
    if b["t_grid"] is not None:
        reports.extend(cnd.hazard_lemma_checks(model, b["t_grid"], b["delta_report"]))
        if model.mean_zero and model.moment_index > 2:
            reports.append(cnd.finite_variance_hypothesis(model, b["t_grid"], b["delta_report"]))
    return write_outputs(eff, "conditions", "conditions", cnd.reports_to_csv(reports),
                         [r.to_dict() for r in reports])


def _bound_points(model, b):
    pts = []
    for n in b["n_grid"]:
        if b["a_grid"] is not None:
            for a in b["a_grid"]:
                pts.append((n, cnd.solve_threshold(model, "tail", n, math.exp(-a), rel_tol=1e-9)))
        elif b["s_grid"] is not None:
            pts.extend((n, s) for s in b["s_grid"])
    if not pts:
        raise ConfigError("bounds: give a_grid or s_grid")
    return pts


def cmd_bounds(eff, model):
    b = eff["bounds"]
    results = bnd.bound_sweep(model, _bound_points(model, b), b["lambda"], b["delta"], b["zeta"],
                              b["estimator"], b["trials"], eff["seed"])
    files = write_outputs(eff, "bounds", "bounds", bnd.results_to_csv(results),
                          [{**r.row(), "components": r.components, "issue": r.params.issue}
                           for r in results])
    if b["simulate"]:
        opts = b["simulate"]
        unknown = set(opts) - {"trials", "estimator"}
        if unknown:
            raise ConfigError(f"bounds.simulate: unknown keys {sorted(unknown)}")
        rows = []
        for r in results:
            p = r.params
            mc = sim.estimate(model, p.n, p.s, int(opts.get("trials", 100000)), eff["seed"],
                              opts.get("estimator", "bigjump"), eff["threads"])
            lo, hi = mc.ratio_ci99
            ok = (not r.vacuous) and r.ratio_lower <= hi and lo <= r.ratio_upper
            rows.append({"n": p.n, "s": p.s, "ratio_lb": r.ratio_lower, "mc_ratio": mc.ratio,
                         "mc_lo99": lo, "mc_hi99": hi, "ratio_ub": r.ratio_upper,
                         "vacuous_flag": int(r.vacuous), "sandwich_ok": int(ok) if not r.vacuous else ""})
        cols = ("n", "s", "ratio_lb", "mc_ratio", "mc_lo99", "mc_hi99", "ratio_ub", "vacuous_flag", "sandwich_ok")
        files += write_outputs(eff, "bounds", "sandwich", _rows_csv(rows, cols), rows)
    return files


def cmd_convolve(eff, model):
    b = eff["convolve"]
    rows = cnv.conv_rows(model, b["n_grid"], b["t_grid"], knots=b["knots"], tol=b["tolerance"])
    for r in rows:
        print(f"n={r['n']} t={r['t']:.6g} P[S_n>t]={r['conv_tail']:.6g} ratio={r['ratio']:.6g}")
    return write_outputs(eff, "convolve", "convolve", cnv.rows_to_csv(rows), rows)


def cmd_simulate(eff, model):
    b = eff["simulate"]
    results = []
    if b["s_grid"] is not None:
        for est in b["estimators"]:
            for n in b["n_grid"]:
                for s in b["s_grid"]:
                    results.append(sim.estimate(model, n, s, b["trials"], eff["seed"], est, eff["threads"]))
    else:
        rule = _threshold_fn(model, b["threshold"])
        for est in b["estimators"]:
            results.extend(sim.ratio_sweep(model, b["n_grid"], rule, b["trials"], eff["seed"], est,
                                           eff["threads"]))
    return write_outputs(eff, "simulate", "simulate", sim.results_to_csv(results),
                         [r.to_dict() for r in results])


def cmd_demo(eff, model):
    b = eff["demo-thm11"]
    s_grid = None
    if b["s_min"] is not None or b["s_max"] is not None:
        lo = b["s_min"] if b["s_min"] is not None else (model.lower if model.lower > 0 else 1.0)
        hi = b["s_max"] if b["s_max"] is not None else float(model.ppf(1.0 - 1e-12))
        s_grid = np.geomspace(lo, hi, b["points"])
    tol = b["tolerance"]
    demo = cnv.threshold_existence_demo(model, b["n_max"], s_grid,
                                        (lambda n: tol) if tol is not None else None,
                                        knots=b["knots"], points=b["points"])
    t_probe = demo.s_grid[len(demo.s_grid) // 2]
    doc = json.loads(demo.to_json())
    doc["long_tail_ratio"] = {"t": t_probe, "x": b["shift"],
                              "value": cnv.long_tail_ratio(model, t_probe, b["shift"])}
    rows = doc["rows"]
    for r in rows:
        status = f"t_n={r['t_n']:.6g}" if r["found"] else "not found"
        print(f"n={r['n']} {status} sup|ratio-1|={r['achieved_sup']:.4g} tol={r['tolerance']:.4g}")
    cols = ("n", "t_n", "found", "achieved_sup", "tolerance")
    return write_outputs(eff, "demo-thm11", "demo_thm11", _rows_csv(rows, cols), doc)


def cmd_threshold(eff, model):
    b = eff["threshold"]
    fn = _threshold_fn(model, {k: b[k] for k in THRESHOLD_KEYS})
    rows = []
    for n in b["n_grid"]:
        t = fn(n)
        value = cnd.threshold_functional(b["functional"])(model, n, t, b["lambda"])
        rows.append({"functional": b["functional"], "n": n, "delta": b["delta"], "t": t, "value": value})
        print(f"n={n} t={t:.10g} value={value:.6g}")
    return write_outputs(eff, "threshold", "threshold",
                         _rows_csv(rows, ("functional", "n", "delta", "t", "value")), rows)


COMMANDS = {
    "conditions": (cmd_conditions, "condition functionals on (n, s) grids with trend verdicts"),
    "bounds": (cmd_bounds, "explicit upper/lower bounds on P[S_n>s]/(n sf(s))"),
    "convolve": (cmd_convolve, "numerical convolution tails and ratios"),
    "simulate": (cmd_simulate, "Monte Carlo estimates of P[S_n>s] and the ratio"),
    "demo-thm11": (cmd_demo, "grid search for thresholds t_n with sup |ratio-1| <= 1/n"),
    "threshold": (cmd_threshold, "solve functional(n, t) <= delta for t"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heavysum",
        description="Large-deviation diagnostics for sums of heavy-tailed random variables.",
        epilog=_help_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"heavysum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text, epilog=_help_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", help="output directory (overrides 'out')")
        p.add_argument("--format", choices=("csv", "json", "both"), help="output format")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--threads", type=int, help="worker cap")
        p.add_argument("--tolerance", type=float,
                       help="conditions: delta_report; threshold: delta; convolve/demo-thm11: tolerance")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    fn, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config)
        eff = resolve(cfg, args.command, vars(args))
        model = model_from_spec(eff["model"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = fn(eff, model)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, NotFoundError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except NumericError as exc:
        print(f"numeric error: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in files:
        print(f"wrote {path}")
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
