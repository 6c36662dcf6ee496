"""Finite-grid evaluation of the large-deviation condition functionals.

The theory states its hypotheses as limits ("... -> 0 as n -> inf uniformly in
s >= t_n"). Here each functional is evaluated on an explicit (n, s) grid, the
supremum over s is taken per n, and a trend verdict summarises the sequence.
Nothing here proves a limit; reports are finite evidence only.

Functionals (``a = psi(s) - log n``, ``y = s * eta(lam * s)``,
``D = min(s, 1 / eta(lam * s))``):

truncation
    ``inf_{w >= s/a} n [ (|mu1(w)| + a mu2(w) / s) / D + F(-w) ]``
hazard_growth
    ``max(1, y) * max(1, log y) / a``, the quantity the upper bound needs
    small when it picks its intermediate scale with ``x = a``, ``y = max(1, y)``.
tail_at_s_over_a
    ``n max(1, y) sf(s / a)``
"""

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .distmodel import RegularlyVarying, eta_reciprocal, truncated_moments
from .errors import DomainError, NotFoundError, PreconditionError, RegimeError

__all__ = [
    "ConditionConfig",
    "ConditionReport",
    "a_value",
    "truncation_condition",
    "truncation_diagnostics",
    "hazard_growth_condition",
    "tail_condition",
    "hazard_lemma_checks",
    "finite_variance_functional",
    "finite_variance_hypothesis",
    "regular_variation_case_check",
    "regular_variation_case",
    "solve_threshold",
    "threshold_functional",
    "evaluate_conditions",
    "trend_verdict",
    "THRESHOLD_FUNCTIONALS",
]

DECREASING = "decreasing-to-zero"
PLATEAU = "plateau"
INCREASING = "increasing"


@dataclass(frozen=True)
class ConditionConfig:
    """Grid and tuning for condition reports.

    ``s_grid`` maps each n to its increasing s values (all >= t_n).
    ``w_strategy`` is ``"grid"`` (``w_points`` log-spaced values on
    ``[s/a, s]``) or ``"fixed"`` (``w = w_multiple * s / a``).
    """

    lam: float = 0.5
    n_grid: tuple = ()
    s_grid: dict = field(default_factory=dict)
    w_strategy: str = "grid"
    w_points: int = 40
    w_multiple: float = 1.0
    delta_report: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise DomainError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.w_strategy not in ("grid", "fixed"):
            raise DomainError(f"unknown w_strategy {self.w_strategy!r}")
        if self.w_strategy == "fixed" and self.w_multiple < 1.0:
            raise DomainError("w_multiple must be >= 1 so that w >= s/a")
        if np.any(np.diff(self.n_grid) <= 0):
            raise DomainError("n_grid must be strictly increasing")
        for n, grid in self.s_grid.items():
            if np.any(np.diff(grid) <= 0):
                raise DomainError(f"s grid for n={n} must be strictly increasing")

    @classmethod
    def from_thresholds(cls, n_grid, t_n, decades=3.0, per_decade=4, **kwargs):
        """Build per-n s grids ``t_n * 10^(k / per_decade)``, ``k = 0..decades*per_decade``."""
        steps = int(round(decades * per_decade))
        factors = 10.0 ** (np.arange(steps + 1) / per_decade)
        s_grid = {}
        for n in n_grid:
            t = t_n(n) if callable(t_n) else t_n[n]
            s_grid[int(n)] = tuple(float(t) * factors)
        return cls(n_grid=tuple(int(n) for n in n_grid), s_grid=s_grid, **kwargs)

    def s_values(self, n):
        try:
            return self.s_grid[n]
        except KeyError:
            raise DomainError(f"no s grid configured for n={n}") from None


@dataclass
class ConditionReport:
    """Per-index values of one functional plus a trend verdict.

    ``index_name`` is ``"n"`` for (n, s)-grid reports, where ``values`` are
    suprema over the s grid, or ``"t"`` for one-parameter checks.
    """

    functional: str
    index_name: str
    index: list
    values: list
    verdict: str
    argmax_s: list = None
    best_w: list = None
    delta_report: float = 0.5
    extras: dict = field(default_factory=dict)

    def recompute_verdict(self):
        return trend_verdict(self.values, self.delta_report)

    def rows(self):
        out = []
        for i, idx in enumerate(self.index):
            out.append({
                "functional": self.functional,
                "n": idx if self.index_name == "n" else "",
                "sup_value": self.values[i],
                "argmax_s": self.argmax_s[i] if self.argmax_s else (idx if self.index_name == "t" else ""),
                "best_w": self.best_w[i] if self.best_w else "",
                "verdict": self.verdict,
            })
        return out

    def to_dict(self):
        return asdict(self)


CSV_COLUMNS = ("functional", "n", "sup_value", "argmax_s", "best_w", "verdict")


def reports_to_csv(reports):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        for row in rep.rows():
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, default=float)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def trend_verdict(values, delta_report=0.5):
    """Classify a sequence as decreasing-to-zero, plateau or increasing.

    "decreasing-to-zero" requires the last value to be the minimum, below the
    first value, and at most ``delta_report``.
    """
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if v.size < 2:
        return PLATEAU
    last, first = v[-1], v[0]
    if last <= v.min() and last < first and last <= delta_report:
        return DECREASING
    if last > first:
        return INCREASING
    return PLATEAU


# ---------------------------------------------------------------------------
# pointwise functionals


def a_value(model, n, s):
    """``psi(s) - log n``, i.e. ``-log(n sf(s))``. Non-positive values mean n sf(s) >= 1."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return float(model.psi(s)) - math.log(n)


def _require_a(model, n, s):
    a = a_value(model, n, s)
    if not a > 0:
        raise RegimeError(f"a = {a:.6g} <= 0 at n={n}, s={s:.6g}: n*sf(s) >= 1")
    return a


def _hazard_scale(model, s, lam):
    """``min(s, 1/eta(lam s))`` and ``s * eta(lam s)``."""
    return min(s, float(eta_reciprocal(model, lam * s))), s * float(model.eta(lam * s))


def _w_grid(cfg, s, a):
    if cfg.w_strategy == "fixed":
        return np.array([cfg.w_multiple * s / a])
    if a < 1.0:
        raise DomainError(f"empty w grid: s/a > s because a = {a:.6g} < 1")
    return np.geomspace(s / a, s, cfg.w_points)


def truncation_condition(model, cfg, n, s):
    """Infimum over the w grid of the truncated-moment functional; returns ``(value, best_w)``."""
    a = _require_a(model, n, s)
    scale, _ = _hazard_scale(model, s, cfg.lam)
    best = (math.inf, math.nan)
    for w in _w_grid(cfg, s, a):
        mom = truncated_moments(model, float(w))
        val = n * ((abs(mom.mu1) + a * mom.mu2 / s) / scale + float(model.left_tail(w)))
        if val < best[0]:
            best = (val, float(w))
    return best


def truncation_diagnostics(model, cfg, n, s, w):
    """The three quantities ``n P[|X| > w]``, ``n |mu1(w)| / D`` and ``n mu2(w) / D^2``."""
    scale, _ = _hazard_scale(model, s, cfg.lam)
    mom = truncated_moments(model, w)
    tail = float(model.sf(w)) + float(model.left_tail(w))
    return n * tail, n * abs(mom.mu1) / scale, n * mom.mu2 / scale**2


def hazard_growth_condition(model, cfg, n, s):
    """``max(1, y) max(1, log y) / a`` with ``y = s eta(lam s)``."""
    a = _require_a(model, n, s)
    _, y = _hazard_scale(model, s, cfg.lam)
    log_term = max(1.0, math.log(y)) if y > 0 else 1.0
    return max(1.0, y) * log_term / a


def tail_condition(model, cfg, n, s):
    """``n max(1, y) sf(s / a)``."""
    a = _require_a(model, n, s)
    _, y = _hazard_scale(model, s, cfg.lam)
    return n * max(1.0, y) * float(model.sf(s / a))


def finite_variance_functional(model, n, s, lam=0.5):
    """``n psi(s) eta(lam s) / s`` for mean-zero models with a finite 2+delta moment."""
    if not (model.mean_zero and model.moment_index > 2.0):
        raise PreconditionError(
            f"{model.family} model must have mean zero and a finite moment of order > 2"
        )
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return n * float(model.psi(s)) * float(model.eta(lam * s)) / s


# ---------------------------------------------------------------------------
# one-parameter checks


def _t_report(name, t_vals, values, delta_report, extras=None):
    return ConditionReport(
        functional=name,
        index_name="t",
        index=[float(t) for t in t_vals],
        values=[float(v) for v in values],
        verdict=trend_verdict(values, delta_report),
        delta_report=delta_report,
        extras=extras or {},
    )


def hazard_lemma_checks(model, t_grid, delta_report=0.5):
    """Evaluate the two sufficient-condition functionals on an increasing t grid.

    Returns ``(report_log, report_tail)``:

    * ``t eta(t) log psi(t) / psi(t)``; extras hold ``t eta(t) / psi(t)``.
    * ``t eta(t) sf(t / psi(t))``; extras hold ``eta(t / psi(t)) / eta(t)``.

    Points with ``psi(t) <= 1`` are skipped with a warning (``log psi <= 0``).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise DomainError("t grid must be increasing")
    keep, a_vals, b_vals, ratio_psi, ratio_eta = [], [], [], [], []
    for t in t_grid:
        p = float(model.psi(t))
        if p <= 1.0:
            warnings.warn(f"psi({t:.6g}) = {p:.6g} <= 1; point skipped", RuntimeWarning, stacklevel=2)
            continue
        te = t * float(model.eta(t))
        keep.append(t)
        a_vals.append(te * math.log(p) / p)
        b_vals.append(te * float(model.sf(t / p)))
        ratio_psi.append(te / p)
        ratio_eta.append(float(model.eta(t / p)) / float(model.eta(t)))
    rep_a = _t_report("hazard_log_ratio", keep, a_vals, delta_report, {"eta_over_psi": ratio_psi})
    rep_b = _t_report("hazard_tail_product", keep, b_vals, delta_report, {"eta_ratio": ratio_eta})
    return rep_a, rep_b


def finite_variance_hypothesis(model, t_grid, delta_report=0.5):
    """``t eta(t) log(t eta(t)) / psi(t)`` on a t grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    vals = []
    for t in t_grid:
        te = t * float(model.eta(t))
        vals.append(te * math.log(te) / float(model.psi(t)) if te > 0 else 0.0)
    return _t_report("finite_variance_hypothesis", t_grid, vals, delta_report)


def regular_variation_case(alpha):
    """Case label for tail index ``alpha``: boundaries 1 and 2 belong to the upper case."""
    if alpha < 1.0:
        return "i"
    if alpha < 2.0:
        return "ii"
    return "iii"


def regular_variation_case_check(model, n_grid, t_n, delta_report=0.5):
    """Evaluate the case-specific functional for a regularly varying model.

    * case i (alpha < 1): ``n sf(t_n)``
    * case ii (1 <= alpha < 2): ``n |mu1(t_n)| / t_n``
    * case iii (alpha >= 2): ``n mu2(t_n) log t_n / t_n^2``; extras add ``n E X / t_n``

    ``n sf(t_n)`` must decrease along the grid.
    """
    if not isinstance(model, RegularlyVarying):
        raise PreconditionError("case check needs a regularly varying model")
    n_grid = [int(n) for n in n_grid]
    t_vals = [float(t_n(n) if callable(t_n) else t_n[i]) for i, n in enumerate(n_grid)]
    n_tail = [n * float(model.sf(t)) for n, t in zip(n_grid, t_vals)]
    if len(n_tail) > 1 and not n_tail[-1] < n_tail[0]:
        raise PreconditionError("n*sf(t_n) does not decrease along the grid")
    case = regular_variation_case(model.alpha)
    extras = {"case": case, "t_n": t_vals, "n_tail": n_tail}
    if case == "i":
        values = n_tail
    elif case == "ii":
        values = [n * abs(truncated_moments(model, t).mu1) / t for n, t in zip(n_grid, t_vals)]
    else:
        values = [n * truncated_moments(model, t).mu2 * math.log(t) / t**2 for n, t in zip(n_grid, t_vals)]
        mean = model.c * (1.0 - model.p) * model.alpha / (model.alpha - 1.0)
        extras["n_mean_over_t"] = [n * mean / t for n, t in zip(n_grid, t_vals)]
    return ConditionReport(
        functional=f"regular_variation_case_{case}",
        index_name="n",
        index=n_grid,
        values=[float(v) for v in values],
        verdict=trend_verdict(values, delta_report),
        argmax_s=t_vals,
        delta_report=delta_report,
        extras=extras,
    )


# ---------------------------------------------------------------------------
# thresholds


def _lognormal_rule(model, n, t, lam):
    return n * math.log(t) ** 3 / t**2


def _tail_functional(model, n, t, lam):
    return n * float(model.sf(t))


def _finite_variance(model, n, t, lam):
    return finite_variance_functional(model, n, t, lam)


def _tail_condition_at(model, n, t, lam):
    a = a_value(model, n, t)
    if a <= 0:
        return math.inf
    y = t * float(model.eta(lam * t))
    return n * max(1.0, y) * float(model.sf(t / a))


THRESHOLD_FUNCTIONALS = {
    "tail": _tail_functional,
    "lognormal_rule": _lognormal_rule,
    "finite_variance": _finite_variance,
    "tail_condition": _tail_condition_at,
}

_DEFAULT_TMIN = {"lognormal_rule": math.exp(1.5)}


def threshold_functional(name):
    try:
        return THRESHOLD_FUNCTIONALS[name]
    except KeyError:
        raise DomainError(f"unknown functional {name!r}; choose from {sorted(THRESHOLD_FUNCTIONALS)}") from None


def solve_threshold(model, functional, n, delta, t_min=None, t_max=1e300, lam=0.5, rel_tol=1e-6):
    """Smallest t with ``functional(n, t) <= delta``, to relative precision ``rel_tol``.

    ``functional`` is a name from :data:`THRESHOLD_FUNCTIONALS` or a callable
    ``f(model, n, t, lam)``. The functional must be nonincreasing on the
    final doubling bracket; this is checked on 64 points. Raises
    :class:`NotFoundError` if the level is never reached below ``t_max``.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    name = functional if isinstance(functional, str) else getattr(functional, "__name__", "custom")
    f = threshold_functional(functional) if isinstance(functional, str) else functional
    if t_min is None:
        t_min = _DEFAULT_TMIN.get(name, max(model.lower, 0.0) if np.isfinite(model.lower) else 0.0)
        t_min = max(t_min, 1e-12)

    def g(t):
        return f(model, n, t, lam)

    if g(t_min) <= delta:
        return float(t_min)
    lo, hi = t_min, t_min
    while True:
        hi = min(hi * 2.0, t_max)
        if g(hi) <= delta:
            break
        if hi >= t_max:
            raise NotFoundError(f"{name} stays above {delta} on [{t_min:.6g}, {t_max:.6g}]", (t_min, t_max))
        lo = hi
    # monotonicity is only required on the final bracket
    probe = np.geomspace(lo, hi, 64) if lo > 0 else np.linspace(lo, hi, 64)
    vals = np.array([g(t) for t in probe])
    if np.any(vals[1:] > vals[:-1] + 1e-12 * np.abs(vals[:-1])):
        raise DomainError(f"{name} is not monotone decreasing on [{t_min:.6g}, {hi:.6g}]")
    while hi - lo > 0.5 * rel_tol * hi:
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) <= delta:
            hi = mid
        else:
            lo = mid
    return float(hi)


# ---------------------------------------------------------------------------
# grid reports

_GRID_FUNCTIONALS = {
    "truncation": truncation_condition,
    "hazard_growth": hazard_growth_condition,
    "tail_at_s_over_a": tail_condition,
}


def evaluate_conditions(model, cfg, include_finite_variance=None):
    """Sup-over-s reports for each grid functional, one row per n in ``cfg.n_grid``."""
    if include_finite_variance is None:
        include_finite_variance = model.mean_zero and model.moment_index > 2.0
    names = list(_GRID_FUNCTIONALS)
    if include_finite_variance:
        names.append("finite_variance")
    reports = []
    for name in names:
        sups, argmax, best_w = [], [], []
        for n in cfg.n_grid:
            top, top_s, top_w = -math.inf, math.nan, math.nan
            for s in cfg.s_values(n):
                if name == "truncation":
                    val, w = truncation_condition(model, cfg, n, s)
                elif name == "finite_variance":
                    val, w = finite_variance_functional(model, n, s, cfg.lam), math.nan
                else:
                    val, w = _GRID_FUNCTIONALS[name](model, cfg, n, s), math.nan
                if val > top:
                    top, top_s, top_w = val, s, w
            sups.append(float(top))
            argmax.append(float(top_s))
            best_w.append(float(top_w))
        reports.append(ConditionReport(
            functional=name,
            index_name="n",
            index=list(cfg.n_grid),
            values=sups,
            verdict=trend_verdict(sups, cfg.delta_report),
            argmax_s=argmax,
            best_w=best_w if name == "truncation" else None,
            delta_report=cfg.delta_report,
        ))
    return reports
