"""Explicit non-asymptotic bounds on ``P[S_n > s] / (n sf(s))``.

The upper bound splits on whether some summand exceeds ``m = (1 - eps') s``:

    ratio <= sf(m) / sf(s) + exp(n I - c s + a),   c = (1 + eps) a / s,
    I = integral_{-w}^{m} (exp(c x) - 1) dF(x),

where the second term is Markov's inequality applied to ``exp(c S')`` for
the sum ``S'`` of summands capped at ``m``. The lower bound is Bonferroni:

    ratio >= sf(m') / sf(s) * (P[S_{n-1} > -x] - (n / 2) sf(s)),
    m' = s + zeta min(s, 1 / eta(lam s)),  x = zeta min(s, 1 / eta(lam s)).

``eps`` and ``eps'`` follow the constructive choices that make both bounds
tend to one; they can be overridden, and the Markov bound stays valid for
any ``eps > 0`` and ``0 < eps' < 1``.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from ._quad import integrate_split
from .conditions import ConditionConfig, a_value, truncation_condition
from .distmodel import eta_reciprocal, row_sums, truncated_moments
from .errors import DomainError, RegimeError

__all__ = [
    "DEFAULT_DELTA",
    "DEFAULT_ZETA",
    "BoundParams",
    "BoundResult",
    "GammaEstimate",
    "intermediate_scale",
    "epsilon_clauses",
    "epsilon_choice",
    "epsilon_prime",
    "identity_residual",
    "bound_params",
    "ratio_upper_bound",
    "ratio_lower_bound",
    "compute_bounds",
    "bound_sweep",
    "gamma_estimate",
    "exponent_profile",
    "dominated_variation_cap",
]

DEFAULT_DELTA = 0.5 * (1.0 - math.exp(-2.0))
DEFAULT_ZETA = 0.1
_EXP_MAX = 700.0


def intermediate_scale(x, y):
    """Scale ``z`` with ``y << z << x`` when ``x / y -> inf``.

    ``v = min(sqrt(x max(1, log y) / y), (log x + log y) / 2)`` and ``z = e^v``.
    The ``max(1, .)`` floor keeps ``v`` away from 0 when ``y`` is near 1.
    """
    if not y >= 1.0:
        raise DomainError(f"y must be >= 1, got {y}")
    if not x >= y:
        raise DomainError(f"x must be >= y, got x={x}, y={y}")
    v = min(math.sqrt(x * max(1.0, math.log(y)) / y), 0.5 * (math.log(x) + math.log(y)))
    return math.exp(v)


def epsilon_clauses(model, n, s, a, w, B, lam=0.5, delta=DEFAULT_DELTA, moments=None):
    """The three lower limits whose maximum is ``eps``."""
    if not a > 0:
        raise RegimeError(f"a = {a:.6g} <= 0")
    if not w >= s / a * (1.0 - 1e-12):
        raise DomainError(f"w = {w:.6g} below s/a = {s / a:.6g}")
    _check_delta(delta)
    y = max(1.0, s * float(model.eta(lam * s)))
    if a < y:
        raise RegimeError(f"a = {a:.6g} < max(1, s eta(lam s)) = {y:.6g}")
    mom = moments if moments is not None else truncated_moments(model, w)
    return (
        1.0 / intermediate_scale(a, y),
        n * math.exp(B + 3.0) * float(model.sf(s / a)),
        (2.0 * n / delta) * (abs(mom.mu1) / s + math.e**2 * mom.mu2 * a / s / s),
    )


def epsilon_choice(model, n, s, a, w, B, lam=0.5, delta=DEFAULT_DELTA, moments=None):
    return max(epsilon_clauses(model, n, s, a, w, B, lam, delta, moments))


def epsilon_prime(eps, a, B, s_eta):
    """``(eps + (2B - log eps) / a) / (1 - s_eta / a)``."""
    if not s_eta < a:
        raise RegimeError(f"s eta(lam s) = {s_eta:.6g} >= a = {a:.6g}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return (eps + (2.0 * B - math.log(eps)) / a) / (1.0 - s_eta / a)


def identity_residual(eps, eps_prime_, a, B, s_eta):
    """``(eps' - eps) a - eps' s_eta - 2B + log eps``; zero for the closed form."""
    return (eps_prime_ - eps) * a - eps_prime_ * s_eta - 2.0 * B + math.log(eps)


def _check_delta(delta):
    if not 0.0 < delta < 1.0 - math.exp(-2.0):
        raise DomainError(f"delta must lie in (0, 1 - e^-2), got {delta}")


@dataclass(frozen=True)
class BoundParams:
    """Constants of the bound construction at one ``(n, s)``.

    ``issue`` is None when ``eps``/``eps'`` are admissible; otherwise it says
    why the upper bound is vacuous at this point (``eps``, ``eps'``, ``m``
    and ``c`` are then NaN). ``scale`` is ``min(s, 1 / eta(lam s))``.
    """

    n: int
    s: float
    lam: float
    delta: float
    zeta: float
    a: float
    w: float
    B: float
    s_eta: float
    scale: float
    z: float
    eps: float
    eps_prime: float
    m: float
    m_prime: float
    c: float
    mu1: float
    mu2: float
    issue: str = None

    @property
    def valid(self):
        return self.issue is None


def bound_params(model, n, s, lam=0.5, delta=DEFAULT_DELTA, zeta=DEFAULT_ZETA, w=None,
                 eps=None, eps_prime=None, B=None):
    """Assemble :class:`BoundParams`; ``w`` defaults to the truncation-condition minimiser."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    _check_delta(delta)
    if not zeta > 0:
        raise DomainError(f"zeta must be positive, got {zeta}")
    a = a_value(model, n, s)
    if not a > 0:
        raise RegimeError(f"a = {a:.6g} <= 0 at n={n}, s={s:.6g}")
    if B is None:
        B = 1.0 + model.b_oscillation()
    s_eta = s * float(model.eta(lam * s))
    scale = min(s, float(eta_reciprocal(model, lam * s)))
    if w is None:
        w = truncation_condition(model, ConditionConfig(lam=lam), n, s)[1] if a >= 1.0 else s / a
    mom = truncated_moments(model, w)
    y = max(1.0, s_eta)
    z = intermediate_scale(a, y) if a >= y else math.nan
    issue = None
    try:
        if eps is None:
            eps = epsilon_choice(model, n, s, a, w, B, lam, delta, mom)
        if eps_prime is None:
            eps_prime = epsilon_prime(eps, a, B, s_eta)
        if not eps > 0:
            raise DomainError(f"eps must be positive, got {eps}")
        if not 0.0 < eps_prime < 1.0:
            raise RegimeError(f"eps' = {eps_prime:.6g} outside (0, 1)")
    except DomainError as exc:
        issue = str(exc)
    if issue is None:
        m = (1.0 - eps_prime) * s
        c = (1.0 + eps) * a / s
    else:
        eps = eps if eps is not None else math.nan
        eps_prime = eps_prime if eps_prime is not None else math.nan
        m = c = math.nan
    return BoundParams(
        n=int(n), s=float(s), lam=lam, delta=delta, zeta=zeta, a=a, w=float(w), B=float(B),
        s_eta=s_eta, scale=scale, z=z, eps=float(eps), eps_prime=float(eps_prime), m=m,
        m_prime=s + zeta * scale, c=c, mu1=mom.mu1, mu2=mom.mu2, issue=issue,
    )


@dataclass
class BoundResult:
    params: BoundParams
    ratio_upper: float
    ratio_lower: float
    components: dict = field(default_factory=dict)
    gamma_est: float = math.nan
    vacuous_upper: bool = False
    vacuous_lower: bool = False

    @property
    def vacuous(self):
        return self.vacuous_upper or self.vacuous_lower

    def row(self):
        p = self.params
        return {
            "n": p.n, "s": p.s, "a": p.a, "eps": p.eps, "eps_prime": p.eps_prime, "w": p.w,
            "m": p.m, "m_prime": p.m_prime, "ratio_lb": self.ratio_lower,
            "ratio_ub": self.ratio_upper, "vacuous_flag": int(self.vacuous),
        }


# ---------------------------------------------------------------------------
# upper bound


def _markov_integral(model, p):
    """``I = integral_{-w}^{m} (e^{cx} - 1) dF`` via tail integrals (by parts)."""
    c, m, w = p.c, p.m, p.w
    pts = tuple(abs(q) for q in (*model.breakpoints(), model.lower, p.s / p.a, 1.0) if np.isfinite(q))
    sf_m = float(model.sf(m))
    lo = max(0.0, model.lower) if np.isfinite(model.lower) else 0.0
    pos_pts = tuple(q for q in pts if lo < q < m)
    if lo > 0:
        # no mass in (0, lo): integrand is c e^{cx} (1 - sf(m)) there
        head = math.expm1(c * lo) * (1.0 - sf_m)
    else:
        head = 0.0
    psi_m = float(model.psi(m))

    def body_integrand(x):
        # c e^{cx} (sf(x) - sf(m)) in log space: cx - psi(x) stays moderate where cx does not
        px = float(model.psi(x))
        if px >= psi_m:
            return 0.0
        return c * math.exp(c * x - px + math.log(-math.expm1(px - psi_m)))

    body = integrate_split(body_integrand, lo, m, pos_pts, rtol=1e-10, atol=1e-300)[0] if m > lo else 0.0
    neg = 0.0
    if float(model.left_tail(0.0)) > 0.0:
        lw = float(model.left_tail(w))
        neg = -integrate_split(
            lambda y: c * math.exp(-c * y) * (float(model.left_tail(y)) - lw), 0.0, w,
            tuple(q for q in pts if 0 < q < w), rtol=1e-10, atol=1e-300,
        )[0]
    return head + body + neg


def _upper(model, p):
    if not p.valid:
        return math.inf, {"issue": p.issue}
    jump = math.exp(float(model.psi(p.s)) - float(model.psi(p.m)))
    integral = _markov_integral(model, p)
    exponent = p.n * integral - p.eps * p.a
    markov = math.exp(exponent) if exponent < _EXP_MAX else math.inf
    return jump + markov, {"jump_term": jump, "markov_integral": integral,
                           "markov_exponent": exponent, "markov_term": markov}


def ratio_upper_bound(model, params):
    """Upper bound on the ratio; ``inf`` when the parameters are not admissible."""
    return _upper(model, params)[0]


# ---------------------------------------------------------------------------
# lower bound


def _partial_sum_chebyshev(model, p):
    """Certified lower bound on ``P[S_{n-1} > -x]`` from truncated moments (Cantelli)."""
    k = p.n - 1
    if k == 0:
        return 1.0
    x = p.zeta * p.scale
    outside = float(model.sf(p.w)) + float(model.left_tail(p.w))
    mean = k * p.mu1
    var = k * max(p.mu2 - p.mu1**2, 0.0)
    d = x + mean
    if d <= 0:
        return 0.0
    return max(0.0, 1.0 - k * outside - var / (var + d * d))


def _partial_sum_montecarlo(model, p, trials, seed):
    """Clopper-Pearson one-sided 99% lower bound on ``P[S_{n-1} > -x]``."""
    k = p.n - 1
    if k == 0:
        return 1.0
    x = p.zeta * p.scale
    hits = 0
    for block in range(-(-trials // rng.CHUNK)):
        rows = min(rng.CHUNK, trials - block * rng.CHUNK)
        sums = row_sums(model.ppf(rng.open_uniforms(seed, block, rows * k)).reshape(rows, k))
        hits += int(np.count_nonzero(sums > -x))
    if hits == 0:
        return 0.0
    return float(stats.beta.ppf(0.01, hits, trials - hits + 1))


def _lower(model, p, estimator="chebyshev", trials=100_000, seed=0):
    if estimator == "chebyshev":
        prob = _partial_sum_chebyshev(model, p)
    elif estimator == "montecarlo":
        prob = _partial_sum_montecarlo(model, p, trials, seed)
    else:
        raise DomainError(f"unknown estimator {estimator!r}")
    sf_s = float(model.sf(p.s))
    factor = math.exp(float(model.psi(p.s)) - float(model.psi(p.m_prime)))
    margin = prob - 0.5 * p.n * sf_s
    comps = {"prob_partial_sum": prob, "jump_factor": factor, "bonferroni_correction": 0.5 * p.n * sf_s}
    if margin <= 0:
        return 0.0, comps
    return factor * margin, comps


def ratio_lower_bound(model, params, estimator="chebyshev", trials=100_000, seed=0):
    """Lower bound on the ratio; 0 when vacuous.

    ``estimator`` selects how ``P[S_{n-1} > -x]`` is certified: ``"chebyshev"``
    (deterministic, truncated moments) or ``"montecarlo"`` (99% one-sided).
    """
    return _lower(model, params, estimator, trials, seed)[0]


def compute_bounds(model, params, estimator="chebyshev", trials=100_000, seed=0):
    ub, up = _upper(model, params)
    lb, low = _lower(model, params, estimator, trials, seed)
    return BoundResult(
        params=params,
        ratio_upper=ub,
        ratio_lower=lb,
        components={**up, **low},
        vacuous_upper=not math.isfinite(ub),
        vacuous_lower=lb <= 0.0,
    )


def bound_sweep(model, points, lam=0.5, delta=DEFAULT_DELTA, zeta=DEFAULT_ZETA,
                estimator="chebyshev", trials=100_000, seed=0):
    """Bounds at each ``(n, s)`` in ``points``; points with ``a <= 0`` become vacuous rows."""
    out = []
    for n, s in points:
        try:
            p = bound_params(model, n, s, lam, delta, zeta)
        except RegimeError as exc:
            nan = math.nan
            p = BoundParams(n, s, lam, delta, zeta, a_value(model, n, s), nan, nan, nan, nan, nan,
                            nan, nan, nan, nan, nan, nan, nan, issue=str(exc))
            out.append(BoundResult(p, math.inf, 0.0, {"issue": str(exc)}, vacuous_upper=True,
                                   vacuous_lower=True))
            continue
        out.append(compute_bounds(model, p, estimator, trials, seed))
    return out


CSV_COLUMNS = ("n", "s", "a", "eps", "eps_prime", "w", "m", "m_prime", "ratio_lb", "ratio_ub", "vacuous_flag")


def results_to_csv(results):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})
    return buf.getvalue()


def results_to_json(results):
    rows = []
    for r in results:
        rows.append({**r.row(), "components": r.components, "issue": r.params.issue})
    return json.dumps(rows, indent=2, default=float)


# ---------------------------------------------------------------------------
# diagnostics


def exponent_profile(model, params, points=200):
    """``h(x) = c x - integral_0^x eta`` on ``[s/a, m]``.

    For nonincreasing ``eta`` this is convex, so its maximum sits at an
    endpoint. Returns ``(x, h)``.
    """
    if not params.valid:
        raise RegimeError(params.issue)
    x = np.geomspace(params.s / params.a, params.m, points)
    h = params.c * x - np.asarray(model.eta_integral(x), dtype=float)
    return x, h


@dataclass
class GammaEstimate:
    """Nested-grid estimates of the oscillation constant.

    ``by_b[i]`` is ``max over t, 1 <= x <= y_i of b(x t) - b(t)``;
    ``by_tail[i]`` is ``max over t of psi(y_i t) - psi(t)``, i.e. minus the
    log of the smallest tail ratio. The estimates are the values at the
    smallest ``y``.
    """

    y_grid: list
    by_b: list
    by_tail: list

    @property
    def gamma_b(self):
        return self.by_b[-1]

    @property
    def gamma_tail(self):
        return self.by_tail[-1]

    @property
    def trend(self):
        d = np.diff(self.by_b)
        return "nonincreasing" if np.all(d <= 1e-12) else "irregular"


def gamma_estimate(model, y_grid, t_grid, x_points=64):
    """Estimate the oscillation constant on nested grids.

    ``y_grid`` should decrease toward 1; only the upper half of ``t_grid``
    stands in for ``t -> inf``.
    """
    y_grid = sorted((float(y) for y in y_grid), reverse=True)
    if y_grid[-1] <= 1.0:
        raise DomainError("y values must exceed 1")
    t = np.sort(np.asarray(t_grid, dtype=float))
    t = t[len(t) // 2:]
    bt = np.asarray(model.b(t), dtype=float)
    pt = np.asarray(model.psi(t), dtype=float)
    by_b, by_tail = [], []
    for y in y_grid:
        xs = np.geomspace(1.0, y, x_points)
        bxt = np.asarray(model.b(np.outer(xs, t)), dtype=float)
        by_b.append(float(np.max(bxt - bt)))
        by_tail.append(float(np.max(np.asarray(model.psi(y * t), dtype=float) - pt)))
    return GammaEstimate(y_grid, by_b, by_tail)


def dominated_variation_cap(params, A):
    """Alternative Markov-term cap ``exp(-(eps' - eps) a + B - 1 + A log a)``.

    For dominated-varying tails with ``0 <= t eta(t) <= A``.
    """
    if not A >= 0:
        raise DomainError(f"A must be nonnegative, got {A}")
    p = params
    expo = -(p.eps_prime - p.eps) * p.a + p.B - 1.0 + A * math.log(p.a)
    return math.exp(min(expo, _EXP_MAX))
