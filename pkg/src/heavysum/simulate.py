"""Monte Carlo estimates of ``P[S_n > s]`` and the ratio ``P[S_n > s] / (n sf(s))``.

Two estimators share the same replicate streams:

``crude``
    Fraction of replicates with ``S_n > s``.
``bigjump``
    Conditional estimator averaging ``n sf(max(s - S_{n-1}, M_{n-1}))``
    over draws of ``n - 1`` summands, where ``M_{n-1}`` is their maximum.
    Unbiased: by exchangeability
    ``P[S_n > s] = n P[S_n > s, X_n > M_{n-1}]`` (ties have probability
    zero for continuous F), and conditioning on the other ``n - 1``
    summands gives ``P[X_n > max(s - S_{n-1}, M_{n-1})]``.

Replicates are processed in blocks of :data:`heavysum.rng.CHUNK`; block ``k``
always uses counter block ``k`` of the seed, and partial results are
combined in block order, so the thread count never changes a result.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from . import rng
from .conditions import solve_threshold
from .distmodel import row_sums
from .errors import DomainError

__all__ = [
    "SimResult",
    "estimate_crude",
    "estimate_bigjump",
    "estimate",
    "ratio_sweep",
    "convergence_table",
    "MIN_TRIALS",
]

MIN_TRIALS = 1000
_Z95 = float(stats.norm.ppf(0.975))
_Z99 = float(stats.norm.ppf(0.995))


@dataclass(frozen=True)
class SimResult:
    estimator: str
    n: int
    s: float
    trials: int
    seed: int
    p_hat: float
    std_err: float
    ci95_lo: float
    ci95_hi: float
    ci99_lo: float
    ci99_hi: float
    n_fbar: float
    hits: int = -1

    @property
    def ratio(self):
        return self.p_hat / self.n_fbar

    @property
    def ratio_ci95(self):
        return self.ci95_lo / self.n_fbar, self.ci95_hi / self.n_fbar

    @property
    def ratio_ci99(self):
        return self.ci99_lo / self.n_fbar, self.ci99_hi / self.n_fbar

    def row(self):
        return {"estimator": self.estimator, "n": self.n, "s": self.s, "trials": self.trials,
                "p_hat": self.p_hat, "ci95_lo": self.ci95_lo, "ci95_hi": self.ci95_hi,
                "ratio": self.ratio, "seed": self.seed}

    def to_dict(self):
        return {**asdict(self), "ratio": self.ratio}


def _check(n, s, trials, seed):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if trials < MIN_TRIALS:
        raise DomainError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if seed < 0:
        raise DomainError("seed must be non-negative")


def _blocks(trials):
    return [(b, min(rng.CHUNK, trials - b * rng.CHUNK)) for b in range(-(-trials // rng.CHUNK))]


def _draw(model, k, seed, block, rows):
    u = rng.open_uniforms(seed, block, rows * k)
    return np.asarray(model.ppf(u), dtype=float).reshape(rows, k)


def _run(job, trials, threads):
    blocks = _blocks(trials)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, blocks))
    return [job(b) for b in blocks]


def _wilson(hits, trials, z):
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _binomial_ci(hits, trials, z):
    p = hits / trials
    if hits == 0:
        return 0.0, 0.0
    if hits < 30:
        lo, hi = _wilson(hits, trials, z)
        return min(lo, p), max(hi, p)
    half = z * math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def estimate_crude(model, n, s, trials, seed, threads=1):
    """Indicator estimator; normal CI, Wilson when fewer than 30 hits.

    With zero hits the upper limits are the one-sided bounds ``1 - alpha^(1/N)``
    (``alpha = 0.05`` and ``0.01``).
    """
    _check(n, s, trials, seed)
    n = int(n)

    def job(block):
        b, rows = block
        return int(np.count_nonzero(row_sums(_draw(model, n, seed, b, rows)) > s))

    hits = sum(_run(job, trials, threads))
    p = hits / trials
    if hits == 0:
        ci95 = (0.0, 1.0 - 0.05 ** (1.0 / trials))
        ci99 = (0.0, 1.0 - 0.01 ** (1.0 / trials))
    else:
        ci95 = _binomial_ci(hits, trials, _Z95)
        ci99 = _binomial_ci(hits, trials, _Z99)
    return SimResult("crude", n, float(s), int(trials), int(seed), p,
                     math.sqrt(p * (1 - p) / trials), *ci95, *ci99,
                     n * float(model.sf(s)), hits)


def estimate_bigjump(model, n, s, trials, seed, threads=1):
    """Conditional big-jump estimator with a normal CI from the sample variance."""
    _check(n, s, trials, seed)
    n = int(n)
    if n == 1:
        p = float(model.sf(s))
        return SimResult("bigjump", 1, float(s), int(trials), int(seed), p, 0.0, p, p, p, p, p)

    def job(block):
        b, rows = block
        x = _draw(model, n - 1, seed, b, rows)
        level = np.maximum(s - row_sums(x), x.max(axis=1))
        vals = n * np.asarray(model.sf(level), dtype=float)
        return float(np.sum(vals)), float(np.sum(vals * vals))

    parts = _run(job, trials, threads)
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / (trials - 1)
    se = math.sqrt(var / trials)
    mean = min(mean, 1.0)
    return SimResult("bigjump", n, float(s), int(trials), int(seed), mean, se,
                     max(0.0, mean - _Z95 * se), min(1.0, mean + _Z95 * se),
                     max(0.0, mean - _Z99 * se), min(1.0, mean + _Z99 * se),
                     n * float(model.sf(s)))


ESTIMATORS = {"crude": estimate_crude, "bigjump": estimate_bigjump}


def estimate(model, n, s, trials, seed, estimator="bigjump", threads=1):
    try:
        fn = ESTIMATORS[estimator]
    except KeyError:
        raise DomainError(f"unknown estimator {estimator!r}") from None
    return fn(model, n, s, trials, seed, threads)


def ratio_sweep(model, n_grid, threshold_rule, trials, seed, estimator="bigjump", threads=1):
    """One estimate per ``n`` at ``s = t_n``.

    ``threshold_rule`` is a callable ``n -> t_n`` or a mapping with keys
    ``functional`` and ``delta`` (and optionally ``lam``, ``t_min``) passed to
    :func:`heavysum.conditions.solve_threshold`. Every row uses the same seed.
    """
    if callable(threshold_rule):
        rule = threshold_rule
    else:
        opts = dict(threshold_rule)
        functional = opts.pop("functional")
        delta = opts.pop("delta")

        def rule(n):
            return solve_threshold(model, functional, n, delta, **opts)

    return [estimate(model, n, rule(n), trials, seed, estimator, threads) for n in n_grid]


def convergence_table(results):
    """Rows ``(n, s, ratio, |ratio - 1|, ratio_ci95_lo, ratio_ci95_hi)``."""
    out = []
    for r in results:
        lo, hi = r.ratio_ci95
        out.append({"n": r.n, "s": r.s, "ratio": r.ratio, "abs_dev": abs(r.ratio - 1.0),
                    "ratio_ci95_lo": lo, "ratio_ci95_hi": hi})
    return out


CSV_COLUMNS = ("estimator", "n", "s", "trials", "p_hat", "ci95_lo", "ci95_hi", "ratio", "seed")


def results_to_csv(results):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})
    return buf.getvalue()


def results_to_json(results):
    return json.dumps([r.to_dict() for r in results], indent=2)
