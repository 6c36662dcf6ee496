"""Numerical n-fold convolution tails and subexponentiality diagnostics.

The tail of a sum of two independent pieces ``A + B`` is evaluated as

    P[A + B > t] = atom_B sf_A(t - lo_B)
                   + integral_{lo_B}^{t - lo_A} sf_A(t - x) f_B(x) dx
                   + sf_B(t - lo_A),

with Gauss-Legendre panels refined geometrically toward both ends of every
segment, so power-law behaviour at either end is resolved down to ``1e-14``
of the segment length. ``P[S_2 > t]`` uses the model on both sides and is
exact up to quadrature. Higher orders tabulate ``log P[S_k > u]`` on a
``sinh``-spaced grid (linear near the body, logarithmic in the tail), fitted
with a cubic spline; beyond the last knot the grid is closed off with the
model's own tail shape, so big-jump mass is never truncated.

Models unbounded below are folded: mass below the ``1e-10`` quantile is
placed in an atom at that quantile.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from ._quad import half_rule
from .errors import AccuracyError, DomainError, NotFoundError

__all__ = [
    "ConvolutionGrid",
    "ModelSource",
    "model_source",
    "sum_tail",
    "convolution_grid",
    "convolve_tail",
    "pairwise_ratio",
    "long_tail_ratio",
    "threshold_existence_demo",
    "ExistenceDemo",
    "DEFAULT_KNOTS",
    "MAX_N",
]

DEFAULT_KNOTS = 4096
DEFAULT_ORDER = 16
COARSE_ORDER = 12
FOLD_QUANTILE = 1e-10
MAX_N = 8
REFINE_TOL = 1e-3
_BATCH = 128


@dataclass(frozen=True)
class ModelSource:
    """A model viewed as one summand: support start, atom there, tails and density."""

    model: object
    lower: float
    atom: float

    @property
    def breakpoints(self):
        return tuple(b for b in self.model.breakpoints() if b > self.lower)

    def sf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            return np.where(u < self.lower, 1.0, self.model.sf(np.maximum(u, self.lower)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            return np.where(x > self.lower, self.model.pdf(np.maximum(x, self.lower)), 0.0)


@lru_cache(maxsize=64)
def model_source(model, cutoff=FOLD_QUANTILE):
    if np.isfinite(model.lower):
        return ModelSource(model, float(model.lower), 0.0)
    lower = float(model.ppf(cutoff))
    return ModelSource(model, lower, float(model.cdf(lower)))


def _segments(A, B, t):
    """Segment endpoints ``(x, u)`` with ``u = t - x`` carried exactly at the ends."""
    xlo, xhi = B.lower, t - A.lower
    cuts = {b: t - b for b in B.breakpoints if xlo < b < xhi}
    cuts.update({t - a: a for a in A.breakpoints if A.lower < a < t - xlo})
    return [(xlo, t - xlo), *sorted(cuts.items()), (xhi, A.lower)]


def _nodes(ends, order):
    frac, wts = half_rule(order)
    xs, us, ws = [], [], []
    for (x0, u0), (x1, u1) in zip(ends[:-1], ends[1:]):
        length = x1 - x0
        if length <= 0:
            continue
        step = length * frac
        xs += [x0 + step, x1 - step]
        us += [u0 - step, u1 + step]
        ws += [length * wts, length * wts]
    if not xs:
        return np.empty(0), np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(us), np.concatenate(ws)


def sum_tail(A, B, t, order=DEFAULT_ORDER):
    """``P[A + B > t]`` for a scalar or array ``t``.

    ``A`` needs ``sf``; ``B`` needs ``pdf``, ``sf`` and ``atom``. Both need
    ``lower`` and ``breakpoints``.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape)
    flat = t_arr.ravel()
    res = out.ravel()
    if not A.breakpoints and not B.breakpoints:
        for i in range(0, flat.size, _BATCH):
            res[i:i + _BATCH] = _sum_tail_batch(A, B, flat[i:i + _BATCH], order)
    else:
        for i, ti in enumerate(flat):
            res[i] = _sum_tail_one(A, B, ti, order)
    out = res.reshape(t_arr.shape)
    return out if np.ndim(t) else float(out[0])


def _sum_tail_one(A, B, t, order):
    if t < A.lower + B.lower:
        return 1.0
    x, u, w = _nodes(_segments(A, B, t), order)
    body = float(np.dot(w, A.sf(u) * B.pdf(x))) if x.size else 0.0
    return B.atom * float(A.sf(t - B.lower)) + body + float(B.sf(t - A.lower))


def _sum_tail_batch(A, B, t, order):
    frac, wts = half_rule(order)
    length = np.maximum(t - A.lower - B.lower, 0.0)[:, None]
    step = length * frac
    xlo, ulo = B.lower, t[:, None] - B.lower
    x = np.concatenate([xlo + step, (t[:, None] - A.lower) - step], axis=1)
    u = np.concatenate([ulo - step, A.lower + step], axis=1)
    w = np.concatenate([length * wts, length * wts], axis=1)
    body = np.sum(w * A.sf(u) * B.pdf(x), axis=1)
    out = B.atom * A.sf(t - B.lower) + body + B.sf(t - A.lower)
    return np.where(t < A.lower + B.lower, 1.0, out)


class ConvolutionGrid:
    """Tabulated ``P[S > u]`` on ``u = center + scale sinh(v)``, ``v`` uniform.

    ``log P[S > u]`` is interpolated by a cubic spline in ``v``. Below the
    first knot the tail is 1; beyond the last knot it follows the reference
    model's tail shape, scaled to match at the last knot.
    """

    breakpoints = ()

    def __init__(self, knots, v, center, scale, log_sf, atom, reference):
        self.knots = np.asarray(knots, dtype=float)
        self.knots.setflags(write=False)
        self.center = float(center)
        self.scale = float(scale)
        self.atom = float(atom)
        self.reference = reference
        self._v = np.asarray(v, dtype=float)
        self._log_sf = np.asarray(log_sf, dtype=float)
        self._spline = CubicSpline(self._v, self._log_sf)
        self._dspline = self._spline.derivative()
        self._ref_hi = float(reference.logsf(self.hi))

    @property
    def lower(self):
        return float(self.knots[0])

    @property
    def hi(self):
        return float(self.knots[-1])

    @property
    def masses(self):
        """Mass at or below the first knot, then per cell ``(u_{j-1}, u_j]``."""
        s = np.exp(self._log_sf)
        return np.concatenate([[1.0 - s[0]], -np.diff(s)])

    @property
    def tail_mass(self):
        return float(np.exp(self._log_sf[-1]))

    @property
    def total_mass(self):
        return math.fsum(self.masses) + self.tail_mass

    def _v_of(self, u):
        return np.arcsinh((u - self.center) / self.scale)

    def logsf(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, self.lower, self.hi)
        val = self._spline(self._v_of(inside))
        with np.errstate(invalid="ignore", over="ignore"):
            beyond = self._log_sf[-1] + self.reference.logsf(np.maximum(u, self.hi)) - self._ref_hi
        val = np.where(u > self.hi, beyond, val)
        return np.minimum(np.where(u < self.lower, 0.0, val), 0.0)

    def sf(self, u):
        return np.exp(self.logsf(u))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, self.lower, self.hi)
        v = self._v_of(inside)
        dens = -np.exp(self._spline(v)) * self._dspline(v) / (self.scale * np.cosh(v))
        ref = self.reference
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            hazard = ref.pdf(np.maximum(u, self.hi)) / ref.sf(np.maximum(u, self.hi))
            tail = self.sf(u) * np.nan_to_num(hazard)
        dens = np.where(u > self.hi, tail, dens)
        return np.maximum(np.where(u <= self.lower, 0.0, dens), 0.0)

    @classmethod
    def tabulate(cls, fn, lower, center, scale, hi, knots, atom, reference):
        """Tabulate ``fn(u) = P[S > u]`` on ``knots`` points from ``lower`` to ``hi``."""
        v_lo = math.asinh((lower - center) / scale)
        v_hi = math.asinh((hi - center) / scale)
        v = np.linspace(v_lo, v_hi, knots)
        u = center + scale * np.sinh(v)
        u[0], u[-1] = lower, hi
        s = np.asarray(fn(u), dtype=float)
        s = np.minimum.accumulate(np.clip(s, 1e-300, 1.0))
        return cls(u, v, center, scale, np.log(s), atom, reference)


def _body_scale(model):
    lo, hi = (float(q) for q in model.ppf(np.array([0.25, 0.75])))
    return max(hi - lo, 1e-6)


@lru_cache(maxsize=32)
def convolution_grid(model, k, hi, knots=DEFAULT_KNOTS, order=DEFAULT_ORDER):
    """Grid for ``P[S_k > u]``, ``k >= 2``, covering ``[k lo, hi]``."""
    if k < 2:
        raise DomainError("grids start at k = 2")
    src = model_source(model)
    A = src if k == 2 else convolution_grid(model, k - 1, hi - src.lower, knots, order)
    lower = k * src.lower
    if np.isfinite(model.lower):
        center = lower
    else:
        center = k * float(model.ppf(0.5))
    return ConvolutionGrid.tabulate(
        lambda u: sum_tail(A, src, u, order),
        lower, center, k * _body_scale(model), hi, knots, src.atom**k, model,
    )


def _coverage(model, t_max, k):
    src = model_source(model)
    need = float(t_max) - (k - 1) * 0.0 - src.lower
    hi = 10.0 ** math.ceil(math.log10(max(need, 1.0) + 1.0))
    return max(hi, 10.0)


def _tail_raw(model, n, t, knots, order):
    src = model_source(model)
    if n == 2:
        return sum_tail(src, src, t, order)
    hi = _coverage(model, np.max(t), n)
    grid = convolution_grid(model, n - 1, hi, knots, order)
    return sum_tail(grid, src, t, order)


def convolve_tail(model, n, t, knots=DEFAULT_KNOTS, check=True, return_error=False, tol=REFINE_TOL):
    """``P[S_n > t]`` for ``1 <= n <= 8``.

    With ``check`` the result is recomputed on half the knots and a lower
    quadrature order; a relative disagreement above ``tol`` raises
    :class:`AccuracyError`. ``return_error`` returns ``(value, rel_diff)``.
    """
    if not 1 <= n <= MAX_N or int(n) != n:
        raise DomainError(f"n must be an integer in [1, {MAX_N}], got {n}")
    n = int(n)
    if n == 1:
        val = model.sf(t)
        return (val, 0.0) if return_error else val
    val = _tail_raw(model, n, t, knots, DEFAULT_ORDER)
    err = 0.0
    if check:
        coarse = _tail_raw(model, n, t, knots // 2, COARSE_ORDER)
        v, c = np.asarray(val), np.asarray(coarse)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(v > 0, np.abs(v - c) / v, np.abs(v - c))
        err = float(np.max(rel))
        if err > tol:
            raise AccuracyError("grid refinement disagreement", value=val, coarse=coarse, rel_diff=err)
    return (val, err) if return_error else val


def pairwise_ratio(model, t, **kwargs):
    """``P[X1 + X2 > t] / sf(t)``."""
    return np.asarray(convolve_tail(model, 2, t, **kwargs)) / np.asarray(model.sf(t))


def long_tail_ratio(model, t, x):
    """``sf(t + x) / sf(t)``."""
    lt = np.asarray(model.logsf(t), dtype=float)
    if np.any(~np.isfinite(lt)):
        raise DomainError(f"sf(t) = 0 at t={t}")
    out = np.exp(np.asarray(model.logsf(np.asarray(t) + x)) - lt)
    return float(out) if np.ndim(out) == 0 else out


def conv_rows(model, n_values, t_values, **kwargs):
    """Diagnostic rows ``(n, t, conv_tail, n_Fbar, ratio)``."""
    rows = []
    t_values = np.asarray(t_values, dtype=float)
    for n in n_values:
        tails = np.atleast_1d(convolve_tail(model, n, t_values, **kwargs))
        nf = n * np.atleast_1d(model.sf(t_values))
        for t, p, q in zip(t_values, tails, nf):
            rows.append({"n": int(n), "t": float(t), "conv_tail": float(p), "n_Fbar": float(q),
                         "ratio": float(p / q) if q > 0 else math.nan})
    return rows


def rows_to_csv(rows, columns=("n", "t", "conv_tail", "n_Fbar", "ratio")):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(r[k]) if isinstance(r[k], float) else r[k] for k in columns})
    return buf.getvalue()


@dataclass
class ExistenceDemo:
    """Per-n smallest grid threshold beyond which ``|ratio - 1| <= tolerance(n)``.

    ``t_n[i]`` is None when no grid point qualifies; ``achieved[i]`` is the
    grid sup of ``|ratio - 1|`` beyond ``t_n[i]`` (or over the whole grid when
    not found).
    """

    n: list
    t_n: list
    achieved: list
    tolerance: list
    s_grid: list

    @property
    def found(self):
        return [t is not None for t in self.t_n]

    @property
    def nondecreasing(self):
        vals = [t for t in self.t_n if t is not None]
        return all(b >= a for a, b in zip(vals, vals[1:]))

    def to_json(self):
        rows = [{"n": n, "t_n": t, "found": t is not None, "achieved_sup": a, "tolerance": tol}
                for n, t, a, tol in zip(self.n, self.t_n, self.achieved, self.tolerance)]
        return json.dumps({"rows": rows, "nondecreasing": self.nondecreasing,
                           "grid_min": self.s_grid[0], "grid_max": self.s_grid[-1]}, indent=2)

    def first_missing(self):
        for n, t in zip(self.n, self.t_n):
            if t is None:
                return n
        raise NotFoundError("every n has a threshold")


def threshold_existence_demo(model, n_max, s_grid=None, tolerance=None, knots=DEFAULT_KNOTS, points=121):
    """Grid search for thresholds ``t_n`` with ``sup_{s >= t_n} |ratio - 1| <= tolerance(n)``.

    ``tolerance`` defaults to ``1/n``; the sup is over grid points only.
    ``s_grid`` defaults to ``points`` log-spaced values from the support start
    (or 1) to the ``1 - 1e-12`` quantile.
    """
    if not 1 <= n_max <= 6:
        raise DomainError(f"n_max must lie in [1, 6], got {n_max}")
    tolerance = tolerance or (lambda n: 1.0 / n)
    if s_grid is None:
        start = model.lower if np.isfinite(model.lower) and model.lower > 0 else 1.0
        stop = float(model.ppf(1.0 - 1e-12))
        s_grid = np.geomspace(start, stop, points)
    s_grid = np.asarray(s_grid, dtype=float)
    ns, ts, achieved, tols = [], [], [], []
    for n in range(1, n_max + 1):
        tail = np.atleast_1d(convolve_tail(model, n, s_grid, knots=knots))
        dev = np.abs(tail / (n * np.asarray(model.sf(s_grid))) - 1.0)
        sup_after = np.maximum.accumulate(dev[::-1])[::-1]
        tol = float(tolerance(n))
        ok = np.nonzero(sup_after <= tol)[0]
        ns.append(n)
        tols.append(tol)
        if ok.size:
            ts.append(float(s_grid[ok[0]]))
            achieved.append(float(sup_after[ok[0]]))
        else:
            ts.append(None)
            achieved.append(float(sup_after[0]))
    return ExistenceDemo(ns, ts, achieved, tols, [float(s) for s in s_grid])
