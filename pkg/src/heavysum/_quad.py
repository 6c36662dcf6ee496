"""Quadrature helpers: decade-split adaptive quadrature and clustered Gauss rules."""

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError


def decade_points(lo, hi):
    """Powers of ten (and their negatives) strictly inside ``(lo, hi)``, plus 0."""
    pts = []
    if lo < 0.0 < hi:
        pts.append(0.0)
    for sign in (1.0, -1.0):
        a, b = (lo, hi) if sign > 0 else (-hi, -lo)
        a = max(a, 1e-300)
        if b <= a:
            continue
        k0 = math.floor(math.log10(a)) + 1
        k1 = math.ceil(math.log10(b)) - 1
        pts.extend(sign * 10.0**k for k in range(k0, k1 + 1))
    return sorted(p for p in pts if lo < p < hi)


def integrate_split(func, lo, hi, points=(), rtol=1e-10, atol=0.0, limit=200):
    """Adaptive quadrature of ``func`` over ``[lo, hi]``.

    The range is cut at decade boundaries and at ``points`` (support edges,
    kinks) before calling QUADPACK on every piece. Returns ``(value, abserr)``
    and raises :class:`QuadratureError` when the combined error estimate
    exceeds ``max(rtol * |value|, atol)`` by more than a factor of 100.
    """
    if hi <= lo:
        return 0.0, 0.0
    cuts = set(decade_points(lo, hi))
    cuts.update(p for p in points if lo < p < hi)
    edges = [lo, *sorted(cuts), hi]
    values, errors = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(func, a, b, epsabs=atol, epsrel=rtol, limit=limit)
            values.append(v)
            errors.append(e)
    value = math.fsum(values)
    err = math.fsum(errors)
    if not np.isfinite(value) or err > 100.0 * max(rtol * abs(value), atol, 1e-300):
        worst = int(np.argmax(errors))
        raise QuadratureError(
            "quadrature did not converge",
            value=value,
            abserr=err,
            interval=(lo, hi),
            worst_piece=(edges[worst], edges[worst + 1]),
        )
    return value, err


@lru_cache(maxsize=None)
def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def _half_offsets(ratio, min_frac):
    # geometric panel edges from 0 to 1/2, first panel [0, min_frac]
    edges = [0.0, min_frac]
    while edges[-1] * ratio < 0.5:
        edges.append(edges[-1] * ratio)
    edges.append(0.5)
    return np.array(edges)


@lru_cache(maxsize=None)
def half_rule(order=16, ratio=4.0, min_frac=1e-14):
    """Composite Gauss-Legendre rule on [0, 1/2], refined geometrically toward 0.

    Applied from both ends of an interval it handles integrands with
    power-law behaviour at either endpoint. Returns read-only
    ``(fractions, weights)``; fractions are distances from the endpoint in
    units of the interval length.
    """
    gx, gw = _gauss_legendre(order)
    e = _half_offsets(ratio, min_frac)
    widths = np.diff(e)
    frac = (e[:-1, None] + widths[:, None] * gx).ravel()
    wts = (widths[:, None] * gw).ravel()
    frac.setflags(write=False)
    wts.setflags(write=False)
    return frac, wts
