import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from conftest import BUILTIN
from heavysum import rng
from heavysum.distmodel import (
    CenteredLognormal,
    Exponential,
    LogWeibull,
    RegularlyVarying,
    TabulatedPsi,
    b_sup,
    eta_reciprocal,
    load_model,
    model_from_spec,
    psi,
    quadrature_moments,
    representation_residual,
    row_sums,
    sample_sum,
    truncated_moments,
)
from heavysum.errors import ConfigError, DomainError

# mpmath, 30 digits: -log(erfc(log(1000 + e^0.5) / sqrt 2) / 2)
LOGNORMAL_PSI_1E3 = 26.7416931367183767994555832478


def test_pareto_psi_closed_form(pareto_half):
    assert psi(pareto_half, 1e4) == pytest.approx(0.5 * math.log(1e4), rel=1e-14)
    assert float(psi(pareto_half, 1e4)) == pytest.approx(4.60517, abs=5e-6)


def test_psi_zero_where_tail_is_one(pareto_half):
    assert psi(pareto_half, 0.5) == 0.0


class _UnitUniform(Exponential):
    def logsf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(np.clip(1.0 - np.asarray(t, dtype=float), 0.0, 1.0))


def test_psi_outside_support_raises():
    model = _UnitUniform()
    assert float(psi(model, 0.5)) == pytest.approx(math.log(2.0))
    with pytest.raises(DomainError):
        psi(model, 2.0)


def test_lognormal_psi_against_high_precision_normal_tail(lognormal):
    assert float(psi(lognormal, 1e3)) == pytest.approx(LOGNORMAL_PSI_1E3, rel=1e-12)


def test_eta_reciprocal(pareto_half):
    assert eta_reciprocal(pareto_half, 100.0) == pytest.approx(200.0)
    assert eta_reciprocal(Exponential(1.0), 3.0) == 1.0


def test_eta_reciprocal_zero_hazard_is_infinite():
    flat = TabulatedPsi((1.0, 2.0, 4.0), (0.5, 0.5, 1.0))
    assert math.isinf(eta_reciprocal(flat, 1.5))


def test_pareto_truncated_moments(pareto_half):
    mom = truncated_moments(pareto_half, 100.0)
    assert mom.method == "closed"
    assert mom.mu1 == pytest.approx(9.0, rel=1e-12)
    assert mom.mu2 == pytest.approx(333.0, rel=1e-12)


def test_moments_below_support_vanish(pareto_half):
    mom = truncated_moments(pareto_half, 0.5)
    assert mom.mu1 == 0.0 and mom.mu2 == 0.0


def test_symmetric_model_has_zero_first_moment():
    sym = RegularlyVarying(3.0, p=1.0)
    for w in (0.5, 2.0, 50.0, 1e4):
        assert truncated_moments(sym, w).mu1 == 0.0
        assert abs(quadrature_moments(sym, w).mu1) < 1e-10


@pytest.mark.parametrize("model", BUILTIN + [Exponential(2.0)], ids=lambda m: repr(m))
@pytest.mark.parametrize("w", [0.7, 3.0, 40.0, 1e3, 1e5])
def test_closed_moments_match_quadrature(model, w):
    closed = model.closed_moments(w)
    if closed is None:
        pytest.skip("no closed form")
    quad = quadrature_moments(model, w, rtol=1e-12)
    scale = max(closed[1], 1e-300)
    assert closed[1] == pytest.approx(quad.mu2, rel=1e-6, abs=1e-12)
    assert abs(closed[0] - quad.mu1) <= 1e-6 * max(abs(closed[0]), math.sqrt(scale) * 1e-6, 1e-12)


@pytest.mark.parametrize("model", BUILTIN, ids=lambda m: repr(m))
def test_moments_against_density_quadrature(model):
    # independent route: integrate x^k f(x) directly
    w = 25.0
    lo = max(-w, model.lower if np.isfinite(model.lower) else -w)
    pts = [p for p in (-1.0, 1.0, 0.0) if lo < p < w]
    mu = [
        sum(integrate.quad(lambda x: x**k * float(model.pdf(x)), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
            for a, b in zip([lo, *pts], [*pts, w]))
        for k in (1, 2)
    ]
    mom = truncated_moments(model, w)
    assert mom.mu1 == pytest.approx(mu[0], rel=1e-7, abs=1e-12)
    assert mom.mu2 == pytest.approx(mu[1], rel=1e-7)


@given(w=st.floats(0.01, 1e6))
@settings(max_examples=60, deadline=None)
def test_moment_invariants(w):
    for model in (RegularlyVarying(0.7, p=0.3), CenteredLognormal(1.0)):
        mom = truncated_moments(model, w)
        assert mom.mu2 >= 0.0
        assert abs(mom.mu1) <= math.sqrt(mom.mu2) * (1 + 1e-12) + 1e-300


@given(w=st.floats(0.01, 1e5), factor=st.floats(1.0, 100.0))
@settings(max_examples=60, deadline=None)
def test_second_moment_monotone(w, factor):
    model = RegularlyVarying(1.5, p=0.5)
    assert truncated_moments(model, w * factor).mu2 >= truncated_moments(model, w).mu2 * (1 - 1e-12)


@pytest.mark.parametrize("model", BUILTIN, ids=lambda m: repr(m))
def test_representation_closure(model):
    grid = np.logspace(1, 12, 12)
    assert np.max(representation_residual(model, grid)) <= 1e-6


@pytest.mark.parametrize("model", BUILTIN, ids=lambda m: repr(m))
def test_hazard_nonincreasing_and_b_bounded(model):
    grid = np.geomspace(1e-3, 1e15, 4000)
    e = np.asarray(model.eta(grid))
    assert model.monotone_hazard
    assert np.all(np.diff(e) <= 1e-15)
    assert e[-1] < 1e-12
    assert math.isfinite(b_sup(model))
    assert math.isfinite(model.b_oscillation())


@pytest.mark.parametrize("model", BUILTIN, ids=lambda m: repr(m))
def test_tails_are_consistent(model):
    grid = np.concatenate([-np.geomspace(1e4, 1e-3, 50), np.geomspace(1e-3, 1e12, 80)])
    sf = np.asarray(model.sf(grid))
    assert np.all(np.diff(sf) <= 0)
    below = np.asarray(model.cdf(grid))
    assert np.all(sf + below <= 1 + 1e-12)


def test_lognormal_hazard_formula(lognormal):
    x = 1e6
    assert float(lognormal.eta(x)) == pytest.approx(math.log(x) / x + 1.0 / (x * math.log(x)))


def test_lognormal_mean_is_zero(lognormal):
    assert truncated_moments(lognormal, 1e8).mu1 == pytest.approx(0.0, abs=1e-12)


def test_regularly_varying_mu1_ratio_limit():
    # mu1(t) / (t sf(t)) -> alpha / (1 - alpha) when p = 0
    model = RegularlyVarying(0.5)
    vals = [truncated_moments(model, t).mu1 / (t * float(model.sf(t))) for t in (1e2, 1e4, 1e8, 1e12)]
    assert np.all(np.diff(np.abs(np.array(vals) - 1.0)) < 0)
    assert vals[-1] == pytest.approx(1.0, rel=1e-5)


def test_regularly_varying_mu1_bound_with_left_tail():
    alpha, p = 0.5, 0.4
    model = RegularlyVarying(alpha, p)
    t = 1e10
    ratio = abs(truncated_moments(model, t).mu1) / (t * float(model.sf(t)))
    assert ratio <= (1 + p) * alpha / (1 - alpha)


def test_sample_sum_single_draw_is_inverse_cdf(pareto_half):
    u = rng.open_uniforms(3, 0, 1)
    assert sample_sum(pareto_half, 1, 3) == float(pareto_half.ppf(u)[0])


def test_sample_sum_deterministic(lognormal):
    assert sample_sum(lognormal, 5, 11, 7) == sample_sum(lognormal, 5, 11, 7)
    assert sample_sum(lognormal, 5, 11, 7) != sample_sum(lognormal, 5, 11, 8)


def test_sample_sum_rejects_empty_sum(pareto_half):
    with pytest.raises(DomainError):
        sample_sum(pareto_half, 0, 1)


def test_pareto_sample_mean_within_three_standard_errors():
    # alpha = 3: mean 3/2 and variance 3/4 are both finite
    model = RegularlyVarying(3.0)
    n = 100_000
    x = np.asarray(model.ppf(rng.open_uniforms(5, 0, n)))
    se = math.sqrt(0.75 / n)
    assert abs(x.mean() - 1.5) < 3 * se


@pytest.mark.parametrize("model", [RegularlyVarying(1.5), CenteredLognormal(1.0), LogWeibull(2.0)],
                         ids=lambda m: repr(m))
def test_inverse_transform_ks(model):
    x = np.asarray(model.ppf(rng.open_uniforms(9, 0, 1_000_000)))
    res = stats.kstest(x, lambda v: np.asarray(model.cdf(v)))
    assert res.statistic < 1.63 / math.sqrt(x.size)


def test_generic_ppf_inverts_cdf():
    model = LogWeibull(1.5)
    u = np.array([1e-9, 0.1, 0.5, 0.9, 1 - 1e-9])
    x = super(LogWeibull, model).ppf(u)
    assert np.allclose(model.cdf(x), u, rtol=1e-9, atol=1e-15)


def test_lognormal_ppf_tail_precision(lognormal):
    x = float(lognormal.ppf(1 - 1e-12))
    assert float(lognormal.sf(x)) == pytest.approx(1e-12, rel=1e-3)


def test_row_sums_left_to_right():
    x = np.array([[1e16, 1.0, -1e16]])
    assert row_sums(x)[0] == (1e16 + 1.0) - 1e16


def test_streams_do_not_overlap():
    a = rng.uniforms(1, 0, 1000)
    b = rng.uniforms(1, 1, 1000)
    assert not np.intersect1d(a, b).size
    assert np.array_equal(rng.uniforms(1, 0, 10), a[:10])


def test_tabulated_model_round_trip(tmp_path):
    t = np.geomspace(1.0, 1e4, 30)
    table = 1.2 * np.log1p(t)
    model = TabulatedPsi(tuple(t), tuple(table))
    assert float(model.psi(1e4)) == pytest.approx(1.2 * math.log1p(1e4), rel=1e-12)
    assert float(model.psi(1e6)) > float(model.psi(1e4))
    u = np.array([0.1, 0.5, 0.99])
    assert np.allclose(model.cdf(model.ppf(u)), u, rtol=1e-9)
    path = tmp_path / "psi.csv"
    path.write_text("t,psi\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, table)))
    spec = tmp_path / "model.yaml"
    spec.write_text("model:\n  family: tabulated\n  table_file: psi.csv\n")
    assert load_model(spec) == model


def test_tabulated_rejects_non_monotone_table():
    with pytest.raises(ConfigError):
        TabulatedPsi((1.0, 2.0, 3.0), (1.0, 0.5, 2.0))


def test_model_spec_validation():
    assert model_from_spec({"family": "pareto", "alpha": 2}) == RegularlyVarying(2.0)
    with pytest.raises(ConfigError):
        model_from_spec({"family": "pareto", "alpha": 2, "beta": 1})
    with pytest.raises(ConfigError):
        model_from_spec({"family": "weibull"})
    with pytest.raises(ConfigError):
        model_from_spec({"family": "lognormal", "sigma": -1})


def test_models_are_hashable_values():
    assert hash(CenteredLognormal(1.0)) == hash(CenteredLognormal(1.0))
    assert RegularlyVarying(1.0) != RegularlyVarying(1.0, 0.5)


def test_mpmath_cross_check_of_lognormal_left_tail(lognormal):
    x = 1.0
    beta = mp.e ** mp.mpf("0.5")
    expected = mp.ncdf(mp.log(beta - x))
    assert float(lognormal.left_tail(x)) == pytest.approx(float(expected), rel=1e-12)
