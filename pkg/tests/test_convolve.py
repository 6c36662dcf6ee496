import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import pareto_pair_tail
from heavysum import rng
from heavysum.convolve import (
    ConvolutionGrid,
    convolution_grid,
    convolve_tail,
    conv_rows,
    long_tail_ratio,
    model_source,
    pairwise_ratio,
    rows_to_csv,
    sum_tail,
    threshold_existence_demo,
)
from heavysum.distmodel import CenteredLognormal, Exponential, RegularlyVarying, row_sums
from heavysum.errors import AccuracyError, DomainError, NotFoundError

# mpmath quad, 30 digits, for Pareto(1) on [1, inf)
PARETO_TRIPLE = {10.0: 0.43137304203174598, 100.0: 0.03284013547932938, 1e4: 0.00030055305225751112}
# mpmath quad of the lognormal pair tail divided by sf(t)
LOGNORMAL_PAIR = {10.0: 2.08332298307, 100.0: 2.01689376245, 1e3: 2.00027094039, 1e4: 2.00000446400}


@pytest.mark.parametrize("t", [100.0, 1e3, 1e4])
def test_pair_tail_closed_form(pareto_one, t):
    assert float(convolve_tail(pareto_one, 2, t)) == pytest.approx(pareto_pair_tail(t), rel=1e-10)


def test_pair_ratio_example(pareto_one):
    assert float(pairwise_ratio(pareto_one, 100.0)) == pytest.approx(2.09190, abs=1e-5)
    assert abs(float(pairwise_ratio(pareto_one, 1e4)) - 2.0) < 5e-3


@pytest.mark.parametrize("t,expected", sorted(PARETO_TRIPLE.items()))
def test_triple_tail_against_high_precision(pareto_one, t, expected):
    assert float(convolve_tail(pareto_one, 3, t)) == pytest.approx(expected, rel=1e-6)


def test_lognormal_pair_ratios(lognormal):
    t = np.array(sorted(LOGNORMAL_PAIR))
    got = pairwise_ratio(lognormal, t)
    assert got == pytest.approx([LOGNORMAL_PAIR[x] for x in t], rel=1e-8)
    assert np.all(np.diff(got) < 0) and np.all(got > 2)


def test_pair_ratio_saturates_below_support(pareto_one):
    assert float(pairwise_ratio(pareto_one, 0.5)) == 1.0


def test_single_summand_is_the_model(lognormal):
    t = np.array([0.0, 1.0, 100.0])
    assert np.array_equal(convolve_tail(lognormal, 1, t), lognormal.sf(t))


def test_exponential_triple_is_erlang(exponential):
    t = np.array([0.5, 1.0, 5.0, 20.0, 60.0])
    erlang = np.exp(-t) * (1 + t + t**2 / 2)
    assert convolve_tail(exponential, 3, t) == pytest.approx(erlang, rel=1e-8)


def test_lognormal_triple_against_simulation(lognormal):
    n = 2_000_000
    x = lognormal.ppf(rng.open_uniforms(17, 0, 3 * n)).reshape(n, 3)
    hits = np.count_nonzero(row_sums(x) > 10.0)
    p = hits / n
    se = math.sqrt(p * (1 - p) / n)
    assert abs(float(convolve_tail(lognormal, 3, 10.0)) - p) < 4 * se


def test_grid_conserves_mass(pareto_one, lognormal):
    for model in (pareto_one, lognormal):
        grid = convolution_grid(model, 3, 1e6)
        assert grid.total_mass == pytest.approx(1.0, abs=1e-12)
        assert np.all(grid.masses >= 0)


def test_grid_density_integrates_to_cell_mass(pareto_one):
    from scipy import integrate
    grid = convolution_grid(pareto_one, 2, 1e4)
    a, b = 5.0, 50.0
    mass = integrate.quad(lambda u: float(grid.pdf(u)), a, b, limit=200)[0]
    assert mass == pytest.approx(float(grid.sf(a) - grid.sf(b)), rel=1e-4)


def test_grid_tail_closure_follows_model(pareto_one):
    grid = convolution_grid(pareto_one, 2, 1e3)
    beyond = np.array([2e3, 1e5, 1e9])
    expected = grid.tail_mass * np.asarray(pareto_one.sf(beyond)) / float(pareto_one.sf(grid.hi))
    assert grid.sf(beyond) == pytest.approx(expected, rel=1e-12)
    assert float(grid.sf(0.5)) == 1.0


def test_associativity(pareto_one):
    # (X1 + X2) + X3 against X1 + (X2 + X3) with the pair grid on the other side
    t = np.array([10.0, 100.0, 1e3])
    src = model_source(pareto_one)
    pair = convolution_grid(pareto_one, 2, 1e4)
    left = sum_tail(pair, src, t)
    right = sum_tail(src, pair, t)
    assert left == pytest.approx(right, rel=1e-6)


@given(t=st.floats(2.5, 1e5), dt=st.floats(0.01, 1e3))
@settings(max_examples=40, deadline=None)
def test_tail_monotone_in_t(t, dt):
    model = RegularlyVarying(1.0)
    a, b = convolve_tail(model, 2, np.array([t, t + dt]), check=False)
    assert b <= a


def test_tail_monotone_in_n(pareto_one):
    t = np.array([20.0, 200.0, 2e3])
    tails = [np.asarray(convolve_tail(pareto_one, n, t)) for n in (1, 2, 3, 4)]
    for lo, hi in zip(tails, tails[1:]):
        assert np.all(hi > lo)


def test_ratio_approaches_n(pareto_one):
    for n in (2, 3, 4):
        r = float(convolve_tail(pareto_one, n, 1e5)) / (n * float(pareto_one.sf(1e5)))
        assert r == pytest.approx(1.0, abs=2e-3)


def test_refinement_error_reported(lognormal):
    val, err = convolve_tail(lognormal, 3, np.array([10.0, 100.0]), return_error=True)
    assert err < 1e-6
    assert np.all(val > 0)


def test_refinement_disagreement_raises(pareto_one):
    with pytest.raises(AccuracyError) as info:
        convolve_tail(pareto_one, 3, np.array([3.5]), knots=16, tol=1e-14)
    assert info.value.diagnostics["rel_diff"] > 1e-14


def test_n_range(pareto_one):
    for n in (0, 9, 2.5):
        with pytest.raises(DomainError):
            convolve_tail(pareto_one, n, 10.0)


def test_long_tail_ratio_examples(pareto_one, exponential):
    assert long_tail_ratio(pareto_one, 1e3, 1.0) == pytest.approx(1e3 / 1001, rel=1e-14)
    assert long_tail_ratio(exponential, 50.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert long_tail_ratio(pareto_one, 10.0, 0.0) == 1.0
    with pytest.raises(DomainError):
        long_tail_ratio(_Bounded(), 5.0, 1.0)


class _Bounded(Exponential):
    def logsf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.clip(1.0 - t, 0.0, 1.0))


def test_exponential_pair_ratio_grows(exponential):
    t = np.array([5.0, 20.0, 40.0])
    assert pairwise_ratio(exponential, t) == pytest.approx(1 + t, rel=1e-8)


def test_rows_and_csv(pareto_one):
    rows = conv_rows(pareto_one, [1, 2], [100.0, 1e3])
    assert len(rows) == 4
    assert rows[2]["conv_tail"] == pytest.approx(pareto_pair_tail(100.0), rel=1e-10)
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "n,t,conv_tail,n_Fbar,ratio"


def test_existence_demo_heavy_tail():
    demo = threshold_existence_demo(RegularlyVarying(1.5), 4)
    assert all(demo.found)
    assert demo.t_n[0] == demo.s_grid[0] and demo.achieved[0] == 0.0
    assert demo.t_n[1] == pytest.approx(8.576973743413792, rel=1e-12)
    assert demo.nondecreasing
    for n, ach in zip(demo.n, demo.achieved):
        assert ach <= 1 / n
    with pytest.raises(NotFoundError):
        demo.first_missing()
    assert json.loads(demo.to_json())["rows"][3]["found"]


def test_existence_demo_light_tail(exponential):
    demo = threshold_existence_demo(exponential, 4)
    assert demo.found == [True, False, False, False]
    assert demo.first_missing() == 2


def test_existence_demo_limits(pareto_one):
    with pytest.raises(DomainError):
        threshold_existence_demo(pareto_one, 7)


def test_grid_rejects_single_order(pareto_one):
    with pytest.raises(DomainError):
        convolution_grid(pareto_one, 1, 100.0)


def test_grid_is_cached(pareto_one):
    assert convolution_grid(pareto_one, 2, 1e3) is convolution_grid(pareto_one, 2, 1e3)
    assert isinstance(convolution_grid(pareto_one, 2, 1e3), ConvolutionGrid)
