import json
import math

import pytest

from conftest import pareto_pair_tail
from heavysum.distmodel import CenteredLognormal, RegularlyVarying
from heavysum.errors import DomainError
from heavysum.simulate import (
    MIN_TRIALS,
    convergence_table,
    estimate,
    estimate_bigjump,
    estimate_crude,
    ratio_sweep,
    results_to_csv,
    results_to_json,
)


def test_crude_covers_pair_closed_form(pareto_one):
    res = estimate_crude(pareto_one, 2, 100.0, 1_000_000, seed=1)
    assert res.ci95_lo <= pareto_pair_tail(100.0) <= res.ci95_hi
    assert res.hits == round(res.p_hat * res.trials)


def test_bigjump_covers_pair_closed_form(pareto_one):
    res = estimate_bigjump(pareto_one, 2, 1e3, 100_000, seed=2)
    assert res.ci99_lo <= pareto_pair_tail(1e3) <= res.ci99_hi


def test_bigjump_far_tail_pair(pareto_one):
    exact = pareto_pair_tail(1e4)
    big = estimate_bigjump(pareto_one, 2, 1e4, 100_000, seed=1)
    crude = estimate_crude(pareto_one, 2, 1e4, 100_000, seed=1)
    assert big.ci99_lo <= exact <= big.ci99_hi
    assert big.std_err**2 * 10 <= crude.std_err**2


def test_bigjump_reduces_variance(pareto_half):
    s = 1e4
    crude = estimate_crude(pareto_half, 5, s, 100_000, seed=4)
    big = estimate_bigjump(pareto_half, 5, s, 100_000, seed=4)
    assert big.std_err**2 * 10 <= crude.std_err**2


@pytest.mark.parametrize("n", [2, 5, 10])
@pytest.mark.parametrize("s", [1e3, 1e5, 1e7])
def test_estimators_agree(pareto_half, n, s):
    if n * float(pareto_half.sf(s)) >= 0.5:
        pytest.skip("not a tail event")
    crude = estimate_crude(pareto_half, n, s, 200_000, seed=5)
    big = estimate_bigjump(pareto_half, n, s, 200_000, seed=6)
    se = math.hypot(crude.std_err, big.std_err)
    if crude.hits < 30:
        assert big.p_hat <= crude.ci99_hi
    else:
        assert abs(crude.p_hat - big.p_hat) <= 4 * se


def test_single_summand(pareto_half):
    big = estimate_bigjump(pareto_half, 1, 400.0, 5000, seed=0)
    assert big.ratio == 1.0 and big.std_err == 0.0
    crude = estimate_crude(pareto_half, 1, 400.0, 200_000, seed=0)
    lo, hi = crude.ratio_ci99
    assert lo <= 1.0 <= hi


def test_deterministic_and_thread_invariant(lognormal):
    args = (lognormal, 4, 50.0, 50_000, 9)
    for fn in (estimate_crude, estimate_bigjump):
        one = fn(*args)
        assert fn(*args) == one
        assert fn(*args, threads=4) == one
    assert estimate_bigjump(lognormal, 4, 50.0, 50_000, 10) != estimate_bigjump(*args)


def test_interval_calibration(pareto_one):
    exact = pareto_pair_tail(100.0)
    covered = 0
    for k in range(200):
        r = estimate_crude(pareto_one, 2, 100.0, 20_000, seed=k)
        covered += r.ci95_lo <= exact <= r.ci95_hi
    assert covered >= 180


def test_bigjump_interval_calibration(pareto_one):
    exact = pareto_pair_tail(100.0)
    hits = 0
    for k in range(200):
        r = estimate_bigjump(pareto_one, 2, 100.0, 5_000, seed=k)
        hits += r.ci95_lo <= exact <= r.ci95_hi
    assert hits >= 180


def test_zero_hits_gives_one_sided_bound(pareto_one):
    res = estimate_crude(pareto_one, 2, 1e12, 1000, seed=0)
    assert res.hits == 0 and res.p_hat == 0.0
    assert res.ci95_hi == pytest.approx(1 - 0.05 ** (1 / 1000))
    assert res.ci99_hi == pytest.approx(1 - 0.01 ** (1 / 1000))


def test_few_hits_use_score_interval(pareto_one):
    res = estimate_crude(pareto_one, 2, 2e3, 10_000, seed=3)
    assert 0 < res.hits < 30
    assert res.ci95_lo > 0 and res.ci95_lo <= res.p_hat <= res.ci95_hi


def test_argument_checks(pareto_one):
    with pytest.raises(DomainError):
        estimate_crude(pareto_one, 0, 10.0, 5000, 0)
    with pytest.raises(DomainError):
        estimate_crude(pareto_one, 2, 10.0, MIN_TRIALS - 1, 0)
    with pytest.raises(DomainError):
        estimate_bigjump(pareto_one, 2, 10.0, 5000, -1)
    with pytest.raises(DomainError):
        estimate(pareto_one, 2, 10.0, 5000, 0, estimator="splitting")


def test_lognormal_sweep_near_one():
    model = CenteredLognormal(1.0)
    res = ratio_sweep(model, [100, 1000], {"functional": "lognormal_rule", "delta": 0.01}, 50_000, seed=3)
    for r in res:
        assert abs(r.ratio - 1) < 0.1
        assert r.n * math.log(r.s) ** 3 / r.s**2 <= 0.01
    rows = convergence_table(res)
    assert [row["n"] for row in rows] == [100, 1000]
    assert rows[1]["abs_dev"] < rows[0]["abs_dev"]
    assert rows[0]["abs_dev"] == pytest.approx(abs(res[0].ratio - 1))


def test_sweep_with_callable_rule(pareto_half):
    res = ratio_sweep(pareto_half, [2, 5], lambda n: (n / 1e-3) ** 2, 20_000, seed=1)
    assert [r.s for r in res] == [4e6, 2.5e7]
    assert all(r.n_fbar == pytest.approx(1e-3) for r in res)


def test_outputs(pareto_half):
    res = [estimate_bigjump(pareto_half, 2, 1e4, 2000, 0), estimate_crude(pareto_half, 2, 1e4, 2000, 0)]
    text = results_to_csv(res)
    assert text.splitlines()[0] == "estimator,n,s,trials,p_hat,ci95_lo,ci95_hi,ratio,seed"
    assert "np.float64" not in text
    data = json.loads(results_to_json(res))
    assert data[0]["estimator"] == "bigjump" and data[1]["hits"] >= 0
    assert data[0]["ratio"] == pytest.approx(res[0].ratio)
