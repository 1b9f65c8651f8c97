"""
Monte Carlo tests. Estimates must land within 5 standard errors of the
exact value; every seed is fixed.
"""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from lonely_passenger.errors import InvalidParameterError
from lonely_passenger.mc_harness import (
    Estimate,
    count_lonely,
    estimate_mean_lonely,
    estimate_p,
    monotonicity_shadow,
    simulate_arrivals,
)


def test_simulate_arrivals():
    assert simulate_arrivals(5, 1, seed=9) == (1, 1, 1, 1, 1)
    single = simulate_arrivals(1, 6, seed=4)
    assert len(single) == 1 and 1 <= single[0] <= 6
    assert simulate_arrivals(10, 4, seed=21) == simulate_arrivals(10, 4, seed=21)
    with pytest.raises(InvalidParameterError):
        simulate_arrivals(0, 3, seed=1)


def test_count_lonely():
    batch = np.array([[1, 1, 2], [1, 2, 3], [2, 2, 2], [3, 1, 3]])
    assert count_lonely(batch).tolist() == [1, 3, 0, 1]
    assert count_lonely(np.zeros((2, 0), dtype=int)).tolist() == [0, 0]
    with pytest.raises(InvalidParameterError):
        count_lonely(np.array([1, 2, 3]))


def test_single_passenger_is_always_alone():
    estimate = estimate_p(1, 4, samples=10, seed=0)
    assert estimate.value == 1.0
    assert estimate.stderr == 0.0
    assert estimate.exact_ref == 1
    assert estimate.z_score == 0.0


def test_estimate_p_two_buses():
    estimate = estimate_p(2, 2, samples=20_000, seed=3)
    assert estimate.exact_ref == F(1, 2)
    assert estimate.within(5)


def test_mean_lonely_three_on_two():
    estimate = estimate_mean_lonely(3, 2, samples=20_000, seed=5)
    assert estimate.exact_ref == F(3, 4)
    assert estimate.within(5)


def test_parallel_and_serial_agree():
    serial = estimate_p(6, 4, samples=5_000, seed=17, batch_size=1_000)
    parallel = estimate_p(6, 4, samples=5_000, seed=17, batch_size=1_000, workers=2)
    assert serial == parallel


def test_exact_reference_cutoff():
    assert estimate_p(30, 10, samples=100, seed=1, exact_ref_max_n=20).exact_ref is None


def test_z_score():
    assert Estimate(0.5, 0.1, 100, F(1, 2)).z_score == 0.0
    assert Estimate(0.7, 0.1, 100, F(1, 2)).z_score == pytest.approx(2.0)
    assert Estimate(0.7, 0.0, 100, F(1, 2)).z_score == math.inf
    assert Estimate(0.7, 0.1, 100).z_score is None
    assert not Estimate(1.2, 0.1, 100, F(1, 2)).within(5)


@pytest.mark.parametrize("n,k", [(20, 50), (15, 30)])
def test_all_samples_lonely_is_judged_by_exact_variance(n, k):
    estimate = estimate_p(n, k, samples=100_000, seed=3)
    assert estimate.value == 1.0
    assert estimate.stderr == 0.0
    assert estimate.null_stderr == pytest.approx(
        math.sqrt(float(estimate.exact_ref) * (1 - float(estimate.exact_ref)) / 100_000))
    assert estimate.within(5)


def test_null_stderr_takes_precedence():
    estimate = Estimate(1.0, 0.0, 100, F(99, 100), null_stderr=math.sqrt(0.99 * 0.01 / 100))
    assert estimate.z_score == pytest.approx(0.01 / math.sqrt(0.99 * 0.01 / 100))
    assert Estimate(0.9, 0.0, 100, F(1), null_stderr=0.0).z_score == -math.inf
    assert Estimate(1.0, 0.0, 100, F(1), null_stderr=0.0).z_score == 0.0


def test_rejects_bad_sample_counts():
    with pytest.raises(InvalidParameterError):
        estimate_p(3, 2, samples=0, seed=1)


def test_shadow_report_shape():
    report = monotonicity_shadow(5, range(1, 4), samples=2_000, seed=2)
    assert [row["k"] for row in report.to_dict()["rows"]] == [1, 2, 3]
    assert report.estimates[0].value == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("n,k", [(3, 2), (5, 5), (10, 3), (20, 50), (20, 10), (15, 30)])
def test_spot_grid_within_five_sigma(n, k):
    assert estimate_p(n, k, samples=100_000, seed=3).within(5)


@pytest.mark.slow
def test_shadow_full_range():
    report = monotonicity_shadow(20, range(1, 11), samples=100_000, seed=3)
    assert len(report.estimates) == 10
    assert all(estimate.within(5) for estimate in report.estimates)
