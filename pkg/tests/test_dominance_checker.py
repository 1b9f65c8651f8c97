"""
Tests for exact stochastic-order verdicts, the theorem grid and the lemma suite.
"""

from fractions import Fraction as F

import jsonschema
import pytest

from lonely_passenger.chain_engine import lonely_dist, p_lonely
from lonely_passenger.dominance_checker import (
    CELL_SCHEMA,
    DominanceRelation,
    cdf_dominates,
    check_forward_nonempty_dominance,
    check_ne_lonely_dominance,
    check_ne_nonempty_dominance,
    check_total_probability,
    check_transitivity,
    distinct_unless_trivial,
    dominates,
    run_lemma_suite,
    verify_theorem,
)
from lonely_passenger.errors import DenominatorError, DistributionError, InvalidParameterError


def test_equal_laws():
    verdict = cdf_dominates(lonely_dist(4, 3), lonely_dist(4, 3))
    assert verdict.relation is DominanceRelation.EQUAL
    assert verdict.witness is None


def test_more_buses_dominate_strictly():
    verdict = cdf_dominates(lonely_dist(3, 3), lonely_dist(3, 2))
    assert verdict.relation is DominanceRelation.STRICT
    # tails at u=1: 24/27 against 3/4
    assert verdict.witness == 1


def test_point_masses():
    verdict = cdf_dominates({0: 1}, {1: 1})
    assert verdict.relation is DominanceRelation.DOMINATED
    assert verdict.witness == 1
    assert not dominates({0: 1}, {1: 1})
    assert cdf_dominates({1: 1}, {0: 1}).relation is DominanceRelation.STRICT


def test_crossing_tails():
    verdict = cdf_dominates({0: F(1, 2), 2: F(1, 2)}, {1: 1})
    assert verdict.relation is DominanceRelation.INCOMPARABLE
    assert verdict.witness == 1


def test_bad_inputs():
    with pytest.raises(DistributionError):
        cdf_dominates({0: F(1, 2)}, {0: 1})
    with pytest.raises(InvalidParameterError):
        cdf_dominates({-1: 1}, {0: 1})


def test_distinct_unless_trivial():
    assert distinct_unless_trivial(p_lonely(3, 2), p_lonely(3, 3), 2, 3)
    assert distinct_unless_trivial(F(1), F(1), 5, 1)
    assert distinct_unless_trivial(F(0), F(0), 2, 4)
    with pytest.raises(DenominatorError):
        distinct_unless_trivial(F(1, 3), F(1, 2), 2, 3)
    with pytest.raises(DenominatorError):
        distinct_unless_trivial(F(1, 2), F(1, 5), 1, 2)


def test_theorem_small_grid():
    report = verify_theorem(3, 3)
    assert report.passed
    cells = {(cell.n, cell.k): cell.to_dict() for cell in report.cells}
    assert set(cells) == {(2, 1), (2, 2), (3, 1), (3, 2)}
    assert cells[(3, 2)]["p_lo"] == "3/4"
    assert cells[(3, 2)]["p_hi"] == "8/9"
    for cell in cells.values():
        jsonschema.validate(cell, CELL_SCHEMA)


def test_theorem_with_single_passenger_row():
    report = verify_theorem(3, 3, include_n1=True)
    assert report.passed
    first_row = [cell for cell in report.cells if cell.n == 1]
    assert all(cell.verdict.relation is DominanceRelation.EQUAL for cell in first_row)


def test_theorem_acceptance_grid():
    report = verify_theorem(12, 8)
    assert report.passed
    assert report.summary()["total"] == 11 * 7
    assert all(cell.verdict.relation is DominanceRelation.STRICT for cell in report.cells)


def test_theorem_rejects_bad_bounds():
    with pytest.raises(InvalidParameterError):
        verify_theorem(1, 3)


def test_total_probability_identity():
    for n in range(1, 9):
        for k in range(1, 6):
            assert check_total_probability(n, k).passed


def test_distribution_level_dominance():
    for n in range(2, 8):
        for l in range(2, n + 1):
            assert check_ne_lonely_dominance(l, n).passed
            assert check_ne_nonempty_dominance(l, n).passed
        for k in range(1, 5):
            assert check_forward_nonempty_dominance(n, k).passed
            assert check_transitivity(n, k).passed


def test_lemma_suite_small():
    report = run_lemma_suite(n_max=6, k_max=4, h_n_max=7)
    assert report.passed
    assert {check.name for check in report.checks} >= {
        "prob-not-equal", "total-probability", "reverse-kernel", "h-transform",
        "first-lonely-expectation", "ne-lonely-dominance", "ne-nonempty-dominance",
        "forward-nonempty-dominance", "transitivity",
    }


@pytest.mark.slow
def test_lemma_suite_full():
    assert run_lemma_suite().passed
