"""
Tests for the brute-force oracle, including the conditioning caveat:
conditioning on the number of nonempty buses is symmetric, conditioning
on which buses are used is not.
"""

from fractions import Fraction as F

import pytest

from lonely_passenger.chain_engine import PairState, joint_dist_by_time, lonely_dist, ne_nonempty_dist
from lonely_passenger.errors import NullConditioningError, SizeLimitExceeded, UnknownFunctionalError
from lonely_passenger.exact_combinatorics import surjection_count
from lonely_passenger.oracle import (
    Functional,
    check_conditioning_lemma,
    check_first_lonely,
    closed_form_final_laws,
    conditioned_law,
    enumerable_cells,
    enumerate_joint,
    iter_configurations,
    lonely_path,
    ne_enumerate,
    ne_law,
    ne_slice,
    ne_space_size,
    nonempty_path,
    run_oracle_suite,
)


def test_paths_of_one_configuration():
    assert nonempty_path((1, 1, 2)) == (0, 1, 1, 2)
    assert lonely_path((1, 1, 2)) == (0, 1, 0, 1)
    assert lonely_path((3, 1, 3, 3)) == (0, 1, 2, 1, 1)


def test_iter_configurations_odometer_order():
    assert list(iter_configurations(2, 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert list(iter_configurations(0, 3)) == [()]


def test_enumerate_joint_spot_values():
    assert enumerate_joint(3, 2)[3] == {PairState(3, 1, 0): F(2, 8), PairState(3, 2, 1): F(6, 8)}
    assert enumerate_joint(2, 2)[1] == {PairState(1, 1, 1): 1}
    assert enumerate_joint(3, 3)[3] == {
        PairState(3, 1, 0): F(3, 27),
        PairState(3, 2, 1): F(18, 27),
        PairState(3, 3, 3): F(6, 27),
    }


@pytest.mark.parametrize("n,k", [(1, 1), (4, 1), (5, 2), (4, 3), (3, 5), (6, 4)])
def test_enumeration_equals_dp(n, k):
    assert enumerate_joint(n, k) == joint_dist_by_time(n, k)


def test_enumeration_with_workers_equals_serial():
    assert enumerate_joint(5, 3, workers=2) == enumerate_joint(5, 3)


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 8) for k in range(1, 6)])
def test_closed_form_final_laws_match_enumeration(n, k):
    nonempty_law, lonely_law = closed_form_final_laws(n, k)
    final = enumerate_joint(n, k)[n]
    assert final.map(lambda s: s.n_buses) == nonempty_law
    assert final.map(lambda s: s.lonely) == lonely_law == lonely_dist(n, k)


def test_closed_form_final_laws_spot_values():
    nonempty_law, lonely_law = closed_form_final_laws(3, 2)
    assert nonempty_law == {1: F(1, 4), 2: F(3, 4)}
    assert lonely_law == {0: F(1, 4), 1: F(3, 4)}


def test_first_lonely_frequency_matches_stirling_ratio():
    assert ne_law(2, 3, Functional.FIRST_LONELY) == {0: F(2, 3), 1: F(1, 3)}
    for m in range(1, 8):
        for i in range(1, m + 1):
            assert check_first_lonely(i, m)


@pytest.mark.slow
def test_first_lonely_frequency_full_range():
    for m, i in enumerable_cells(1_000_000):
        if i <= m:
            assert check_first_lonely(i, m, limit=1_000_000)


def test_size_limit():
    with pytest.raises(SizeLimitExceeded) as excinfo:
        enumerate_joint(10, 4, limit=1000)
    assert excinfo.value.size == 4 ** 10
    assert excinfo.value.limit == 1000


def test_enumerable_cells():
    cells = set(enumerable_cells(30, k_max=4, n_max=6))
    assert (3, 3) in cells and (4, 2) in cells
    assert (4, 3) not in cells
    assert {n for n, k in cells if k == 1} == set(range(1, 7))
    default = set(enumerable_cells(1_000_000))
    assert max(k for _, k in default) == 12
    assert (5, 12) in default and (6, 12) not in default


def test_conditioned_law_examples():
    assert conditioned_law(3, 3, 2, Functional.FINAL_L) == {1: 1}
    assert ne_law(2, 3, Functional.FINAL_L) == {1: 1}
    for n in range(1, 5):
        assert conditioned_law(n, 5, n, "final-l") == {n: 1}


def test_conditioned_law_errors():
    with pytest.raises(UnknownFunctionalError):
        conditioned_law(3, 3, 2, "b1-equals-b2")
    with pytest.raises(NullConditioningError):
        conditioned_law(2, 3, 3, Functional.N_PATH)


def test_first_lonely_functional():
    # NE(2,3): passenger 1 is alone in 2 of the 6 surjections
    assert ne_law(2, 3, Functional.FIRST_LONELY) == {0: F(2, 3), 1: F(1, 3)}


@pytest.mark.parametrize("functional", list(Functional))
def test_conditioning_lemma_small_grid(functional):
    for n, k in [(3, 3), (4, 3), (4, 4), (5, 2), (5, 3)]:
        for l in range(1, min(n, k) + 1):
            assert check_conditioning_lemma(n, k, l, functional)


def test_ne_enumerate():
    law = ne_enumerate(2, 3)
    assert ne_slice(law, 2).map(lambda s: s.n_buses) == {1: F(1, 3), 2: F(2, 3)}
    assert ne_enumerate(2, 2).map(lambda paths: paths[1][-1]) == {2: 1}
    assert ne_enumerate(4, 4) == {((0, 1, 2, 3, 4), (0, 1, 2, 3, 4)): 1}


def test_ne_marginals_and_space_size():
    for n in range(1, 7):
        for l in range(1, n + 1):
            assert ne_space_size(l, n) == surjection_count(n, l)
            law = ne_enumerate(l, n)
            for m in range(n + 1):
                assert ne_slice(law, m).map(lambda s: s.n_buses) == ne_nonempty_dist(l, n, m)


def test_conditioning_on_bus_labels_is_not_symmetric():
    configs = list(iter_configurations(3, 3))

    at_most_two = [c for c in configs if nonempty_path(c)[-1] <= 2]
    together = F(sum(c[0] == c[1] for c in at_most_two), len(at_most_two))
    assert together == F(3, 7)

    only_first_two_buses = [c for c in configs if set(c) <= {1, 2}]
    together_labelled = F(sum(c[0] == c[1] for c in only_first_two_buses), len(only_first_two_buses))
    assert together_labelled == F(1, 2)

    assert together != together_labelled


def test_oracle_suite_small():
    report = run_oracle_suite(limit=2000, ne_n_max=6)
    assert report.passed
    names = {check.name for check in report.checks}
    assert names == {"dp-equals-enumeration", "nonempty-marginal", "lonely-count-marginal",
                     "conditioning-lemma", "ne-first-lonely", "ne-space"}


@pytest.mark.slow
def test_oracle_suite_full():
    assert run_oracle_suite(limit=1_000_000).passed
