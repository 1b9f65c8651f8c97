"""
Exact Combinatorics Module

Big-integer Stirling numbers of the second kind, surjection and
no-singleton counts, and the Stirling/Newton inequality checks.
Every comparison is done on cross-multiplied integers.
"""

import logging
import threading
from fractions import Fraction
from math import comb, factorial, perm
from typing import List, Sequence, Tuple

from .errors import InvalidParameterError
from .reports import CheckResult, SuiteReport

logger = logging.getLogger(__name__)

BigNat = int
Rational = Fraction


def _require_nonnegative(**values: int):
    for name, value in values.items():
        if value < 0:
            raise InvalidParameterError(f"{name} must be >= 0, got {value}")


class StirlingTable:
    """
    Lazily grown triangle of S(n, k), 0 <= k <= n.

    Rows are immutable tuples appended under a lock, so a reader either
    sees a complete row or does not see it at all.
    """

    def __init__(self, max_n: int = 0):
        self._rows: List[Tuple[int, ...]] = [(1,)]
        self._lock = threading.Lock()
        self.ensure(max_n)

    @property
    def max_n(self) -> int:
        return len(self._rows) - 1

    def ensure(self, max_n: int):
        """Extend the triangle in place up to row max_n."""
        if max_n < len(self._rows):
            return
        with self._lock:
            rows = self._rows
            while len(rows) <= max_n:
                prev = rows[-1]
                n = len(rows)
                row = [0] * (n + 1)
                for k in range(1, n + 1):
                    # the element n is either alone or not
                    row[k] = prev[k - 1] + (k * prev[k] if k < n else 0)
                rows.append(tuple(row))
            logger.debug(f"Stirling table extended to n={self.max_n}")

    def row(self, n: int) -> Tuple[int, ...]:
        _require_nonnegative(n=n)
        self.ensure(n)
        return self._rows[n]

    def value(self, n: int, k: int) -> BigNat:
        _require_nonnegative(n=n, k=k)
        if k > n:
            return 0
        return self.row(n)[k]


# Module-wide table shared by every caller
stirling_table = StirlingTable()


def stirling2(n: int, k: int) -> BigNat:
    """Number of partitions of an n-set into k nonempty blocks."""
    return stirling_table.value(n, k)


def stirling_row(n: int) -> Tuple[BigNat, ...]:
    """S(n, 0), ..., S(n, n)."""
    return stirling_table.row(n)


def touchard_coefficients(n: int) -> List[BigNat]:
    """Coefficients S(n, 1..n) of the Touchard polynomial, indexed from 1."""
    if n < 1:
        raise InvalidParameterError(f"Touchard row needs n >= 1, got {n}")
    return list(stirling_row(n)[1:])


def surjection_count(n: int, k: int) -> BigNat:
    """Number of onto functions from an n-set to a k-set."""
    _require_nonnegative(n=n, k=k)
    return factorial(k) * stirling2(n, k)


def lonely_first_prob_ne(m: int, i: int) -> Rational:
    """
    Probability that passenger 1 travels alone when m passengers fill
    exactly i buses, all of them nonempty: S(m-1, i-1) / S(m, i).
    """
    if m < 1 or i < 1:
        raise InvalidParameterError(f"need m >= 1 and i >= 1, got m={m}, i={i}")
    if i > m:
        raise InvalidParameterError(f"no surjection from {m} passengers onto {i} buses")
    return Fraction(stirling2(m - 1, i - 1), stirling2(m, i))


def check_stirling_ratio_inequality(n: int, k: int) -> bool:
    """S(n-1,k-1)/S(n,k) <= S(n-1,k)/S(n,k+1), cross-multiplied."""
    if not 1 <= k < n:
        raise InvalidParameterError(f"need 1 <= k < n, got n={n}, k={k}")
    return stirling2(n - 1, k - 1) * stirling2(n, k + 1) <= stirling2(n - 1, k) * stirling2(n, k)


def check_reduced_stirling_inequality(n: int, k: int) -> bool:
    """(k+1) S(n-1,k-1) S(n-1,k+1) <= k S(n-1,k)^2, the recurrence-reduced form of the ratio inequality."""
    if not 1 <= k < n:
        raise InvalidParameterError(f"need 1 <= k < n, got n={n}, k={k}")
    return (k + 1) * stirling2(n - 1, k - 1) * stirling2(n - 1, k + 1) <= k * stirling2(n - 1, k) ** 2


def check_newton_inequality(coeffs: Sequence[BigNat], k: int) -> bool:
    """
    Newton's inequality for sum_{j=1}^m a_j x^j at index k:
    a_{k-1} a_{k+1} C(m,k)^2 <= a_k^2 C(m,k-1) C(m,k+1).

    coeffs[0] is a_1.
    """
    m = len(coeffs)
    if m < 3:
        raise InvalidParameterError(f"need at least 3 coefficients, got {m}")
    if not 1 < k < m:
        raise InvalidParameterError(f"index k={k} outside 1 < k < {m}")

    def a(j: int) -> int:
        return coeffs[j - 1]

    return a(k - 1) * a(k + 1) * comb(m, k) ** 2 <= a(k) ** 2 * comb(m, k - 1) * comb(m, k + 1)


def no_singleton_count(m: int, b: int) -> BigNat:
    """Functions from an m-set to b labeled bins with no bin of size exactly one."""
    _require_nonnegative(m=m, b=b)
    total = 0
    for i in range(min(m, b) + 1):
        term = comb(b, i) * comb(m, i) * factorial(i) * (b - i) ** (m - i)
        total += -term if i % 2 else term
    return total


def lonely_count_configs(n: int, k: int, j: int) -> BigNat:
    """Configurations of n passengers on k buses with exactly j lonely passengers."""
    _require_nonnegative(n=n, k=k, j=j)
    if j > min(n, k):
        raise InvalidParameterError(f"need 0 <= j <= min(n, k), got n={n}, k={k}, j={j}")
    return comb(n, j) * perm(k, j) * no_singleton_count(n - j, k - j)


def run_stirling_suite(n_max: int) -> SuiteReport:
    """Recurrence, surjection identity and the inequality family up to n_max."""
    if n_max < 2:
        raise InvalidParameterError(f"n_max must be >= 2, got {n_max}")
    logger.info(f"Running Stirling suite up to n={n_max}")
    stirling_table.ensure(n_max)
    report = SuiteReport("stirling", {"n_max": n_max})

    recurrence_failures = [
        (n, k) for n in range(1, n_max + 1) for k in range(1, n + 1)
        if stirling2(n, k) != stirling2(n - 1, k - 1) + k * stirling2(n - 1, k)
    ]
    report.add(CheckResult("recurrence", {"n_max": n_max}, not recurrence_failures,
                           {"first_failure": recurrence_failures[0]} if recurrence_failures else None))

    surjection_max = min(n_max, 50)
    surjection_failures = [
        (n, k) for n in range(surjection_max + 1) for k in range(surjection_max + 1)
        if surjection_count(n, k) != factorial(k) * stirling2(n, k)
    ]
    report.add(CheckResult("surjection-identity", {"n_max": surjection_max}, not surjection_failures,
                           {"first_failure": surjection_failures[0]} if surjection_failures else None))

    for name, check in (("ratio-inequality", check_stirling_ratio_inequality),
                        ("reduced-inequality", check_reduced_stirling_inequality)):
        failures = [(n, k) for n in range(2, n_max + 1) for k in range(1, n) if not check(n, k)]
        report.add(CheckResult(name, {"n_max": n_max}, not failures,
                               {"first_failure": failures[0]} if failures else None))

    newton_failures = []
    for n in range(3, n_max + 1):
        coeffs = touchard_coefficients(n)
        newton_failures.extend((n, k) for k in range(2, n) if not check_newton_inequality(coeffs, k))
    report.add(CheckResult("newton-touchard", {"n_max": n_max}, not newton_failures,
                           {"first_failure": newton_failures[0]} if newton_failures else None))

    monotone_failures = [
        (n, l) for n in range(2, n_max + 1) for l in range(2, n + 1)
        if lonely_first_prob_ne(n, l) < lonely_first_prob_ne(n, l - 1)
    ]
    report.add(CheckResult("first-passenger-monotone", {"n_max": n_max}, not monotone_failures,
                           {"first_failure": monotone_failures[0]} if monotone_failures else None))

    logger.info(f"Stirling suite finished: {report.summary()}")
    return report
