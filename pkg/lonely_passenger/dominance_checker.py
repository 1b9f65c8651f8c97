"""
Dominance Checker Module

Exact first-order stochastic dominance between integer-valued laws, the
grid check that adding a bus makes lonely passengers strictly more likely,
and the supporting identities (reverse kernel, h-transform, total
probability, conditioned dominance).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional

import jsonschema

from .chain_engine import (
    ExactDist,
    first_lonely_expectation,
    joint_dist_by_time,
    lonely_dist,
    ne_final_lonely_dist,
    ne_nonempty_dist,
    ne_nonempty_dist_via_h,
    nonempty_dist,
    p_lonely,
    reverse_death_prob,
    reverse_kernel_from_chain,
)
from .errors import DenominatorError, InvalidParameterError
from .exact_combinatorics import lonely_first_prob_ne
from .reports import CheckResult, SuiteReport, fraction_to_str

logger = logging.getLogger(__name__)


class DominanceRelation(str, Enum):
    STRICT = "strict"            # a dominates b and the laws differ
    EQUAL = "equal"
    DOMINATED = "dominated"      # b strictly dominates a
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class DominanceVerdict:
    relation: DominanceRelation
    witness: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"relation": self.relation.value, "witness_u": self.witness}


CELL_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "relation": {"enum": [relation.value for relation in DominanceRelation]},
        "p_lo": {"type": "string", "pattern": r"^-?\d+/\d+$"},
        "p_hi": {"type": "string", "pattern": r"^-?\d+/\d+$"},
        "witness_u": {"type": ["integer", "null"]},
    },
    "required": ["n", "k", "relation", "p_lo", "p_hi", "witness_u"],
    "additionalProperties": False,
}


# ==================== Comparisons ====================

def _as_integer_law(dist: Mapping) -> ExactDist:
    law = dist if isinstance(dist, ExactDist) else ExactDist(dist)
    for outcome in law:
        if not isinstance(outcome, int) or outcome < 0:
            raise InvalidParameterError(f"outcome {outcome!r} is not a nonnegative integer")
    return law


def cdf_dominates(a: Mapping, b: Mapping) -> DominanceVerdict:
    """
    Compare P(a >= u) with P(b >= u) at every support point u.

    The witness is the smallest u with a strict tail inequality in a's
    favour when a strictly dominates, otherwise the smallest u where a's
    tail falls below b's.
    """
    a, b = _as_integer_law(a), _as_integer_law(b)
    above, below = [], []
    for u in sorted(set(a) | set(b)):
        tail_a, tail_b = a.tail(u), b.tail(u)
        if tail_a > tail_b:
            above.append(u)
        elif tail_a < tail_b:
            below.append(u)

    if not above and not below:
        return DominanceVerdict(DominanceRelation.EQUAL)
    if not below:
        return DominanceVerdict(DominanceRelation.STRICT, above[0])
    if not above:
        return DominanceVerdict(DominanceRelation.DOMINATED, below[0])
    return DominanceVerdict(DominanceRelation.INCOMPARABLE, below[0])


def dominates(a: Mapping, b: Mapping) -> bool:
    """Weak dominance a >= b."""
    return cdf_dominates(a, b).relation in (DominanceRelation.STRICT, DominanceRelation.EQUAL)


def distinct_unless_trivial(pa: Fraction, pb: Fraction, k: int, n: int) -> bool:
    """
    pa (a k-bus probability) and pb (a (k+1)-bus probability) differ
    unless both are 0 or 1.
    """
    pa, pb = Fraction(pa), Fraction(pb)
    if k ** n % pa.denominator:
        raise DenominatorError(f"denominator of {pa} does not divide {k}^{n}")
    if (k + 1) ** n % pb.denominator:
        raise DenominatorError(f"denominator of {pb} does not divide {k + 1}^{n}")
    return pa != pb or pa in (0, 1)


# ==================== Theorem grid ====================

@dataclass(frozen=True)
class TheoremCell:
    n: int
    k: int
    verdict: DominanceVerdict
    p_lo: Fraction
    p_hi: Fraction

    @property
    def passed(self) -> bool:
        if self.n == 1:
            return self.verdict.relation is DominanceRelation.EQUAL and self.p_lo == self.p_hi == 1
        return self.verdict.relation is DominanceRelation.STRICT and self.p_hi > self.p_lo

    def to_dict(self) -> Dict[str, Any]:
        cell = {
            "n": self.n,
            "k": self.k,
            "relation": self.verdict.relation.value,
            "p_lo": fraction_to_str(self.p_lo),
            "p_hi": fraction_to_str(self.p_hi),
            "witness_u": self.verdict.witness,
        }
        jsonschema.validate(cell, CELL_SCHEMA)
        return cell


@dataclass
class TheoremReport:
    n_max: int
    k_max: int
    cells: List[TheoremCell] = field(default_factory=list)

    @property
    def failures(self) -> List[TheoremCell]:
        return [cell for cell in self.cells if not cell.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> Dict[str, int]:
        failed = len(self.failures)
        return {"total": len(self.cells), "passed": len(self.cells) - failed, "failed": failed}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": "theorem",
            "parameters": {"n_max": self.n_max, "k_max": self.k_max},
            "passed": self.passed,
            "summary": self.summary(),
            "failures": [cell.to_dict() for cell in self.failures],
            "cells": [cell.to_dict() for cell in self.cells],
        }


def theorem_cell(n: int, k: int) -> TheoremCell:
    """Compare L for n passengers on k+1 buses against k buses."""
    verdict = cdf_dominates(lonely_dist(n, k + 1), lonely_dist(n, k))
    return TheoremCell(n, k, verdict, p_lonely(n, k), p_lonely(n, k + 1))


def verify_theorem(n_max: int, k_max: int, include_n1: bool = False, workers: int = 1) -> TheoremReport:
    """Strict dominance and strict growth of p over 2 <= n <= n_max, 1 <= k < k_max."""
    if n_max < 2 or k_max < 1:
        raise InvalidParameterError(f"need n_max >= 2 and k_max >= 1, got {n_max}, {k_max}")
    grid = [(n, k) for n in range(1 if include_n1 else 2, n_max + 1) for k in range(1, k_max)]
    logger.info(f"Verifying theorem on {len(grid)} cells (n_max={n_max}, k_max={k_max})")

    report = TheoremReport(n_max, k_max)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.cells = list(pool.map(theorem_cell, *zip(*grid))) if grid else []
    else:
        report.cells = [theorem_cell(n, k) for n, k in grid]

    for cell in report.failures:
        logger.error(f"Theorem cell n={cell.n} k={cell.k} failed: {cell.verdict.relation.value}")
    logger.info(f"Theorem check finished: {report.summary()}")
    return report


# ==================== Identities and supporting checks ====================

def check_total_probability(n: int, k: int) -> CheckResult:
    """P(L >= u) equals sum over l of P(N = l) times the conditioned tail, for every u."""
    direct = lonely_dist(n, k)
    weights = nonempty_dist(n, k)
    conditioned = {l: ne_final_lonely_dist(l, n) for l in weights}
    for u in range(n + 2):
        decomposed = sum((weights[l] * conditioned[l].tail(u) for l in weights), Fraction(0))
        if decomposed != direct.tail(u):
            return CheckResult("total-probability", {"n": n, "k": k}, False,
                               {"u": u, "direct": direct.tail(u), "decomposed": decomposed})
    return CheckResult("total-probability", {"n": n, "k": k}, True)


def check_ne_lonely_dominance(l: int, n: int) -> CheckResult:
    """Final lonely count under NE(l, n) dominates the one under NE(l-1, n)."""
    verdict = cdf_dominates(ne_final_lonely_dist(l, n), ne_final_lonely_dist(l - 1, n))
    ok = verdict.relation in (DominanceRelation.STRICT, DominanceRelation.EQUAL)
    return CheckResult("ne-lonely-dominance", {"l": l, "n": n}, ok, None if ok else verdict.to_dict())


def check_ne_nonempty_dominance(l: int, n: int) -> CheckResult:
    for m in range(n + 1):
        verdict = cdf_dominates(ne_nonempty_dist(l, n, m), ne_nonempty_dist(l - 1, n, m))
        if verdict.relation not in (DominanceRelation.STRICT, DominanceRelation.EQUAL):
            return CheckResult("ne-nonempty-dominance", {"l": l, "n": n}, False, {"m": m, **verdict.to_dict()})
    return CheckResult("ne-nonempty-dominance", {"l": l, "n": n}, True)


def check_forward_nonempty_dominance(n: int, k: int) -> CheckResult:
    more = joint_dist_by_time(n, k + 1)
    fewer = joint_dist_by_time(n, k)
    for m in range(n + 1):
        verdict = cdf_dominates(more[m].map(lambda s: s.n_buses), fewer[m].map(lambda s: s.n_buses))
        if verdict.relation not in (DominanceRelation.STRICT, DominanceRelation.EQUAL):
            return CheckResult("forward-nonempty-dominance", {"n": n, "k": k}, False,
                               {"m": m, **verdict.to_dict()})
    return CheckResult("forward-nonempty-dominance", {"n": n, "k": k}, True)


def check_transitivity(n: int, k: int) -> CheckResult:
    """L(k+2) >= L(k+1) and L(k+1) >= L(k) must imply L(k+2) >= L(k)."""
    a, b, c = lonely_dist(n, k + 2), lonely_dist(n, k + 1), lonely_dist(n, k)
    ok = not (dominates(a, b) and dominates(b, c)) or dominates(a, c)
    return CheckResult("transitivity", {"n": n, "k": k}, ok)


def _reverse_kernel_check(l: int, n: int) -> CheckResult:
    for m in range(1, n + 1):
        for i in ne_nonempty_dist(l, n, m):
            from_chain = reverse_kernel_from_chain(l, n, m, i)
            if from_chain != reverse_death_prob(m, i):
                return CheckResult("reverse-kernel", {"l": l, "n": n}, False,
                                   {"m": m, "i": i, "from_chain": from_chain,
                                    "closed_form": reverse_death_prob(m, i)})
    return CheckResult("reverse-kernel", {"l": l, "n": n}, True)


def _h_transform_check(l: int, n: int) -> CheckResult:
    bad = [m for m in range(n + 1) if ne_nonempty_dist_via_h(l, n, m) != ne_nonempty_dist(l, n, m)]
    return CheckResult("h-transform", {"l": l, "n": n}, not bad, {"m": bad[0]} if bad else None)


def _expectation_check(l: int, n: int) -> CheckResult:
    expected = first_lonely_expectation(l, n)
    closed = lonely_first_prob_ne(n, l)
    ok = expected == closed
    return CheckResult("first-lonely-expectation", {"l": l, "n": n}, ok,
                       None if ok else {"path_average": expected, "closed_form": closed})


def run_lemma_suite(n_max: int = 10, k_max: int = 6, h_n_max: int = 12) -> SuiteReport:
    """Every supporting identity and distribution-level dominance on the grid."""
    if n_max < 2 or k_max < 1:
        raise InvalidParameterError(f"need n_max >= 2 and k_max >= 1, got {n_max}, {k_max}")
    logger.info(f"Running lemma suite n_max={n_max} k_max={k_max}")
    report = SuiteReport("lemmas", {"n_max": n_max, "k_max": k_max})

    for n in range(1, n_max + 1):
        for k in range(1, k_max + 1):
            ok = distinct_unless_trivial(p_lonely(n, k), p_lonely(n, k + 1), k, n)
            report.add(CheckResult("prob-not-equal", {"n": n, "k": k}, ok))
            report.add(check_total_probability(n, k))
            if k < k_max:
                report.add(check_forward_nonempty_dominance(n, k))
            if k + 2 <= k_max:
                report.add(check_transitivity(n, k))

    for n in range(1, max(n_max, h_n_max) + 1):
        for l in range(1, n + 1):
            if n <= h_n_max:
                report.add(_h_transform_check(l, n))
            if n > n_max:
                continue
            report.add(_expectation_check(l, n))
            if l >= 2:
                report.add(_reverse_kernel_check(l, n))
                report.add(check_ne_lonely_dominance(l, n))
                report.add(check_ne_nonempty_dominance(l, n))

    for check in report.failures:
        logger.error(f"Lemma check {check.name} failed at {check.parameters}")
    logger.info(f"Lemma suite finished: {report.summary()}")
    return report
