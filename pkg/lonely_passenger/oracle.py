"""
Oracle Module

Brute-force enumeration of every configuration of n passengers on k buses.
This is the ground truth the dynamic programmes are checked against.

One depth-first walk per (n, k) visits every configuration in odometer
order (last passenger fastest), tracks the nonempty and lonely counts
incrementally, and tallies integer counts of the joint (N, L) path and of
"passenger 1 travels alone", keyed by the final nonempty count. Every law
below is read off those counts; probabilities are formed only at the end.
"""

import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from functools import lru_cache
from itertools import product
from math import comb
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from config.settings import DEFAULT_ENUM_LIMIT, HARD_ENUM_LIMIT

from .chain_engine import ExactDist, PairState, joint_dist_by_time, lonely_dist, ne_nonempty_dist
from .errors import InvalidParameterError, NullConditioningError, SizeLimitExceeded, UnknownFunctionalError
from .exact_combinatorics import lonely_count_configs, lonely_first_prob_ne, surjection_count
from .reports import CheckResult, SuiteReport

logger = logging.getLogger(__name__)

Configuration = Tuple[int, ...]


class Functional(str, Enum):
    """Closed catalog of bus-label-symmetric functionals of a configuration."""

    L_PATH = "l-path"
    N_PATH = "n-path"
    FINAL_L = "final-l"
    FIRST_LONELY = "first-lonely"


# ==================== Configurations ====================

def _check_size(size: int, limit: Optional[int]):
    limit = DEFAULT_ENUM_LIMIT if limit is None else min(limit, HARD_ENUM_LIMIT)
    if size > limit:
        raise SizeLimitExceeded(size, limit)


def _require_nk(n: int, k: int):
    if n < 0 or k < 1:
        raise InvalidParameterError(f"need n >= 0 and k >= 1, got n={n}, k={k}")


def iter_configurations(n: int, k: int) -> Iterator[Configuration]:
    """All bus choices (b_1, ..., b_n) in odometer order."""
    _require_nk(n, k)
    return product(range(1, k + 1), repeat=n)


def nonempty_path(config: Sequence[int]) -> Tuple[int, ...]:
    """N_0, ..., N_n: distinct buses among the first m passengers."""
    seen = set()
    path = [0]
    for bus in config:
        seen.add(bus)
        path.append(len(seen))
    return tuple(path)


def lonely_path(config: Sequence[int]) -> Tuple[int, ...]:
    """L_0, ..., L_n: buses holding exactly one of the first m passengers."""
    load: Counter = Counter()
    lonely = 0
    path = [0]
    for bus in config:
        load[bus] += 1
        if load[bus] == 1:
            lonely += 1
        elif load[bus] == 2:
            lonely -= 1
        path.append(lonely)
    return tuple(path)


# ==================== Enumeration ====================

def _walk_slice(n: int, k: int, first: Optional[int]) -> Tuple[Dict[int, Counter], Dict[int, Counter]]:
    """
    Tally one slice of the configuration space (all of it when first is None).

    Returns (joint path counts, first-passenger-lonely counts), both keyed
    by the final nonempty count.
    """
    joint: Dict[int, Counter] = defaultdict(Counter)
    first_alone: Dict[int, Counter] = defaultdict(Counter)
    load = [0] * (k + 1)
    chosen = [0] * (n + 1)
    n_path = [0] * (n + 1)
    l_path = [0] * (n + 1)
    buses = range(1, k + 1)

    def visit(m: int):
        if m == n:
            final = n_path[n]
            joint[final][(tuple(n_path), tuple(l_path))] += 1
            first_alone[final][int(n > 0 and load[chosen[1]] == 1)] += 1
            return
        for bus in buses:
            before = load[bus]
            load[bus] = before + 1
            chosen[m + 1] = bus
            n_path[m + 1] = n_path[m] + (before == 0)
            l_path[m + 1] = l_path[m] + (before == 0) - (before == 1)
            visit(m + 1)
            load[bus] = before

    if first is None or n == 0:
        visit(0)
    else:
        load[first] = 1
        chosen[1] = first
        n_path[1] = l_path[1] = 1
        visit(1)
    return dict(joint), dict(first_alone)


@lru_cache(maxsize=32)
def _path_counts(n: int, k: int, workers: int = 1) -> Tuple[Dict[int, Counter], Dict[int, Counter]]:
    """Merge slice tallies; slices partition the space by the first passenger's bus."""
    if n == 0 or workers <= 1 or k == 1:
        slices = [_walk_slice(n, k, None)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            slices = list(pool.map(_walk_slice, [n] * k, [k] * k, range(1, k + 1)))

    joint: Dict[int, Counter] = defaultdict(Counter)
    first_alone: Dict[int, Counter] = defaultdict(Counter)
    for slice_joint, slice_first in slices:
        for final, counts in slice_joint.items():
            joint[final].update(counts)
        for final, counts in slice_first.items():
            first_alone[final].update(counts)
    return dict(joint), dict(first_alone)


def enumerate_joint(n: int, k: int, limit: Optional[int] = None, workers: int = 1) -> List[ExactDist]:
    """Exact law of (N_m, L_m), m = 0..n, with denominators k^n."""
    _require_nk(n, k)
    _check_size(k ** n, limit)
    logger.debug(f"Enumerating {k ** n} configurations for n={n}, k={k}")
    joint, _ = _path_counts(n, k, workers)
    layers = [Counter() for _ in range(n + 1)]
    for counts in joint.values():
        for (n_path, l_path), count in counts.items():
            for m in range(n + 1):
                layers[m][PairState(m, n_path[m], l_path[m])] += count
    return [ExactDist.from_counts(layer, k ** n) for layer in layers]


def _functional_counts(joint: Counter, first_alone: Counter, functional) -> Counter:
    try:
        functional = Functional(functional)
    except ValueError:
        raise UnknownFunctionalError(functional) from None
    if functional is Functional.FIRST_LONELY:
        return first_alone
    pick = {
        Functional.N_PATH: lambda paths: paths[0],
        Functional.L_PATH: lambda paths: paths[1],
        Functional.FINAL_L: lambda paths: paths[1][-1],
    }[functional]
    counts: Counter = Counter()
    for paths, count in joint.items():
        counts[pick(paths)] += count
    return counts


# ==================== Conditioning ====================

def conditioned_law(n: int, k: int, l: int, functional, limit: Optional[int] = None) -> ExactDist:
    """Law of a catalog functional under the uniform measure given N_n = l."""
    _require_nk(n, k)
    _check_size(k ** n, limit)
    joint, first_alone = _path_counts(n, k)
    if l not in joint:
        raise NullConditioningError(f"N_n = {l} is impossible for n={n}, k={k}")
    counts = _functional_counts(joint[l], first_alone[l], functional)
    return ExactDist.from_counts(counts, sum(joint[l].values()))


def ne_law(l: int, n: int, functional, limit: Optional[int] = None) -> ExactDist:
    """Law of a catalog functional under the uniform measure on surjections onto l buses."""
    if not 1 <= l <= n:
        raise InvalidParameterError(f"need 1 <= l <= n, got l={l}, n={n}")
    return conditioned_law(n, l, l, functional, limit)


def check_conditioning_lemma(n: int, k: int, l: int, functional, limit: Optional[int] = None) -> bool:
    """Conditioning on N_n = l gives the same law as the NE(l, n) measure."""
    return conditioned_law(n, k, l, functional, limit) == ne_law(l, n, functional, limit)


def ne_space_size(l: int, n: int, limit: Optional[int] = None) -> int:
    """|Omega^(l,n,NE)| by counting."""
    if not 1 <= l <= n:
        raise InvalidParameterError(f"need 1 <= l <= n, got l={l}, n={n}")
    _check_size(l ** n, limit)
    joint, _ = _path_counts(n, l)
    return sum(joint.get(l, Counter()).values())


def ne_enumerate(l: int, n: int, limit: Optional[int] = None) -> ExactDist:
    """Exact law of the joint path (N~_0..n, L~_0..n) under the uniform NE(l, n) measure."""
    if not 1 <= l <= n:
        raise InvalidParameterError(f"need 1 <= l <= n, got l={l}, n={n}")
    _check_size(l ** n, limit)
    joint, _ = _path_counts(n, l)
    return ExactDist.from_counts(joint[l], sum(joint[l].values()))


def ne_slice(law: ExactDist, m: int) -> ExactDist:
    """Law of (N~_m, L~_m) from a joint path law."""
    return law.map(lambda paths: PairState(m, paths[0][m], paths[1][m]))


def closed_form_final_laws(n: int, k: int) -> Tuple[ExactDist, ExactDist]:
    """(law of N_n, law of L_n) read off surjection and lonely-configuration counts."""
    _require_nk(n, k)
    top = min(n, k)
    nonempty = {i: comb(k, i) * surjection_count(n, i) for i in range(top + 1)}
    lonely = {j: lonely_count_configs(n, k, j) for j in range(top + 1)}
    return ExactDist.from_counts(nonempty, k ** n), ExactDist.from_counts(lonely, k ** n)


def check_first_lonely(l: int, n: int, limit: Optional[int] = None) -> bool:
    """Counted frequency of "passenger 1 alone" under NE(l, n) against S(n-1, l-1) / S(n, l)."""
    return ne_law(l, n, Functional.FIRST_LONELY, limit)[1] == lonely_first_prob_ne(n, l)


# ==================== Suite ====================

def enumerable_cells(limit: int, k_max: int = 12, n_max: int = 20) -> Iterator[Tuple[int, int]]:
    """(n, k) with k^n <= limit, n >= 1, k <= k_max and n <= n_max."""
    for k in range(1, k_max + 1):
        for n in range(1, n_max + 1):
            if k ** n > limit:
                break
            yield n, k


def run_oracle_suite(limit: int = DEFAULT_ENUM_LIMIT, ne_n_max: int = 10, workers: int = 1) -> SuiteReport:
    """
    DP/enumeration agreement, closed-form final marginals, NE space sizes,
    NE marginals, the first-passenger probability and the conditioning lemma.
    """
    logger.info(f"Running oracle suite with limit={limit}")
    report = SuiteReport("oracle", {"limit": limit})

    for n, k in enumerable_cells(limit):
        layers = enumerate_joint(n, k, limit=limit, workers=workers)
        cell = {"n": n, "k": k}
        report.add(CheckResult("dp-equals-enumeration", cell, layers == joint_dist_by_time(n, k)))
        nonempty_law, lonely_law = closed_form_final_laws(n, k)
        report.add(CheckResult("nonempty-marginal", cell,
                               layers[n].map(lambda s: s.n_buses) == nonempty_law))
        report.add(CheckResult("lonely-count-marginal", cell,
                               layers[n].map(lambda s: s.lonely) == lonely_law == lonely_dist(n, k)))
        for l in range(1, min(n, k) + 1):
            for functional in Functional:
                ok = check_conditioning_lemma(n, k, l, functional, limit)
                report.add(CheckResult("conditioning-lemma",
                                       {"n": n, "k": k, "l": l, "functional": functional.value}, ok))
        if k <= n:
            report.add(CheckResult("ne-first-lonely", {"m": n, "i": k}, check_first_lonely(k, n, limit)))
        _path_counts.cache_clear()

    for n in range(1, ne_n_max + 1):
        for l in range(1, n + 1):
            if l ** n > limit:
                continue
            size_ok = ne_space_size(l, n, limit) == surjection_count(n, l)
            law = ne_enumerate(l, n, limit)
            marginals_ok = all(
                ne_slice(law, m).map(lambda s: s.n_buses) == ne_nonempty_dist(l, n, m)
                for m in range(n + 1)
            )
            report.add(CheckResult("ne-space", {"l": l, "n": n}, size_ok and marginals_ok,
                                   None if size_ok and marginals_ok else
                                   {"size_ok": size_ok, "marginals_ok": marginals_ok}))
        _path_counts.cache_clear()

    logger.info(f"Oracle suite finished: {report.summary()}")
    return report
