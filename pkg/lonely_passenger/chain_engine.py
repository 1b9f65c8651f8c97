"""
Chain Engine Module

Exact Markov-chain machinery for the arrival process:
- forward pure-birth chain of the nonempty bus count N
- joint (N, L) pair chain and its exact dynamic programme
- Doob h-transform of N conditioned on its final value
- time-reversed pure-death kernel of the conditioned chain
- exact path laws used as references by the coupling samplers
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Dict, Hashable, Iterator, List, Mapping, NamedTuple, Sequence, Tuple

from .errors import (
    DistributionError,
    InvalidParameterError,
    InvalidPathError,
    InvalidStateError,
    NullConditioningError,
)
from .exact_combinatorics import Rational, lonely_first_prob_ne, stirling2

logger = logging.getLogger(__name__)

Path = Tuple[int, ...]


class PairState(NamedTuple):
    """(time index, nonempty bus count N, lonely passenger count L)."""

    m: int
    n_buses: int
    lonely: int


class ExactDist(Mapping):
    """
    Finite law with exact rational masses summing to exactly one.

    Outcomes with zero mass are dropped; looking one up returns 0.
    """

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping[Hashable, Fraction | int]):
        cleaned: Dict[Hashable, Fraction] = {}
        for outcome, value in mass.items():
            value = Fraction(value)
            if value < 0:
                raise DistributionError(f"negative mass {value} at {outcome!r}")
            if value:
                cleaned[outcome] = value
        total = sum(cleaned.values(), Fraction(0))
        if total != 1:
            raise DistributionError(f"masses sum to {total}, not 1")
        self._mass = cleaned

    @classmethod
    def point(cls, outcome: Hashable) -> "ExactDist":
        return cls({outcome: 1})

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int], total: int) -> "ExactDist":
        """Normalise integer counts by their known total."""
        return cls({outcome: Fraction(count, total) for outcome, count in counts.items()})

    def __getitem__(self, outcome: Hashable) -> Fraction:
        return self._mass.get(outcome, Fraction(0))

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._mass)

    def __len__(self) -> int:
        return len(self._mass)

    def __contains__(self, outcome: object) -> bool:
        return outcome in self._mass

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExactDist):
            return self._mass == other._mass
        if isinstance(other, Mapping):
            return self._mass == {k: Fraction(v) for k, v in other.items() if v}
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"{k!r}: {v}" for k, v in sorted(self._mass.items()))
        return f"ExactDist({{{body}}})"

    @property
    def support(self) -> Tuple[Hashable, ...]:
        return tuple(sorted(self._mass))

    def map(self, fn: Callable[[Hashable], Hashable]) -> "ExactDist":
        """Push the law forward through fn."""
        pushed: Dict[Hashable, Fraction] = defaultdict(Fraction)
        for outcome, value in self._mass.items():
            pushed[fn(outcome)] += value
        return ExactDist(pushed)

    def tail(self, u: int) -> Fraction:
        """P(X >= u) for integer-valued laws."""
        return sum((v for k, v in self._mass.items() if k >= u), Fraction(0))

    def expectation(self, fn: Callable[[Hashable], Fraction | int] = lambda x: x) -> Fraction:
        return sum((v * fn(k) for k, v in self._mass.items()), Fraction(0))

    def items_sorted(self) -> List[Tuple[Hashable, Fraction]]:
        return sorted(self._mass.items())


@dataclass(frozen=True)
class ReverseKernel:
    """Death probabilities i -> i-1 of the reversed conditioned chain at time m."""

    m: int
    probabilities: Dict[int, Fraction]

    def __getitem__(self, i: int) -> Fraction:
        return self.probabilities[i]


# ==================== Validation ====================

def _require_buses(k: int):
    if k < 1:
        raise InvalidParameterError(f"bus count must be >= 1, got {k}")


def _require_ne_params(l: int, n: int):
    if not 1 <= l <= n:
        raise InvalidParameterError(f"need 1 <= l <= n, got l={l}, n={n}")


def validate_state(s: PairState, k: int | None = None):
    """Raise InvalidStateError if s breaks the pair-state invariants."""
    m, n_buses, lonely = s
    if m < 0 or not 0 <= lonely <= n_buses <= m:
        raise InvalidStateError(f"{s} violates 0 <= L <= N <= m")
    if m > 0 and n_buses == 0:
        raise InvalidStateError(f"{s}: passengers present but no nonempty bus")
    if lonely == m and n_buses != m:
        raise InvalidStateError(f"{s}: all passengers lonely needs N = m")
    if k is not None and n_buses > k:
        raise InvalidStateError(f"{s}: more nonempty buses than the {k} available")


def validate_birth_path(path: Sequence[int]):
    """A pure-birth sequence starting 0, 1."""
    if len(path) < 2 or path[0] != 0 or path[1] != 1:
        raise InvalidPathError(f"path must start (0, 1), got {tuple(path)}")
    for prev, cur in zip(path, path[1:]):
        if cur - prev not in (0, 1):
            raise InvalidPathError(f"path {tuple(path)} is not a pure-birth sequence")


# ==================== Forward chains ====================

def forward_birth_prob(k: int, i: int) -> Rational:
    """Probability that the next passenger opens a new bus: 1 - i/k."""
    _require_buses(k)
    if not 0 <= i <= k:
        raise InvalidParameterError(f"nonempty count {i} outside 0..{k}")
    return Fraction(k - i, k)


def _pair_transitions(k: int, n_buses: int, lonely: int) -> Iterator[Tuple[int, int, int]]:
    """(new N, new L, number of the k bus choices leading there)."""
    if k - n_buses:
        yield n_buses + 1, lonely + 1, k - n_buses
    if lonely:
        yield n_buses, lonely - 1, lonely
    if n_buses - lonely:
        yield n_buses, lonely, n_buses - lonely


def pair_step_dist(k: int, s: PairState) -> ExactDist:
    """One-step law of the (N, L) pair chain with k buses."""
    _require_buses(k)
    validate_state(s, k)
    return ExactDist({
        PairState(s.m + 1, n_buses, lonely): Fraction(weight, k)
        for n_buses, lonely, weight in _pair_transitions(k, s.n_buses, s.lonely)
    })


@lru_cache(maxsize=256)
def _joint_counts(n: int, k: int) -> Tuple[Tuple[Tuple[Tuple[int, int], int], ...], ...]:
    """
    Configuration counts of (N_m, L_m) for m = 0..n.

    Counts at time m sum to k^m; unreachable states never appear.
    """
    layers = [(((0, 0), 1),)]
    current: Dict[Tuple[int, int], int] = {(0, 0): 1}
    for _ in range(n):
        nxt: Dict[Tuple[int, int], int] = defaultdict(int)
        for (n_buses, lonely), count in current.items():
            for new_n, new_l, weight in _pair_transitions(k, n_buses, lonely):
                nxt[(new_n, new_l)] += count * weight
        current = dict(nxt)
        layers.append(tuple(sorted(current.items())))
    return tuple(layers)


def joint_dist_by_time(n: int, k: int) -> List[ExactDist]:
    """Exact laws of (N_m, L_m) for m = 0..n."""
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    _require_buses(k)
    return [
        ExactDist.from_counts({PairState(m, *state): count for state, count in layer}, k ** m)
        for m, layer in enumerate(_joint_counts(n, k))
    ]


def exact_joint_dist(n: int, k: int) -> ExactDist:
    """Exact joint law of (N_n, L_n) for n passengers on k buses."""
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    _require_buses(k)
    layer = _joint_counts(n, k)[n]
    return ExactDist.from_counts({PairState(n, *state): count for state, count in layer}, k ** n)


def nonempty_dist(n: int, k: int) -> ExactDist:
    """Law of N_n."""
    return exact_joint_dist(n, k).map(lambda s: s.n_buses)


def lonely_dist(n: int, k: int) -> ExactDist:
    """Law of L_n."""
    return exact_joint_dist(n, k).map(lambda s: s.lonely)


def p_lonely(n: int, k: int) -> Rational:
    """Probability that at least one of n passengers on k buses travels alone."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    return 1 - lonely_dist(n, k)[0]


# ==================== Conditioned chain ====================

@lru_cache(maxsize=512)
def _h_table(l: int, n: int) -> Tuple[Tuple[Fraction, ...], ...]:
    """h[m][i] = P(N_n = l | N_m = i) for the l-bus chain, by backward recursion."""
    h = [None] * (n + 1)
    h[n] = tuple(Fraction(int(i == l)) for i in range(l + 1))
    for m in range(n - 1, -1, -1):
        later = h[m + 1]
        row = []
        for i in range(l + 1):
            r = forward_birth_prob(l, i)
            grow = later[i + 1] if i < l else Fraction(0)
            row.append(r * grow + (1 - r) * later[i])
        h[m] = tuple(row)
    return tuple(h)


def h_value(l: int, n: int, m: int, i: int) -> Rational:
    """P(N^(l)_n = l | N^(l)_m = i), the harmonic function of the conditioning."""
    _require_buses(l)
    if not 0 <= m <= n:
        raise InvalidParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    if not 0 <= i <= l:
        raise InvalidParameterError(f"need 0 <= i <= l, got i={i}, l={l}")
    return _h_table(l, n)[m][i]


def conditioned_birth_prob(l: int, n: int, m: int, i: int) -> Rational:
    """Birth probability of N^(l) at time m conditioned on N^(l)_n = l."""
    if not 0 <= m < n:
        raise InvalidParameterError(f"need 0 <= m < n, got m={m}, n={n}")
    here = h_value(l, n, m, i)
    if not here:
        raise NullConditioningError(f"state i={i} at time m={m} cannot reach {l} by time {n}")
    if i == l:
        return Fraction(0)
    return forward_birth_prob(l, i) * h_value(l, n, m + 1, i + 1) / here


def _cover(r: int, l: int, e: int) -> int:
    """Ways r passengers on l buses hit every one of e given buses."""
    return sum((-1) ** t * comb(e, t) * (l - t) ** r for t in range(e + 1))


def ne_nonempty_dist(l: int, n: int, m: int) -> ExactDist:
    """Law of the conditioned nonempty count at time m (closed form)."""
    _require_ne_params(l, n)
    if not 0 <= m <= n:
        raise InvalidParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    total = factorial(l) * stirling2(n, l)
    counts = {
        i: comb(l, i) * factorial(i) * stirling2(m, i) * _cover(n - m, l, l - i)
        for i in range(min(l, m) + 1)
    }
    return ExactDist.from_counts(counts, total)


def ne_nonempty_dist_via_h(l: int, n: int, m: int) -> ExactDist:
    """Same law built as the h-transform: P(N^(l)_m = i) h_m(i), normalised."""
    _require_ne_params(l, n)
    if not 0 <= m <= n:
        raise InvalidParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    weights = {
        i: Fraction(comb(l, i) * factorial(i) * stirling2(m, i), l ** m) * h_value(l, n, m, i)
        for i in range(min(l, m) + 1)
    }
    total = sum(weights.values(), Fraction(0))
    return ExactDist({i: w / total for i, w in weights.items()})


# ==================== Reverse kernel ====================

@lru_cache(maxsize=None)
def reverse_death_prob(m: int, i: int) -> Rational:
    """
    Probability that the reversed conditioned chain steps i -> i-1 at time m.

    Equals the chance that the m-th arrival travels alone given i nonempty
    buses, so it depends on neither l nor k.
    """
    if m < 1 or i < 1 or i > m:
        raise InvalidParameterError(f"need 1 <= i <= m, got m={m}, i={i}")
    return lonely_first_prob_ne(m, i)


def reverse_kernel(m: int) -> ReverseKernel:
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    return ReverseKernel(m, {i: reverse_death_prob(m, i) for i in range(1, m + 1)})


def reverse_kernel_from_chain(l: int, n: int, m: int, i: int) -> Rational:
    """P(N~_{m-1} = i-1 | N~_m = i) computed from the conditioned forward chain."""
    _require_ne_params(l, n)
    if not 1 <= m <= n:
        raise InvalidParameterError(f"need 1 <= m <= n, got m={m}, n={n}")
    now = ne_nonempty_dist(l, n, m)[i]
    if not now:
        raise NullConditioningError(f"N~ at time {m} never equals {i} for l={l}, n={n}")
    before = ne_nonempty_dist(l, n, m - 1)[i - 1]
    if not before:
        return Fraction(0)
    return before * conditioned_birth_prob(l, n, m - 1, i - 1) / now


# ==================== Path laws ====================

def lonely_survival_product(path: Sequence[int]) -> Rational:
    """
    Conditional probability that passenger 1 stays alone given the
    nonempty-count path: product of (1 - 1/i_m) over steps with no new bus.
    """
    validate_birth_path(path)
    product = Fraction(1)
    for m in range(2, len(path)):
        if path[m] == path[m - 1]:
            product *= 1 - Fraction(1, path[m])
    return product


def _birth_path_law(n: int, step_prob: Callable[[int, int], Fraction]) -> ExactDist:
    """Law of a pure-birth path of length n+1 from 0, step_prob(m, i) = P(birth at m)."""
    layer: Dict[Path, Fraction] = {(0,): Fraction(1)}
    for m in range(n):
        nxt: Dict[Path, Fraction] = {}
        for path, mass in layer.items():
            i = path[-1]
            r = step_prob(m, i)
            if r:
                nxt[path + (i + 1,)] = mass * r
            if r != 1:
                nxt[path + (i,)] = mass * (1 - r)
        layer = nxt
    return ExactDist(layer)


def forward_path_law(k: int, n: int) -> ExactDist:
    """Law of the full path N^(k)_0..n."""
    _require_buses(k)
    return _birth_path_law(n, lambda m, i: forward_birth_prob(k, i))


def ne_path_law(l: int, n: int) -> ExactDist:
    """Law of the full conditioned path N~^(l,n)_0..n."""
    _require_ne_params(l, n)
    return _birth_path_law(n, lambda m, i: conditioned_birth_prob(l, n, m, i))


def lonely_path_given_nonempty(n_path: Sequence[int]) -> ExactDist:
    """
    Law of the lonely-count path given the nonempty-count path: L grows with N,
    otherwise drops by one with probability L/N.
    """
    validate_birth_path(n_path)
    layer: Dict[Path, Fraction] = {(0,): Fraction(1)}
    for m in range(len(n_path) - 1):
        nxt: Dict[Path, Fraction] = defaultdict(Fraction)
        for l_path, mass in layer.items():
            lonely = l_path[-1]
            if n_path[m + 1] > n_path[m]:
                nxt[l_path + (lonely + 1,)] += mass
                continue
            drop = Fraction(lonely, n_path[m])
            if drop:
                nxt[l_path + (lonely - 1,)] += mass * drop
            if drop != 1:
                nxt[l_path + (lonely,)] += mass * (1 - drop)
        layer = dict(nxt)
    return ExactDist(layer)


def ne_lonely_path_law(l: int, n: int) -> ExactDist:
    """Law of the full lonely-count path L~^(l,n)_0..n."""
    law: Dict[Path, Fraction] = defaultdict(Fraction)
    for n_path, mass in ne_path_law(l, n).items():
        for l_path, cond in lonely_path_given_nonempty(n_path).items():
            law[l_path] += mass * cond
    return ExactDist(law)


def ne_final_lonely_dist(l: int, n: int) -> ExactDist:
    """Law of L~^(l,n)_n: the l-bus pair chain restricted to N_n = l."""
    _require_ne_params(l, n)
    counts = {state[1]: count for state, count in _joint_counts(n, l)[n] if state[0] == l}
    return ExactDist.from_counts(counts, sum(counts.values()))


def first_lonely_expectation(l: int, n: int) -> Rational:
    """E R(N~^(l,n)), the survival product averaged over conditioned paths."""
    return ne_path_law(l, n).expectation(lonely_survival_product)
