"""
Monte Carlo Harness Module

Seeded simulation of n passengers choosing among k buses uniformly, for
statistical checks where enumeration is out of reach. This is the only
module that works in floating point.

Samples are drawn in batches; batch j uses the j-th child of
SeedSequence(seed) and returns integer tallies, so serial and parallel
runs give bit-identical estimates.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .chain_engine import lonely_dist, p_lonely
from .errors import InvalidParameterError
from .reports import fraction_to_str

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 10_000


@dataclass(frozen=True)
class Estimate:
    """
    A Monte Carlo estimate. stderr is the plug-in standard error of value;
    null_stderr, when set, is the standard error implied by exact_ref and
    is what z_score divides by.
    """

    value: float
    stderr: float
    samples: int
    exact_ref: Optional[Fraction] = None
    null_stderr: Optional[float] = None

    @property
    def scale(self) -> float:
        return self.stderr if self.null_stderr is None else self.null_stderr

    @property
    def z_score(self) -> Optional[float]:
        """(value - exact) / scale; 0 when both vanish."""
        if self.exact_ref is None:
            return None
        diff = self.value - float(self.exact_ref)
        scale = self.scale
        if scale == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / scale

    def within(self, sigmas: float) -> bool:
        z = self.z_score
        return z is None or abs(z) <= sigmas

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "exact_ref": None if self.exact_ref is None else fraction_to_str(self.exact_ref),
            "null_stderr": self.null_stderr,
            "z": self.z_score,
        }


def _require_nk(n: int, k: int):
    if n < 1 or k < 1:
        raise InvalidParameterError(f"need n >= 1 and k >= 1, got n={n}, k={k}")


def simulate_arrivals(n: int, k: int, seed: int) -> Tuple[int, ...]:
    """One uniform configuration (b_1, ..., b_n)."""
    _require_nk(n, k)
    return tuple(np.random.default_rng(seed).integers(1, k + 1, size=n).tolist())


def count_lonely(batch: np.ndarray) -> np.ndarray:
    """Lonely passengers per row of an integer array of configurations."""
    batch = np.asarray(batch)
    if batch.ndim != 2:
        raise InvalidParameterError(f"expected a 2-d batch, got shape {batch.shape}")
    if batch.shape[1] == 0:
        return np.zeros(batch.shape[0], dtype=np.int64)
    ordered = np.sort(batch, axis=1)
    # bus labels start at 1, so 0 never matches a neighbour
    edge = np.zeros((ordered.shape[0], 1), dtype=ordered.dtype)
    left = np.concatenate([edge, ordered[:, :-1]], axis=1)
    right = np.concatenate([ordered[:, 1:], edge], axis=1)
    return ((ordered != left) & (ordered != right)).sum(axis=1)


def _batch_tallies(n: int, k: int, size: int, seed_seq: np.random.SeedSequence) -> Tuple[int, int, int]:
    """(rows with a lonely passenger, sum of L, sum of L^2) for one batch."""
    rng = np.random.default_rng(seed_seq)
    lonely = count_lonely(rng.integers(1, k + 1, size=(size, n)))
    return int((lonely > 0).sum()), int(lonely.sum()), int((lonely * lonely).sum())


def _tally(n: int, k: int, samples: int, seed: int, batch_size: int, workers: int) -> Tuple[int, int, int]:
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    if batch_size < 1:
        raise InvalidParameterError(f"batch_size must be >= 1, got {batch_size}")
    sizes = [batch_size] * (samples // batch_size)
    if samples % batch_size:
        sizes.append(samples % batch_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    args = ([n] * len(sizes), [k] * len(sizes), sizes, children)

    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(_batch_tallies, *args))
    else:
        tallies = list(map(_batch_tallies, *args))
    hits, total, squares = (sum(column) for column in zip(*tallies))
    return hits, total, squares


def estimate_p(n: int, k: int, samples: int, seed: int, batch_size: int = DEFAULT_BATCH_SIZE,
               workers: int = 1, exact_ref_max_n: int = 200) -> Estimate:
    """Fraction of samples with at least one lonely passenger."""
    _require_nk(n, k)
    hits, _, _ = _tally(n, k, samples, seed, batch_size, workers)
    value = hits / samples
    stderr = math.sqrt(value * (1 - value) / samples)
    exact = p_lonely(n, k) if n <= exact_ref_max_n else None
    # z is taken against the exact Bernoulli variance
    null_stderr = None if exact is None else math.sqrt(exact * (1 - exact) / samples)
    estimate = Estimate(value, stderr, samples, exact, null_stderr)
    logger.debug(f"estimate_p n={n} k={k}: {value} +/- {stderr}")
    return estimate


def estimate_mean_lonely(n: int, k: int, samples: int, seed: int, batch_size: int = DEFAULT_BATCH_SIZE,
                         workers: int = 1, exact_ref_max_n: int = 200) -> Estimate:
    """Sample mean of L with sample-standard-deviation stderr."""
    _require_nk(n, k)
    _, total, squares = _tally(n, k, samples, seed, batch_size, workers)
    mean = total / samples
    variance = (squares - samples * mean * mean) / (samples - 1) if samples > 1 else 0.0
    stderr = math.sqrt(max(variance, 0.0) / samples)
    exact = lonely_dist(n, k).expectation() if n <= exact_ref_max_n else None
    return Estimate(mean, stderr, samples, exact)


@dataclass
class ShadowReport:
    n: int
    k_values: List[int]
    estimates: List[Estimate] = field(default_factory=list)
    decreases: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "rows": [{"k": k, **estimate.to_dict()} for k, estimate in zip(self.k_values, self.estimates)],
            "decreases": self.decreases,
        }


def monotonicity_shadow(n: int, k_values: Sequence[int], samples: int, seed: int,
                        sigmas: float = 5.0, **kwargs) -> ShadowReport:
    """
    Estimate p for each k; record every k whose estimate falls below the
    previous one by more than `sigmas` combined standard errors (exact-variance
    errors where an exact reference exists).
    """
    k_values = list(k_values)
    children = np.random.SeedSequence(seed).spawn(len(k_values))
    report = ShadowReport(n, k_values)
    for k, child in zip(k_values, children):
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        report.estimates.append(estimate_p(n, k, samples, child_seed, **kwargs))

    for j in range(1, len(k_values)):
        prev, cur = report.estimates[j - 1], report.estimates[j]
        spread = math.hypot(prev.scale, cur.scale)
        if prev.value - cur.value > sigmas * spread:
            report.decreases.append(k_values[j])
            logger.warning(f"Estimated p drops from k={k_values[j - 1]} to k={k_values[j]} "
                           f"({prev.value:.5f} -> {cur.value:.5f})")
    return report
