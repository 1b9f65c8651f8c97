"""
Coupling Lab Module

Seeded samplers for the monotone couplings of the nonempty and lonely
count chains, pathwise predicate checks over streams of coupled pairs, and
a chi-square check of each component against its exact path law.

Uniforms are 53-bit integers u; the event "U < p" is decided exactly as
u * p.denominator < p.numerator * 2**53, so ordered thresholds always give
ordered decisions.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from config.settings import UNIFORM_BITS

from .chain_engine import (
    ExactDist,
    Path,
    forward_birth_prob,
    forward_path_law,
    ne_lonely_path_law,
    ne_path_law,
    reverse_death_prob,
)
from .errors import CouplingInvariantError, InvalidParameterError, UnknownPredicateError
from .reports import CheckResult, SuiteReport

logger = logging.getLogger(__name__)

RngSeed = int
SEED_LIMIT = 2 ** 64
UNIFORM_RANGE = 1 << UNIFORM_BITS


class CouplingKind(str, Enum):
    FORWARD = "forward"
    CONDITIONED = "conditioned"
    MONOTONE = "monotone"
    LONELY = "lonely"


@dataclass(frozen=True)
class CouplingMeta:
    """Which coupling produced a pair, and the (upper, lower) chain parameters."""

    kind: CouplingKind
    n: int
    params: Tuple[int, int]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "n": self.n, "params": list(self.params)}


@dataclass(frozen=True)
class CoupledPathPair:
    hi: Path
    lo: Path
    meta: CouplingMeta

    def swapped(self) -> "CoupledPathPair":
        """Negative control: the same pair with its components exchanged."""
        return CoupledPathPair(self.lo, self.hi, self.meta)

    def to_dict(self) -> Dict[str, Any]:
        return {"hi": list(self.hi), "lo": list(self.lo)}


# ==================== Randomness ====================

def _require_seed(seed: RngSeed):
    if not 0 <= seed < SEED_LIMIT:
        raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _uniforms(rng: np.random.Generator, size) -> List:
    return rng.integers(0, UNIFORM_RANGE, size=size, dtype=np.uint64).tolist()


def _below(u: int, p: Fraction) -> bool:
    """Exact test of U < p for U = u / 2**UNIFORM_BITS."""
    return u * p.denominator < p.numerator << UNIFORM_BITS


def _require_ne_pair(n: int, l: int):
    if not 2 <= l <= n:
        raise InvalidParameterError(f"need 2 <= l <= n, got l={l}, n={n}")


# ==================== Samplers ====================

def _forward_nonempty(n: int, k: int, rng: np.random.Generator) -> CoupledPathPair:
    hi, lo = [0], [0]
    for u in _uniforms(rng, n):
        hi.append(hi[-1] + _below(u, forward_birth_prob(k + 1, hi[-1])))
        lo.append(lo[-1] + _below(u, forward_birth_prob(k, lo[-1])))
    return CoupledPathPair(tuple(hi), tuple(lo), CouplingMeta(CouplingKind.FORWARD, n, (k + 1, k)))


def _reverse_pair(n: int, l: int, rng: np.random.Generator, shared: bool) -> Tuple[Path, Path]:
    """
    Run the reversed death chains from l and l-1 at time n down to time 0.

    With shared=False the chains use independent draws until they meet;
    after meeting (and throughout when shared=True) one draw drives both.
    """
    draws = _uniforms(rng, (2, n))
    hi, lo = [l], [l - 1]
    for step, m in enumerate(range(n, 0, -1)):
        i_hi, i_lo = hi[-1], lo[-1]
        u_hi = draws[0][step]
        u_lo = u_hi if shared or i_hi == i_lo else draws[1][step]
        dies_hi = _below(u_hi, reverse_death_prob(m, i_hi))
        dies_lo = _below(u_lo, reverse_death_prob(m, i_lo))
        if shared and dies_lo and not dies_hi:
            raise CouplingInvariantError(f"lower chain died alone at m={m}, states ({i_hi}, {i_lo})")
        hi.append(i_hi - dies_hi)
        lo.append(i_lo - dies_lo)
        if hi[-1] < lo[-1]:
            raise CouplingInvariantError(f"reversed chains crossed at m={m - 1}")
    return tuple(reversed(hi)), tuple(reversed(lo))


def _conditioned_nonempty(n: int, l: int, rng: np.random.Generator) -> CoupledPathPair:
    hi, lo = _reverse_pair(n, l, rng, shared=False)
    return CoupledPathPair(hi, lo, CouplingMeta(CouplingKind.CONDITIONED, n, (l, l - 1)))


def _monotone(n: int, l: int, rng: np.random.Generator) -> CoupledPathPair:
    hi, lo = _reverse_pair(n, l, rng, shared=True)
    return CoupledPathPair(hi, lo, CouplingMeta(CouplingKind.MONOTONE, n, (l, l - 1)))


def _seat(lonely: int, grew: bool, n_buses: int, u: int) -> int:
    if grew:
        return lonely + 1
    return lonely - _below(u, Fraction(lonely, n_buses))


def _lonely(n: int, l: int, seed_seq: np.random.SeedSequence) -> CoupledPathPair:
    nonempty_seq, shared_seq, lower_seq = seed_seq.spawn(3)
    nonempty = _monotone(n, l, np.random.default_rng(nonempty_seq))
    n_hi, n_lo = nonempty.hi, nonempty.lo
    shared_draws = _uniforms(np.random.default_rng(shared_seq), n)
    lower_draws = _uniforms(np.random.default_rng(lower_seq), n)

    hi, lo = [0], [0]
    for m in range(n):
        grew_hi = n_hi[m + 1] > n_hi[m]
        grew_lo = n_lo[m + 1] > n_lo[m]
        if grew_lo and not grew_hi:
            raise CouplingInvariantError(f"lower nonempty count grew alone at m={m}")
        u_hi = shared_draws[m]
        u_lo = u_hi if hi[-1] == lo[-1] and not grew_hi else lower_draws[m]
        hi.append(_seat(hi[-1], grew_hi, n_hi[m], u_hi))
        lo.append(_seat(lo[-1], grew_lo, n_lo[m], u_lo))
        if hi[-1] < lo[-1]:
            raise CouplingInvariantError(f"lonely counts crossed at m={m + 1}")
    return CoupledPathPair(tuple(hi), tuple(lo), CouplingMeta(CouplingKind.LONELY, n, (l, l - 1)))


def couple_forward_nonempty(n: int, k: int, seed: RngSeed) -> CoupledPathPair:
    """(N^(k+1), N^(k)) driven by one shared uniform per step."""
    if n < 0 or k < 1:
        raise InvalidParameterError(f"need n >= 0 and k >= 1, got n={n}, k={k}")
    _require_seed(seed)
    return _forward_nonempty(n, k, np.random.default_rng(seed))


def couple_conditioned_nonempty(n: int, l: int, seed: RngSeed) -> CoupledPathPair:
    """Conditioned counts for l and l-1 buses: reversed chains that stick once they meet."""
    _require_ne_pair(n, l)
    _require_seed(seed)
    return _conditioned_nonempty(n, l, np.random.default_rng(seed))


def couple_monotone(n: int, l: int, seed: RngSeed) -> CoupledPathPair:
    """Conditioned counts for l and l-1 buses whose difference rises from 0 to 1 once."""
    _require_ne_pair(n, l)
    _require_seed(seed)
    return _monotone(n, l, np.random.default_rng(seed))


def couple_lonely(n: int, l: int, seed: RngSeed) -> CoupledPathPair:
    """Lonely counts for l and l-1 buses, seated on top of a monotone nonempty pair."""
    _require_ne_pair(n, l)
    _require_seed(seed)
    return _lonely(n, l, np.random.SeedSequence(seed))


_SAMPLERS: Dict[CouplingKind, Callable[[int, int, np.random.SeedSequence], CoupledPathPair]] = {
    CouplingKind.FORWARD: lambda n, k, seq: _forward_nonempty(n, k, np.random.default_rng(seq)),
    CouplingKind.CONDITIONED: lambda n, l, seq: _conditioned_nonempty(n, l, np.random.default_rng(seq)),
    CouplingKind.MONOTONE: lambda n, l, seq: _monotone(n, l, np.random.default_rng(seq)),
    CouplingKind.LONELY: _lonely,
}


def _check_kind_params(kind: CouplingKind, n: int, param: int):
    if kind is CouplingKind.FORWARD:
        if n < 0 or param < 1:
            raise InvalidParameterError(f"need n >= 0 and k >= 1, got n={n}, k={param}")
    else:
        _require_ne_pair(n, param)


def sample_pairs(kind, n: int, param: int, paths: int, seed: RngSeed) -> Iterator[CoupledPathPair]:
    """Stream of coupled pairs; pair j uses the j-th child of SeedSequence(seed)."""
    kind = CouplingKind(kind)
    _check_kind_params(kind, n, param)
    _require_seed(seed)
    if paths < 1:
        raise InvalidParameterError(f"paths must be >= 1, got {paths}")
    sampler = _SAMPLERS[kind]
    for child in np.random.SeedSequence(seed).spawn(paths):
        yield sampler(n, param, child)


# ==================== Pathwise predicates ====================

@dataclass(frozen=True)
class ViolationReport:
    """Violation count of one predicate; first_index is the smallest failing sample index."""

    predicate: str
    checked: int = 0
    violations: int = 0
    first_index: Optional[int] = None
    first_detail: Optional[Dict[str, Any]] = None

    def merge(self, other: "ViolationReport") -> "ViolationReport":
        if other.predicate != self.predicate:
            raise InvalidParameterError(f"cannot merge {self.predicate} with {other.predicate}")
        first = min((r for r in (self, other) if r.first_index is not None),
                    key=lambda r: r.first_index, default=self)
        return ViolationReport(self.predicate, self.checked + other.checked,
                               self.violations + other.violations,
                               first.first_index, first.first_detail)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, Any]:
        out = {"predicate": self.predicate, "checked": self.checked, "violations": self.violations}
        if self.first_index is not None:
            out["first_violation"] = {"index": self.first_index, **self.first_detail}
        return out


def _pathwise_ge(pair: CoupledPathPair) -> Optional[Dict[str, Any]]:
    for m, (hi, lo) in enumerate(zip(pair.hi, pair.lo)):
        if hi < lo:
            return {"m": m, "hi": hi, "lo": lo}
    return None


def _monotone_difference(pair: CoupledPathPair) -> Optional[Dict[str, Any]]:
    diff = [hi - lo for hi, lo in zip(pair.hi, pair.lo)]
    if diff[0] != 0 or diff[-1] != 1:
        return {"difference": diff}
    for m in range(1, len(diff)):
        if diff[m] - diff[m - 1] not in (0, 1):
            return {"m": m, "difference": diff}
    return None


def _birth_path_problem(path: Path, n: int, buses: int, exact_end: bool) -> Optional[str]:
    if len(path) != n + 1 or path[0] != 0 or (n >= 1 and path[1] != 1):
        return "bad start or length"
    if any(b - a not in (0, 1) for a, b in zip(path, path[1:])):
        return "not a pure-birth path"
    if path[-1] > buses or (exact_end and path[-1] != buses):
        return f"ends at {path[-1]} with {buses} buses"
    return None


def _lonely_path_problem(path: Path, n: int, buses: int) -> Optional[str]:
    if len(path) != n + 1 or path[0] != 0 or path[1] != 1:
        return "bad start or length"
    for m in range(1, n + 1):
        if path[m] - path[m - 1] not in (-1, 0, 1) or not 0 <= path[m] <= m:
            return f"impossible step at m={m}"
    final = path[-1]
    # buses not holding a lonely passenger need at least two each
    if final > buses or n - final < 2 * (buses - final):
        return f"final value {final} infeasible with {buses} nonempty buses"
    return None


def _marginal_validity(pair: CoupledPathPair) -> Optional[Dict[str, Any]]:
    kind, n, params = pair.meta.kind, pair.meta.n, pair.meta.params
    for side, path, buses in (("hi", pair.hi, params[0]), ("lo", pair.lo, params[1])):
        if kind is CouplingKind.LONELY:
            problem = _lonely_path_problem(path, n, buses)
        else:
            problem = _birth_path_problem(path, n, buses, exact_end=kind is not CouplingKind.FORWARD)
        if problem:
            return {"side": side, "path": list(path), "problem": problem}
    return None


PREDICATES: Dict[str, Callable[[CoupledPathPair], Optional[Dict[str, Any]]]] = {
    "pathwise-ge": _pathwise_ge,
    "monotone-difference": _monotone_difference,
    "marginal-validity": _marginal_validity,
}

PREDICATES_BY_KIND = {
    CouplingKind.FORWARD: ("pathwise-ge", "marginal-validity"),
    CouplingKind.CONDITIONED: ("pathwise-ge", "marginal-validity"),
    CouplingKind.MONOTONE: ("pathwise-ge", "monotone-difference", "marginal-validity"),
    CouplingKind.LONELY: ("pathwise-ge", "marginal-validity"),
}


def verify_pathwise(pairs: Iterable[CoupledPathPair], predicate: str, start: int = 0) -> ViolationReport:
    """Count pairs breaking a named predicate; sample indices start at `start`."""
    try:
        check = PREDICATES[predicate]
    except KeyError:
        raise UnknownPredicateError(predicate) from None
    checked = violations = 0
    first_index, first_detail = None, None
    for index, pair in enumerate(pairs, start):
        checked += 1
        detail = check(pair)
        if detail is not None:
            violations += 1
            if first_index is None:
                first_index, first_detail = index, detail
    return ViolationReport(predicate, checked, violations, first_index, first_detail)


# ==================== Marginal fit ====================

def exact_marginal_laws(kind, n: int, param: int) -> Tuple[ExactDist, ExactDist]:
    """Exact path laws of the (hi, lo) components of a coupling."""
    kind = CouplingKind(kind)
    _check_kind_params(kind, n, param)
    if kind is CouplingKind.FORWARD:
        return forward_path_law(param + 1, n), forward_path_law(param, n)
    if kind is CouplingKind.LONELY:
        return ne_lonely_path_law(param, n), ne_lonely_path_law(param - 1, n)
    return ne_path_law(param, n), ne_path_law(param - 1, n)


@dataclass(frozen=True)
class FitSummary:
    statistic: float
    dof: int
    p_value: float
    alpha: float
    unexpected: int = 0

    @property
    def passed(self) -> bool:
        return self.unexpected == 0 and self.p_value >= self.alpha

    def to_dict(self) -> Dict[str, Any]:
        return {"statistic": self.statistic, "dof": self.dof, "p_value": self.p_value,
                "alpha": self.alpha, "unexpected": self.unexpected, "passed": self.passed}


def _pool(observed: List[int], expected: List[float], min_expected: float) -> Tuple[List[int], List[float]]:
    """Merge categories with expected count below min_expected, smallest first."""
    order = sorted(range(len(expected)), key=lambda j: expected[j])
    obs_out, exp_out = [], []
    pooled_obs, pooled_exp = 0, 0.0
    for j in order:
        if expected[j] < min_expected:
            pooled_obs += observed[j]
            pooled_exp += expected[j]
        else:
            obs_out.append(observed[j])
            exp_out.append(expected[j])
    if pooled_exp:
        if pooled_exp < min_expected and exp_out:
            obs_out[0] += pooled_obs
            exp_out[0] += pooled_exp
        else:
            obs_out.append(pooled_obs)
            exp_out.append(pooled_exp)
    return obs_out, exp_out


def goodness_of_fit(paths: Sequence[Path], law: ExactDist, alpha: float = 1e-3,
                    min_expected: float = 5.0) -> FitSummary:
    """Chi-square test of sampled paths against an exact path law."""
    total = len(paths)
    if total == 0:
        raise InvalidParameterError("no sampled paths to test")
    counts = Counter(paths)
    unexpected = sum(count for path, count in counts.items() if path not in law)
    support = law.support
    observed = [counts.get(path, 0) for path in support]
    expected = [float(law[path]) * total for path in support]
    observed, expected = _pool(observed, expected, min_expected)

    if len(observed) < 2:
        return FitSummary(0.0, 0, 1.0, alpha, unexpected)
    # rescale so both sides sum to the same total
    scale = sum(observed) / sum(expected)
    result = stats.chisquare(observed, [e * scale for e in expected])
    return FitSummary(float(result.statistic), len(observed) - 1, float(result.pvalue), alpha, unexpected)


# ==================== Runs ====================

@dataclass
class CouplingRun:
    kind: CouplingKind
    n: int
    param: int
    paths: int
    seed: RngSeed
    negative_control: bool
    violations: Dict[str, ViolationReport] = field(default_factory=dict)
    fit: Dict[str, FitSummary] = field(default_factory=dict)
    excerpt: List[CoupledPathPair] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(report.violations for report in self.violations.values())

    @property
    def passed(self) -> bool:
        return self.total_violations == 0 and all(summary.passed for summary in self.fit.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "param": self.param,
            "paths": self.paths,
            "seed": self.seed,
            "negative_control": self.negative_control,
            "violations": {name: report.to_dict() for name, report in self.violations.items()},
            "total_violations": self.total_violations,
            "fit": {side: summary.to_dict() for side, summary in self.fit.items()},
            "excerpt": [pair.to_dict() for pair in self.excerpt],
            "passed": self.passed,
        }


def run_coupling(kind, n: int, param: int, paths: int, seed: RngSeed,
                 negative_control: bool = False, fit: bool = True, alpha: float = 1e-3,
                 excerpt_size: int = 5, progress: Optional[Callable[[int], None]] = None) -> CouplingRun:
    """
    Sample `paths` pairs, check every predicate that applies to the kind and,
    when fit is set, test each component against its exact path law.
    """
    kind = CouplingKind(kind)
    logger.info(f"Coupling run kind={kind.value} n={n} param={param} paths={paths} seed={seed}")
    run = CouplingRun(kind, n, param, paths, seed, negative_control)
    names = PREDICATES_BY_KIND[kind]
    run.violations = {name: ViolationReport(name) for name in names}
    hi_paths, lo_paths = [], []

    for index, pair in enumerate(sample_pairs(kind, n, param, paths, seed)):
        if negative_control:
            pair = pair.swapped()
        for name in names:
            run.violations[name] = run.violations[name].merge(verify_pathwise([pair], name, index))
        if fit:
            hi_paths.append(pair.hi)
            lo_paths.append(pair.lo)
        if index < excerpt_size:
            run.excerpt.append(pair)
        if progress is not None:
            progress(1)

    if fit:
        law_hi, law_lo = exact_marginal_laws(kind, n, param)
        run.fit = {"hi": goodness_of_fit(hi_paths, law_hi, alpha),
                   "lo": goodness_of_fit(lo_paths, law_lo, alpha)}

    if run.passed:
        logger.info(f"Coupling run passed: {run.total_violations} violations")
    else:
        logger.error(f"Coupling run failed: {run.total_violations} violations, "
                     f"fit {[side for side, s in run.fit.items() if not s.passed]}")
    return run


# ==================== Grid suite ====================

def coupling_grid(n_max: int) -> List[Tuple[int, int]]:
    """(n, param) cells: even n up to n_max (and n_max itself), param in {2, ceil(n/2), n}."""
    if n_max < 2:
        raise InvalidParameterError(f"n_max must be >= 2, got {n_max}")
    ns = sorted(set(range(2, n_max + 1, 2)) | {n_max})
    return [(n, param) for n in ns for param in sorted({2, max(2, (n + 1) // 2), n})]


def _coupling_cell(kind: CouplingKind, n: int, param: int, paths: int, seed: RngSeed,
                   fit: bool, alpha: float) -> CheckResult:
    run = run_coupling(kind, n, param, paths, seed, fit=fit, alpha=alpha, excerpt_size=0)
    return CheckResult(f"coupling-{kind.value}", {"n": n, "param": param, "seed": seed, "fit": fit},
                       run.passed, None if run.passed else run.to_dict())


def run_coupling_suite(n_max: int = 10, paths: int = 100_000, seed: RngSeed = 0, fit_n_max: int = 8,
                       alpha: float = 1e-3, workers: int = 1) -> SuiteReport:
    """Every coupling kind on the coupling grid; cell j runs on the j-th child of SeedSequence(seed)."""
    _require_seed(seed)
    cells = coupling_grid(n_max)
    logger.info(f"Running coupling suite on {len(cells)} cells per kind, {paths} paths each")
    report = SuiteReport("couplings", {"n_max": n_max, "paths": paths, "seed": seed,
                                       "fit_n_max": fit_n_max, "alpha": alpha})
    children = np.random.SeedSequence(seed).spawn(len(cells) * len(CouplingKind))
    cell_seeds = iter(int(child.generate_state(1, dtype=np.uint64)[0]) for child in children)

    for kind in CouplingKind:
        jobs = [(kind, n, param, paths, next(cell_seeds), n <= fit_n_max, alpha) for n, param in cells]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                report.extend(pool.map(_coupling_cell, *zip(*jobs)))
        else:
            report.extend(_coupling_cell(*job) for job in jobs)

    for check in report.failures:
        logger.error(f"Coupling cell {check.name} failed at {check.parameters}")
    logger.info(f"Coupling suite finished: {report.summary()}")
    return report
