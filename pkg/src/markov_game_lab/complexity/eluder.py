# src/markov_game_lab/complexity/eluder.py
"""
Distributional and minimax Eluder dimensions on finite instances.

Everything works on the expectation matrix E[m, g] = E_{mu_m}[u_g]. A measure
is eps'-independent of a prefix when some g has prefix norm
sqrt(sum_i E_{mu_i}[g]^2) <= eps' and |E_nu[g]| > eps'. For a fixed prefix
the admissible eps' form the union over g of [sqrt(s_g), |E_nu[g]|), so the
exact search tracks that interval set instead of scanning an eps' grid.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from markov_game_lab.complexity.residuals import (
    bellman_residuals,
    dirac_measures,
    expectations,
    occupancy_family,
)
from markov_game_lab.games.markov_game import MarkovGame
from markov_game_lab.hypothesis.families import FiniteValueFamily, PolicyFamily
from markov_game_lab.hypothesis.induced import induced_policy_family
from markov_game_lab.utils.constants import ELUDER_MEASURE_CAP, EluderMode, EluderVariant
from markov_game_lab.utils.exceptions import SizeCapExceeded
from markov_game_lab.utils.logger import log_info

Interval = Tuple[float, float]
IntervalSet = Tuple[Interval, ...]


def _normalize(intervals: List[Interval]) -> IntervalSet:
    merged: List[Interval] = []
    for lo, hi in sorted(i for i in intervals if i[0] < i[1]):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


def _intersect(first: IntervalSet, second: IntervalSet) -> IntervalSet:
    return _normalize(
        [(max(a, c), min(b, d)) for a, b in first for c, d in second]
    )


def _prefix_squares(prefix: np.ndarray, n_functions: int) -> np.ndarray:
    prefix = np.asarray(prefix, dtype=float).reshape(-1, n_functions)
    return np.square(prefix).sum(axis=0)


def _admissible(e_nu: np.ndarray, squares: np.ndarray) -> IntervalSet:
    return _normalize(list(zip(np.sqrt(squares).tolist(), np.abs(e_nu).tolist())))


def independence_intervals(e_nu: np.ndarray, prefix: np.ndarray) -> IntervalSet:
    """All eps' at which nu is eps'-independent of the prefix."""
    e_nu = np.asarray(e_nu, dtype=float)
    return _admissible(e_nu, _prefix_squares(prefix, e_nu.shape[0]))


def is_eps_independent(e_nu: np.ndarray, prefix: np.ndarray, eps_prime: float) -> bool:
    """
    e_nu: (G,) expectations under nu; prefix: (n, G) expectations under the
    prefix measures. Exhaustive over the finite function family.
    """
    if eps_prime <= 0:
        raise ValueError("eps' must be positive")
    e_nu = np.asarray(e_nu, dtype=float)
    norms = np.sqrt(_prefix_squares(prefix, e_nu.shape[0]))
    return bool(np.any((norms <= eps_prime) & (np.abs(e_nu) > eps_prime)))


@dataclass(frozen=True)
class EluderResult:
    dimension: int
    witness: Tuple[int, ...]
    eps_primes: Tuple[float, ...]
    mode: EluderMode


def _pick_inside(intervals: IntervalSet, fallback: float) -> float:
    if not intervals:
        return fallback
    lo, hi = intervals[0]
    return (lo + hi) / 2 if math.isfinite(hi) else lo + 1.0


def _witness_levels(E: np.ndarray, path: Tuple[int, ...], eps: float, shared: bool) -> Tuple[float, ...]:
    """An eps' for every step of the path, strictly inside its admissible set."""
    base: IntervalSet = ((eps, math.inf),)
    steps = [_intersect(base, independence_intervals(E[m], E[list(path[:i])])) for i, m in enumerate(path)]
    if not shared:
        return tuple(_pick_inside(s, eps) for s in steps)
    common = base
    for s in steps:
        common = _intersect(common, s)
    return tuple(_pick_inside(common, eps) for _ in path)


class _ExactSearch:
    """Depth-first search over multisets of measures, memoized on (counts, eps' set)."""

    def __init__(self, E: np.ndarray, eps: float, shared: bool):
        self.E = E
        self.eps = eps
        self.shared = shared
        self.e_max = np.abs(E).max(axis=0)
        self.base: IntervalSet = ((eps, math.inf),)
        self.memo: Dict[Tuple[Tuple[int, ...], IntervalSet], Tuple[int, Tuple[int, ...]]] = {}

    def _bound(self, squares: np.ndarray, intervals: IntervalSet) -> int:
        if self.shared:
            top = max(hi for _, hi in intervals)
            return int(np.sum(np.sqrt(squares) < np.minimum(top, self.e_max)))
        room = np.maximum(self.e_max**2 - squares, 0.0)
        return int(np.sum(np.ceil(room / self.eps**2)))

    def search(self, counts: Tuple[int, ...], intervals: IntervalSet) -> Tuple[int, Tuple[int, ...]]:
        key = (counts, intervals)
        if key in self.memo:
            return self.memo[key]
        squares = np.asarray(counts, dtype=float) @ np.square(self.E)
        bound = self._bound(squares, intervals)
        best: Tuple[int, Tuple[int, ...]] = (0, ())
        for m in range(self.E.shape[0]):
            if best[0] >= bound:
                break
            step = _intersect(self.base, _admissible(self.E[m], squares))
            child = _intersect(intervals, step) if self.shared else self.base
            if not step or not child:
                continue
            grown = counts[:m] + (counts[m] + 1,) + counts[m + 1:]
            length, suffix = self.search(grown, child)
            if length + 1 > best[0]:
                best = (length + 1, (m,) + suffix)
        self.memo[key] = best
        return best


def de_dimension(
    E: np.ndarray,
    eps: float,
    mode: EluderMode = EluderMode.EXACT,
    cap: int = ELUDER_MEASURE_CAP,
    shared: bool = True,
) -> EluderResult:
    """
    Longest sequence of measures each eps'-independent of its predecessors for
    some eps' >= eps, shared across the sequence unless `shared` is False.
    Exact mode refuses more than `cap` measures; greedy mode appends the
    lowest-index admissible measure until none is left (a lower bound).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    E = np.asarray(E, dtype=float)
    M, G = E.shape
    if M == 0 or G == 0:
        return EluderResult(0, (), (), mode)
    if mode is EluderMode.EXACT:
        if M > cap:
            raise SizeCapExceeded(M, cap)
        search = _ExactSearch(E, eps, shared)
        _, path = search.search(tuple([0] * M), search.base)
    else:
        path = _greedy_path(E, eps, shared)
    return EluderResult(len(path), path, _witness_levels(E, path, eps, shared), mode)


def _greedy_path(E: np.ndarray, eps: float, shared: bool) -> Tuple[int, ...]:
    base: IntervalSet = ((eps, math.inf),)
    intervals = base
    path: List[int] = []
    while True:
        for m in range(E.shape[0]):
            step = _intersect(base, independence_intervals(E[m], E[path]))
            child = _intersect(intervals, step) if shared else base
            if step and child:
                path.append(m)
                intervals = child
                break
        else:
            return tuple(path)


def verify_witness(E: np.ndarray, result: EluderResult) -> bool:
    """Replays the witness: every step independent of its prefix at its eps'."""
    E = np.asarray(E, dtype=float)
    path = list(result.witness)
    return all(
        is_eps_independent(E[m], E[path[:i]], eps_prime)
        for i, (m, eps_prime) in enumerate(zip(path, result.eps_primes))
    )


@dataclass
class LevelDimension:
    h: int
    dirac: EluderResult
    occupancy: Optional[EluderResult] = None

    @property
    def value(self) -> int:
        if self.occupancy is None:
            return self.dirac.dimension
        return min(self.dirac.dimension, self.occupancy.dimension)


@dataclass
class EluderReport:
    dimension: int
    variant: EluderVariant
    eps: float
    levels: List[LevelDimension] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "variant": self.variant.value,
            "eps": self.eps,
            "levels": [
                {
                    "h": level.h,
                    "value": level.value,
                    "dirac": level.dirac.dimension,
                    "dirac_witness": list(level.dirac.witness),
                    "dirac_eps_primes": list(level.dirac.eps_primes),
                    "occupancy": None if level.occupancy is None else level.occupancy.dimension,
                    "occupancy_witness": None if level.occupancy is None else list(level.occupancy.witness),
                }
                for level in self.levels
            ],
        }


def minimax_eluder_dimension(
    game: MarkovGame,
    family: FiniteValueFamily,
    eps: float,
    mode: EluderMode = EluderMode.EXACT,
    variant: EluderVariant = EluderVariant.DECOUPLED,
    policies: Optional[PolicyFamily] = None,
    opponents: Optional[PolicyFamily] = None,
    cap: int = ELUDER_MEASURE_CAP,
    shared: bool = True,
) -> EluderReport:
    """
    Decoupled: max_h of the dimension of the level-h residuals on Dirac atoms.
    Coordinated: residuals indexed by (f, pi), pi from `policies` (the
    family's induced max-min policies by default), and per level the smaller
    of the Dirac and occupancy-measure dimensions.
    """
    report = EluderReport(0, variant, eps)
    atoms = dirac_measures(game)
    if variant is EluderVariant.COORDINATED and policies is None:
        policies = induced_policy_family(family)
    for h in range(game.horizon):
        if variant is EluderVariant.DECOUPLED:
            residuals = bellman_residuals(game, family, h)
            report.levels.append(LevelDimension(h, de_dimension(expectations(residuals, atoms), eps, mode, cap, shared)))
        else:
            residuals = bellman_residuals(game, family, h, policies, opponents)
            dirac = de_dimension(expectations(residuals, atoms), eps, mode, cap, shared)
            measures = occupancy_family(game, family, h, opponents)
            occupancy = de_dimension(expectations(residuals, measures), eps, mode, cap, shared)
            report.levels.append(LevelDimension(h, dirac, occupancy))
        log_info(f"Level {h}: dimension {report.levels[-1].value}")
    report.dimension = max((level.value for level in report.levels), default=0)
    return report
