# src/markov_game_lab/complexity/residuals.py
"""
Bellman residual families and the measure families they are tested on.

Residuals are computed in the true game; measures are either Dirac atoms on
(x, a, b) or exact level-h occupancy measures of policy pairs induced by the
family.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from markov_game_lab.games.markov_game import MarkovGame
from markov_game_lab.games.solvers import occupancy_measures
from markov_game_lab.hypothesis.families import FiniteValueFamily, PolicyFamily
from markov_game_lab.hypothesis.induced import induced_best_response, restricted_values, solve_family
from markov_game_lab.utils.constants import PROBABILITY_TOL, Side

Tag = Tuple[int, Optional[int]]


@dataclass(frozen=True, eq=False)
class ResidualFamily:
    """u(x, a, b) tables at one level, tagged with (member, policy or None)."""

    h: int
    tables: np.ndarray  # (n, S, A1, A2)
    tags: Tuple[Tag, ...]

    @property
    def size(self) -> int:
        return int(self.tables.shape[0])


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    """Probability vectors over (x, a, b), stored as (m, S, A1, A2)."""

    measures: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        sums = self.measures.reshape(self.measures.shape[0], -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROBABILITY_TOL) or np.any(self.measures < 0):
            raise ValueError(f"{self.kind} measures are not probability vectors")

    @property
    def size(self) -> int:
        return int(self.measures.shape[0])


def expectations(residuals: ResidualFamily, measures: MeasureFamily) -> np.ndarray:
    """E[m, g] = E_{mu_m}[u_g]."""
    return np.einsum("mxab,gxab->mg", measures.measures, residuals.tables)


def bellman_residuals(
    game: MarkovGame,
    family: FiniteValueFamily,
    h: int,
    policies: Optional[PolicyFamily] = None,
    opponents: Optional[PolicyFamily] = None,
) -> ResidualFamily:
    """
    Decoupled: u_f = f_h - (r_h + P_h [max-min value of f_{h+1}]).
    With `policies`: u_{f,pi} = f_h - (r_h + P_h [min over the opponent rows of
    pi f_{h+1} nu]), pure actions standing in for a missing opponent family.
    """
    family.check_fits(game)
    if not 0 <= h < game.horizon:
        raise ValueError(f"level {h} outside [0, {game.horizon})")
    f_h = family.tables[:, h]
    kernel = game.transitions[h]
    if policies is None:
        successor = np.stack([sol.values[h + 1] for sol in solve_family(family)])  # (N, S)
        targets = game.rewards[h][None] + np.einsum("xaby,ny->nxab", kernel, successor)
        return ResidualFamily(h, f_h - targets, tuple((n, None) for n in range(family.size)))

    policies.check_fits(game, Side.P1)
    if opponents is None:
        opponents = PolicyFamily.pure_actions(game.horizon, game.n_states, game.n_actions2, Side.P2)
    successor = restricted_values(family.tables, policies.stacked, opponents.stacked)[:, :, h + 1]  # (P, N, S)
    targets = game.rewards[h][None, None] + np.einsum("xaby,pny->npxab", kernel, successor)
    residuals = f_h[:, None] - targets  # (N, P, S, A1, A2)
    N, P = residuals.shape[:2]
    tags = tuple((n, p) for n in range(N) for p in range(P))
    return ResidualFamily(h, residuals.reshape((N * P,) + residuals.shape[2:]), tags)


def dirac_measures(game: MarkovGame) -> MeasureFamily:
    """One atom per (x, a, b), ordered row-major."""
    _, S, A, B = game.shape
    return MeasureFamily(np.eye(S * A * B).reshape(S * A * B, S, A, B), "dirac")


def _deduplicate(measures: List[np.ndarray], tol: float) -> np.ndarray:
    kept: List[np.ndarray] = []
    for m in measures:
        if not any(np.abs(m - k).max() <= tol for k in kept):
            kept.append(m)
    return np.stack(kept)


def occupancy_family(
    game: MarkovGame,
    family: FiniteValueFamily,
    h: int,
    opponents: Optional[PolicyFamily] = None,
    tol: float = PROBABILITY_TOL,
) -> MeasureFamily:
    """
    Level-h occupancy of (pi_f, nu^g_{pi_f}) in the true game for every pair of
    members (f, g), duplicates removed; the response is restricted to the
    opponent rows when a family is given.
    """
    family.check_fits(game)
    solutions = solve_family(family)
    measures = []
    for sol in solutions:
        for g in range(family.size):
            nu = induced_best_response(family.member(g), sol.pi, opponents)
            measures.append(occupancy_measures(game, sol.pi, nu)[h])
    return MeasureFamily(_deduplicate(measures, tol), "occupancy")
