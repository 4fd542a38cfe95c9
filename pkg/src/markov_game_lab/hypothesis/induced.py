# src/markov_game_lab/hypothesis/induced.py
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from markov_game_lab.games.markov_game import StochasticPolicy
from markov_game_lab.games.matrix_game import solve_matrix_game
from markov_game_lab.hypothesis.families import FiniteValueFamily, PolicyFamily
from markov_game_lab.utils.constants import SOLVER_TOL, Side
from markov_game_lab.utils.exceptions import SolverError


@dataclass(frozen=True, eq=False)
class HypothesisSolution:
    """Per-state saddle points of one Q-tuple; values has a zero terminal row."""

    values: np.ndarray  # (H + 1, S)
    pi: StochasticPolicy
    nu: StochasticPolicy


def solve_hypothesis(f: np.ndarray, tol: float = SOLVER_TOL) -> HypothesisSolution:
    H, S, A, B = f.shape
    values = np.zeros((H + 1, S))
    pi = np.zeros((H, S, A))
    nu = np.zeros((H, S, B))
    for h in range(H):
        for x in range(S):
            try:
                sol = solve_matrix_game(f[h, x], tol)
            except SolverError as err:
                raise err.at(h, x) from err
            values[h, x] = sol.value
            pi[h, x] = sol.row_policy
            nu[h, x] = sol.col_policy
    return HypothesisSolution(values, StochasticPolicy(pi, Side.P1), StochasticPolicy(nu, Side.P2))


def solve_family(family: FiniteValueFamily, tol: float = SOLVER_TOL) -> list[HypothesisSolution]:
    return [solve_hypothesis(family.member(i), tol) for i in range(family.size)]


def induced_max_min_policy(
    f: np.ndarray, tol: float = SOLVER_TOL
) -> Tuple[StochasticPolicy, StochasticPolicy]:
    """(pi_f, nu_f): the saddle point of f_h(x, ., .) at every (h, x)."""
    sol = solve_hypothesis(np.asarray(f, dtype=float), tol)
    return sol.pi, sol.nu


def hypothesis_ne_value(f: np.ndarray, x: int, h: int = 0, tol: float = SOLVER_TOL) -> float:
    return solve_matrix_game(np.asarray(f, dtype=float)[h, x], tol).value


def induced_best_response(
    f: np.ndarray, pi: StochasticPolicy, restrict: Optional[PolicyFamily] = None
) -> StochasticPolicy:
    """
    P2's response to pi under f. Unrestricted: the pure argmin column of
    pi_h(x)' f_h(x) at every (h, x). Restricted: the member row of the family
    minimizing f_h(x, pi, .) at every (h, x). Ties go to the lowest index.
    """
    f = np.asarray(f, dtype=float)
    if pi.probs.shape != f.shape[:3]:
        raise ValueError(f"policy shape {pi.probs.shape} does not fit hypothesis {f.shape}")
    columns = np.einsum("hxa,hxab->hxb", pi.probs, f)
    if restrict is None:
        return StochasticPolicy(np.eye(f.shape[3])[np.argmin(columns, axis=2)], Side.P2)
    rows = restrict.stacked
    if rows.shape[1:] != columns.shape:
        raise ValueError(f"restriction shape {rows.shape[1:]} does not fit {columns.shape}")
    choice = np.argmin(np.einsum("mhxb,hxb->mhx", rows, columns), axis=0)
    H, S = choice.shape
    picked = rows[choice, np.arange(H)[:, None], np.arange(S)[None, :]]
    return StochasticPolicy(picked, Side.P2)


def restricted_values(
    tables: np.ndarray, policies: np.ndarray, candidates: np.ndarray
) -> np.ndarray:
    """
    f(x, pi, nu_pi^f) for every policy/member pair: min over candidate rows
    of pi_h(x)' f_h(x) nu_h(x).

    tables (N, H, S, A1, A2), policies (P, H, S, A1), candidates (m, H, S, A2)
    -> (P, N, H + 1, S) with a zero terminal row.
    """
    columns = np.einsum("phxa,nhxab->pnhxb", policies, tables)
    values = np.einsum("pnhxb,mhxb->pnhxm", columns, candidates).min(axis=-1)
    P, N, H, S = values.shape
    out = np.zeros((P, N, H + 1, S))
    out[:, :, :H] = values
    return out


def induced_policy_family(family: FiniteValueFamily, tol: float = SOLVER_TOL) -> PolicyFamily:
    """Pi = {pi_f : f in F}, one max-min policy per member."""
    members = tuple(solve_hypothesis(family.member(i), tol).pi for i in range(family.size))
    return PolicyFamily(members, tuple(f"pi_{name}" for name in family.names))
