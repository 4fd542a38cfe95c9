# src/markov_game_lab/games/matrix_game.py
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from markov_game_lab.utils.constants import SOLVER_MAX_ITER, SOLVER_TOL
from markov_game_lab.utils.exceptions import SolverError
from markov_game_lab.utils.logger import log_warning

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True, eq=False)
class MatrixGameSolution:
    """Mixed saddle point of a zero-sum matrix game (rows maximize)."""

    row_policy: np.ndarray
    col_policy: np.ndarray
    value: float
    iterations: int = 0


def _as_payoff(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or min(m.shape) < 1:
        raise ValueError(f"payoff must be a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("payoff matrix has non-finite entries")
    return m


def _check_distribution(dist: np.ndarray, size: int, what: str) -> np.ndarray:
    d = np.asarray(dist, dtype=float)
    if d.shape != (size,):
        raise ValueError(f"{what} has shape {d.shape}, expected ({size},)")
    if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-9:
        raise ValueError(f"{what} is not a probability vector")
    return d


def pure_saddle_point(matrix: np.ndarray) -> Optional[Tuple[int, int]]:
    """(row, col) of a pure saddle point with lowest indices, if one exists."""
    m = _as_payoff(matrix)
    row_floor = m.min(axis=1)
    col_ceiling = m.max(axis=0)
    i = int(np.argmax(row_floor))
    j = int(np.argmin(col_ceiling))
    if row_floor[i] == col_ceiling[j]:
        return i, j
    return None


def _normalise(weights: np.ndarray) -> np.ndarray:
    w = np.clip(weights, 0.0, None)
    return w / w.sum()


def _highs(cost: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray, max_iter: int) -> Tuple[np.ndarray, int]:
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=(0, None),
        method="highs",
        options={**_HIGHS_OPTIONS, "maxiter": max_iter},
    )
    iterations = int(getattr(res, "nit", 0) or 0)
    if res.status != 0 or res.x is None:
        raise SolverError(f"matrix-game LP failed: {res.message}", iterations)
    return np.asarray(res.x, dtype=float), iterations


def exploitability(matrix: np.ndarray, row_policy: np.ndarray, col_policy: np.ndarray) -> Tuple[float, float]:
    """Best pure deviation gain of (row player, column player)."""
    m = _as_payoff(matrix)
    value = float(row_policy @ m @ col_policy)
    return float(np.max(m @ col_policy) - value), float(value - np.min(row_policy @ m))


def solve_matrix_game(
    matrix: np.ndarray, tol: float = SOLVER_TOL, max_iter: int = SOLVER_MAX_ITER
) -> MatrixGameSolution:
    m = _as_payoff(matrix)
    n_rows, n_cols = m.shape

    saddle = pure_saddle_point(m)
    if saddle is not None:
        i, j = saddle
        return MatrixGameSolution(np.eye(n_rows)[i], np.eye(n_cols)[j], float(m[i, j]))

    # Shift to a strictly positive matrix; the saddle policies are unchanged.
    shifted = m - m.min() + 1.0
    # Row player: min 1'u  s.t.  shifted' u >= 1, u >= 0.
    u, it_rows = _highs(np.ones(n_rows), -shifted.T, -np.ones(n_cols), max_iter)
    # Column player: max 1'w  s.t.  shifted w <= 1, w >= 0.
    w, it_cols = _highs(-np.ones(n_cols), shifted, np.ones(n_rows), max_iter)

    row_policy, col_policy = _normalise(u), _normalise(w)
    value = float(row_policy @ m @ col_policy)
    gains = exploitability(m, row_policy, col_policy)
    if max(gains) > tol:
        log_warning(
            f"Matrix game solved with exploitability {max(gains):.3g} above tol {tol:.3g}."
        )
    return MatrixGameSolution(row_policy, col_policy, value, it_rows + it_cols)


def matrix_game_value(matrix: np.ndarray, tol: float = SOLVER_TOL) -> float:
    return solve_matrix_game(matrix, tol).value


def best_response_row(matrix: np.ndarray, col_dist: np.ndarray) -> Tuple[int, float]:
    """Row maximizing expected payoff against col_dist; ties to the lowest index."""
    m = _as_payoff(matrix)
    payoff = m @ _check_distribution(col_dist, m.shape[1], "column distribution")
    i = int(np.argmax(payoff))
    return i, float(payoff[i])


def best_response_col(matrix: np.ndarray, row_dist: np.ndarray) -> Tuple[int, float]:
    """Column minimizing expected payoff against row_dist; ties to the lowest index."""
    m = _as_payoff(matrix)
    payoff = _check_distribution(row_dist, m.shape[0], "row distribution") @ m
    j = int(np.argmin(payoff))
    return j, float(payoff[j])
