# src/markov_game_lab/games/solvers.py
"""
Exact solvers on the true tabular model: Nash value iteration, best
responses (optionally restricted to the rows a finite policy family offers),
and policy-pair evaluation by forward distribution propagation.
"""
from typing import Optional, Tuple

import numpy as np

from markov_game_lab.games.markov_game import GameSolution, MarkovGame, StochasticPolicy
from markov_game_lab.games.matrix_game import solve_matrix_game
from markov_game_lab.utils.constants import SOLVER_TOL, Side
from markov_game_lab.utils.exceptions import SolverError


def bellman_backup(game: MarkovGame, h: int, v_next: np.ndarray) -> np.ndarray:
    """Q_h(x, a, b) = r_h(x, a, b) + sum_x' P_h(x' | x, a, b) v_next(x')."""
    return game.rewards[h] + game.transitions[h] @ v_next


def ne_value_iteration(game: MarkovGame, tol: float = SOLVER_TOL) -> GameSolution:
    H, S, A, B = game.shape
    q_star = np.zeros((H, S, A, B))
    v_star = np.zeros((H + 1, S))
    pi = np.zeros((H, S, A))
    nu = np.zeros((H, S, B))
    for h in range(H - 1, -1, -1):
        q_star[h] = bellman_backup(game, h, v_star[h + 1])
        for x in range(S):
            try:
                sol = solve_matrix_game(q_star[h, x], tol)
            except SolverError as err:
                raise err.at(h, x) from err
            v_star[h, x] = sol.value
            pi[h, x] = sol.row_policy
            nu[h, x] = sol.col_policy
    return GameSolution(
        q_star=q_star,
        v_star=v_star,
        pi_star=StochasticPolicy(pi, Side.P1),
        nu_star=StochasticPolicy(nu, Side.P2),
        initial_state=game.initial_state,
    )


def best_response_tables(
    game: MarkovGame,
    fixed: StochasticPolicy,
    side: Side,
    candidates: Optional[np.ndarray] = None,
) -> Tuple[StochasticPolicy, np.ndarray]:
    """
    Backward induction for the free player against a fixed policy.

    `side` names the FIXED player. With `candidates` (m x H x S x n_free), the
    free player picks at each (h, x) among the member rows candidates[:, h, x]
    instead of among pure actions. Ties go to the lowest index.
    """
    fixed.check_fits(game, side)
    free = side.other
    n_free = game.n_actions(free)
    if candidates is not None:
        candidates = np.asarray(candidates, dtype=float)
        if candidates.ndim != 4 or candidates.shape[1:] != (game.horizon, game.n_states, n_free):
            raise ValueError(
                f"candidate policies shape {candidates.shape} does not fit the free player"
            )
        if candidates.shape[0] == 0:
            raise ValueError("empty candidate policy family")

    H, S = game.horizon, game.n_states
    values = np.zeros((H + 1, S))
    response = np.zeros((H, S, n_free))
    for h in range(H - 1, -1, -1):
        q = bellman_backup(game, h, values[h + 1])
        if side is Side.P1:
            # payoff of each P2 action against the fixed row mix
            payoff = np.einsum("xa,xab->xb", fixed.probs[h], q)
        else:
            payoff = np.einsum("xab,xb->xa", q, fixed.probs[h])
        if candidates is None:
            choice = np.argmin(payoff, axis=1) if side is Side.P1 else np.argmax(payoff, axis=1)
            response[h] = np.eye(n_free)[choice]
        else:
            member_payoff = np.einsum("mxn,xn->mx", candidates[:, h], payoff)
            choice = (
                np.argmin(member_payoff, axis=0)
                if side is Side.P1
                else np.argmax(member_payoff, axis=0)
            )
            response[h] = candidates[choice, h, np.arange(S)]
        values[h] = np.einsum("xn,xn->x", response[h], payoff)
    return StochasticPolicy(response, free), values


def best_response_value_iteration(
    game: MarkovGame,
    fixed: StochasticPolicy,
    side: Side,
    candidates: Optional[np.ndarray] = None,
) -> Tuple[StochasticPolicy, float]:
    response, values = best_response_tables(game, fixed, side, candidates)
    return response, float(values[0, game.initial_state])


def policy_pair_tables(
    game: MarkovGame, pi: StochasticPolicy, nu: StochasticPolicy
) -> Tuple[np.ndarray, np.ndarray]:
    """Q^{pi,nu} (H x S x A1 x A2) and V^{pi,nu} ((H+1) x S) by backward recursion."""
    pi.check_fits(game, Side.P1)
    nu.check_fits(game, Side.P2)
    H, S, A, B = game.shape
    q = np.zeros((H, S, A, B))
    v = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        q[h] = bellman_backup(game, h, v[h + 1])
        v[h] = np.einsum("xa,xab,xb->x", pi.probs[h], q[h], nu.probs[h])
    return q, v


def occupancy_measures(
    game: MarkovGame, pi: StochasticPolicy, nu: StochasticPolicy
) -> np.ndarray:
    """occ[h, x, a, b] = P(x_h = x, a_h = a, b_h = b) under (pi, nu) from x1."""
    pi.check_fits(game, Side.P1)
    nu.check_fits(game, Side.P2)
    H, S, A, B = game.shape
    occ = np.zeros((H, S, A, B))
    state_dist = np.zeros(S)
    state_dist[game.initial_state] = 1.0
    for h in range(H):
        occ[h] = np.einsum("x,xa,xb->xab", state_dist, pi.probs[h], nu.probs[h])
        state_dist = np.einsum("xab,xaby->y", occ[h], game.transitions[h])
    return occ


def evaluate_policy_pair(
    game: MarkovGame, pi: StochasticPolicy, nu: StochasticPolicy
) -> float:
    """Exact V^{pi,nu}_1(x1) by forward propagation; no sampling."""
    occ = occupancy_measures(game, pi, nu)
    return float(np.sum(occ * game.rewards))


def duality_gap(game: MarkovGame, pi: StochasticPolicy, nu: StochasticPolicy) -> float:
    """V^{pi*_nu, nu} - V^{pi, nu*_pi}; zero exactly at a Nash equilibrium."""
    _, upper = best_response_value_iteration(game, nu, Side.P2)
    _, lower = best_response_value_iteration(game, pi, Side.P1)
    return upper - lower
