# tests/games/test_solvers.py

import numpy as np
import pytest

from markov_game_lab.games.markov_game import StochasticPolicy
from markov_game_lab.games.solvers import (
    best_response_value_iteration,
    duality_gap,
    evaluate_policy_pair,
    ne_value_iteration,
    occupancy_measures,
    policy_pair_tables,
)
from markov_game_lab.harness.generators import generate_game
from markov_game_lab.hypothesis.families import PolicyFamily
from markov_game_lab.utils.constants import Side


def test_matching_pennies_value_is_zero(pennies, pennies_chain):
    """
    Tests V* = 0 and the uniform equilibrium on the pennies games.
    """
    for game in (pennies, pennies_chain):
        sol = ne_value_iteration(game)
        assert sol.value == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(sol.pi_star.probs, 0.5, atol=1e-8)
        np.testing.assert_array_equal(sol.v_star[-1], 0.0)


def test_nash_policies_sandwich_the_game_value():
    """
    Tests V^{pi*, nu} >= V* >= V^{pi, nu*} against pure and uniform deviations.
    """
    for seed in range(10):
        game = generate_game("random(H=3, S=3, A=2)", seed)
        sol = ne_value_iteration(game)
        uniform1 = StochasticPolicy.uniform(3, 3, 2, Side.P1)
        uniform2 = StochasticPolicy.uniform(3, 3, 2, Side.P2)

        assert evaluate_policy_pair(game, sol.pi_star, uniform2) >= sol.value - 1e-7
        assert evaluate_policy_pair(game, uniform1, sol.nu_star) <= sol.value + 1e-7
        # the exact best responses meet V* from both sides
        _, lower = best_response_value_iteration(game, sol.pi_star, Side.P1)
        _, upper = best_response_value_iteration(game, sol.nu_star, Side.P2)
        assert lower == pytest.approx(sol.value, abs=1e-7)
        assert upper == pytest.approx(sol.value, abs=1e-7)
        assert duality_gap(game, sol.pi_star, sol.nu_star) == pytest.approx(0.0, abs=1e-7)


def test_duality_gap_is_never_negative(small_game):
    """
    Tests that an arbitrary pure policy pair has a non-negative gap.
    """
    pi = StochasticPolicy.deterministic(np.zeros((2, 2), dtype=int), 2, Side.P1)
    nu = StochasticPolicy.deterministic(np.zeros((2, 2), dtype=int), 2, Side.P2)
    assert duality_gap(small_game, pi, nu) >= -1e-12


def test_turn_based_games_have_pure_equilibria():
    """
    Tests that a game where one player moves per level is solved by pure policies.
    """
    game = generate_game("turn-based(H=4, S=3, A=3)", 5)
    sol = ne_value_iteration(game)
    assert set(np.unique(sol.pi_star.probs)) <= {0.0, 1.0}
    assert set(np.unique(sol.nu_star.probs)) <= {0.0, 1.0}


def test_policy_pair_tables_match_forward_evaluation(small_game):
    """
    Tests that backward V^{pi,nu}(x1) equals the occupancy-weighted reward sum.
    """
    rng = np.random.default_rng(3)
    pi = StochasticPolicy(rng.dirichlet(np.ones(2), size=(2, 2)), Side.P1)
    nu = StochasticPolicy(rng.dirichlet(np.ones(2), size=(2, 2)), Side.P2)
    _, v = policy_pair_tables(small_game, pi, nu)
    assert v[0, small_game.initial_state] == pytest.approx(evaluate_policy_pair(small_game, pi, nu), abs=1e-12)


def test_occupancy_measures_are_distributions(small_game):
    """
    Tests that every level's occupancy sums to one.
    """
    pi = StochasticPolicy.uniform(2, 2, 2, Side.P1)
    nu = StochasticPolicy.uniform(2, 2, 2, Side.P2)
    occ = occupancy_measures(small_game, pi, nu)
    np.testing.assert_allclose(occ.reshape(2, -1).sum(axis=1), 1.0)
    assert np.all(occ >= 0)


def test_restricted_best_response(small_game):
    """
    Tests that restricting P2 can only help P1, and that the pure-action
    family reproduces the unrestricted response.
    """
    pi = StochasticPolicy.uniform(2, 2, 2, Side.P1)
    _, free = best_response_value_iteration(small_game, pi, Side.P1)

    pure = PolicyFamily.pure_actions(2, 2, 2, Side.P2)
    _, via_pure = best_response_value_iteration(small_game, pi, Side.P1, pure.stacked)
    assert via_pure == pytest.approx(free, abs=1e-12)

    only_first = pure.stacked[:1]
    _, restricted = best_response_value_iteration(small_game, pi, Side.P1, only_first)
    assert restricted >= free - 1e-12


def test_best_response_rejects_misfit_candidates(small_game):
    """
    Tests that candidate rows must match the free player's layout.
    """
    pi = StochasticPolicy.uniform(2, 2, 2, Side.P1)
    with pytest.raises(ValueError):
        best_response_value_iteration(small_game, pi, Side.P1, np.ones((1, 2, 2, 3)) / 3)
