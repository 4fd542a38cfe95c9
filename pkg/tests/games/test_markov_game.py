# tests/games/test_markov_game.py

import numpy as np
import pytest

from markov_game_lab.games.markov_game import MarkovGame, StochasticPolicy, swap_players
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.utils.constants import Side
from markov_game_lab.utils.exceptions import GameValidationError


def _stay_transitions(H: int, S: int, A: int) -> np.ndarray:
    transitions = np.zeros((H, S, A, A, S))
    for x in range(S):
        transitions[:, x, :, :, x] = 1.0
    return transitions


def test_rejects_transition_rows_that_do_not_sum_to_one():
    """
    Tests that the first bad transition row is reported with its index.
    """
    transitions = _stay_transitions(2, 2, 2)
    transitions[1, 0, 1, 0] = [0.5, 0.4]
    with pytest.raises(GameValidationError) as err:
        MarkovGame(np.zeros((2, 2, 2, 2)), transitions)
    assert err.value.index == (1, 0, 1, 0)


def test_rejects_rewards_outside_the_declared_range():
    """
    Tests the reward range check.
    """
    rewards = np.zeros((1, 1, 2, 2))
    rewards[0, 0, 1, 1] = 1.5
    with pytest.raises(GameValidationError, match="outside range"):
        MarkovGame(rewards, _stay_transitions(1, 1, 2))


def test_rejects_negative_policy_probabilities():
    """
    Tests that policies are validated like transition rows.
    """
    with pytest.raises(GameValidationError, match="negative"):
        StochasticPolicy(np.array([[[1.2, -0.2]]]))


def test_swapping_players_twice_is_the_identity(small_game):
    """
    Tests that swap_players is an involution and negates the reward range.
    """
    swapped = swap_players(small_game)
    assert swapped.reward_range == (-1.0, 1.0)
    np.testing.assert_array_equal(swapped.rewards[0, 0], -small_game.rewards[0, 0].T)

    back = swap_players(swapped)
    np.testing.assert_array_equal(back.rewards, small_game.rewards)
    np.testing.assert_array_equal(back.transitions, small_game.transitions)


def test_value_range_shrinks_with_the_level():
    """
    Tests that the value range covers the remaining steps only.
    """
    game = MarkovGame(np.zeros((3, 1, 2, 2)), _stay_transitions(3, 1, 2))
    assert game.value_range(0) == (-3.0, 3.0)
    assert game.value_range(1) == (-2.0, 2.0)


def test_deterministic_policies_compare_by_content():
    """
    Tests equality and hashing of policies built from action tables.
    """
    first = StochasticPolicy.deterministic(np.array([[0, 1]]), 2)
    second = StochasticPolicy.deterministic(np.array([[0, 1]]), 2)
    np.testing.assert_array_equal(first.probs[0], [[1.0, 0.0], [0.0, 1.0]])
    assert first == second
    assert hash(first) == hash(second)
    assert first != second.with_side(Side.P2)


def test_sampled_episodes_are_consistent(pennies_chain):
    """
    Tests that a sampled trajectory starts at x1 and chains its states.
    """
    pi = StochasticPolicy.uniform(2, 2, 2, Side.P1)
    nu = StochasticPolicy.uniform(2, 2, 2, Side.P2)
    episode = sample_episode(pennies_chain, pi, nu, np.random.default_rng(0))
    episode.check_consistent(pennies_chain)
    for step in episode.steps:
        assert step.r == pennies_chain.rewards[step.h, step.x, step.a, step.b]
