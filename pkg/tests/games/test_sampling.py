# tests/games/test_sampling.py

import numpy as np
import pytest

from markov_game_lab.games.markov_game import StochasticPolicy
from markov_game_lab.games.sampling import _draw, sample_episode, sample_returns
from markov_game_lab.games.solvers import evaluate_policy_pair
from markov_game_lab.utils.constants import Side


@pytest.fixture
def uniform_pair():
    """Uniform policies for a 2-level, 2-state, 2-action game."""
    return StochasticPolicy.uniform(2, 2, 2, Side.P1), StochasticPolicy.uniform(2, 2, 2, Side.P2)


def test_same_generator_state_gives_the_same_episode(small_game, uniform_pair):
    """
    Tests that sampling depends on nothing but the generator state.
    """
    pi, nu = uniform_pair
    first = sample_episode(small_game, pi, nu, np.random.default_rng(42))
    second = sample_episode(small_game, pi, nu, np.random.default_rng(42))
    assert first == second


def test_mean_return_approaches_the_exact_value(small_game, uniform_pair):
    """
    Tests the Monte Carlo mean against the exact policy-pair value.
    """
    pi, nu = uniform_pair
    episodes, returns = sample_returns(small_game, pi, nu, 4000, np.random.default_rng(0))
    assert len(episodes) == 4000
    # returns lie in [-2, 2]; the standard error is below 0.035
    assert returns.mean() == pytest.approx(evaluate_policy_pair(small_game, pi, nu), abs=0.15)


def test_deterministic_policies_follow_their_actions(pennies_chain):
    """
    Tests that pure policies are sampled exactly.
    """
    pi = StochasticPolicy.deterministic(np.zeros((2, 2), dtype=int), 2, Side.P1)
    nu = StochasticPolicy.deterministic(np.zeros((2, 2), dtype=int), 2, Side.P2)
    episode = sample_episode(pennies_chain, pi, nu, np.random.default_rng(1))
    # matching actions move the chain one state forward each level
    assert [(s.x, s.a, s.b, s.x_next) for s in episode.steps] == [(0, 0, 0, 1), (1, 0, 0, 0)]
    assert episode.total_reward == pytest.approx(0.5 + 1.0)


class _TopUniform:
    """Generator stand-in whose uniform draw is the largest double below 1."""

    def random(self) -> float:
        return float(np.nextafter(1.0, 0.0))


def test_round_off_never_selects_a_zero_probability_action():
    """
    Tests a row whose cumulative sum falls short of 1 ahead of a zero entry.
    """
    probs = np.array([0.1] * 10 + [0.0])
    assert _draw(probs, _TopUniform()) == 9
    assert _draw(np.array([0.0, 1.0, 0.0]), _TopUniform()) == 1
    assert _draw(np.array([0.0, 1.0, 0.0]), np.random.default_rng(0)) == 1
