# tests/utils/test_rng.py

import numpy as np

from markov_game_lab.utils.rng import RngFactory


def test_same_key_same_draws():
    """
    Tests that (seed, experiment, stream) fully determines the draws.
    """
    a = RngFactory(7, "exp").generator("env").random(5)
    b = RngFactory(7, "exp").generator("env").random(5)
    np.testing.assert_array_equal(a, b)


def test_streams_and_experiments_are_independent():
    """
    Tests that changing the stream, experiment or seed changes the draws.
    """
    base = RngFactory(7, "exp").generator("env").random(5)
    assert not np.array_equal(base, RngFactory(7, "exp").generator("opponent").random(5))
    assert not np.array_equal(base, RngFactory(7, "other").generator("env").random(5))
    assert not np.array_equal(base, RngFactory(8, "exp").generator("env").random(5))


def test_episode_draws_do_not_depend_on_order():
    """
    Tests that episode k draws the same numbers however many episodes ran before it.
    """
    factory = RngFactory(3)
    forward = [factory.episode("env", k).random(3) for k in range(4)]
    direct = factory.episode("env", 3).random(3)
    np.testing.assert_array_equal(forward[3], direct)
    assert not np.array_equal(forward[0], forward[1])
