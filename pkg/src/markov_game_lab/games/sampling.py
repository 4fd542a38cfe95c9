# src/markov_game_lab/games/sampling.py
import numpy as np

from markov_game_lab.games.markov_game import (
    EpisodeRecord,
    MarkovGame,
    StochasticPolicy,
    Transition,
)
from markov_game_lab.utils.constants import Side


def _draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    # inverse CDF on a single uniform; the CDF ends at exactly 1, so a
    # zero-probability action is never returned
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def sample_episode(
    game: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    rng: np.random.Generator,
) -> EpisodeRecord:
    """One H-step trajectory from x1. Draw order per level: a, b, x'."""
    pi.check_fits(game, Side.P1)
    nu.check_fits(game, Side.P2)
    x = game.initial_state
    steps = []
    for h in range(game.horizon):
        a = _draw(pi.probs[h, x], rng)
        b = _draw(nu.probs[h, x], rng)
        x_next = _draw(game.transitions[h, x, a, b], rng)
        steps.append(Transition(h, x, a, b, float(game.rewards[h, x, a, b]), x_next))
        x = x_next
    return EpisodeRecord(tuple(steps))


def sample_returns(
    game: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    n_episodes: int,
    rng: np.random.Generator,
) -> tuple[list[EpisodeRecord], np.ndarray]:
    episodes = [sample_episode(game, pi, nu, rng) for _ in range(n_episodes)]
    returns = np.array([ep.total_reward for ep in episodes], dtype=float)
    return episodes, returns
