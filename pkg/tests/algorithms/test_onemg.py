# tests/algorithms/test_onemg.py

import math

import numpy as np
import pytest

from markov_game_lab.algorithms.buffers import ReplayBuffer
from markov_game_lab.algorithms.onemg import (
    LossAccumulator,
    OnemgConfig,
    VersionSpace,
    bellman_loss_table,
    buffer_audit,
    eliminate,
    fixed_policy_regret,
    lowest_non_nash_policy,
    run,
    select_optimistic,
    squared_bellman_loss,
    successor_values,
)
from markov_game_lab.algorithms.opponents import BestResponseOpponent, SelfNashOpponent
from markov_game_lab.games.markov_game import StochasticPolicy
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.hypothesis.families import FiniteValueFamily
from markov_game_lab.hypothesis.induced import solve_family
from markov_game_lab.utils.constants import Side
from markov_game_lab.utils.exceptions import AuditFailure


@pytest.fixture
def uniform_episodes(small_game):
    """Eight episodes of uniform play on the small game."""
    pi = StochasticPolicy.uniform(2, 2, 2, Side.P1)
    nu = StochasticPolicy.uniform(2, 2, 2, Side.P2)
    rng = np.random.default_rng(11)
    return [sample_episode(small_game, pi, nu, rng) for _ in range(8)]


def test_elimination_keeps_members_within_beta():
    """
    Tests the comparison of each member's own loss with the best competitor.
    """
    loss = np.array([[[0.0, 5.0], [3.0, 0.0]]])
    vspace = eliminate(loss, beta=0.0)
    np.testing.assert_array_equal(vspace.members, [0, 1])
    assert not vspace.fallback


def test_elimination_falls_back_when_everything_is_eliminated():
    """
    Tests the fallback to the smallest total excess.
    """
    loss = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    vspace = eliminate(loss, beta=0.5)
    assert vspace.fallback
    np.testing.assert_array_equal(vspace.members, [0])


def test_loss_table_diagonal_matches_the_direct_loss(small_game, realizable_family, uniform_episodes):
    """
    Tests the vectorized loss table against the per-member formula.
    """
    buffer = ReplayBuffer(small_game.horizon)
    for episode in uniform_episodes:
        buffer.append(episode)
    successors = successor_values(solve_family(realizable_family))
    table = bellman_loss_table(realizable_family, successors, buffer)

    H = realizable_family.horizon
    for index in range(realizable_family.size):
        member = realizable_family.member(index)
        for h in range(H):
            zeta_next = member[h + 1] if h + 1 < H else None
            direct = squared_bellman_loss(buffer.level(h), member[h], zeta_next)
            assert table[h, index, index] == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_accumulator_matches_the_batch_table(small_game, realizable_family, uniform_episodes):
    """
    Tests the incremental loss update against the recomputed table.
    """
    successors = successor_values(solve_family(realizable_family))
    buffer = ReplayBuffer(small_game.horizon)
    accumulator = LossAccumulator(realizable_family, successors)
    for episode in uniform_episodes:
        buffer.append(episode)
        accumulator.add(episode)
    np.testing.assert_allclose(
        accumulator.loss, bellman_loss_table(realizable_family, successors, buffer), atol=1e-12
    )


def test_selection_is_optimistic(realizable_family):
    """
    Tests that the survivor with the largest initial value is chosen.
    """
    solutions = solve_family(realizable_family)
    vspace = VersionSpace(np.arange(realizable_family.size))
    chosen = select_optimistic(vspace, realizable_family, solutions, x1=0)
    assert chosen.value == pytest.approx(max(sol.values[0, 0] for sol in solutions))
    with pytest.raises(ValueError):
        select_optimistic(VersionSpace(np.zeros(0, dtype=int)), realizable_family, solutions, 0)


def test_default_beta_follows_the_confidence_formula(realizable_family):
    """
    Tests beta = c * (log N + log(H K / p)).
    """
    config = OnemgConfig(episodes=10)
    expected = 2.0 * (math.log(realizable_family.size) + math.log(2 * 10 / 0.05))
    assert config.resolve_beta(realizable_family) == pytest.approx(expected)
    assert OnemgConfig(episodes=10, beta=0.3).resolve_beta(realizable_family) == 0.3
    with pytest.raises(ValueError):
        OnemgConfig(episodes=-1)


def test_run_keeps_the_truth_and_passes_the_audit(small_game, realizable_family):
    """
    Tests a short audited run against the best-response opponent.
    """
    config = OnemgConfig(episodes=15, seed=3, audit=True)
    result = run(small_game, realizable_family, config, BestResponseOpponent(small_game))

    frame = result.trace.to_frame()
    assert list(frame["k"]) == list(range(1, 16))
    assert np.all(frame["regret_increment"] >= -1e-7)
    assert frame["cum_regret"].iloc[-1] == pytest.approx(frame["regret_increment"].sum())
    assert result.trace.summary["truth_retained"] is True
    assert len(result.audits) == 15
    assert result.buffer.level_sizes() == [15, 15]
    assert result.trace.summary["audit_min_slack"] >= -1e-9


def test_runs_are_reproducible(small_game, realizable_family):
    """
    Tests that a fixed seed reproduces the whole trace.
    """
    config = OnemgConfig(episodes=10, seed=7)
    first = run(small_game, realizable_family, config, BestResponseOpponent(small_game))
    second = run(small_game, realizable_family, config, BestResponseOpponent(small_game))
    assert first.trace.rows == second.trace.rows


def test_nash_baseline_has_no_regret(small_game):
    """
    Tests the fixed-policy baseline with the Nash policy, and that a family
    holding only Q* offers no exploitable baseline.
    """
    solution = ne_value_iteration(small_game)
    regret = fixed_policy_regret(small_game, solution.pi_star, SelfNashOpponent(solution), 5, solution)
    np.testing.assert_allclose(regret, 0.0, atol=1e-7)

    only_truth = FiniteValueFamily(solution.q_star[None])
    with pytest.raises(ValueError, match="unexploitable"):
        lowest_non_nash_policy(small_game, solve_family(only_truth), solution)


def test_buffer_audit(small_game, realizable_family, uniform_episodes):
    """
    Tests the per-level buffer length and the running-loss drift checks.
    """
    successors = successor_values(solve_family(realizable_family))
    buffer = ReplayBuffer(small_game.horizon)
    accumulator = LossAccumulator(realizable_family, successors)
    for episode in uniform_episodes:
        buffer.append(episode)
        accumulator.add(episode)
    buffer_audit(buffer, 8, accumulator, realizable_family, successors)
    with pytest.raises(AuditFailure, match="transitions per level"):
        buffer_audit(buffer, 7, accumulator, realizable_family, successors)

    buffer.append(uniform_episodes[0])  # seen by the buffer only
    with pytest.raises(AuditFailure, match="drift"):
        buffer_audit(buffer, 9, accumulator, realizable_family, successors)


def test_run_plays_the_optimistic_survivor(small_game, realizable_family):
    """
    Tests that with nothing eliminated every episode plays the optimistic member.
    """
    solutions = solve_family(realizable_family)
    everyone = VersionSpace(np.arange(realizable_family.size))
    expected = select_optimistic(everyone, realizable_family, solutions, small_game.initial_state).index
    config = OnemgConfig(episodes=4, beta=1e9, seed=1)
    result = run(small_game, realizable_family, config, BestResponseOpponent(small_game), solutions=solutions)
    assert result.trace.column("chosen").tolist() == [expected] * 4
    assert result.trace.column("vspace_size").tolist() == [realizable_family.size] * 4
