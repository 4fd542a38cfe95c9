# tests/algorithms/test_linear_onemg.py

import math

import numpy as np
import pandas as pd
import pytest

from markov_game_lab.algorithms.linear_onemg import (
    LinearConfig,
    LinearLearnerState,
    confidence_radius,
    elliptic_potential_check,
    greedy_plan,
    plan_optimistic,
    ridge_update,
    run_linear,
    theta_star_feasible,
)
from markov_game_lab.algorithms.opponents import BestResponseOpponent
from markov_game_lab.games.markov_game import EpisodeRecord, StochasticPolicy, Transition
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.harness.generators import generate_game
from markov_game_lab.hypothesis.families import LinearValueFamily
from markov_game_lab.utils.constants import PlannerMode, Side
from markov_game_lab.utils.exceptions import AuditFailure, ConfigurationError
from markov_game_lab.utils.rng import RngFactory


def test_confidence_constants():
    """
    Tests beta = C_beta sqrt(d) log(HK/p) and width = C_width H beta.
    """
    config = LinearConfig(episodes=20, c_beta=0.5, c_width=2.0)
    beta = 0.5 * math.sqrt(4) * math.log(3 * 20 / 0.05)
    assert config.beta(4, 3) == pytest.approx(beta)
    assert config.width(4, 3) == pytest.approx(2.0 * 3 * beta)
    with pytest.raises(ValueError):
        LinearConfig(episodes=5, restarts=0)


def test_ridge_without_data_is_zero(small_game):
    """
    Tests that an empty level gives the zero ridge estimate.
    """
    state = LinearLearnerState(LinearValueFamily.onehot(small_game))
    np.testing.assert_array_equal(state.gram[0], np.eye(state.dim))
    np.testing.assert_array_equal(ridge_update(state, 0, np.zeros(2)), 0.0)


def test_wide_confidence_sets_contain_the_true_parameters(small_game):
    """
    Tests feasibility of theta* before any data.
    """
    features = LinearValueFamily.onehot(small_game)
    solution = ne_value_iteration(small_game)
    state = LinearLearnerState(features)
    theta_star = features.true_parameters(solution.q_star)
    assert theta_star_feasible(state, theta_star, solution.v_star, width=10.0)
    assert not theta_star_feasible(state, theta_star + 5.0, solution.v_star, width=1.0)


def test_diag_exact_planning_stays_optimistic(small_game):
    """
    Tests that one-hot features never produce a planned value below V*
    while theta* is feasible.
    """
    features = LinearValueFamily.onehot(small_game)
    config = LinearConfig(episodes=10, seed=1)
    result = run_linear(small_game, features, config, BestResponseOpponent(small_game))

    assert len(result.trace) == 10
    assert result.trace.summary["optimism_violations"] == 0
    assert len(result.potentials) == small_game.horizon
    for lhs, mid, rhs in result.potentials:
        assert lhs <= mid + 1e-9
        assert mid <= rhs + 1e-9
    assert np.all(result.trace.column("regret_increment") >= -1e-7)


def test_search_planning_is_never_below_greedy(small_game):
    """
    Tests that the best restart is at least the greedy plan.
    """
    features = LinearValueFamily.onehot(small_game)
    config = LinearConfig(episodes=4, mode=PlannerMode.SEARCH, restarts=3, directions=4, seed=2)
    result = run_linear(small_game, features, config, BestResponseOpponent(small_game))
    frame = result.trace.to_frame()
    assert np.all(frame["planned_value"] >= frame["greedy_value"] - 1e-12)


def test_diag_exact_rejects_correlated_features():
    """
    Tests that a non-diagonal Gram matrix is refused by the exact planner.
    """
    game = generate_game("random(H=1, S=1, A=2)", seed=0)
    raw = np.zeros((1, 1, 2, 2, 2))
    raw[...] = [0.6, 0.8]
    features = LinearValueFamily(raw)
    config = LinearConfig(episodes=2)
    with pytest.raises(ConfigurationError, match="diagonal"):
        run_linear(game, features, config, BestResponseOpponent(game))


def test_elliptic_potential_inequalities():
    """
    Tests log det <= sum of potentials <= 2 log det for unit-bounded features.
    """
    rng = np.random.default_rng(4)
    raw = rng.standard_normal((50, 3))
    phis = raw / np.linalg.norm(raw, axis=1, keepdims=True) * rng.uniform(0.1, 1.0, size=(50, 1))
    lhs, mid, rhs = elliptic_potential_check(phis)
    assert lhs <= mid <= rhs
    assert elliptic_potential_check(np.zeros((0, 3))) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError, match="exceeds 1"):
        elliptic_potential_check(np.array([[1.0, 1.0]]))


def test_potential_audit_catches_a_broken_bound():
    """
    Tests the audit failure path with a tolerance that cannot be met.
    """
    with pytest.raises(AuditFailure):
        elliptic_potential_check(np.array([[1.0, 0.0]]), tol=-1.0)


def _sampled_state(game, features, n_episodes, seed):
    state = LinearLearnerState(features)
    rng = np.random.default_rng(seed)
    H, S, A, B = game.shape
    for _ in range(n_episodes):
        state.add(
            sample_episode(
                game, StochasticPolicy.uniform(H, S, A, Side.P1), StochasticPolicy.uniform(H, S, B, Side.P2), rng
            )
        )
    return state


def test_ridge_single_transition():
    """
    Tests phi = e_1 with target 0.5: Lambda = diag(2, 1, 1), so w = (0.25, 0, 0).
    """
    raw = np.zeros((1, 1, 1, 1, 3))
    raw[..., 0] = 1.0
    state = LinearLearnerState(LinearValueFamily(raw))
    state.add(EpisodeRecord((Transition(0, 0, 0, 0, 0.5, 0),)))
    np.testing.assert_allclose(ridge_update(state, 0, np.zeros(1)), [0.25, 0.0, 0.0])


def test_ridge_with_one_hot_features_is_a_shrunk_mean(small_game):
    """
    Tests w[(x, a, b)] = sum of targets / (count + 1) for one-hot features.
    """
    state = _sampled_state(small_game, LinearValueFamily.onehot(small_game), 15, seed=3)
    v_next = np.array([0.3, -0.2])
    for h, successor in ((1, np.zeros(2)), (0, v_next)):
        w = ridge_update(state, h, successor)
        phi, r, x_next = state.level(h)
        coords = np.argmax(phi, axis=1)
        targets = r + successor[x_next]
        for c in np.unique(coords):
            hits = coords == c
            assert w[c] == pytest.approx(targets[hits].sum() / (hits.sum() + 1), abs=1e-12)
        unseen = np.setdiff1d(np.arange(state.dim), coords)
        np.testing.assert_allclose(w[unseen], 0.0, atol=1e-12)


def test_ridge_matches_a_dense_solve(small_game):
    """
    Tests the Cholesky solve against np.linalg.solve on correlated features.
    """
    rng = np.random.default_rng(11)
    raw = rng.standard_normal((2, 2, 2, 2, 3))
    raw /= 1.5 * np.linalg.norm(raw, axis=-1, keepdims=True)
    state = _sampled_state(small_game, LinearValueFamily(raw), 10, seed=4)
    v_next = np.array([0.7, -0.1])
    phi, r, x_next = state.level(0)
    gram = np.eye(3) + phi.T @ phi
    np.testing.assert_allclose(state.gram[0], gram, atol=1e-12)
    expected = np.linalg.solve(gram, phi.T @ (r + v_next[x_next]))
    np.testing.assert_allclose(ridge_update(state, 0, v_next), expected, rtol=1e-9, atol=1e-12)


def test_search_stays_between_greedy_and_the_exact_optimum(small_game):
    """
    Tests the coordinate-ascent planner on one-hot features, where the
    diagonal planner is exact: greedy <= search <= diag-exact, every level
    inside its ellipsoid, and the same plan for the same seed.
    """
    state = _sampled_state(small_game, LinearValueFamily.onehot(small_game), 6, seed=5)
    x1, bounds, width = small_game.initial_state, small_game.reward_range, 0.4

    def search():
        return plan_optimistic(
            state, x1, PlannerMode.SEARCH, width, bounds, restarts=3, directions=5, rngs=RngFactory(1), k=2
        )

    plan = search()
    greedy = greedy_plan(state, x1, bounds)
    exact = plan_optimistic(state, x1, PlannerMode.DIAG_EXACT, width, bounds)
    assert plan.objective >= greedy.objective - 1e-12
    assert plan.objective <= exact.objective + 1e-7
    for h in range(small_game.horizon):
        assert confidence_radius(state, h, plan.theta[h], plan.w[h]) <= width + 1e-9
    np.testing.assert_array_equal(search().theta, plan.theta)


def test_linear_runs_are_reproducible(small_game):
    """
    Tests that the same seed writes the same trace, with cum_regret the running sum.
    """
    features = LinearValueFamily.onehot(small_game)
    config = LinearConfig(episodes=6, seed=9)
    first = run_linear(small_game, features, config, BestResponseOpponent(small_game)).trace.to_frame()
    second = run_linear(small_game, features, config, BestResponseOpponent(small_game)).trace.to_frame()
    pd.testing.assert_frame_equal(first, second)
    assert first["k"].tolist() == list(range(1, 7))
    np.testing.assert_allclose(first["cum_regret"], first["regret_increment"].cumsum())
