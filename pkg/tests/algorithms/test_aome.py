# tests/algorithms/test_aome.py

import math

import numpy as np
import pytest

from markov_game_lab.algorithms.aome import (
    AomeConfig,
    alternate_optimism,
    empirical_bellman_error,
    estimate_value,
    exact_bellman_error,
    exact_witness_misfit,
    model_nash,
    roll_in_pair,
    run_aome,
    simulation_lemma_check,
    swap_tests,
    termination_test,
    theory_defaults,
)
from markov_game_lab.games.markov_game import StochasticPolicy
from markov_game_lab.harness.generators import generate_model_family, generate_test_family
from markov_game_lab.hypothesis.families import ModelFamily
from markov_game_lab.utils.constants import Side


@pytest.fixture
def models(small_game):
    """The small game plus two perturbed copies."""
    return generate_model_family(small_game, 3, 0.3, seed=0)


def test_theory_constants():
    """
    Tests the textbook phi, n1 and n.
    """
    constants = theory_defaults(
        epsilon=0.1, kappa=0.5, horizon=2, witness_rank=4.0, n_actions=2,
        rounds=10, n_models=3, n_tests=6, p=0.05,
    )
    assert constants.phi == pytest.approx(0.5 * 0.1 / (100 * 2 * 2))
    assert constants.n1 == math.ceil(4 * math.log(2 * 10 / 0.05) / 0.01)
    assert constants.n == math.ceil(4 * 4.0 * 2 * math.log(10 * 3 * 6 / 0.05) / 0.05**2)


def test_config_validation():
    """
    Tests the parameter checks.
    """
    with pytest.raises(ValueError):
        AomeConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        AomeConfig(kappa=1.5)
    with pytest.raises(ValueError):
        AomeConfig(n1=0)


def test_alternation_picks_optimist_then_pessimist(models):
    """
    Tests M1 as the largest Nash value and M2 as the smallest response value.
    """
    nash = [model_nash(m) for m in models.members]
    alt = alternate_optimism(models, np.arange(models.size), nash)
    assert nash[alt.m1].value == pytest.approx(max(sol.value for sol in nash))
    assert alt.pi == nash[alt.m1].pi_star
    with pytest.raises(ValueError):
        alternate_optimism(models, np.zeros(0, dtype=int), nash)


def test_termination_test_uses_half_epsilon(pennies):
    """
    Tests the |V_hat - Q_Mi| <= eps / 2 comparison for both models.
    """
    pi = StochasticPolicy.uniform(1, 1, 2, Side.P1)
    nu = StochasticPolicy.uniform(1, 1, 2, Side.P2)
    assert termination_test(0.1, pennies, pennies, pi, nu, epsilon=0.2)
    assert not termination_test(0.15, pennies, pennies, pi, nu, epsilon=0.2)


def test_true_model_has_zero_bellman_error(pennies):
    """
    Tests the empirical and exact Bellman errors of the true model.
    """
    roll_in = roll_in_pair(pennies, pennies)
    batch = estimate_value(pennies, roll_in.pi, roll_in.nu, 50, np.random.default_rng(0))
    assert empirical_bellman_error(batch.buffer(1), pennies, roll_in.pi, roll_in.nu, 0) == 0.0
    assert exact_bellman_error(roll_in, pennies, 0, pennies) == pytest.approx(0.0, abs=1e-12)


def test_simulation_identity_and_witness_misfit(small_game, models):
    """
    Tests that Bellman errors telescope to the value gap and that the
    true model has no witnessed misfit.
    """
    tests = generate_test_family(small_game, 3, seed=0)
    for i in range(models.size):
        roll_in = roll_in_pair(models.members[i], models.members[(i + 1) % models.size])
        for model in models.members:
            assert simulation_lemma_check(roll_in, model, small_game) == pytest.approx(0.0, abs=1e-9)
        for h in range(small_game.horizon):
            assert exact_witness_misfit(roll_in, small_game, h, tests, small_game) == pytest.approx(0.0, abs=1e-12)


def test_swapped_tests_negate_reward_weights(small_game):
    """
    Tests the test-function transform for the player-swapped game.
    """
    tests = generate_test_family(small_game, 2, seed=1)
    swapped = swap_tests(tests)
    np.testing.assert_array_equal(swapped.reward_weights, -tests.reward_weights)
    np.testing.assert_array_equal(swap_tests(swapped).tables, tests.tables)


def test_true_model_alone_terminates_in_one_round(pennies):
    """
    Tests immediate termination and certification with the true model only.
    """
    models = ModelFamily((pennies,), true_index=0)
    tests = generate_test_family(pennies, 2, seed=0)
    config = AomeConfig(epsilon=0.5, n1=2000, n=100)
    result = run_aome(pennies, models, tests, config)

    record = result.termination
    assert record.status == "terminated"
    assert record.rounds == 1
    assert record.exact_gap == pytest.approx(0.0, abs=1e-7)
    assert record.certified
    assert result.log.rows[0]["bracket_holds"]
    assert result.log.summary["status"] == "terminated"


def test_round_cap_with_uninformative_rounds(pennies):
    """
    Tests the round cap: an odd rollout count never matches the zero value,
    and the true model has no Bellman error to localize.
    """
    models = ModelFamily((pennies,), true_index=0)
    tests = generate_test_family(pennies, 2, seed=0)
    config = AomeConfig(epsilon=1e-6, n1=2001, n=50, max_rounds=2)
    result = run_aome(pennies, models, tests, config)

    assert result.termination.status == "round_cap"
    assert result.termination.survivors == [0]
    assert len(result.log) == 2
    assert all(row["inconclusive"] for row in result.log.rows)


def test_wrong_model_alone_empties_the_version_space(small_game, models):
    """
    Tests the abort path when every model is eliminated.
    """
    wrong = next(i for i in range(models.size) if i != models.true_index)
    family = ModelFamily((models.members[wrong],))
    tests = generate_test_family(small_game, 3, seed=0)
    config = AomeConfig(epsilon=1e-6, phi=1e-9, n1=200, n=200)
    result = run_aome(small_game, family, tests, config)

    assert result.termination.status == "empty_version_space"
    assert result.termination.rounds == 1
    assert result.log.rows[0]["eliminated"] == 1


def test_p2_order_certifies_the_second_player(small_game):
    """
    Tests the swapped run that certifies a P2 policy.
    """
    models = ModelFamily((small_game,), true_index=0)
    tests = generate_test_family(small_game, 2, seed=0)
    config = AomeConfig(epsilon=0.5, n1=2000, n=100, order=Side.P2)
    result = run_aome(small_game, models, tests, config)
    assert result.termination.status == "terminated"
    assert result.termination.side is Side.P2
    assert result.termination.exact_gap == pytest.approx(0.0, abs=1e-7)
