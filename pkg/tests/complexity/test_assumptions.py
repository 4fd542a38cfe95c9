# tests/complexity/test_assumptions.py

import numpy as np

from markov_game_lab.complexity.assumptions import (
    check_assumptions,
    check_completeness,
    check_realizability,
    check_witness_domination,
)
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.harness.generators import (
    generate_policy_family,
    generate_realizable_family,
    generate_test_family,
)
from markov_game_lab.hypothesis.families import FiniteValueFamily, ModelFamily


def test_generated_families_are_realizable(small_game, realizable_family):
    """
    Tests realizability of the generated family and its failure once Q* is dropped.
    """
    assert check_realizability(small_game, realizable_family).holds

    keep = [i for i in range(realizable_family.size) if i != realizable_family.q_star_index]
    without = FiniteValueFamily(realizable_family.tables[keep])
    report = check_realizability(small_game, without)
    assert not report.holds
    assert {v["h"] for v in report.violations} <= {0, 1}


def test_q_star_alone_is_complete(small_game):
    """
    Tests completeness of {Q*} and its failure on a decoy family.
    """
    q_star = ne_value_iteration(small_game).q_star
    assert check_completeness(small_game, FiniteValueFamily(q_star[None])).holds
    decoys = FiniteValueFamily(np.stack([q_star + 0.3]))
    assert not check_completeness(small_game, decoys).holds


def test_policy_checks_join_the_report(small_game):
    """
    Tests that policy assumptions are added when a policy class is given.
    """
    policies = generate_policy_family(small_game, 2, seed=0)
    family = generate_realizable_family(small_game, 1, 0.5, seed=0, policies=policies)
    reports = check_assumptions(small_game, family, policies)
    assert set(reports) == {"realizability", "completeness", "policy_realizability", "policy_completeness"}
    assert reports["realizability"].holds
    assert reports["policy_realizability"].holds
    assert reports["policy_realizability"].to_dict()["violations"] == []


def test_true_model_dominates_its_own_bellman_error(small_game):
    """
    Tests witness domination for the true model alone.
    """
    models = ModelFamily((small_game,), true_index=0)
    tests = generate_test_family(small_game, 3, seed=0)
    assert check_witness_domination(models, tests, small_game).holds
