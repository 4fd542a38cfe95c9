# tests/complexity/test_residuals.py

import numpy as np
import pytest

from markov_game_lab.complexity.residuals import (
    MeasureFamily,
    bellman_residuals,
    dirac_measures,
    expectations,
    occupancy_family,
)
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.harness.generators import generate_policy_family, generate_realizable_family
from markov_game_lab.hypothesis.families import FiniteValueFamily


def test_q_star_has_zero_residuals(small_game):
    """
    Tests the decoupled residual of Q* at every level.
    """
    family = FiniteValueFamily(ne_value_iteration(small_game).q_star[None])
    for h in range(small_game.horizon):
        residuals = bellman_residuals(small_game, family, h)
        assert residuals.tags == ((0, None),)
        np.testing.assert_allclose(residuals.tables, 0.0, atol=1e-8)
    with pytest.raises(ValueError):
        bellman_residuals(small_game, family, small_game.horizon)


def test_policy_truths_have_zero_policy_residuals(small_game):
    """
    Tests that Q^{pi, nu*_pi} is a fixed point of the policy Bellman operator.
    """
    policies = generate_policy_family(small_game, 2, seed=3)
    family = generate_realizable_family(small_game, 1, 0.5, seed=0, policies=policies)
    for h in range(small_game.horizon):
        residuals = bellman_residuals(small_game, family, h, policies)
        assert residuals.size == family.size * policies.size
        for p, n in family.truth_pairs():
            index = residuals.tags.index((n, p))
            np.testing.assert_allclose(residuals.tables[index], 0.0, atol=1e-8)


def test_dirac_measures_pick_single_entries(small_game):
    """
    Tests that Dirac expectations are the flattened residual entries.
    """
    atoms = dirac_measures(small_game)
    assert atoms.size == 8
    family = generate_realizable_family(small_game, 2, 0.5, seed=1)
    residuals = bellman_residuals(small_game, family, 0)
    E = expectations(residuals, atoms)
    np.testing.assert_allclose(E, residuals.tables.reshape(residuals.size, -1).T)


def test_measures_must_be_distributions():
    """
    Tests the probability-vector check.
    """
    with pytest.raises(ValueError, match="probability"):
        MeasureFamily(np.full((1, 1, 2, 2), 0.5), "dirac")


def test_occupancy_family_deduplicates(small_game):
    """
    Tests that identical members yield a single occupancy measure.
    """
    q_star = ne_value_iteration(small_game).q_star
    family = FiniteValueFamily(np.stack([q_star, q_star]))
    measures = occupancy_family(small_game, family, 1)
    assert measures.size == 1
    assert measures.kind == "occupancy"
