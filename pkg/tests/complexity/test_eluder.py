# tests/complexity/test_eluder.py

import numpy as np
import pytest

from markov_game_lab.complexity.eluder import (
    de_dimension,
    independence_intervals,
    is_eps_independent,
    minimax_eluder_dimension,
    verify_witness,
)
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.harness.generators import generate_realizable_family
from markov_game_lab.hypothesis.families import FiniteValueFamily
from markov_game_lab.utils.constants import EluderMode, EluderVariant
from markov_game_lab.utils.exceptions import SizeCapExceeded


def test_independence_is_strict():
    """
    Tests that |E_nu[g]| must exceed eps' rather than reach it.
    """
    empty = np.zeros((0, 1))
    assert not is_eps_independent(np.array([0.5]), empty, 0.5)
    assert is_eps_independent(np.array([0.6]), empty, 0.5)
    # a prefix norm equal to eps' is allowed
    assert is_eps_independent(np.array([0.6]), np.array([[0.5]]), 0.5)
    with pytest.raises(ValueError):
        is_eps_independent(np.array([1.0]), empty, 0.0)


def test_independence_intervals_merge_per_function():
    """
    Tests the admissible eps' set as a union of half-open intervals.
    """
    intervals = independence_intervals(np.array([1.0, 0.5, 3.0]), np.array([[0.2, 0.6, 2.0]]))
    # g0: [0.2, 1.0), g1: empty, g2: [2.0, 3.0)
    np.testing.assert_allclose(np.array(intervals), [[0.2, 1.0], [2.0, 3.0]])


def test_trivial_dimensions():
    """
    Tests zero residuals, a single unit residual and empty inputs.
    """
    assert de_dimension(np.zeros((4, 3)), 0.1).dimension == 0
    single = de_dimension(np.array([[1.0]]), 0.5)
    assert single.dimension == 1
    assert single.eps_primes == pytest.approx((0.75,))
    assert de_dimension(np.zeros((0, 2)), 0.1).dimension == 0
    with pytest.raises(ValueError):
        de_dimension(np.ones((1, 1)), 0.0)


def test_exact_search_dominates_greedy_and_replays():
    """
    Tests greedy <= exact <= number of measures and that both witnesses replay.
    """
    rng = np.random.default_rng(0)
    for _ in range(5):
        E = rng.uniform(-1.0, 1.0, size=(6, 4))
        for shared in (True, False):
            exact = de_dimension(E, 0.2, EluderMode.EXACT, shared=shared)
            greedy = de_dimension(E, 0.2, EluderMode.GREEDY, shared=shared)
            assert greedy.dimension <= exact.dimension <= E.shape[0]
            assert verify_witness(E, exact)
            assert verify_witness(E, greedy)


def test_exact_mode_respects_the_cap():
    """
    Tests the refusal above the measure cap.
    """
    with pytest.raises(SizeCapExceeded):
        de_dimension(np.ones((5, 1)), 0.1, EluderMode.EXACT, cap=4)
    assert de_dimension(np.ones((5, 1)), 0.1, EluderMode.GREEDY, cap=4).dimension == 1


def test_family_holding_only_q_star_has_dimension_zero(small_game):
    """
    Tests that vanishing residuals give dimension 0 in both variants.
    """
    q_star = ne_value_iteration(small_game).q_star
    family = FiniteValueFamily(q_star[None])
    for variant in EluderVariant:
        report = minimax_eluder_dimension(small_game, family, 0.1, variant=variant)
        assert report.dimension == 0
        assert len(report.levels) == small_game.horizon


def test_report_on_a_decoy_family(small_game):
    """
    Tests the coordinated report layout and its per-level minimum.
    """
    family = generate_realizable_family(small_game, n_decoys=1, noise=0.5, seed=0)
    report = minimax_eluder_dimension(small_game, family, 0.05, variant=EluderVariant.COORDINATED)
    doc = report.to_dict()
    assert doc["variant"] == "coordinated"
    assert [level["h"] for level in doc["levels"]] == [0, 1]
    for level in report.levels:
        assert level.value == min(level.dirac.dimension, level.occupancy.dimension)
    assert report.dimension == max(level.value for level in report.levels)
    assert 0 <= report.dimension <= 8


EPS_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0)


def test_exact_dimension_never_grows_with_eps():
    """
    Tests that a larger eps never gives a longer independent sequence.
    """
    rng = np.random.default_rng(7)
    E = rng.uniform(-1.0, 1.0, size=(7, 5))
    for shared in (True, False):
        dims = [de_dimension(E, eps, EluderMode.EXACT, shared=shared).dimension for eps in EPS_GRID]
        assert all(a >= b for a, b in zip(dims, dims[1:])), dims


def test_decoy_family_dimension_never_grows_with_eps(small_game):
    """
    Tests the same monotonicity on the per-level report of a decoy family.
    """
    family = generate_realizable_family(small_game, n_decoys=4, noise=0.5, seed=2)
    for variant in EluderVariant:
        dims = [minimax_eluder_dimension(small_game, family, eps, variant=variant).dimension for eps in EPS_GRID]
        assert all(a >= b for a, b in zip(dims, dims[1:])), (variant, dims)
