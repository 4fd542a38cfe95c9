# tests/conftest.py

from pathlib import Path
from typing import Callable

import pytest

from markov_game_lab.games.markov_game import MarkovGame
from markov_game_lab.harness.generators import generate_game, generate_realizable_family
from markov_game_lab.hypothesis.families import FiniteValueFamily
from markov_game_lab.utils.config import load_config, validate_config
from markov_game_lab.utils.config_schema import Config

CONFIG_PATH = Path(__file__).resolve().parents[1] / "conf" / "config.yaml"


@pytest.fixture
def pennies() -> MarkovGame:
    """One-shot matching pennies: H = 1, one state, value 0."""
    return generate_game("matching-pennies-chain(1, 1)", seed=0)


@pytest.fixture
def pennies_chain() -> MarkovGame:
    """Two-level, two-state pennies chain."""
    return generate_game("matching-pennies-chain(H=2, nstates=2)", seed=0)


@pytest.fixture
def small_game() -> MarkovGame:
    """A dense random game small enough for every exact computation."""
    return generate_game("random(H=2, S=2, A=2)", seed=0)


@pytest.fixture
def realizable_family(small_game: MarkovGame) -> FiniteValueFamily:
    """Q* plus three decoys for `small_game`."""
    return generate_realizable_family(small_game, n_decoys=3, noise=0.5, seed=0)


@pytest.fixture
def make_config(tmp_path: Path) -> Callable[..., Config]:
    """
    Builds a validated lab config from conf/config.yaml with small defaults,
    writing under tmp_path; keyword overrides use dotted keys via '__'.
    """

    def _make(**overrides: str) -> Config:
        base = {
            "paths.output_root": str(tmp_path / "outputs"),
            "game.params": "{H: 2, S: 2, A: 2}",
            "families.n_decoys": "3",
            "families.n_policies": "2",
            "families.n_models": "3",
            "families.n_tests": "3",
            "onemg.episodes": "12",
            "linear.episodes": "12",
            "aove.episodes": "12",
            "aome.n1": "50",
            "aome.n": "50",
            "aome.max_rounds": "3",
            "sweep.seeds": "[0, 1]",
        }
        base.update({key.replace("__", "."): value for key, value in overrides.items()})
        cfg = load_config(CONFIG_PATH, base)
        return Config(**validate_config(cfg))

    return _make
