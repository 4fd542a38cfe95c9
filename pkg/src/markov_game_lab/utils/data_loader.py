# src/markov_game_lab/utils/data_loader.py
"""
YAML documents for games and hypothesis families.

Every document carries a `kind` key. Dense arrays are nested lists in
level-major order (h, x, a, b[, x'|d]).
"""
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import yaml

from markov_game_lab.games.markov_game import MarkovGame, StochasticPolicy
from markov_game_lab.hypothesis.families import (
    FiniteValueFamily,
    LinearValueFamily,
    ModelFamily,
    PolicyFamily,
    TestFunctionFamily,
)
from .cli_utils import assert_file_exists, atomic_write_bytes
from .config_schema import Paths
from .constants import Side
from .exceptions import GameValidationError
from .logger import log_info

Document = Dict[str, Any]


def read_document(path: Union[str, Path], kind: str) -> Document:
    assert_file_exists(str(path), f"{kind.replace('_', ' ').capitalize()} file")
    with open(path, "r", encoding="utf-8") as handle:
        doc = yaml.safe_load(handle)
    if not isinstance(doc, dict):
        raise GameValidationError(f"{path} does not hold a mapping")
    if doc.get("kind") != kind:
        raise GameValidationError(f"{path} holds kind '{doc.get('kind')}', expected '{kind}'")
    return doc


def write_document(doc: Document, path: Union[str, Path]) -> Path:
    text = yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=120)
    return atomic_write_bytes(path, text.encode("utf-8"))


def _array(doc: Document, key: str, ndim: int) -> np.ndarray:
    if key not in doc:
        raise GameValidationError(f"missing key '{key}'")
    try:
        array = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise GameValidationError(f"'{key}' is not a dense numeric array: {e}") from e
    if array.ndim != ndim:
        raise GameValidationError(f"'{key}' has {array.ndim} dimensions, expected {ndim}")
    return array


def _names(value: Any, what: str) -> Tuple[Optional[Tuple[str, ...]], int]:
    if isinstance(value, int):
        return None, value
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value), len(value)
    raise GameValidationError(f"'{what}' must be a count or a list of names")


# --- Games ---


def game_from_document(doc: Document) -> MarkovGame:
    rewards = _array(doc, "rewards", 4)
    transitions = _array(doc, "transitions", 5)
    state_names, n_states = _names(doc.get("states", rewards.shape[1]), "states")
    a1_names, n_a1 = _names(doc.get("actions1", rewards.shape[2]), "actions1")
    a2_names, n_a2 = _names(doc.get("actions2", rewards.shape[3]), "actions2")
    declared = (int(doc.get("horizon", rewards.shape[0])), n_states, n_a1, n_a2)
    if declared != rewards.shape:
        raise GameValidationError(
            f"declared layout {declared} does not match rewards shape {rewards.shape}"
        )
    initial = doc.get("initial_state", 0)
    if isinstance(initial, str):
        if state_names is None or initial not in state_names:
            raise GameValidationError(f"unknown initial state '{initial}'")
        initial = state_names.index(initial)
    lo, hi = doc.get("reward_range", [-1.0, 1.0])
    return MarkovGame(
        rewards=rewards,
        transitions=transitions,
        initial_state=int(initial),
        reward_range=(float(lo), float(hi)),
        state_names=state_names,
        action1_names=a1_names,
        action2_names=a2_names,
    )


def game_to_document(game: MarkovGame) -> Document:
    return {
        "kind": "markov_game",
        "horizon": game.horizon,
        "states": list(game.state_names) if game.state_names else game.n_states,
        "actions1": list(game.action1_names) if game.action1_names else game.n_actions1,
        "actions2": list(game.action2_names) if game.action2_names else game.n_actions2,
        "initial_state": game.initial_state,
        "reward_range": [float(v) for v in game.reward_range],
        "rewards": game.rewards.tolist(),
        "transitions": game.transitions.tolist(),
    }


def load_game(path: Union[str, Path]) -> MarkovGame:
    return game_from_document(read_document(path, "markov_game"))


def save_game(game: MarkovGame, path: Union[str, Path]) -> Path:
    return write_document(game_to_document(game), path)


# --- Families ---


def load_value_family(path: Union[str, Path]) -> FiniteValueFamily:
    doc = read_document(path, "value_family")
    members = doc.get("members") or []
    tables = np.stack([np.asarray(m["table"], dtype=float) for m in members]) if members else np.zeros((0,))
    tags = {int(k): str(v) for k, v in (doc.get("truth_tags") or {}).items()}
    return FiniteValueFamily(tables, tuple(str(m.get("name", f"f{i}")) for i, m in enumerate(members)), tags)


def save_value_family(family: FiniteValueFamily, path: Union[str, Path]) -> Path:
    doc = {
        "kind": "value_family",
        "truth_tags": {int(k): v for k, v in sorted(family.truth_tags.items())},
        "members": [
            {"name": name, "table": family.member(i).tolist()}
            for i, name in enumerate(family.names)
        ],
    }
    return write_document(doc, path)


def load_policy_family(path: Union[str, Path]) -> PolicyFamily:
    doc = read_document(path, "policy_family")
    side = Side(doc.get("side", "p1"))
    members = doc.get("members") or []
    return PolicyFamily(
        tuple(StochasticPolicy(np.asarray(m["probs"], dtype=float), side) for m in members),
        tuple(str(m.get("name", f"pi{i}")) for i, m in enumerate(members)),
    )


def save_policy_family(family: PolicyFamily, path: Union[str, Path]) -> Path:
    doc = {
        "kind": "policy_family",
        "side": family.side.value,
        "members": [
            {"name": name, "probs": member.probs.tolist()}
            for name, member in zip(family.names, family.members)
        ],
    }
    return write_document(doc, path)


def load_model_family(path: Union[str, Path]) -> ModelFamily:
    doc = read_document(path, "model_family")
    members = doc.get("members") or []
    models = []
    for i, member in enumerate(members):
        try:
            models.append(game_from_document(member["model"]))
        except GameValidationError as e:
            raise GameValidationError(f"model {i}: {e}") from e
    true_index = doc.get("true_index")
    return ModelFamily(
        tuple(models),
        tuple(str(m.get("name", f"M{i}")) for i, m in enumerate(members)),
        None if true_index is None else int(true_index),
    )


def save_model_family(family: ModelFamily, path: Union[str, Path]) -> Path:
    doc = {
        "kind": "model_family",
        "true_index": family.true_index,
        "members": [
            {"name": name, "model": game_to_document(model)}
            for name, model in zip(family.names, family.members)
        ],
    }
    return write_document(doc, path)


def load_test_family(path: Union[str, Path], reward_bound: float = 1.0) -> TestFunctionFamily:
    doc = read_document(path, "test_family")
    members = doc.get("members") or []
    family = TestFunctionFamily(
        np.stack([np.asarray(m["table"], dtype=float) for m in members]) if members else np.zeros((0,)),
        np.array([float(m.get("reward_weight", 0.0)) for m in members]),
        tuple(str(m.get("name", f"g{i}")) for i, m in enumerate(members)),
    )
    family.check_bound(reward_bound)
    return family


def save_test_family(family: TestFunctionFamily, path: Union[str, Path]) -> Path:
    doc = {
        "kind": "test_family",
        "members": [
            {"name": name, "reward_weight": float(w), "table": table.tolist()}
            for name, w, table in zip(family.names, family.reward_weights, family.tables)
        ],
    }
    return write_document(doc, path)


def load_features(path: Union[str, Path]) -> LinearValueFamily:
    doc = read_document(path, "features")
    bound = doc.get("bound")
    return LinearValueFamily(_array(doc, "features", 5), None if bound is None else float(bound))


def save_features(family: LinearValueFamily, path: Union[str, Path]) -> Path:
    doc = {"kind": "features", "bound": family.bound, "features": family.features.tolist()}
    return write_document(doc, path)


class DataLoader:
    """Loads the inputs a command names in `paths`, each file at most once."""

    def __init__(self, paths: Paths):
        self.paths = paths

    def _require(self, attr: str) -> str:
        value = getattr(self.paths, attr)
        if not value:
            raise FileNotFoundError(f"No '{attr}' file configured (set paths.{attr}=<file>).")
        return str(value)

    @lru_cache(maxsize=None)
    def game(self) -> MarkovGame:
        path = self._require("game")
        log_info(f"Loading game from {path}")
        return load_game(path)

    @lru_cache(maxsize=None)
    def values(self) -> FiniteValueFamily:
        return load_value_family(self._require("values"))

    @lru_cache(maxsize=None)
    def policies(self) -> PolicyFamily:
        return load_policy_family(self._require("policies"))

    @lru_cache(maxsize=None)
    def opponent_policies(self) -> Optional[PolicyFamily]:
        if not self.paths.opponent_policies:
            return None
        return load_policy_family(self.paths.opponent_policies)

    @lru_cache(maxsize=None)
    def models(self) -> ModelFamily:
        return load_model_family(self._require("models"))

    @lru_cache(maxsize=None)
    def tests(self, reward_bound: float) -> TestFunctionFamily:
        return load_test_family(self._require("tests"), reward_bound)

    def features(self, game: MarkovGame) -> LinearValueFamily:
        if not self.paths.features or self.paths.features == "onehot":
            return LinearValueFamily.onehot(game)
        family = load_features(self.paths.features)
        family.check_fits(game)
        return family
