# src/markov_game_lab/harness/generators.py
"""
Seeded generators for games and the hypothesis families run against them.

A game spec is either a string such as "random(H=3, S=2, A=2)" or
"matching-pennies-chain(1, 1)", or a mapping with `generator` and `params`
keys. Values inside the parentheses are parsed as YAML scalars.
"""
import inspect
import re
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import yaml

from markov_game_lab.games.markov_game import MarkovGame, StochasticPolicy
from markov_game_lab.games.solvers import best_response_tables, ne_value_iteration, policy_pair_tables
from markov_game_lab.hypothesis.families import (
    Q_STAR_TAG,
    FiniteValueFamily,
    LinearValueFamily,
    ModelFamily,
    PolicyFamily,
    TestFunctionFamily,
    policy_tag,
)
from markov_game_lab.utils.constants import DECOY_RETRY_CAP, TEST_FUNCTION_BOUND, Side
from markov_game_lab.utils.exceptions import ConfigurationError
from markov_game_lab.utils.logger import log_info
from markov_game_lab.utils.rng import RngFactory

GameSpec = Union[str, Mapping[str, Any]]

_SPEC_PATTERN = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _split_args(text: str) -> List[str]:
    parts, depth, current = [], 0, ""
    for char in text:
        if char == "," and depth == 0:
            parts.append(current)
            current = ""
            continue
        depth += char in "[{("
        depth -= char in "]})"
        current += char
    if current.strip():
        parts.append(current)
    return [p.strip() for p in parts]


def parse_spec(spec: GameSpec) -> Tuple[str, List[Any], Dict[str, Any]]:
    """(generator name, positional args, keyword args)."""
    if isinstance(spec, Mapping):
        if "generator" not in spec:
            raise ConfigurationError(f"game spec {dict(spec)} has no 'generator' key")
        return str(spec["generator"]), [], dict(spec.get("params") or {})
    match = _SPEC_PATTERN.match(spec)
    if not match:
        raise ConfigurationError(f"cannot parse game spec '{spec}'")
    name, body = match.group(1), match.group(2) or ""
    args: List[Any] = []
    kwargs: Dict[str, Any] = {}
    for part in _split_args(body):
        if "=" in part:
            key, value = part.split("=", 1)
            kwargs[key.strip()] = yaml.safe_load(value)
        elif kwargs:
            raise ConfigurationError(f"positional argument '{part}' after keywords in '{spec}'")
        else:
            args.append(yaml.safe_load(part))
    return name, args, kwargs


# --- Games ---


def matching_pennies_chain(rng: np.random.Generator, H: int, nstates: int = 1) -> MarkovGame:
    """
    Pennies at every state, scaled by (x + 1) / nstates. Matching actions move
    the chain one state forward (cyclically), mismatches stay put.
    """
    pennies = np.array([[1.0, -1.0], [-1.0, 1.0]])
    scale = (np.arange(nstates) + 1.0) / nstates
    rewards = np.broadcast_to(scale[:, None, None] * pennies, (H, nstates, 2, 2))
    transitions = np.zeros((H, nstates, 2, 2, nstates))
    for x in range(nstates):
        for a in range(2):
            for b in range(2):
                transitions[:, x, a, b, (x + 1) % nstates if a == b else x] = 1.0
    return MarkovGame(rewards, transitions)


def _sparse_rows(rng: np.random.Generator, shape: Tuple[int, ...], sparsity: float) -> np.ndarray:
    weights = 1.0 - rng.random(shape)  # in (0, 1]
    if sparsity > 0:
        dropped = rng.random(shape) < sparsity
        keep = np.argmax(weights, axis=-1)[..., None]
        np.put_along_axis(dropped, keep, False, axis=-1)
        weights = np.where(dropped, 0.0, weights)
    return weights / weights.sum(axis=-1, keepdims=True)


def random_game(
    rng: np.random.Generator,
    H: int,
    S: int,
    A: int,
    B: Optional[int] = None,
    sparsity: float = 0.0,
) -> MarkovGame:
    """Uniform [-1, 1] rewards; each transition row is a normalised positive random vector."""
    if not 0 <= sparsity < 1:
        raise ConfigurationError(f"sparsity must lie in [0, 1), got {sparsity}")
    B = A if B is None else B
    rewards = rng.uniform(-1.0, 1.0, size=(H, S, A, B))
    transitions = _sparse_rows(rng, (H, S, A, B, S), sparsity)
    return MarkovGame(rewards, transitions)


def turn_based(rng: np.random.Generator, H: int, S: int, A: int) -> MarkovGame:
    """P1 alone moves the game on even levels, P2 alone on odd ones."""
    rewards = np.zeros((H, S, A, A))
    transitions = np.zeros((H, S, A, A, S))
    for h in range(H):
        r = rng.uniform(-1.0, 1.0, size=(S, A))
        p = _sparse_rows(rng, (S, A, S), 0.0)
        if h % 2 == 0:
            rewards[h] = r[:, :, None]
            transitions[h] = p[:, :, None, :]
        else:
            rewards[h] = r[:, None, :]
            transitions[h] = p[:, None, :, :]
    return MarkovGame(rewards, transitions)


GENERATORS: Dict[str, Callable[..., MarkovGame]] = {
    "matching-pennies-chain": matching_pennies_chain,
    "random": random_game,
    "turn-based": turn_based,
}


def generate_game(spec: GameSpec, seed: int) -> MarkovGame:
    name, args, kwargs = parse_spec(spec)
    if name not in GENERATORS:
        raise ConfigurationError(f"unknown game generator '{name}' (known: {', '.join(sorted(GENERATORS))})")
    builder = GENERATORS[name]
    rng = RngFactory(seed, "generate").generator(name)
    try:
        inspect.signature(builder).bind(rng, *args, **kwargs)
    except TypeError as e:
        raise ConfigurationError(f"invalid parameters for '{name}': {e}") from e
    game = builder(rng, *args, **kwargs)
    log_info(f"Generated '{name}' game with layout {game.shape} (seed {seed})")
    return game


def generate_features(game: MarkovGame) -> LinearValueFamily:
    """phi_h(x, a, b) = e_(x, a, b)."""
    return LinearValueFamily.onehot(game)


# --- Families ---


def _truth_tables(
    game: MarkovGame, policies: Optional[PolicyFamily], opponents: Optional[PolicyFamily]
) -> List[Tuple[str, np.ndarray]]:
    truths = [(Q_STAR_TAG, ne_value_iteration(game).q_star)]
    if policies is None:
        return truths
    candidates = None if opponents is None else opponents.stacked
    for i, pi in enumerate(policies.members):
        response, _ = best_response_tables(game, pi, Side.P1, candidates)
        q, _ = policy_pair_tables(game, pi, response)
        truths.append((policy_tag(i), q))
    return truths


def _level_bounds(game: MarkovGame) -> Tuple[np.ndarray, np.ndarray]:
    ranges = np.array([game.value_range(h) for h in range(game.horizon)])
    shape = (game.horizon, 1, 1, 1)
    return ranges[:, 0].reshape(shape), ranges[:, 1].reshape(shape)


def generate_realizable_family(
    game: MarkovGame,
    n_decoys: int,
    noise: float,
    seed: int,
    policies: Optional[PolicyFamily] = None,
    opponents: Optional[PolicyFamily] = None,
) -> FiniteValueFamily:
    """
    Q* (and Q^{pi_i, nu*_pi_i} for every policy given) plus decoys made by
    adding clamped uniform noise to a truth. Every decoy is at least noise/2
    away from every truth in sup norm. Members are shuffled; truth_tags
    records where each truth landed.
    """
    if noise <= 0:
        raise ConfigurationError("decoy noise must be positive")
    rng = RngFactory(seed, "generate").generator("values")
    truths = _truth_tables(game, policies, opponents)
    truth_stack = np.stack([t for _, t in truths])
    lo, hi = _level_bounds(game)
    decoys = []
    for j in range(n_decoys):
        base = truth_stack[j % len(truths)]
        for _ in range(DECOY_RETRY_CAP):
            candidate = np.clip(base + rng.uniform(-noise, noise, size=base.shape), lo, hi)
            distance = np.abs(truth_stack - candidate[None]).max(axis=(1, 2, 3, 4)).min()
            if distance >= noise / 2:
                decoys.append(candidate)
                break
        else:
            raise ConfigurationError(
                f"decoy {j} stayed within {noise / 2:.4g} of a truth after {DECOY_RETRY_CAP} draws"
            )
    tables = [t for _, t in truths] + decoys
    names = [tag for tag, _ in truths] + [f"decoy{j}" for j in range(n_decoys)]
    order = rng.permutation(len(tables))
    tags = {int(pos): truths[src][0] for pos, src in enumerate(order) if src < len(truths)}
    log_info(f"Value family: {len(truths)} truths and {n_decoys} decoys")
    return FiniteValueFamily(
        np.stack([tables[i] for i in order]), tuple(names[i] for i in order), tags
    )


def generate_policy_family(
    game: MarkovGame,
    n_policies: int,
    seed: int,
    side: Side = Side.P1,
    include_nash: bool = True,
) -> PolicyFamily:
    """Dirichlet(1) rows at every (h, x); member 0 is the Nash policy when requested."""
    if n_policies < 1:
        raise ConfigurationError("a policy family needs at least one member")
    rng = RngFactory(seed, "generate").generator(f"policies-{side.value}")
    n_actions = game.n_actions(side)
    members: List[StochasticPolicy] = []
    names: List[str] = []
    if include_nash:
        solution = ne_value_iteration(game)
        members.append(solution.pi_star if side is Side.P1 else solution.nu_star)
        names.append("nash")
    while len(members) < n_policies:
        probs = rng.dirichlet(np.ones(n_actions), size=(game.horizon, game.n_states))
        members.append(StochasticPolicy(probs, side))
        names.append(f"{side.value}:random{len(names)}")
    return PolicyFamily(tuple(members), tuple(names))


def generate_model_family(game: MarkovGame, n_models: int, noise: float, seed: int) -> ModelFamily:
    """
    The true game plus perturbed copies: transitions mixed with Dirichlet rows
    at weight `noise`, rewards shifted by uniform noise and clipped to range.
    """
    if n_models < 1:
        raise ConfigurationError("a model family needs at least one member")
    if not 0 < noise <= 1:
        raise ConfigurationError(f"model noise must lie in (0, 1], got {noise}")
    rng = RngFactory(seed, "generate").generator("models")
    lo, hi = game.reward_range
    models = [game]
    for _ in range(n_models - 1):
        mix = rng.dirichlet(np.ones(game.n_states), size=game.rewards.shape)
        transitions = (1.0 - noise) * game.transitions + noise * mix
        transitions /= transitions.sum(axis=-1, keepdims=True)
        rewards = np.clip(game.rewards + rng.uniform(-noise, noise, size=game.rewards.shape), lo, hi)
        models.append(MarkovGame(rewards, transitions, game.initial_state, game.reward_range))
    names = ["true"] + [f"M{i}" for i in range(1, n_models)]
    order = rng.permutation(n_models)
    return ModelFamily(
        tuple(models[i] for i in order),
        tuple(names[i] for i in order),
        true_index=int(np.flatnonzero(order == 0)[0]),
    )


def generate_test_family(game: MarkovGame, n_tests: int, seed: int) -> TestFunctionFamily:
    """
    Random tables with reward weights in {0, +1, -1}, scaled so the sup norm
    stays within the bound, closed under negation. The pure reward test and
    its negation come first.
    """
    if n_tests < 1:
        raise ConfigurationError("a test family needs at least one member")
    rng = RngFactory(seed, "generate").generator("tests")
    S, A, B = game.n_states, game.n_actions1, game.n_actions2
    reward_bound = max(abs(v) for v in game.reward_range)
    tables, weights = [np.zeros((S, A, B, S))], [1.0 if reward_bound <= TEST_FUNCTION_BOUND else 0.0]
    for _ in range(n_tests - 1):
        weight = float(rng.choice([-1.0, 0.0, 1.0]))
        room = TEST_FUNCTION_BOUND - abs(weight) * reward_bound
        if room <= 0:
            weight, room = 0.0, TEST_FUNCTION_BOUND
        tables.append(room * rng.uniform(-1.0, 1.0, size=(S, A, B, S)))
        weights.append(weight)
    stacked = np.stack(tables)
    w = np.array(weights)
    names = [f"g{i}" for i in range(n_tests)] + [f"-g{i}" for i in range(n_tests)]
    family = TestFunctionFamily(np.concatenate([stacked, -stacked]), np.concatenate([w, -w]), tuple(names))
    family.check_bound(reward_bound)
    return family
