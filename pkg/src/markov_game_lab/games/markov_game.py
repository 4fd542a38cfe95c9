# src/markov_game_lab/games/markov_game.py
"""
Tabular two-player zero-sum episodic Markov games.

Levels are 0-based throughout the package: a game of horizon H has levels
0..H-1, and value tables carry an extra terminal row H that is identically 0.
P1 (rows, actions1) maximizes; P2 (columns, actions2) minimizes.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from markov_game_lab.utils.constants import (
    DEFAULT_REWARD_RANGE,
    PROBABILITY_TOL,
    Side,
)
from markov_game_lab.utils.exceptions import GameValidationError


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def check_distribution_rows(
    probs: np.ndarray, what: str, tol: float = PROBABILITY_TOL
) -> None:
    """Raise on the first negative entry or row whose sum is not 1."""
    if not np.all(np.isfinite(probs)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(probs))[0])
        raise GameValidationError(f"{what} has a non-finite entry", bad)
    negative = np.argwhere(probs < 0)
    if negative.size:
        raise GameValidationError(
            f"{what} has a negative probability",
            tuple(int(i) for i in negative[0]),
        )
    sums = probs.sum(axis=-1)
    off = np.argwhere(np.abs(sums - 1.0) > tol)
    if off.size:
        index = tuple(int(i) for i in off[0])
        raise GameValidationError(
            f"{what} row sums to {sums[index]:.15g} instead of 1", index
        )


@dataclass(frozen=True, eq=False)
class MarkovGame:
    rewards: np.ndarray  # (H, S, A1, A2)
    transitions: np.ndarray  # (H, S, A1, A2, S)
    initial_state: int = 0
    reward_range: Tuple[float, float] = DEFAULT_REWARD_RANGE
    state_names: Optional[Tuple[str, ...]] = None
    action1_names: Optional[Tuple[str, ...]] = None
    action2_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewards", _frozen(self.rewards))
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        self._validate()

    def _validate(self) -> None:
        r, p = self.rewards, self.transitions
        if r.ndim != 4:
            raise GameValidationError(
                f"rewards must be H x S x A1 x A2, got shape {r.shape}"
            )
        if p.shape != r.shape + (r.shape[1],):
            raise GameValidationError(
                f"transitions shape {p.shape} does not match rewards shape {r.shape}"
            )
        if min(r.shape) < 1:
            raise GameValidationError(f"empty dimension in shape {r.shape}")
        if not 0 <= self.initial_state < self.n_states:
            raise GameValidationError(
                f"initial state {self.initial_state} outside 0..{self.n_states - 1}"
            )
        lo, hi = self.reward_range
        if not lo <= hi:
            raise GameValidationError(f"invalid reward range {self.reward_range}")
        if not np.all(np.isfinite(r)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(r))[0])
            raise GameValidationError("reward is not finite", bad)
        outside = np.argwhere((r < lo) | (r > hi))
        if outside.size:
            index = tuple(int(i) for i in outside[0])
            raise GameValidationError(
                f"reward {r[index]:.6g} outside range [{lo}, {hi}]", index
            )
        check_distribution_rows(p, "transition")
        for names, size, what in (
            (self.state_names, self.n_states, "state"),
            (self.action1_names, self.n_actions1, "actions1"),
            (self.action2_names, self.n_actions2, "actions2"),
        ):
            if names is not None and len(names) != size:
                raise GameValidationError(
                    f"{len(names)} {what} names for {size} entries"
                )

    @property
    def horizon(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def n_states(self) -> int:
        return int(self.rewards.shape[1])

    @property
    def n_actions1(self) -> int:
        return int(self.rewards.shape[2])

    @property
    def n_actions2(self) -> int:
        return int(self.rewards.shape[3])

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.horizon, self.n_states, self.n_actions1, self.n_actions2)

    def n_actions(self, side: Side) -> int:
        return self.n_actions1 if side is Side.P1 else self.n_actions2

    def value_range(self, level: int = 0) -> Tuple[float, float]:
        """Range of any value from `level` to the end of the episode."""
        steps = self.horizon - level
        return (steps * self.reward_range[0], steps * self.reward_range[1])

    def same_layout(self, other: "MarkovGame") -> bool:
        return self.shape == other.shape and self.initial_state == other.initial_state


def swap_players(game: MarkovGame) -> MarkovGame:
    """The same game seen from P2's seat: actions swapped, rewards negated."""
    lo, hi = game.reward_range
    return MarkovGame(
        rewards=-np.swapaxes(game.rewards, 2, 3),
        transitions=np.swapaxes(game.transitions, 2, 3),
        initial_state=game.initial_state,
        reward_range=(-hi, -lo),
        state_names=game.state_names,
        action1_names=game.action2_names,
        action2_names=game.action1_names,
    )


@dataclass(frozen=True)
class StochasticPolicy:
    """probs[h, x] is a distribution over the owning player's actions."""

    probs: np.ndarray  # (H, S, n_actions)
    side: Side = Side.P1

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _frozen(self.probs))
        if self.probs.ndim != 3:
            raise GameValidationError(
                f"policy must be H x S x actions, got shape {self.probs.shape}"
            )
        check_distribution_rows(self.probs, f"{self.side.value} policy")

    @property
    def horizon(self) -> int:
        return int(self.probs.shape[0])

    @property
    def n_states(self) -> int:
        return int(self.probs.shape[1])

    @property
    def n_actions(self) -> int:
        return int(self.probs.shape[2])

    def check_fits(self, game: MarkovGame, side: Optional[Side] = None) -> None:
        side = side or self.side
        expected = (game.horizon, game.n_states, game.n_actions(side))
        if self.probs.shape != expected:
            raise ValueError(
                f"{side.value} policy shape {self.probs.shape} does not fit game "
                f"(expected {expected})"
            )

    def with_side(self, side: Side) -> "StochasticPolicy":
        return StochasticPolicy(self.probs, side)

    @classmethod
    def uniform(cls, horizon: int, n_states: int, n_actions: int, side: Side = Side.P1) -> "StochasticPolicy":
        return cls(np.full((horizon, n_states, n_actions), 1.0 / n_actions), side)

    @classmethod
    def deterministic(cls, actions: np.ndarray, n_actions: int, side: Side = Side.P1) -> "StochasticPolicy":
        """actions[h, x] is the chosen action index."""
        actions = np.asarray(actions, dtype=int)
        return cls(np.eye(n_actions)[actions], side)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StochasticPolicy):
            return NotImplemented
        return self.side is other.side and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.side, self.probs.tobytes()))


class Transition(NamedTuple):
    h: int
    x: int
    a: int
    b: int
    r: float
    x_next: int


@dataclass(frozen=True)
class EpisodeRecord:
    steps: Tuple[Transition, ...]

    @property
    def total_reward(self) -> float:
        return float(sum(step.r for step in self.steps))

    def check_consistent(self, game: MarkovGame) -> None:
        if len(self.steps) != game.horizon:
            raise ValueError(f"episode has {len(self.steps)} steps, horizon is {game.horizon}")
        if self.steps[0].x != game.initial_state:
            raise ValueError("episode does not start at the initial state")
        for prev, step in zip(self.steps, self.steps[1:]):
            if prev.x_next != step.x:
                raise ValueError(f"broken trajectory between levels {prev.h} and {step.h}")


@dataclass(frozen=True, eq=False)
class GameSolution:
    q_star: np.ndarray  # (H, S, A1, A2)
    v_star: np.ndarray  # (H + 1, S), last row zero
    pi_star: StochasticPolicy
    nu_star: StochasticPolicy
    initial_state: int = 0

    @property
    def value(self) -> float:
        return float(self.v_star[0, self.initial_state])
