# src/markov_game_lab/algorithms/opponents.py
"""
P2 behaviours for the decoupled learners. The learner never sees the
returned policy; the harness uses it for exact regret accounting.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

from markov_game_lab.games.markov_game import GameSolution, MarkovGame, StochasticPolicy
from markov_game_lab.games.solvers import best_response_value_iteration
from markov_game_lab.hypothesis.families import PolicyFamily
from markov_game_lab.utils.config_schema import OpponentParams
from markov_game_lab.utils.constants import OpponentKind, Side
from markov_game_lab.utils.exceptions import ConfigurationError


class Opponent(ABC):
    kind: OpponentKind

    @abstractmethod
    def policy(self, k: int, learner: StochasticPolicy) -> StochasticPolicy:
        """P2's policy for episode k (1-based) given the learner's policy."""


@dataclass
class BestResponseOpponent(Opponent):
    game: MarkovGame
    kind: OpponentKind = OpponentKind.BEST_RESPONSE

    def policy(self, k: int, learner: StochasticPolicy) -> StochasticPolicy:
        response, _ = best_response_value_iteration(self.game, learner, Side.P1)
        return response


@dataclass
class FixedOpponent(Opponent):
    fixed: StochasticPolicy
    kind: OpponentKind = OpponentKind.FIXED

    def policy(self, k: int, learner: StochasticPolicy) -> StochasticPolicy:
        return self.fixed


@dataclass
class ScheduleOpponent(Opponent):
    schedule: Sequence[StochasticPolicy]
    cycle: bool = True
    kind: OpponentKind = OpponentKind.SCHEDULE

    def __post_init__(self) -> None:
        if not self.schedule:
            raise ConfigurationError("adversarial schedule is empty")

    def policy(self, k: int, learner: StochasticPolicy) -> StochasticPolicy:
        index = k - 1
        if index >= len(self.schedule):
            if not self.cycle:
                raise ConfigurationError(
                    f"adversarial schedule of length {len(self.schedule)} exhausted at episode {k}"
                )
            index %= len(self.schedule)
        return self.schedule[index]


@dataclass
class SelfNashOpponent(Opponent):
    solution: GameSolution
    kind: OpponentKind = OpponentKind.SELF_NASH

    def policy(self, k: int, learner: StochasticPolicy) -> StochasticPolicy:
        return self.solution.nu_star


def _resolve_policy(
    spec: str, game: MarkovGame, solution: GameSolution, family: Optional[PolicyFamily]
) -> StochasticPolicy:
    if spec == "uniform":
        return StochasticPolicy.uniform(game.horizon, game.n_states, game.n_actions2, Side.P2)
    if spec == "nash":
        return solution.nu_star
    if spec.startswith("member:"):
        if family is None:
            raise ConfigurationError(f"opponent policy '{spec}' needs paths.opponent_policies")
        index = int(spec.split(":", 1)[1])
        if not 0 <= index < family.size:
            raise ConfigurationError(f"opponent policy index {index} out of range")
        return family.members[index].with_side(Side.P2)
    raise ConfigurationError(f"unknown opponent policy '{spec}' (uniform | nash | member:<i>)")


def build_opponent(
    params: OpponentParams,
    game: MarkovGame,
    solution: GameSolution,
    family: Optional[PolicyFamily] = None,
) -> Opponent:
    kind = OpponentKind(params.kind)
    if kind is OpponentKind.BEST_RESPONSE:
        return BestResponseOpponent(game)
    if kind is OpponentKind.SELF_NASH:
        return SelfNashOpponent(solution)
    if kind is OpponentKind.FIXED:
        fixed = _resolve_policy(params.policy, game, solution, family)
        fixed.check_fits(game, Side.P2)
        return FixedOpponent(fixed)
    if family is None:
        raise ConfigurationError("a schedule opponent needs paths.opponent_policies")
    schedule = [_resolve_policy(f"member:{i}", game, solution, family) for i in params.schedule]
    return ScheduleOpponent(schedule, params.cycle)
