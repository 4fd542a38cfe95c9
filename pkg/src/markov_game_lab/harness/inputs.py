# src/markov_game_lab/harness/inputs.py
"""
Resolves the game and families a command runs on: from the files named in
`paths` when set, otherwise from the seeded generators.
"""
from functools import cached_property
from typing import Optional

from markov_game_lab.games.markov_game import GameSolution, MarkovGame, swap_players
from markov_game_lab.games.solvers import ne_value_iteration
from markov_game_lab.harness.generators import (
    generate_game,
    generate_model_family,
    generate_policy_family,
    generate_realizable_family,
    generate_test_family,
)
from markov_game_lab.hypothesis.families import (
    FiniteValueFamily,
    LinearValueFamily,
    ModelFamily,
    PolicyFamily,
    TestFunctionFamily,
)
from markov_game_lab.utils.config_schema import Config
from markov_game_lab.utils.constants import Side
from markov_game_lab.utils.data_loader import DataLoader


class LabInputs:
    def __init__(self, config: Config):
        self.config = config
        self.loader = DataLoader(config.paths)

    @cached_property
    def game(self) -> MarkovGame:
        if self.config.paths.game:
            return self.loader.game()
        source = self.config.game
        return generate_game({"generator": source.generator, "params": source.params}, source.seed)

    @cached_property
    def solution(self) -> GameSolution:
        return ne_value_iteration(self.game, self.config.solver.tol)

    @cached_property
    def policies(self) -> PolicyFamily:
        if self.config.paths.policies:
            family = self.loader.policies()
            family.check_fits(self.game, Side.P1)
            return family
        params = self.config.families
        return generate_policy_family(
            self.game, params.n_policies, params.seed, Side.P1, params.include_nash_policy
        )

    @cached_property
    def opponent_policies(self) -> Optional[PolicyFamily]:
        family = self.loader.opponent_policies()
        if family is not None:
            family = family.as_side(Side.P2)
            family.check_fits(self.game, Side.P2)
            return family
        params = self.config.families
        if params.n_opponent_policies == 0:
            return None
        return generate_policy_family(
            self.game, params.n_opponent_policies, params.seed, Side.P2, params.include_nash_policy
        )

    def _values(self, policies: Optional[PolicyFamily]) -> FiniteValueFamily:
        if self.config.paths.values:
            family = self.loader.values()
            family.check_fits(self.game)
            return family
        params = self.config.families
        return generate_realizable_family(
            self.game, params.n_decoys, params.noise, params.seed, policies, self.opponent_policies
        )

    @cached_property
    def values(self) -> FiniteValueFamily:
        """Realizable for Q*."""
        return self._values(None)

    @cached_property
    def pair_values(self) -> FiniteValueFamily:
        """Realizable for Q* and every Q^{pi, nu*_pi}, pi in the policy family."""
        return self._values(self.policies)

    @cached_property
    def opponent_class(self) -> PolicyFamily:
        """Pi2 as the AOVE runs see it: the opponent family, else P2's pure actions."""
        if self.opponent_policies is not None:
            return self.opponent_policies
        game = self.game
        return PolicyFamily.pure_actions(game.horizon, game.n_states, game.n_actions2, Side.P2)

    @cached_property
    def opponent_pair_values(self) -> Optional[FiniteValueFamily]:
        """
        P2's family for the player-swapped game, realizable for Q* and every
        Q^{nu, pi*_nu} with nu in Pi2 and responses restricted to Pi1. None
        when values come from a file.
        """
        if self.config.paths.values:
            return None
        params = self.config.families
        return generate_realizable_family(
            swap_players(self.game),
            params.n_decoys,
            params.noise,
            params.seed,
            self.opponent_class.as_side(Side.P1),
            self.policies.as_side(Side.P2),
        )

    @cached_property
    def models(self) -> ModelFamily:
        if self.config.paths.models:
            family = self.loader.models()
        else:
            params = self.config.families
            family = generate_model_family(self.game, params.n_models, params.model_noise, params.seed)
        if not family.members[0].same_layout(self.game):
            raise ValueError(f"model layout {family.members[0].shape} does not fit game {self.game.shape}")
        return family

    @cached_property
    def tests(self) -> TestFunctionFamily:
        reward_bound = max(abs(v) for v in self.game.reward_range)
        if self.config.paths.tests:
            return self.loader.tests(reward_bound)
        params = self.config.families
        return generate_test_family(self.game, params.n_tests, params.seed)

    @cached_property
    def features(self) -> LinearValueFamily:
        return self.loader.features(self.game)
