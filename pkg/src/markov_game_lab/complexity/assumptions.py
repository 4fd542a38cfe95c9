# src/markov_game_lab/complexity/assumptions.py
"""
Membership checks for the structural assumptions the learners rely on.

F_h is read as the level-h projection of the stored tuples. Every check
returns a report with its violating witnesses; nothing here raises on a
failed assumption.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from markov_game_lab.algorithms.aome import exact_bellman_error, exact_witness_misfit, roll_in_pair
from markov_game_lab.games.markov_game import MarkovGame
from markov_game_lab.games.solvers import best_response_tables, ne_value_iteration, policy_pair_tables
from markov_game_lab.hypothesis.families import (
    FiniteValueFamily,
    ModelFamily,
    PolicyFamily,
    TestFunctionFamily,
)
from markov_game_lab.hypothesis.induced import restricted_values, solve_family
from markov_game_lab.utils.constants import MEMBERSHIP_TOL, Side


@dataclass
class AssumptionReport:
    name: str
    holds: bool
    violations: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "holds": self.holds, "violations": self.violations}


def _in_projection(table: np.ndarray, family: FiniteValueFamily, h: int, tol: float) -> bool:
    return bool(np.any(np.abs(family.tables[:, h] - table[None]).max(axis=(1, 2, 3)) <= tol))


def _report(name: str, violations: List[Dict[str, Any]]) -> AssumptionReport:
    return AssumptionReport(name, not violations, violations)


def check_realizability(game: MarkovGame, family: FiniteValueFamily, tol: float = MEMBERSHIP_TOL) -> AssumptionReport:
    """Q*_h in F_h at every level."""
    q_star = ne_value_iteration(game).q_star
    violations = [{"h": h} for h in range(game.horizon) if not _in_projection(q_star[h], family, h, tol)]
    return _report("realizability", violations)


def check_completeness(game: MarkovGame, family: FiniteValueFamily, tol: float = MEMBERSHIP_TOL) -> AssumptionReport:
    """T_h f_{h+1} in F_h for every member and level (the max-min Bellman operator)."""
    solutions = solve_family(family)
    violations = []
    for f, sol in enumerate(solutions):
        for h in range(game.horizon):
            backup = game.rewards[h] + game.transitions[h] @ sol.values[h + 1]
            if not _in_projection(backup, family, h, tol):
                violations.append({"f": f, "h": h})
    return _report("completeness", violations)


def check_policy_realizability(
    game: MarkovGame,
    family: FiniteValueFamily,
    policies: PolicyFamily,
    opponents: Optional[PolicyFamily] = None,
    tol: float = MEMBERSHIP_TOL,
) -> AssumptionReport:
    """Q^{pi, nu*_pi} in F (whole tuple) for every pi in Pi, nu* restricted to the opponent rows."""
    candidates = None if opponents is None else opponents.stacked
    violations = []
    for i, pi in enumerate(policies.members):
        response, _ = best_response_tables(game, pi, Side.P1, candidates)
        q, _ = policy_pair_tables(game, pi, response)
        gaps = np.abs(family.tables - q[None]).max(axis=(1, 2, 3, 4))
        if not np.any(gaps <= tol):
            violations.append({"pi": i, "closest_member": int(np.argmin(gaps)), "gap": float(gaps.min())})
    return _report("policy_realizability", violations)


def check_policy_completeness(
    game: MarkovGame,
    family: FiniteValueFamily,
    policies: PolicyFamily,
    opponents: Optional[PolicyFamily] = None,
    tol: float = MEMBERSHIP_TOL,
) -> AssumptionReport:
    """T^pi_h f_{h+1} in F_h for every member, policy and level."""
    if opponents is None:
        opponents = PolicyFamily.pure_actions(game.horizon, game.n_states, game.n_actions2, Side.P2)
    successor = restricted_values(family.tables, policies.stacked, opponents.stacked)  # (P, N, H + 1, S)
    violations = []
    for i in range(policies.size):
        for f in range(family.size):
            for h in range(game.horizon):
                backup = game.rewards[h] + game.transitions[h] @ successor[i, f, h + 1]
                if not _in_projection(backup, family, h, tol):
                    violations.append({"f": f, "h": h, "pi": i})
    return _report("policy_completeness", violations)


def check_assumptions(
    game: MarkovGame,
    family: FiniteValueFamily,
    policies: Optional[PolicyFamily] = None,
    opponents: Optional[PolicyFamily] = None,
    tol: float = MEMBERSHIP_TOL,
) -> Dict[str, AssumptionReport]:
    family.check_fits(game)
    reports = {
        "realizability": check_realizability(game, family, tol),
        "completeness": check_completeness(game, family, tol),
    }
    if policies is not None:
        reports["policy_realizability"] = check_policy_realizability(game, family, policies, opponents, tol)
        reports["policy_completeness"] = check_policy_completeness(game, family, policies, opponents, tol)
    return reports


def check_witness_domination(
    models: ModelFamily,
    tests: TestFunctionFamily,
    true_game: MarkovGame,
    tol: float = MEMBERSHIP_TOL,
) -> AssumptionReport:
    """Witnessed misfit >= Bellman error for every (M1, M2, M) triple and level."""
    violations = []
    for i, m1 in enumerate(models.members):
        for j, m2 in enumerate(models.members):
            roll_in = roll_in_pair(m1, m2)
            for k, model in enumerate(models.members):
                for h in range(true_game.horizon):
                    misfit = exact_witness_misfit(roll_in, model, h, tests, true_game)
                    error = exact_bellman_error(roll_in, model, h, true_game)
                    if misfit < error - tol:
                        violations.append(
                            {"m1": i, "m2": j, "model": k, "h": h, "misfit": misfit, "bellman_error": error}
                        )
    return _report("witness_domination", violations)
