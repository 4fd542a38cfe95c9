# src/markov_game_lab/algorithms/aove.py
"""
Alternate optimistic value elimination over (policy, Q-tuple) pairs.

P2's responses are restricted to the rows its policy family offers at each
(h, x); without an opponent family the rows are the pure actions, which
makes the restricted response the unrestricted one.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from markov_game_lab.algorithms.buffers import LevelData, PolicyRegretTrace
from markov_game_lab.games.markov_game import EpisodeRecord, MarkovGame, StochasticPolicy, swap_players
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.games.solvers import (
    best_response_value_iteration,
    duality_gap,
    evaluate_policy_pair,
)
from markov_game_lab.hypothesis.families import FiniteValueFamily, PolicyFamily, covering_log
from markov_game_lab.hypothesis.induced import induced_best_response, restricted_values
from markov_game_lab.utils.constants import IDENTITY_TOL, AoveRole, Side
from markov_game_lab.utils.exceptions import GameValidationError
from markov_game_lab.utils.logger import log_info, log_warning, progress
from markov_game_lab.utils.rng import RngFactory


@dataclass(frozen=True)
class AoveConfig:
    episodes: int
    beta: Optional[float] = None
    c: float = 2.0
    p: float = 0.05
    role: AoveRole = AoveRole.P1
    seed: int = 0
    experiment: str = "aove"

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")

    def resolve_beta(self, values: FiniteValueFamily, policies: PolicyFamily) -> float:
        """beta = C * log(N(F, 1/K) * N(Pi, 1/K) * H * K / p) unless given explicitly."""
        if self.beta is not None:
            return self.beta
        k = max(self.episodes, 1)
        cover = covering_log(values, 1.0 / k) + covering_log(policies, 1.0 / k)
        return self.c * (cover + math.log(values.horizon * k / self.p))


def pair_loss(
    data: LevelData,
    xi_h: np.ndarray,
    zeta_next: Optional[np.ndarray],
    pi_next: Optional[np.ndarray],
    candidates_next: Optional[np.ndarray] = None,
) -> float:
    """
    sum of [xi_h(x, a, b) - r - zeta_{h+1}(x', pi, nu_pi^zeta)]^2, the successor
    being min over the candidate rows (m, S, B) of pi(x')' zeta(x') nu(x');
    pure actions when no candidates are given, zero when zeta_next is None.
    """
    if len(data) == 0:
        return 0.0
    if zeta_next is None or pi_next is None:
        successor = np.zeros(xi_h.shape[0])
    else:
        columns = np.einsum("xa,xab->xb", pi_next, zeta_next)
        if candidates_next is None:
            successor = columns.min(axis=1)
        else:
            successor = np.einsum("mxb,xb->mx", candidates_next, columns).min(axis=0)
    residual = xi_h[data.x, data.a, data.b] - data.r - successor[data.x_next]
    return float(np.sum(residual**2))


class PairLossAccumulator:
    """loss[h, i, g, n] = E_{B_h}(g_h, f^n_{h+1}, pi_i), one transition per level per episode."""

    def __init__(self, values: FiniteValueFamily, successors: np.ndarray):
        self.tables = values.tables
        self.successors = successors  # (P, N, H + 1, S)
        P, N = successors.shape[:2]
        self.loss = np.zeros((values.horizon, P, N, N))

    def add(self, episode: EpisodeRecord) -> None:
        for step in episode.steps:
            pred = self.tables[:, step.h, step.x, step.a, step.b]  # (N,)
            target = step.r + self.successors[:, :, step.h + 1, step.x_next]  # (P, N)
            self.loss[step.h] += (pred[None, :, None] - target[:, None, :]) ** 2


@dataclass(frozen=True, eq=False)
class PairVersionSpace:
    mask: np.ndarray  # (P, N)
    fallback: bool = False

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def pairs(self) -> np.ndarray:
        """Surviving (policy, member) indices in lexicographic order."""
        return np.argwhere(self.mask)

    def __contains__(self, pair: object) -> bool:
        i, n = pair  # type: ignore[misc]
        return bool(self.mask[i, n])


def eliminate_pairs(loss: np.ndarray, beta: float) -> PairVersionSpace:
    """(pi, f) survives iff E(f_h, f_{h+1}, pi) <= min_g E(g_h, f_{h+1}, pi) + beta at every h."""
    n = loss.shape[2]
    idx = np.arange(n)
    excess = loss[:, :, idx, idx] - loss.min(axis=2)  # (H, P, N)
    keep = np.all(excess <= beta, axis=0)
    if keep.any():
        return PairVersionSpace(keep)
    flat = int(np.argmin(excess.sum(axis=0)))
    pair = np.unravel_index(flat, keep.shape)
    log_warning(f"Pair version space emptied at beta={beta:.4g}; keeping pair {tuple(int(v) for v in pair)}.")
    mask = np.zeros_like(keep)
    mask[pair] = True
    return PairVersionSpace(mask, fallback=True)


def select_pair(vspace: PairVersionSpace, values: np.ndarray, x1: int) -> Tuple[int, int]:
    """argmax over survivors of f_1(x1, pi, nu_pi^f); ties to the lexicographically first pair."""
    pairs = vspace.pairs()
    if len(pairs) == 0:
        raise ValueError("cannot select from an empty pair version space")
    scores = values[pairs[:, 0], pairs[:, 1], 0, x1]
    i, n = pairs[int(np.argmax(scores))]
    return int(i), int(n)


def select_pessimistic(vspace: PairVersionSpace, values: np.ndarray, policy_index: int, x1: int) -> int:
    """argmin over g with (pi^k, g) surviving of g_1(x1, pi^k, nu_{pi^k}^g); lowest index on ties."""
    members = np.flatnonzero(vspace.mask[policy_index])
    if members.size == 0:
        raise ValueError(f"no surviving pair holds policy {policy_index}")
    return int(members[int(np.argmin(values[policy_index, members, 0, x1]))])


@dataclass(frozen=True)
class RegretReference:
    """Best value over Pi against restricted and unrestricted responses."""

    restricted: np.ndarray  # (P,) V^{pi, nu*_pi} with Pi-restricted nu*
    unrestricted: np.ndarray  # (P,)

    @property
    def best_restricted(self) -> float:
        return float(self.restricted.max())

    @property
    def best_unrestricted(self) -> float:
        return float(self.unrestricted.max())


def regret_reference(game: MarkovGame, policies: PolicyFamily, opponents: PolicyFamily) -> RegretReference:
    restricted = [
        best_response_value_iteration(game, pi, Side.P1, opponents.stacked)[1] for pi in policies.members
    ]
    unrestricted = [best_response_value_iteration(game, pi, Side.P1)[1] for pi in policies.members]
    return RegretReference(np.array(restricted), np.array(unrestricted))


def optimal_offset(game: MarkovGame, policies: PolicyFamily, opponents: PolicyFamily) -> float:
    """
    Middle term of the duality-gap decomposition within the classes:
    max_i V(pi_i, nu*) - min_j V(pi*, nu_j), with pi*, nu* the max-min and
    min-max members of the Pi1 x Pi2 value grid. Non-negative.
    """
    grid = np.array([[evaluate_policy_pair(game, pi, nu) for nu in opponents.members] for pi in policies.members])
    row_min, col_max = grid.min(axis=1), grid.max(axis=0)
    return float(col_max[int(np.argmin(col_max))] - row_min[int(np.argmax(row_min))])


@dataclass
class AoveRun:
    trace: PolicyRegretTrace
    beta: float
    policies: List[StochasticPolicy] = field(default_factory=list)
    opponents: List[StochasticPolicy] = field(default_factory=list)


def _run_p1(
    game: MarkovGame,
    policies: PolicyFamily,
    values: FiniteValueFamily,
    opponents: PolicyFamily,
    config: AoveConfig,
    offset: Optional[float],
) -> AoveRun:
    values.check_fits(game)
    policies.check_fits(game, Side.P1)
    opponents.check_fits(game, Side.P2)
    beta = config.resolve_beta(values, policies)
    x1 = game.initial_state
    rv = restricted_values(values.tables, policies.stacked, opponents.stacked)
    reference = regret_reference(game, policies, opponents)
    truth_pairs = values.truth_pairs()
    stray = sorted({i for i, _ in truth_pairs if i >= policies.size})
    if stray:
        raise GameValidationError(
            f"value family tags policies {stray}, but the policy class has {policies.size} members"
        )
    rngs = RngFactory(config.seed, config.experiment)
    accumulator = PairLossAccumulator(values, rv)
    vspace = PairVersionSpace(np.ones((policies.size, values.size), dtype=bool))
    trace = PolicyRegretTrace()
    run = AoveRun(trace, beta)
    cum, cum_unrestricted = 0.0, 0.0
    fallbacks = bracket_violations = 0

    log_info(f"AOVE: {config.episodes} episodes, |Pi|={policies.size}, |F|={values.size}, beta={beta:.4g}")
    for k in progress(range(1, config.episodes + 1), desc="AOVE episodes", total=config.episodes):
        truths_before = all((i, n) in vspace for i, n in truth_pairs) if truth_pairs else None
        i, f = select_pair(vspace, rv, x1)
        g = select_pessimistic(vspace, rv, i, x1)
        pi = policies.members[i]
        nu = induced_best_response(values.member(g), pi, opponents)

        increment = reference.best_restricted - reference.restricted[i]
        increment_unrestricted = reference.best_unrestricted - reference.unrestricted[i]
        cum += increment
        cum_unrestricted += increment_unrestricted
        f1, g1 = rv[i, f, 0, x1], rv[i, g, 0, x1]
        if truths_before and (
            f1 < reference.best_restricted - IDENTITY_TOL or g1 > reference.restricted[i] + IDENTITY_TOL
        ):
            bracket_violations += 1
            log_warning(f"Episode {k}: value bracket violated with every truth pair present.")

        accumulator.add(sample_episode(game, pi, nu, rngs.episode("aove", k)))
        vspace = eliminate_pairs(accumulator.loss, beta)
        fallbacks += int(vspace.fallback)

        trace.append(
            k=k,
            pi_index=i,
            f_index=f,
            g_index=g,
            regret_increment=increment,
            cum_regret=cum,
            regret_unrestricted=increment_unrestricted,
            cum_regret_unrestricted=cum_unrestricted,
            pair_space_size=vspace.size,
            upper_bound_slack=f1 - g1,
            duality_gap=duality_gap(game, pi, nu),
            truths_survive=all((a, b) in vspace for a, b in truth_pairs) if truth_pairs else None,
            fallback_flag=vspace.fallback,
        )
        run.policies.append(pi)
        run.opponents.append(nu)

    trace.summary = {
        "algorithm": "aove",
        "seed": config.seed,
        "episodes": config.episodes,
        "beta": beta,
        "final_cum_regret": cum,
        "final_cum_regret_unrestricted": cum_unrestricted,
        "optimal_offset": offset,
        "truth_retention": truth_pair_retention_audit(trace),
        "fallback_events": fallbacks,
        "bracket_violations": bracket_violations,
    }
    return run


def run_aove(
    game: MarkovGame,
    policies: PolicyFamily,
    values: FiniteValueFamily,
    config: AoveConfig,
    opponents: Optional[PolicyFamily] = None,
    opponent_values: Optional[FiniteValueFamily] = None,
) -> Dict[str, AoveRun]:
    """
    `policies` is Pi1 (P1's class) and `opponents` Pi2; `values` holds P1's
    Q-tuples. Role p2 learns a policy out of Pi2 by running the P1 procedure
    on the player-swapped game with `opponent_values`, P2's Q-tuples laid
    out for that game (H, S, A2, A1). Without them the swapped P1 family is
    used, which is realizable for Q* only. Role both runs both and logs the exact
    duality gap of the two learned policies played against each other.
    """
    if opponents is None:
        opponents = PolicyFamily.pure_actions(game.horizon, game.n_states, game.n_actions2, Side.P2)
        offset = None
    else:
        offset = optimal_offset(game, policies, opponents)
    runs: Dict[str, AoveRun] = {}
    if config.role in (AoveRole.P1, AoveRole.BOTH):
        runs["p1"] = _run_p1(game, policies, values, opponents, config, offset)
    if config.role in (AoveRole.P2, AoveRole.BOTH):
        runs["p2"] = _run_p1(
            swap_players(game),
            opponents.as_side(Side.P1),
            opponent_values if opponent_values is not None else values.swapped(),
            policies.as_side(Side.P2),
            config,
            offset,
        )
    if config.role is AoveRole.BOTH:
        combined = [
            duality_gap(game, pi, nu.with_side(Side.P2))
            for pi, nu in zip(runs["p1"].policies, runs["p2"].policies)
        ]
        runs["p1"].trace.summary["combined_duality_gap"] = combined
        runs["p1"].trace.summary["final_combined_duality_gap"] = combined[-1] if combined else None
    return runs


def truth_pair_retention_audit(trace: PolicyRegretTrace) -> Optional[float]:
    """Fraction of episodes in which every tagged truth pair survived; None if untagged."""
    flags = [row["truths_survive"] for row in trace.rows if row["truths_survive"] is not None]
    if not flags:
        return None
    return float(np.mean(flags))


def summarize_roles(runs: Dict[str, AoveRun]) -> Dict[str, Any]:
    return {role: run.trace.summary for role, run in runs.items()}
