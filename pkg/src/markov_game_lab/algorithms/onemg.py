# src/markov_game_lab/algorithms/onemg.py
"""
Optimistic Nash elimination over a finite Q-tuple family, decoupled setting.

Each episode the learner plays the max-min policy of the surviving member
with the largest initial-state game value, observes one trajectory against
an opponent whose policy it never sees, and re-filters the WHOLE family by
the squared Bellman loss constraint.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from markov_game_lab.algorithms.buffers import LevelData, RegretTrace, ReplayBuffer
from markov_game_lab.algorithms.opponents import Opponent
from markov_game_lab.games.markov_game import (
    EpisodeRecord,
    GameSolution,
    MarkovGame,
    StochasticPolicy,
)
from markov_game_lab.games.matrix_game import solve_matrix_game
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.games.solvers import (
    best_response_value_iteration,
    evaluate_policy_pair,
    ne_value_iteration,
    policy_pair_tables,
)
from markov_game_lab.hypothesis.families import FiniteValueFamily, covering_log
from markov_game_lab.hypothesis.induced import (
    HypothesisSolution,
    induced_best_response,
    solve_family,
)
from markov_game_lab.utils.constants import IDENTITY_TOL, Side
from markov_game_lab.utils.exceptions import AuditFailure
from markov_game_lab.utils.logger import log_info, log_warning, progress
from markov_game_lab.utils.rng import RngFactory


@dataclass(frozen=True)
class OnemgConfig:
    episodes: int
    beta: Optional[float] = None
    c: float = 2.0
    p: float = 0.05
    seed: int = 0
    audit: bool = False
    experiment: str = "onemg"

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be non-negative")

    def resolve_beta(self, family: FiniteValueFamily) -> float:
        """beta = C * log(N(F, 1/K) * H * K / p) unless given explicitly."""
        if self.beta is not None:
            return self.beta
        k = max(self.episodes, 1)
        log_cover = covering_log(family, 1.0 / k)
        return self.c * (log_cover + math.log(family.horizon * k / self.p))


@dataclass(frozen=True, eq=False)
class VersionSpace:
    members: np.ndarray  # sorted member indices
    fallback: bool = False

    @property
    def size(self) -> int:
        return int(self.members.shape[0])

    def __contains__(self, index: object) -> bool:
        return bool(np.any(self.members == index))


def successor_values(solutions: List[HypothesisSolution]) -> np.ndarray:
    """(N, H + 1, S): game value of every member at every state, zero terminal row."""
    return np.stack([sol.values for sol in solutions])


def squared_bellman_loss(
    data: LevelData, xi_h: np.ndarray, zeta_next: Optional[np.ndarray]
) -> float:
    """
    sum over stored transitions of [xi_h(x, a, b) - r - zeta_{h+1}(x', pi_zeta, nu_zeta)]^2,
    with a zero successor when zeta_next is None (last level).
    """
    if len(data) == 0:
        return 0.0
    if zeta_next is None:
        successor = np.zeros(xi_h.shape[0])
    else:
        successor = np.array([solve_matrix_game(zeta_next[x]).value for x in range(zeta_next.shape[0])])
    residual = xi_h[data.x, data.a, data.b] - data.r - successor[data.x_next]
    return float(np.sum(residual**2))


def bellman_loss_table(
    family: FiniteValueFamily, successors: np.ndarray, buffer: ReplayBuffer
) -> np.ndarray:
    """loss[h, g, f] = E_{B_h}(g_h, f_{h+1}) for every pair of members."""
    H, N = family.horizon, family.size
    loss = np.zeros((H, N, N))
    for h in range(H):
        data = buffer.level(h)
        if len(data) == 0:
            continue
        pred = family.tables[:, h, data.x, data.a, data.b]  # (N, n)
        target = data.r[None, :] + successors[:, h + 1, data.x_next]  # (N, n)
        loss[h] = np.sum((pred[:, None, :] - target[None, :, :]) ** 2, axis=2)
    return loss


class LossAccumulator:
    """Running loss[h, g, f], updated with one transition per level per episode."""

    def __init__(self, family: FiniteValueFamily, successors: np.ndarray):
        self.tables = family.tables
        self.successors = successors
        self.loss = np.zeros((family.horizon, family.size, family.size))

    def add(self, episode: EpisodeRecord) -> None:
        for step in episode.steps:
            pred = self.tables[:, step.h, step.x, step.a, step.b]
            target = step.r + self.successors[:, step.h + 1, step.x_next]
            self.loss[step.h] += (pred[:, None] - target[None, :]) ** 2


def eliminate(loss: np.ndarray, beta: float) -> VersionSpace:
    """
    Keep f iff E(f_h, f_{h+1}) <= min_g E(g_h, f_{h+1}) + beta at every level.
    An empty result falls back to the member with the smallest total excess.
    """
    n = loss.shape[1]
    idx = np.arange(n)
    excess = loss[:, idx, idx] - loss.min(axis=1)  # (H, N)
    keep = np.all(excess <= beta, axis=0)
    if keep.any():
        return VersionSpace(np.flatnonzero(keep))
    fallback = int(np.argmin(excess.sum(axis=0)))
    log_warning(
        f"Version space emptied at beta={beta:.4g}; keeping member {fallback} (theory violation)."
    )
    return VersionSpace(np.array([fallback]), fallback=True)


def update_version_space(
    family: FiniteValueFamily,
    buffer: ReplayBuffer,
    beta: float,
    solutions: Optional[List[HypothesisSolution]] = None,
) -> VersionSpace:
    if beta < 0:
        raise ValueError("beta must be non-negative")
    solutions = solutions if solutions is not None else solve_family(family)
    return eliminate(bellman_loss_table(family, successor_values(solutions), buffer), beta)


@dataclass(frozen=True, eq=False)
class Selection:
    index: int
    value: float
    pi: StochasticPolicy
    nu_hat: StochasticPolicy


def select_optimistic(
    vspace: VersionSpace,
    family: FiniteValueFamily,
    solutions: List[HypothesisSolution],
    x1: int,
) -> Selection:
    """argmax over survivors of f_1(x1, pi_f, nu_f); ties to the lowest index."""
    if vspace.size == 0:
        raise ValueError("cannot select from an empty version space")
    values = np.array([solutions[i].values[0, x1] for i in vspace.members])
    index = int(vspace.members[int(np.argmax(values))])
    pi = solutions[index].pi
    nu_hat = induced_best_response(family.member(index), pi)
    return Selection(index, float(solutions[index].values[0, x1]), pi, nu_hat)


@dataclass(frozen=True, eq=False)
class DecompositionAudit:
    """Per-level terms of delta_h <= delta_{h+1} - zeta_h + gamma_h - gamma_hat_h + eps_h."""

    delta: np.ndarray  # (H + 1,)
    zeta: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray
    epsilon: np.ndarray

    @property
    def slack(self) -> np.ndarray:
        rhs = self.delta[1:] - self.zeta + self.gamma - self.gamma_hat + self.epsilon
        return rhs - self.delta[:-1]

    def dump(self) -> str:
        lines = ["h delta zeta gamma gamma_hat epsilon slack"]
        for h, s in enumerate(self.slack):
            lines.append(
                f"{h} {self.delta[h]:.12g} {self.zeta[h]:.12g} {self.gamma[h]:.12g} "
                f"{self.gamma_hat[h]:.12g} {self.epsilon[h]:.12g} {s:.12g}"
            )
        return "\n".join(lines)


def decomposition_audit(
    episode: EpisodeRecord,
    f: np.ndarray,
    pi: StochasticPolicy,
    nu_hat: StochasticPolicy,
    game: MarkovGame,
    nu_realized: StochasticPolicy,
    tol: float = IDENTITY_TOL,
) -> DecompositionAudit:
    """
    Recompute every term of the one-step regret decomposition at the realized
    (x_h, a_h, b_h) from the true model and assert the inequality. Harness-side
    only; the learner has no access to these expectations.
    """
    H = game.horizon
    q_true, v_true = policy_pair_tables(game, pi, nu_realized)
    # optimistic value of f^k under (pi^k, nu_hat^k); zero terminal row
    v_f = np.zeros((H + 1, game.n_states))
    v_f[:H] = np.einsum("hxa,hxab,hxb->hx", pi.probs, f, nu_hat.probs)

    delta = np.zeros(H + 1)
    zeta, gamma, gamma_hat, epsilon = (np.zeros(H) for _ in range(4))
    for step in episode.steps:
        h, x, a, b = step.h, step.x, step.a, step.b
        kernel = game.transitions[h, x, a, b]
        gap_next = v_f[h + 1] - v_true[h + 1]
        delta[h] = v_f[h, x] - v_true[h, x]
        zeta[h] = gap_next[step.x_next] - kernel @ gap_next
        gamma[h] = pi.probs[h, x] @ f[h, x, :, b] - f[h, x, a, b]
        gamma_hat[h] = pi.probs[h, x] @ q_true[h, x] @ nu_realized.probs[h, x] - q_true[h, x, a, b]
        epsilon[h] = f[h, x, a, b] - step.r - kernel @ v_f[h + 1]
    audit = DecompositionAudit(delta, zeta, gamma, gamma_hat, epsilon)
    if np.any(audit.slack < -tol):
        raise AuditFailure("Regret decomposition inequality violated", audit.dump())
    return audit


def buffer_audit(
    buffer: ReplayBuffer,
    k: int,
    accumulator: LossAccumulator,
    family: FiniteValueFamily,
    successors: np.ndarray,
    tol: float = IDENTITY_TOL,
) -> None:
    """
    After episode k every level holds exactly k transitions, and the running
    loss table equals the one recomputed from the buffer.
    """
    sizes = buffer.level_sizes()
    if sizes != [k] * buffer.horizon:
        raise AuditFailure(f"replay buffer holds {sizes} transitions per level after episode {k}")
    batch = bellman_loss_table(family, successors, buffer)
    drift = float(np.max(np.abs(batch - accumulator.loss))) if batch.size else 0.0
    if drift > tol * max(1.0, float(np.max(np.abs(batch)))):
        raise AuditFailure(f"running Bellman losses drift {drift:.3g} from the buffer after episode {k}")


@dataclass
class OnemgRun:
    trace: RegretTrace
    beta: float
    audits: List[DecompositionAudit] = field(default_factory=list)
    buffer: Optional[ReplayBuffer] = None


def run(
    game: MarkovGame,
    family: FiniteValueFamily,
    config: OnemgConfig,
    opponent: Opponent,
    solution: Optional[GameSolution] = None,
    solutions: Optional[List[HypothesisSolution]] = None,
) -> OnemgRun:
    family.check_fits(game)
    solution = solution or ne_value_iteration(game)
    solutions = solutions if solutions is not None else solve_family(family)
    beta = config.resolve_beta(family)
    v_star = solution.value
    x1 = game.initial_state
    truth = family.q_star_index
    rngs = RngFactory(config.seed, config.experiment)

    successors = successor_values(solutions)
    accumulator = LossAccumulator(family, successors)
    buffer = ReplayBuffer(game.horizon)
    vspace = VersionSpace(np.arange(family.size))
    trace = RegretTrace()
    audits: List[DecompositionAudit] = []
    cum_regret = 0.0
    fallbacks = 0
    optimism_violations = 0
    retained = True

    log_info(f"ONEMG: {config.episodes} episodes, |F|={family.size}, beta={beta:.4g}")
    for k in progress(range(1, config.episodes + 1), desc="ONEMG episodes", total=config.episodes):
        selection = select_optimistic(vspace, family, solutions, x1)
        chosen = selection.index
        optimism_gap = selection.value - v_star
        if truth is not None and truth in vspace and optimism_gap < -IDENTITY_TOL:
            optimism_violations += 1

        nu = opponent.policy(k, selection.pi)
        increment = v_star - evaluate_policy_pair(game, selection.pi, nu)
        cum_regret += increment

        episode = sample_episode(game, selection.pi, nu, rngs.episode("onemg", k))
        if config.audit:
            audits.append(
                decomposition_audit(
                    episode, family.member(chosen), selection.pi, selection.nu_hat, game, nu
                )
            )
        accumulator.add(episode)
        buffer.append(episode)
        if config.audit:
            buffer_audit(buffer, k, accumulator, family, successors)
        vspace = eliminate(accumulator.loss, beta)
        fallbacks += int(vspace.fallback)
        survives = None if truth is None else truth in vspace
        retained = retained and survives is not False

        trace.append(
            k=k,
            chosen=chosen,
            regret_increment=increment,
            cum_regret=cum_regret,
            vspace_size=vspace.size,
            optimism_gap=optimism_gap,
            fallback_flag=vspace.fallback,
            truth_survives=survives,
        )

    trace.summary = {
        "algorithm": "onemg",
        "seed": config.seed,
        "episodes": config.episodes,
        "beta": beta,
        "v_star": v_star,
        "final_cum_regret": cum_regret,
        "truth_retained": retained if truth is not None else None,
        "fallback_events": fallbacks,
        "optimism_violations": optimism_violations,
        "audit_min_slack": min((float(a.slack.min()) for a in audits), default=None),
    }
    return OnemgRun(trace, beta, audits, buffer)


def lowest_non_nash_policy(
    game: MarkovGame,
    solutions: List[HypothesisSolution],
    solution: GameSolution,
    tol: float = 1e-6,
) -> Tuple[int, StochasticPolicy]:
    """Lowest-index induced max-min policy that the best response exploits."""
    for index, sol in enumerate(solutions):
        _, value = best_response_value_iteration(game, sol.pi, Side.P1)
        if value < solution.value - tol:
            return index, sol.pi
    raise ValueError("every induced policy is unexploitable; no non-Nash baseline exists")


def fixed_policy_regret(
    game: MarkovGame,
    policy: StochasticPolicy,
    opponent: Opponent,
    episodes: int,
    solution: GameSolution,
) -> np.ndarray:
    """Cumulative regret of always playing `policy` against the same opponent."""
    increments = [
        solution.value - evaluate_policy_pair(game, policy, opponent.policy(k, policy))
        for k in range(1, episodes + 1)
    ]
    return np.cumsum(increments)
