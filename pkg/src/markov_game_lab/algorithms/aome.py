# src/markov_game_lab/algorithms/aome.py
"""
Alternate optimistic model elimination (coordinated setting).

Each round picks the most optimistic surviving model for P1, the model
most pessimistic about that policy for P2, rolls the pair out in the true
game and either certifies it or locates the level whose Bellman error is
large and eliminates every model with a large witnessed misfit there.

The exact diagnostics below (Bellman error, witnessed misfit, the
simulation-lemma identity) need the true model and are harness-side only.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from markov_game_lab.algorithms.buffers import AomeRoundLog, LevelData, ReplayBuffer
from markov_game_lab.games.markov_game import (
    EpisodeRecord,
    GameSolution,
    MarkovGame,
    StochasticPolicy,
    swap_players,
)
from markov_game_lab.games.sampling import sample_returns
from markov_game_lab.games.solvers import (
    best_response_value_iteration,
    evaluate_policy_pair,
    ne_value_iteration,
    occupancy_measures,
    policy_pair_tables,
)
from markov_game_lab.hypothesis.families import ModelFamily, TestFunctionFamily
from markov_game_lab.utils.constants import IDENTITY_TOL, Side, SuccessorLevel
from markov_game_lab.utils.logger import log_info, log_warning, progress
from markov_game_lab.utils.rng import RngFactory


@dataclass(frozen=True)
class TheoryConstants:
    phi: float
    n1: int
    n: int


def theory_defaults(
    epsilon: float,
    kappa: float,
    horizon: int,
    witness_rank: float,
    n_actions: int,
    rounds: int,
    n_models: int,
    n_tests: int,
    p: float,
    c: float = 1.0,
) -> TheoryConstants:
    """
    phi = kappa eps / (100 H sqrt(W)), n1 = C H^2 log(H T / p) / eps^2,
    n = C H^2 W |A| log(T |M| |G| / p) / (kappa eps)^2.
    """
    phi = kappa * epsilon / (100.0 * horizon * math.sqrt(witness_rank))
    n1 = c * horizon**2 * math.log(horizon * rounds / p) / epsilon**2
    n = (
        c * horizon**2 * witness_rank * n_actions
        * math.log(rounds * n_models * n_tests / p) / (kappa * epsilon) ** 2
    )
    return TheoryConstants(phi, max(1, math.ceil(n1)), max(1, math.ceil(n)))


@dataclass(frozen=True)
class AomeConfig:
    epsilon: float = 0.1
    p: float = 0.05
    kappa: float = 1.0
    phi: Optional[float] = None
    n1: int = 500
    n: int = 500
    max_rounds: int = 50
    witness_rank: float = 1.0
    successor_level: SuccessorLevel = SuccessorLevel.NEXT
    order: Side = Side.P1
    theory_constants: bool = False
    c: float = 1.0
    seed: int = 0
    experiment: str = "aome"

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.phi is not None and self.phi <= 0:
            raise ValueError("phi must be positive")
        if self.n1 < 1 or self.n < 1 or self.max_rounds < 1:
            raise ValueError("n1, n and max_rounds must be at least 1")

    def resolve(self, game: MarkovGame, models: ModelFamily, tests: TestFunctionFamily) -> TheoryConstants:
        """Desk defaults (phi = kappa eps / (10 H)) unless theory constants are requested."""
        H = game.horizon
        if self.theory_constants:
            theory = theory_defaults(
                self.epsilon, self.kappa, H, self.witness_rank, game.n_actions1,
                self.max_rounds, models.size, tests.size, self.p, self.c,
            )
            return TheoryConstants(self.phi or theory.phi, theory.n1, theory.n)
        phi = self.phi if self.phi is not None else self.kappa * self.epsilon / (10.0 * H)
        return TheoryConstants(phi, self.n1, self.n)


def model_nash(model: MarkovGame) -> GameSolution:
    return ne_value_iteration(model)


@dataclass(frozen=True, eq=False)
class Alternation:
    m1: int
    pi: StochasticPolicy
    m2: int
    nu: StochasticPolicy


def alternate_optimism(
    models: ModelFamily, survivors: np.ndarray, nash: List[GameSolution]
) -> Alternation:
    """
    M1 = argmax over survivors of the model's Nash value, pi = pi^{M1};
    M2 = argmin over survivors of the best-response value of pi inside the
    model, nu = that best response in M2. Ties go to the lowest index.
    """
    if len(survivors) == 0:
        raise ValueError("cannot alternate over an empty model version space")
    m1 = int(survivors[int(np.argmax([nash[i].value for i in survivors]))])
    pi = nash[m1].pi_star
    responses = [best_response_value_iteration(models.members[i], pi, Side.P1) for i in survivors]
    pick = int(np.argmin([value for _, value in responses]))
    return Alternation(m1, pi, int(survivors[pick]), responses[pick][0])


@dataclass(frozen=True, eq=False)
class RolloutBatch:
    episodes: List[EpisodeRecord]
    returns: np.ndarray

    @property
    def value(self) -> float:
        return float(self.returns.mean())

    @property
    def stderr(self) -> float:
        n = len(self.returns)
        return float(self.returns.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def buffer(self, horizon: int) -> ReplayBuffer:
        buffer = ReplayBuffer(horizon)
        for episode in self.episodes:
            buffer.append(episode)
        return buffer


def estimate_value(
    game: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    n1: int,
    rng: np.random.Generator,
) -> RolloutBatch:
    """V_hat = mean return of n1 independent episodes; `.value` on the result."""
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    episodes, returns = sample_returns(game, pi, nu, n1, rng)
    return RolloutBatch(episodes, returns)


def termination_test(
    v_hat: float,
    m1: MarkovGame,
    m2: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    epsilon: float,
) -> bool:
    gaps = (abs(v_hat - evaluate_policy_pair(m1, pi, nu)), abs(v_hat - evaluate_policy_pair(m2, pi, nu)))
    return max(gaps) <= epsilon / 2


def _successor_values(v: np.ndarray, h: int, successor_level: SuccessorLevel) -> np.ndarray:
    if successor_level is SuccessorLevel.NEXT:
        return v[h + 1]
    return v[h]


def empirical_bellman_error(
    rollouts: ReplayBuffer,
    model: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    h: int,
    successor_level: SuccessorLevel = SuccessorLevel.NEXT,
) -> float:
    """
    mean over rollouts of Q^{pi,nu}_{M,h}(x, a, b) - r - V^{pi,nu}_{M,h+1}(x').
    With SuccessorLevel.SAME the successor is evaluated with the level-h tables.
    """
    data = rollouts.level(h)
    if len(data) == 0:
        return 0.0
    q, v = policy_pair_tables(model, pi, nu)
    successor = _successor_values(v, h, successor_level)
    return float(np.mean(q[h][data.x, data.a, data.b] - data.r - successor[data.x_next]))


@dataclass(frozen=True, eq=False)
class ViolationSite:
    h: int
    inconclusive: bool
    errors: np.ndarray  # (2, H): |L_hat| for M1 and M2


def locate_violation(
    rollouts: ReplayBuffer,
    m1: MarkovGame,
    m2: MarkovGame,
    pi: StochasticPolicy,
    nu: StochasticPolicy,
    epsilon: float,
    successor_level: SuccessorLevel = SuccessorLevel.NEXT,
) -> ViolationSite:
    """
    Smallest h with max_i |L_hat(M_i, h)| >= eps / (4H). When no level
    qualifies the largest residual is used and the round is inconclusive;
    a zero threshold carries no localization and also takes the largest.
    """
    H = m1.horizon
    errors = np.abs(
        [
            [empirical_bellman_error(rollouts, m, pi, nu, h, successor_level) for h in range(H)]
            for m in (m1, m2)
        ]
    )
    worst = errors.max(axis=0)
    threshold = epsilon / (4 * H)
    argmax = int(np.argmax(worst))
    if threshold <= 0:
        return ViolationSite(argmax, False, errors)
    hits = np.flatnonzero(worst >= threshold)
    if hits.size:
        return ViolationSite(int(hits[0]), False, errors)
    return ViolationSite(argmax, True, errors)


def empirical_model_misfit(data: LevelData, model: MarkovGame, tests: TestFunctionFamily, h: int) -> float:
    """sup_g mean over the batch of E_{M}[g(x, a, b, r, x')] - g(x, a, b, r_obs, x'_obs)."""
    if len(data) == 0:
        return 0.0
    expected = tests.expected_under(model, h)[:, data.x, data.a, data.b]
    observed = tests.observed(data.x, data.a, data.b, data.r, data.x_next)
    return float(np.max(np.mean(expected - observed, axis=1)))


@dataclass(frozen=True, eq=False)
class RollIn:
    """(pi^{M1}, nu^{M2}_{pi^{M1}}): the pair whose true occupancy the exact diagnostics use."""

    pi: StochasticPolicy
    nu: StochasticPolicy


def roll_in_pair(m1: MarkovGame, m2: MarkovGame) -> RollIn:
    pi = model_nash(m1).pi_star
    nu, _ = best_response_value_iteration(m2, pi, Side.P1)
    return RollIn(pi, nu)


def exact_witness_misfit(
    roll_in: RollIn, model: MarkovGame, h: int, tests: TestFunctionFamily, true_game: MarkovGame
) -> float:
    """sup_g E_{d_h}[E_M g - E_true g], d_h the true level-h occupancy of the roll-in pair."""
    occ = occupancy_measures(true_game, roll_in.pi, roll_in.nu)[h]
    diff = tests.expected_under(model, h) - tests.expected_under(true_game, h)
    return float(np.max(np.einsum("xab,gxab->g", occ, diff)))


def exact_bellman_error(
    roll_in: RollIn,
    model: MarkovGame,
    h: int,
    true_game: MarkovGame,
    successor_level: SuccessorLevel = SuccessorLevel.NEXT,
) -> float:
    """E_{d_h}[Q^{pi,nu}_{M,h} - r - E_true V^{pi,nu}_{M,h+1}(x')] in the true game."""
    occ = occupancy_measures(true_game, roll_in.pi, roll_in.nu)[h]
    q, v = policy_pair_tables(model, roll_in.pi, roll_in.nu)
    target = true_game.rewards[h] + true_game.transitions[h] @ _successor_values(v, h, successor_level)
    return float(np.sum(occ * (q[h] - target)))


def simulation_lemma_check(roll_in: RollIn, model: MarkovGame, true_game: MarkovGame) -> float:
    """|Q_M(x1, pi, nu) - V^{pi,nu}(x1) - sum_h L(h)|; zero up to round-off."""
    x1 = true_game.initial_state
    _, v_model = policy_pair_tables(model, roll_in.pi, roll_in.nu)
    lhs = v_model[0, x1] - evaluate_policy_pair(true_game, roll_in.pi, roll_in.nu)
    rhs = sum(exact_bellman_error(roll_in, model, h, true_game) for h in range(true_game.horizon))
    return float(abs(lhs - rhs))


def swap_tests(tests: TestFunctionFamily) -> TestFunctionFamily:
    """Test functions for the player-swapped game (actions transposed, reward negated)."""
    return TestFunctionFamily(
        np.swapaxes(tests.tables, 2, 3).copy(), -tests.reward_weights, tests.names
    )


@dataclass
class TerminationRecord:
    status: str  # terminated | round_cap | empty_version_space
    rounds: int
    side: Side
    policy: Optional[StochasticPolicy] = None
    opponent: Optional[StochasticPolicy] = None
    v_hat: Optional[float] = None
    stderr: Optional[float] = None
    certified_gap: Optional[float] = None
    exact_gap: Optional[float] = None
    certified: Optional[bool] = None
    survivors: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "rounds": self.rounds,
            "side": self.side.value,
            "v_hat": self.v_hat,
            "stderr": self.stderr,
            "certified_gap": self.certified_gap,
            "exact_gap": self.exact_gap,
            "certified": self.certified,
            "survivors": self.survivors,
        }


@dataclass
class AomeRun:
    termination: TerminationRecord
    log: AomeRoundLog
    constants: TheoryConstants


def run_aome(
    game: MarkovGame,
    models: ModelFamily,
    tests: TestFunctionFamily,
    config: AomeConfig,
) -> AomeRun:
    """
    Rounds until termination, the round cap or an empty version space. With
    order=p2 the whole procedure runs on the player-swapped game and models,
    so the certified policy belongs to P2 of the original game.
    """
    if not models.members[0].same_layout(game):
        raise ValueError(f"model layout {models.members[0].shape} does not fit game {game.shape}")
    side = config.order
    if side is Side.P2:
        game = swap_players(game)
        models = ModelFamily(tuple(swap_players(m) for m in models.members), models.names, models.true_index)
        tests = swap_tests(tests)
    constants = config.resolve(game, models, tests)
    rngs = RngFactory(config.seed, config.experiment)
    v_star = ne_value_iteration(game).value
    nash = [model_nash(m) for m in progress(models.members, desc="Model equilibria", total=models.size)]
    survivors = np.arange(models.size)
    truth = models.true_index
    log = AomeRoundLog()
    H = game.horizon

    log_info(
        f"AOME ({side.value}): |M|={models.size}, |G|={tests.size}, eps={config.epsilon}, "
        f"phi={constants.phi:.4g}, n1={constants.n1}, n={constants.n}"
    )
    for round_ in range(1, config.max_rounds + 1):
        if survivors.size == 0:
            log_warning(f"Round {round_}: model version space is empty (theory violation); aborting.")
            record = TerminationRecord("empty_version_space", round_ - 1, side)
            log.summary = {"algorithm": "aome", "seed": config.seed, **record.to_dict()}
            return AomeRun(record, log, constants)

        alt = alternate_optimism(models, survivors, nash)
        m1, m2 = models.members[alt.m1], models.members[alt.m2]
        rollouts = estimate_value(game, alt.pi, alt.nu, constants.n1, rngs.episode("rollouts", round_))
        q1, q2 = evaluate_policy_pair(m1, alt.pi, alt.nu), evaluate_policy_pair(m2, alt.pi, alt.nu)
        truth_present = truth is not None and bool(np.any(survivors == truth))
        bracket: Optional[bool] = None
        if truth_present:
            _, br_value = best_response_value_iteration(game, alt.pi, Side.P1)
            bracket = q1 >= v_star - IDENTITY_TOL and q2 <= br_value + IDENTITY_TOL
            if not bracket:
                log_warning(f"Round {round_}: value bracket violated with the true model present.")
        row = dict(
            round=round_, m1=alt.m1, m2=alt.m2, v_hat=rollouts.value, q_m1=q1, q_m2=q2,
            bracket_holds=bracket, true_model_present=truth_present,
        )

        if termination_test(rollouts.value, m1, m2, alt.pi, alt.nu, config.epsilon):
            log.append(**row, terminated=True, h=None, inconclusive=False, eliminated=0, survivors=int(survivors.size))
            _, br_value = best_response_value_iteration(game, alt.pi, Side.P1)
            exact_gap = v_star - br_value
            record = TerminationRecord(
                "terminated",
                round_,
                side,
                policy=alt.pi,
                opponent=alt.nu,
                v_hat=rollouts.value,
                stderr=rollouts.stderr,
                certified_gap=q1 - q2,
                exact_gap=exact_gap,
                certified=exact_gap <= config.epsilon + 3 * rollouts.stderr,
                survivors=[int(i) for i in survivors],
            )
            if not record.certified:
                log_warning(f"Certified pair misses the eps-gap: exact gap {exact_gap:.6g}.")
            log.summary = {"algorithm": "aome", "seed": config.seed, **record.to_dict()}
            log_info(f"AOME terminated in round {round_} with exact gap {exact_gap:.6g}")
            return AomeRun(record, log, constants)

        site = locate_violation(
            rollouts.buffer(H), m1, m2, alt.pi, alt.nu, config.epsilon, config.successor_level
        )
        if site.inconclusive:
            log_warning(f"Round {round_}: no level reaches eps/(4H); collecting at h={site.h}.")
        batch = estimate_value(game, alt.pi, alt.nu, constants.n, rngs.episode("misfit", round_))
        data = batch.buffer(H).level(site.h)
        misfits = np.array([empirical_model_misfit(data, models.members[i], tests, site.h) for i in survivors])
        kept = survivors[misfits <= constants.phi]
        if truth_present and not np.any(kept == truth):
            log_warning(f"Round {round_}: the true model was eliminated at h={site.h}.")
        log.append(
            **row, terminated=False, h=site.h, inconclusive=site.inconclusive,
            eliminated=int(survivors.size - kept.size), survivors=int(kept.size),
        )
        survivors = kept

    record = TerminationRecord("round_cap", config.max_rounds, side, survivors=[int(i) for i in survivors])
    log_warning(f"AOME hit the round cap ({config.max_rounds}) without terminating.")
    log.summary = {"algorithm": "aome", "seed": config.seed, **record.to_dict()}
    return AomeRun(record, log, constants)
