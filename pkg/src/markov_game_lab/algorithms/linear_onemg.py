# src/markov_game_lab/algorithms/linear_onemg.py
"""
Optimistic Nash elimination with linear Q-functions.

Per level h the learner keeps Lambda_h = I + sum phi phi' and the observed
(phi, r, x') triples. Planning runs backwards: ridge targets r + V_{h+1}(x')
use the plan's own V_{h+1}, theta_h is pushed to the optimistic edge of its
confidence set, Q_h is clamped to the value range and V_h comes from the
per-state matrix games.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from markov_game_lab.algorithms.buffers import LinearRegretTrace
from markov_game_lab.algorithms.opponents import Opponent
from markov_game_lab.games.markov_game import (
    EpisodeRecord,
    GameSolution,
    MarkovGame,
    StochasticPolicy,
)
from markov_game_lab.games.matrix_game import solve_matrix_game
from markov_game_lab.games.sampling import sample_episode
from markov_game_lab.games.solvers import evaluate_policy_pair, ne_value_iteration
from markov_game_lab.hypothesis.families import LinearValueFamily
from markov_game_lab.utils.constants import IDENTITY_TOL, NORM_TOL, PlannerMode, Side
from markov_game_lab.utils.exceptions import AuditFailure, ConfigurationError, SolverError
from markov_game_lab.utils.logger import log_info, log_warning, progress
from markov_game_lab.utils.rng import RngFactory

FEASIBILITY_TOL = 1e-8
MAX_SWEEPS = 4


@dataclass(frozen=True)
class LinearConfig:
    episodes: int
    mode: PlannerMode = PlannerMode.DIAG_EXACT
    c_beta: float = 1.0
    c_width: float = 1.0
    p: float = 0.05
    restarts: int = 16
    directions: int = 8
    n_jobs: int = 1
    seed: int = 0
    experiment: str = "linear"

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if self.restarts < 1 or self.directions < 0:
            raise ValueError("search needs at least one restart and a non-negative direction count")

    def beta(self, dim: int, horizon: int) -> float:
        """beta = C_beta * sqrt(d) * log(H K / p)."""
        k = max(self.episodes, 1)
        return self.c_beta * math.sqrt(dim) * math.log(horizon * k / self.p)

    def width(self, dim: int, horizon: int) -> float:
        """Radius C_width * H * beta of the Lambda-norm confidence set."""
        return self.c_width * horizon * self.beta(dim, horizon)


class LinearLearnerState:
    def __init__(self, family: LinearValueFamily):
        self.features = family.features
        H, d = family.features.shape[0], family.dim
        self.gram = np.stack([np.eye(d) for _ in range(H)])
        self._phi: List[List[np.ndarray]] = [[] for _ in range(H)]
        self._r: List[List[float]] = [[] for _ in range(H)]
        self._x_next: List[List[int]] = [[] for _ in range(H)]

    @property
    def horizon(self) -> int:
        return int(self.gram.shape[0])

    @property
    def dim(self) -> int:
        return int(self.gram.shape[1])

    def add(self, episode: EpisodeRecord) -> None:
        for step in episode.steps:
            phi = self.features[step.h, step.x, step.a, step.b]
            self.gram[step.h] += np.outer(phi, phi)
            self._phi[step.h].append(phi)
            self._r[step.h].append(step.r)
            self._x_next[step.h].append(step.x_next)

    def level(self, h: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Phi (n, d), r (n,), x' (n,)) observed at level h."""
        if not self._phi[h]:
            return np.zeros((0, self.dim)), np.zeros(0), np.zeros(0, dtype=int)
        return (
            np.stack(self._phi[h]),
            np.array(self._r[h], dtype=float),
            np.array(self._x_next[h], dtype=int),
        )


def ridge_update(state: LinearLearnerState, h: int, v_next: np.ndarray) -> np.ndarray:
    """w_h = Lambda_h^{-1} sum phi [r + V_{h+1}(x')], by Cholesky solve."""
    phi, r, x_next = state.level(h)
    rhs = phi.T @ (r + v_next[x_next]) if len(r) else np.zeros(state.dim)
    return cho_solve(cho_factor(state.gram[h]), rhs)


@dataclass(frozen=True, eq=False)
class OptimisticPlan:
    theta: np.ndarray  # (H, d)
    w: np.ndarray  # (H, d)
    q: np.ndarray  # (H, S, A1, A2), clamped
    values: np.ndarray  # (H + 1, S)
    pi: StochasticPolicy
    objective: float
    restart: int = 0


def _solve_level(q_h: np.ndarray, h: int) -> Tuple[np.ndarray, np.ndarray]:
    S, A = q_h.shape[0], q_h.shape[1]
    values, pi = np.zeros(S), np.zeros((S, A))
    for x in range(S):
        try:
            sol = solve_matrix_game(q_h[x])
        except SolverError as err:
            raise err.at(h, x) from err
        values[x], pi[x] = sol.value, sol.row_policy
    return values, pi


class _LevelPlanner:
    """Shared backward-induction bookkeeping for both planning modes."""

    def __init__(self, state: LinearLearnerState, value_bounds: Tuple[float, float]):
        self.state = state
        self.lo, self.hi = value_bounds
        H, S, A = state.features.shape[:3]
        self.theta = np.zeros((H, state.dim))
        self.w = np.zeros((H, state.dim))
        self.q = np.zeros(state.features.shape[:4])
        self.values = np.zeros((H + 1, S))
        self.pi = np.zeros((H, S, A))

    def fork(self) -> "_LevelPlanner":
        twin = _LevelPlanner.__new__(_LevelPlanner)
        twin.state, twin.lo, twin.hi = self.state, self.lo, self.hi
        for name in ("theta", "w", "q", "values", "pi"):
            setattr(twin, name, getattr(self, name).copy())
        return twin

    def clamp(self, h: int, theta_h: np.ndarray) -> np.ndarray:
        steps = self.state.horizon - h
        return np.clip(self.state.features[h] @ theta_h, steps * self.lo, steps * self.hi)

    def commit(self, h: int, w_h: np.ndarray, theta_h: np.ndarray) -> None:
        self.w[h], self.theta[h] = w_h, theta_h
        self.q[h] = self.clamp(h, theta_h)
        self.values[h], self.pi[h] = _solve_level(self.q[h], h)

    def finish(self, x1: int, restart: int = 0) -> OptimisticPlan:
        return OptimisticPlan(
            self.theta,
            self.w,
            self.q,
            self.values,
            StochasticPolicy(self.pi, Side.P1),
            float(self.values[0, x1]),
            restart,
        )


def greedy_plan(state: LinearLearnerState, x1: int, value_bounds: Tuple[float, float]) -> OptimisticPlan:
    """theta = w at every level; always feasible."""
    planner = _LevelPlanner(state, value_bounds)
    for h in range(state.horizon - 1, -1, -1):
        w_h = ridge_update(state, h, planner.values[h + 1])
        planner.commit(h, w_h, w_h)
    return planner.finish(x1)


def _diag_exact(
    state: LinearLearnerState, x1: int, width: float, value_bounds: Tuple[float, float]
) -> OptimisticPlan:
    planner = _LevelPlanner(state, value_bounds)
    for h in range(state.horizon - 1, -1, -1):
        gram = state.gram[h]
        diag = np.diag(gram)
        if np.any(np.abs(gram - np.diag(diag)) > NORM_TOL):
            raise ConfigurationError(
                f"diag-exact planning needs diagonal Gram matrices; level {h} is not diagonal "
                "(use linear.mode=search for general features)"
            )
        w_h = ridge_update(state, h, planner.values[h + 1])
        planner.commit(h, w_h, w_h + width / np.sqrt(diag))
    return planner.finish(x1)


def _ball_point(rng: np.random.Generator, dim: int, radius: float = 1.0) -> np.ndarray:
    raw = rng.standard_normal(dim)
    return raw / np.linalg.norm(raw) * radius


class _EllipsoidSearch:
    """
    Plans parameterized by whitened offsets: theta_h = w_h + width * L_h^{-T} u_h
    with ||u_h|| <= 1 and Lambda_h = L_h L_h', so every u inside the unit ball
    is a feasible theta_h whatever w_h the levels below produce.
    """

    def __init__(self, state: LinearLearnerState, x1: int, width: float):
        self.state = state
        self.x1 = x1
        self.width = width
        self.chol = [cholesky(state.gram[h], lower=True) for h in range(state.horizon)]

    def shift(self, h: int, u: np.ndarray) -> np.ndarray:
        return self.width * solve_triangular(self.chol[h].T, u, lower=False)

    def descend(self, planner: _LevelPlanner, units: np.ndarray, start: int) -> _LevelPlanner:
        """Re-plans levels start..0; levels above start stay as committed."""
        for h in range(start, -1, -1):
            w_h = ridge_update(self.state, h, planner.values[h + 1])
            planner.commit(h, w_h, w_h + self.shift(h, units[h]))
        return planner

    def objective(self, planner: _LevelPlanner) -> float:
        return float(planner.values[0, self.x1])


def _search_restart(
    state: LinearLearnerState,
    x1: int,
    width: float,
    value_bounds: Tuple[float, float],
    restart: int,
    directions: int,
    rng: np.random.Generator,
) -> OptimisticPlan:
    """
    Block coordinate ascent on V_1(x1), one level's theta_h at a time inside
    its ellipsoid with the other levels fixed, sweeping backwards until a
    sweep brings no improvement. Restart 0 starts from theta = w, the others
    from uniform points of the ellipsoids. Each step tries `directions`
    boundary points of level h and keeps a candidate only if it raises the
    objective, so a run never ends below its start.
    """
    search = _EllipsoidSearch(state, x1, width)
    H, d = state.horizon, state.dim
    units = np.zeros((H, d))
    if restart > 0:
        for h in range(H):
            units[h] = _ball_point(rng, d, rng.uniform() ** (1.0 / d))
    planner = search.descend(_LevelPlanner(state, value_bounds), units, H - 1)
    best = search.objective(planner)

    for _ in range(MAX_SWEEPS):
        improved = False
        for h in range(H - 1, -1, -1):
            for _ in range(directions):
                trial = units.copy()
                trial[h] = _ball_point(rng, d)
                candidate = search.descend(planner.fork(), trial, h)
                score = search.objective(candidate)
                if score > best + NORM_TOL:
                    units, planner, best = trial, candidate, score
                    improved = True
        if not improved:
            break
    return planner.finish(x1, restart)


def plan_optimistic(
    state: LinearLearnerState,
    x1: int,
    mode: PlannerMode,
    width: float,
    value_bounds: Tuple[float, float],
    restarts: int = 16,
    directions: int = 8,
    rngs: Optional[RngFactory] = None,
    k: int = 0,
    n_jobs: int = 1,
) -> OptimisticPlan:
    """
    diag-exact: every coordinate at its upper bound |theta_i - w_i| sqrt(lambda_i) <= width,
    exact for diagonal Gram matrices since the matrix-game value is monotone
    in the payoffs. search: best of `restarts` coordinate-ascent runs, restart 0
    starting from the greedy plan; a heuristic lower bound on the optimum.
    """
    if mode is PlannerMode.DIAG_EXACT:
        return _diag_exact(state, x1, width, value_bounds)
    rngs = rngs or RngFactory(0, "linear")
    args = [
        (state, x1, width, value_bounds, r, directions, rngs.episode(f"planner-{r}", k))
        for r in range(restarts)
    ]
    if n_jobs == 1:
        plans = [_search_restart(*a) for a in args]
    else:
        plans = Parallel(n_jobs=n_jobs)(delayed(_search_restart)(*a) for a in args)
    return max(plans, key=lambda plan: (plan.objective, -plan.restart))


def confidence_radius(state: LinearLearnerState, h: int, theta_h: np.ndarray, w_h: np.ndarray) -> float:
    """||theta_h - w_h||_{Lambda_h}."""
    diff = theta_h - w_h
    return float(math.sqrt(max(diff @ state.gram[h] @ diff, 0.0)))


def theta_star_feasible(
    state: LinearLearnerState, theta_star: np.ndarray, v_star: np.ndarray, width: float
) -> bool:
    """theta* inside every level's ellipsoid around the ridge fit of V* targets."""
    for h in range(state.horizon):
        w_star = ridge_update(state, h, v_star[h + 1])
        if confidence_radius(state, h, theta_star[h], w_star) > width + FEASIBILITY_TOL:
            return False
    return True


def elliptic_potential_check(phis: np.ndarray, tol: float = IDENTITY_TOL) -> Tuple[float, float, float]:
    """
    (log det Lambda_T, sum phi_t' Lambda_{t-1}^{-1} phi_t, 2 log det Lambda_T)
    with Lambda_0 = I; the three must be non-decreasing.
    """
    phis = np.asarray(phis, dtype=float)
    if phis.size == 0:
        return 0.0, 0.0, 0.0
    norms = np.linalg.norm(phis, axis=1)
    if np.any(norms > 1.0 + NORM_TOL):
        raise ValueError(f"feature norm {norms.max():.6g} exceeds 1")
    gram = np.eye(phis.shape[1])
    mid = 0.0
    for phi in phis:
        mid += float(phi @ np.linalg.solve(gram, phi))
        gram += np.outer(phi, phi)
    _, logdet = np.linalg.slogdet(gram)
    lhs, rhs = float(logdet), 2.0 * float(logdet)
    if lhs > mid + tol or mid > rhs + tol:
        raise AuditFailure(
            "Elliptical potential inequalities violated", {"lhs": lhs, "mid": mid, "rhs": rhs}
        )
    return lhs, mid, rhs


@dataclass
class LinearRun:
    trace: LinearRegretTrace
    beta: float
    width: float
    potentials: List[Tuple[float, float, float]]


def run_linear(
    game: MarkovGame,
    features: LinearValueFamily,
    config: LinearConfig,
    opponent: Opponent,
    solution: Optional[GameSolution] = None,
) -> LinearRun:
    features.check_fits(game)
    solution = solution or ne_value_iteration(game)
    H, d = game.horizon, features.dim
    beta, width = config.beta(d, H), config.width(d, H)
    bounds = game.reward_range
    x1 = game.initial_state
    v_star = solution.value
    theta_star = features.true_parameters(solution.q_star)
    rngs = RngFactory(config.seed, config.experiment)
    state = LinearLearnerState(features)
    trace = LinearRegretTrace()
    cum_regret = 0.0
    optimism_violations = 0

    log_info(f"Linear ONEMG ({config.mode.value}): {config.episodes} episodes, d={d}, width={width:.4g}")
    for k in progress(range(1, config.episodes + 1), desc="Linear episodes", total=config.episodes):
        plan = plan_optimistic(
            state, x1, config.mode, width, bounds,
            config.restarts, config.directions, rngs, k, config.n_jobs,
        )
        greedy = greedy_plan(state, x1, bounds)
        feasible = theta_star_feasible(state, theta_star, solution.v_star, width)
        optimism_gap = plan.objective - v_star
        if config.mode is PlannerMode.DIAG_EXACT and feasible and optimism_gap < -FEASIBILITY_TOL:
            optimism_violations += 1
            log_warning(f"Episode {k}: planned value {plan.objective:.6g} below V* with theta* feasible.")

        nu = opponent.policy(k, plan.pi)
        increment = v_star - evaluate_policy_pair(game, plan.pi, nu)
        cum_regret += increment
        state.add(sample_episode(game, plan.pi, nu, rngs.episode("linear", k)))

        trace.append(
            k=k,
            regret_increment=increment,
            cum_regret=cum_regret,
            planned_value=plan.objective,
            optimism_gap=optimism_gap,
            theta_star_feasible=feasible,
            greedy_value=greedy.objective,
        )

    potentials = [elliptic_potential_check(state.level(h)[0]) for h in range(H)] if config.episodes else []
    trace.summary = {
        "algorithm": "linear",
        "mode": config.mode.value,
        "seed": config.seed,
        "episodes": config.episodes,
        "beta": beta,
        "width": width,
        "v_star": v_star,
        "final_cum_regret": cum_regret,
        "theta_star_feasible_fraction": float(np.mean(trace.column("theta_star_feasible"))) if len(trace) else None,
        "optimism_violations": optimism_violations,
    }
    return LinearRun(trace, beta, width, potentials)
