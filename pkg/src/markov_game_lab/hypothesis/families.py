# src/markov_game_lab/hypothesis/families.py
"""
Finite hypothesis families: Q-tuples, linear feature maps, policies, models
and test functions. Families are immutable and index-addressed; version
spaces elsewhere in the package are arrays of member indices into them.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from markov_game_lab.games.markov_game import MarkovGame, StochasticPolicy
from markov_game_lab.utils.constants import (
    NORM_TOL,
    PRODUCT_EXPANSION_CAP,
    TEST_FUNCTION_BOUND,
    Side,
)
from markov_game_lab.utils.exceptions import GameValidationError
from markov_game_lab.utils.logger import log_warning

Q_STAR_TAG = "q_star"


def policy_tag(policy_index: int) -> str:
    return f"pi:{policy_index}"


def _default_names(prefix: str, n: int) -> Tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FiniteValueFamily:
    """
    Explicit list of complete tuples f = (f_0, ..., f_{H-1}).

    truth_tags maps a member index to what it equals in the true game:
    "q_star", or "pi:<i>" for Q^{pi_i, nu*_{pi_i}} of policy-family member i.
    """

    tables: np.ndarray  # (N, H, S, A1, A2)
    names: Tuple[str, ...] = ()
    truth_tags: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tables", _readonly(self.tables))
        if self.tables.ndim != 5:
            raise GameValidationError(
                f"value family must be N x H x S x A1 x A2, got shape {self.tables.shape}"
            )
        if self.tables.shape[0] < 1:
            raise GameValidationError("value family is empty")
        if not np.all(np.isfinite(self.tables)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(self.tables))[0])
            raise GameValidationError("value family has a non-finite entry", bad)
        if not self.names:
            object.__setattr__(self, "names", _default_names("f", self.size))
        if len(self.names) != self.size:
            raise GameValidationError(f"{len(self.names)} names for {self.size} members")
        for index in self.truth_tags:
            if not 0 <= index < self.size:
                raise GameValidationError(f"truth tag on missing member {index}")

    @property
    def size(self) -> int:
        return int(self.tables.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.tables.shape[1])

    @property
    def layout(self) -> Tuple[int, ...]:
        return tuple(self.tables.shape[1:])

    def check_fits(self, game: MarkovGame) -> None:
        if self.layout != game.shape:
            raise ValueError(f"value family layout {self.layout} does not fit game {game.shape}")

    def member(self, index: int) -> np.ndarray:
        return self.tables[index]

    @property
    def q_star_index(self) -> Optional[int]:
        for index, tag in sorted(self.truth_tags.items()):
            if tag == Q_STAR_TAG:
                return index
        return None

    def truth_pairs(self) -> list[Tuple[int, int]]:
        """(policy index, member index) for every member tagged 'pi:<i>'."""
        pairs = []
        for index, tag in sorted(self.truth_tags.items()):
            if tag.startswith("pi:"):
                pairs.append((int(tag.split(":", 1)[1]), index))
        return pairs

    def swapped(self) -> "FiniteValueFamily":
        """
        The family seen from P2's seat: f'(x, b, a) = -f(x, a, b).

        Only the Q* tag carries over. A 'pi:<i>' tag names a P1 policy, and
        its negated transpose is not a truth for any P2 policy.
        """
        tags = {index: tag for index, tag in self.truth_tags.items() if tag == Q_STAR_TAG}
        return FiniteValueFamily(-np.swapaxes(self.tables, 3, 4), self.names, tags)


def expand_product(
    per_step: Sequence[Sequence[np.ndarray]], cap: int = PRODUCT_EXPANSION_CAP
) -> FiniteValueFamily:
    """Tuple family F_0 x ... x F_{H-1} from per-level candidate tables."""
    sizes = [len(level) for level in per_step]
    if not sizes or min(sizes) < 1:
        raise ValueError("every level needs at least one candidate")
    total = math.prod(sizes)
    if total > cap:
        log_warning(f"Product family has {total} tuples, above the cap of {cap}.")
    tables = [
        np.stack([np.asarray(level_table, dtype=float) for level_table in combo])
        for combo in itertools.product(*per_step)
    ]
    names = tuple(
        "x".join(str(i) for i in combo)
        for combo in itertools.product(*(range(n) for n in sizes))
    )
    return FiniteValueFamily(np.stack(tables), names)


@dataclass(frozen=True, eq=False)
class LinearValueFamily:
    """Q_h(x, a, b) = phi_h(x, a, b)' theta_h with ||phi|| <= 1 and ||theta_h|| <= bound."""

    features: np.ndarray  # (H, S, A1, A2, d)
    bound: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", _readonly(self.features))
        if self.features.ndim != 5:
            raise GameValidationError(
                f"features must be H x S x A1 x A2 x d, got shape {self.features.shape}"
            )
        norms = np.linalg.norm(self.features, axis=-1)
        over = np.argwhere(norms > 1.0 + NORM_TOL)
        if over.size:
            index = tuple(int(i) for i in over[0])
            raise GameValidationError(f"feature norm {norms[index]:.6g} exceeds 1", index)
        if self.bound is None:
            object.__setattr__(self, "bound", math.sqrt(self.dim))

    @property
    def dim(self) -> int:
        return int(self.features.shape[-1])

    @property
    def layout(self) -> Tuple[int, ...]:
        return tuple(self.features.shape[:4])

    def check_fits(self, game: MarkovGame) -> None:
        if self.layout != game.shape:
            raise ValueError(f"feature layout {self.layout} does not fit game {game.shape}")

    def q_values(self, theta: np.ndarray) -> np.ndarray:
        """theta: (H, d) -> Q: (H, S, A1, A2)."""
        return np.einsum("hxabd,hd->hxab", self.features, theta)

    @classmethod
    def onehot(cls, game: MarkovGame) -> "LinearValueFamily":
        H, S, A, B = game.shape
        d = S * A * B
        features = np.broadcast_to(np.eye(d).reshape(S, A, B, d), (H, S, A, B, d))
        return cls(features)

    def true_parameters(self, q_star: np.ndarray) -> np.ndarray:
        """Least-squares theta with phi' theta = q_star (exact for one-hot maps)."""
        H = q_star.shape[0]
        theta = np.zeros((H, self.dim))
        for h in range(H):
            phi = self.features[h].reshape(-1, self.dim)
            theta[h] = np.linalg.lstsq(phi, q_star[h].reshape(-1), rcond=None)[0]
        return theta


@dataclass(frozen=True, eq=False)
class PolicyFamily:
    members: Tuple[StochasticPolicy, ...]
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.members:
            raise GameValidationError("policy family is empty")
        first = self.members[0]
        for i, member in enumerate(self.members):
            if member.probs.shape != first.probs.shape or member.side is not first.side:
                raise GameValidationError("policy family members differ in layout", (i,))
        if not self.names:
            object.__setattr__(self, "names", _default_names("pi", self.size))
        stacked = np.stack([m.probs for m in self.members])
        stacked.setflags(write=False)
        object.__setattr__(self, "_stacked", stacked)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def side(self) -> Side:
        return self.members[0].side

    @property
    def stacked(self) -> np.ndarray:
        """(m, H, S, n_actions) array of member probabilities."""
        return self._stacked  # type: ignore[attr-defined, no-any-return]

    def check_fits(self, game: MarkovGame, side: Optional[Side] = None) -> None:
        for member in self.members:
            member.check_fits(game, side or self.side)

    def as_side(self, side: Side) -> "PolicyFamily":
        return PolicyFamily(tuple(m.with_side(side) for m in self.members), self.names)

    @classmethod
    def pure_actions(cls, horizon: int, n_states: int, n_actions: int, side: Side) -> "PolicyFamily":
        """One deterministic member per action, the same action at every (h, x)."""
        members = tuple(
            StochasticPolicy.deterministic(np.full((horizon, n_states), a), n_actions, side)
            for a in range(n_actions)
        )
        return cls(members, tuple(f"{side.value}:a{a}" for a in range(n_actions)))


@dataclass(frozen=True, eq=False)
class ModelFamily:
    members: Tuple[MarkovGame, ...]
    names: Tuple[str, ...] = ()
    true_index: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.members:
            raise GameValidationError("model family is empty")
        first = self.members[0]
        for i, model in enumerate(self.members):
            if not model.same_layout(first):
                raise GameValidationError("model family members differ in layout", (i,))
        if not self.names:
            object.__setattr__(self, "names", _default_names("M", self.size))
        if self.true_index is not None and not 0 <= self.true_index < self.size:
            raise GameValidationError(f"true model index {self.true_index} out of range")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class TestFunctionFamily:
    """
    g(x, a, b, r, x') = tables[g, x, a, b, x'] + reward_weights[g] * r.

    The inner expectation under a tabular model with deterministic rewards
    is then an exact finite sum.
    """

    __test__ = False

    tables: np.ndarray  # (N, S, A1, A2, S)
    reward_weights: np.ndarray  # (N,)
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tables", _readonly(self.tables))
        object.__setattr__(self, "reward_weights", _readonly(self.reward_weights))
        if self.tables.ndim != 5 or self.tables.shape[1] != self.tables.shape[4]:
            raise GameValidationError(
                f"test functions must be N x S x A1 x A2 x S, got shape {self.tables.shape}"
            )
        if self.reward_weights.shape != (self.tables.shape[0],):
            raise GameValidationError("one reward weight per test function is required")
        if self.tables.shape[0] < 1:
            raise GameValidationError("test function family is empty")
        if not self.names:
            object.__setattr__(self, "names", _default_names("g", self.size))

    @property
    def size(self) -> int:
        return int(self.tables.shape[0])

    def check_bound(self, reward_bound: float, bound: float = TEST_FUNCTION_BOUND) -> None:
        sup = np.abs(self.tables).max(axis=(1, 2, 3, 4)) + np.abs(self.reward_weights) * reward_bound
        over = np.argwhere(sup > bound + NORM_TOL)
        if over.size:
            g = int(over[0][0])
            raise GameValidationError(f"test function sup norm {sup[g]:.6g} exceeds {bound}", (g,))

    def expected_under(self, model: MarkovGame, h: int) -> np.ndarray:
        """E_{(r, x') ~ model}[g(x, a, b, r, x')] as an (N, S, A1, A2) table."""
        return (
            np.einsum("xaby,gxaby->gxab", model.transitions[h], self.tables)
            + self.reward_weights[:, None, None, None] * model.rewards[h][None]
        )

    def observed(
        self, x: np.ndarray, a: np.ndarray, b: np.ndarray, r: np.ndarray, x_next: np.ndarray
    ) -> np.ndarray:
        """g evaluated at each observed transition: (N, n)."""
        return self.tables[:, x, a, b, x_next] + self.reward_weights[:, None] * r[None, :]


AnyFamily = Union[FiniteValueFamily, LinearValueFamily, PolicyFamily, ModelFamily, TestFunctionFamily]


def covering_log(family: AnyFamily, eps: float) -> float:
    """
    Log covering number at scale eps. Finite families report log of their
    cardinality; linear families report d * log(1 + 2R/eps), a bound rather
    than an exact cover.
    """
    if eps <= 0:
        raise ValueError(f"covering scale must be positive, got {eps}")
    if isinstance(family, LinearValueFamily):
        assert family.bound is not None
        return family.dim * math.log(1.0 + 2.0 * family.bound / eps)
    return math.log(family.size)


def _mixed_against(tables: np.ndarray, policy: np.ndarray, side: Side) -> np.ndarray:
    """f(x, pi, b) for P1 policies or f(x, a, nu) for P2 policies."""
    if side is Side.P1:
        return np.einsum("nhxab,hxa->nhxb", tables, policy)
    return np.einsum("nhxab,hxb->nhxa", tables, policy)


def policy_distance(
    values: FiniteValueFamily, first: StochasticPolicy, second: StochasticPolicy
) -> float:
    """max_h max_{f, x, b} |f(x, pi, b) - f(x, pi', b)| over the value family."""
    if first.side is not second.side:
        raise ValueError("policies belong to different players")
    diff = _mixed_against(values.tables, first.probs, first.side) - _mixed_against(
        values.tables, second.probs, second.side
    )
    return float(np.abs(diff).max())


def policy_covering_number(
    policies: PolicyFamily, values: FiniteValueFamily, eps: float
) -> int:
    """Greedy eps-cover size under policy_distance (an upper bound on the cover)."""
    if eps <= 0:
        raise ValueError(f"covering scale must be positive, got {eps}")
    mixed = [_mixed_against(values.tables, m.probs, m.side) for m in policies.members]
    centers: list[int] = []
    for i, table in enumerate(mixed):
        if not any(np.abs(table - mixed[c]).max() <= eps for c in centers):
            centers.append(i)
    return len(centers)
