# src/markov_game_lab/algorithms/buffers.py
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, NamedTuple, Tuple

import numpy as np
import pandas as pd

from markov_game_lab.games.markov_game import EpisodeRecord


class LevelData(NamedTuple):
    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r: np.ndarray
    x_next: np.ndarray

    def __len__(self) -> int:  # type: ignore[override]
        return int(self.x.shape[0])


def level_data(steps: List[Tuple[int, int, int, float, int]]) -> LevelData:
    if not steps:
        empty = np.zeros(0, dtype=int)
        return LevelData(empty, empty, empty, np.zeros(0), empty)
    x, a, b, r, x_next = zip(*steps)
    return LevelData(
        np.array(x, dtype=int),
        np.array(a, dtype=int),
        np.array(b, dtype=int),
        np.array(r, dtype=float),
        np.array(x_next, dtype=int),
    )


class ReplayBuffer:
    """Per-level transitions (x, a, b, r, x'), one appended per episode and level."""

    def __init__(self, horizon: int):
        self.horizon = horizon
        self._steps: List[List[Tuple[int, int, int, float, int]]] = [[] for _ in range(horizon)]
        self._cache: Dict[int, LevelData] = {}

    def append(self, episode: EpisodeRecord) -> None:
        if len(episode.steps) != self.horizon:
            raise ValueError(f"episode has {len(episode.steps)} steps, buffer horizon is {self.horizon}")
        for step in episode.steps:
            self._steps[step.h].append((step.x, step.a, step.b, step.r, step.x_next))
        self._cache.clear()

    def level(self, h: int) -> LevelData:
        if h not in self._cache:
            self._cache[h] = level_data(self._steps[h])
        return self._cache[h]

    def __len__(self) -> int:
        return len(self._steps[0]) if self._steps else 0

    def level_sizes(self) -> List[int]:
        return [len(level) for level in self._steps]


@dataclass
class RunTrace:
    """Per-episode (or per-round) records plus a run-level summary."""

    COLUMNS: ClassVar[Tuple[str, ...]] = ()

    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def append(self, **values: Any) -> None:
        missing = set(self.COLUMNS) - set(values)
        if missing:
            raise ValueError(f"trace row is missing {sorted(missing)}")
        self.rows.append({name: values[name] for name in self.COLUMNS})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(self.COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class RegretTrace(RunTrace):
    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "k",
        "chosen",
        "regret_increment",
        "cum_regret",
        "vspace_size",
        "optimism_gap",
        "fallback_flag",
        "truth_survives",
    )


@dataclass
class LinearRegretTrace(RunTrace):
    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "k",
        "regret_increment",
        "cum_regret",
        "planned_value",
        "optimism_gap",
        "theta_star_feasible",
        "greedy_value",
    )


@dataclass
class AomeRoundLog(RunTrace):
    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "round",
        "m1",
        "m2",
        "v_hat",
        "q_m1",
        "q_m2",
        "bracket_holds",
        "terminated",
        "h",
        "inconclusive",
        "eliminated",
        "survivors",
        "true_model_present",
    )


@dataclass
class PolicyRegretTrace(RunTrace):
    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "k",
        "pi_index",
        "f_index",
        "g_index",
        "regret_increment",
        "cum_regret",
        "regret_unrestricted",
        "cum_regret_unrestricted",
        "pair_space_size",
        "upper_bound_slack",
        "duality_gap",
        "truths_survive",
        "fallback_flag",
    )
