# src/markov_game_lab/harness/sublinearity.py
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from markov_game_lab.utils.constants import MIN_CHECKPOINTS, REGRET_LOG_FLOOR, SUBLINEARITY_RATIO


@dataclass(frozen=True)
class SublinearityResult:
    ratio_pass: bool
    alpha: float
    ratio: Optional[float]
    checkpoints: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "ratio_pass": self.ratio_pass,
            "alpha": self.alpha,
            "ratio": self.ratio,
            "checkpoints": list(self.checkpoints),
        }


def geometric_checkpoints(episodes: int, count: int = 10) -> Tuple[int, ...]:
    """Distinct, roughly log-spaced episode indices in [1, episodes]."""
    if episodes < 1:
        return ()
    points = np.unique(np.round(np.geomspace(1, episodes, num=count)).astype(int))
    return tuple(int(p) for p in points)


def sublinearity_test(
    cum_regret: Sequence[float],
    checkpoints: Optional[Sequence[int]] = None,
    ratio: float = SUBLINEARITY_RATIO,
) -> SublinearityResult:
    """
    Ratio test Reg(K)/K <= ratio * Reg(K/10)/(K/10) and the growth exponent
    alpha from a log-log least-squares fit over the checkpoints (cumulative
    regret floored before the log). `cum_regret[k - 1]` is Reg(k).
    """
    trace = np.asarray(cum_regret, dtype=float)
    K = trace.shape[0]
    if K < 10:
        raise ValueError(f"the ratio test needs at least 10 episodes, got {K}")
    points = tuple(checkpoints) if checkpoints is not None else geometric_checkpoints(K)
    if len(set(points)) < MIN_CHECKPOINTS:
        raise ValueError(f"the growth fit needs {MIN_CHECKPOINTS} distinct checkpoints, got {len(set(points))}")
    if max(points) > K or min(points) < 1:
        raise ValueError(f"checkpoints must lie in [1, {K}]")

    if np.all(trace == 0):
        return SublinearityResult(True, 0.0, None, points)

    tenth = K // 10
    late, early = trace[K - 1] / K, trace[tenth - 1] / tenth
    if early > 0:
        measured: Optional[float] = float(late / early)
        passed = late <= ratio * early
    else:
        measured = None
        passed = bool(late <= 0)

    ks = np.array(points, dtype=float)
    values = np.maximum(trace[np.array(points) - 1], REGRET_LOG_FLOOR)
    alpha = float(np.polyfit(np.log(ks), np.log(values), 1)[0])
    return SublinearityResult(bool(passed), alpha, measured, points)
