# src/markov_game_lab/harness/plotting.py
import io
from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from markov_game_lab.utils.cli_utils import atomic_write_bytes  # noqa: E402
from markov_game_lab.utils.constants import SVG_HASH_SALT  # noqa: E402
from markov_game_lab.utils.logger import log_success  # noqa: E402


def mean_curve(curves: Mapping[int, np.ndarray]) -> Optional[np.ndarray]:
    """Pointwise mean over seeds, truncated to the shortest trace."""
    if not curves:
        return None
    length = min(len(c) for c in curves.values())
    if length == 0:
        return None
    return np.mean(np.stack([np.asarray(c[:length], dtype=float) for c in curves.values()]), axis=0)


def plot_regret_curves(
    curves: Mapping[int, np.ndarray],
    path: Path,
    title: str,
    ylabel: str = "cumulative regret",
    baseline: Optional[np.ndarray] = None,
) -> Path:
    """Static SVG: one faint line per seed, the seed mean in bold, optional baseline dashed."""
    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig, ax = plt.subplots(figsize=(8, 5))
    for seed in sorted(curves):
        curve = np.asarray(curves[seed], dtype=float)
        ax.plot(np.arange(1, len(curve) + 1), curve, color="tab:blue", alpha=0.2, linewidth=0.8)
    mean = mean_curve(curves)
    if mean is not None:
        ax.plot(np.arange(1, len(mean) + 1), mean, color="tab:blue", linewidth=2.0, label=f"mean over {len(curves)} seeds")
    if baseline is not None:
        ax.plot(np.arange(1, len(baseline) + 1), baseline, color="tab:red", linestyle="--", label="fixed non-Nash policy")
    ax.set_title(title)
    ax.set_xlabel("episode")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if mean is not None or baseline is not None:
        ax.legend(loc="upper left")
    fig.tight_layout()

    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_bytes(path, buffer.getvalue())
    log_success(f"Regret plot saved to {path}")
    return path
