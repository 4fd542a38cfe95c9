# src/markov_game_lab/harness/sweep.py
"""
Multi-seed sweeps. Seeds run serially or through joblib; results are
collected in seed order, so both paths write the same bytes.

Sweep directory layout:
    seed_<s>/...        one run directory per seed (see runs.py)
    summary.csv         one row per seed
    summary.json        aggregate statistics
    regret.svg          per-seed curves and their mean
    manifest.json       sha256 of every file above
"""
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from markov_game_lab.harness.inputs import LabInputs
from markov_game_lab.harness.plotting import mean_curve, plot_regret_curves
from markov_game_lab.harness.runs import execute_run
from markov_game_lab.harness.sublinearity import sublinearity_test
from markov_game_lab.utils.cli_utils import write_csv, write_json
from markov_game_lab.utils.config_schema import Config
from markov_game_lab.utils.constants import CSV_FLOAT_FORMAT, Algorithm
from markov_game_lab.utils.logger import log_error, log_info, log_success, progress
from markov_game_lab.utils.schema import validate_data

SUMMARY_COLUMNS = ["seed", "status", "final_cum_regret", "theory_failures", "retention", "error"]


@dataclass
class SeedOutcome:
    row: Dict[str, Any]
    curve: Optional[np.ndarray] = None
    baseline: Optional[np.ndarray] = None


@dataclass
class SweepSummary:
    algorithm: Algorithm
    root: Path
    rows: pd.DataFrame
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def failed_seeds(self) -> List[int]:
        return [int(s) for s in self.rows.loc[self.rows["status"] == "error", "seed"]]


def sweep_root(config: Config, algorithm: Algorithm) -> Path:
    return Path(config.paths.output_root) / config.experiment / f"sweep_{algorithm.value}"


def run_seed(
    config_dict: Dict[str, Any],
    algorithm: str,
    seed: int,
    run_dir: str,
    inputs: Optional[LabInputs] = None,
) -> SeedOutcome:
    """One seed; every error is caught and recorded so the sweep carries on."""
    config = Config.model_validate(config_dict)
    try:
        result = execute_run(Algorithm(algorithm), config, seed, Path(run_dir), inputs)
    except Exception as e:
        log_error(f"Seed {seed} failed: {e}", exc_info=True)
        row = {"seed": seed, "status": "error", "final_cum_regret": None, "theory_failures": None,
               "retention": None, "error": f"{type(e).__name__}: {e}"}
        return SeedOutcome(row)
    return SeedOutcome(result.row(), result.curve, result.baseline)


def _quartiles(values: np.ndarray) -> Dict[str, Optional[float]]:
    if values.size == 0:
        return {"mean": None, "median": None, "iqr": None}
    q25, q50, q75 = np.percentile(values, [25, 50, 75])
    return {"mean": float(np.mean(values)), "median": float(q50), "iqr": float(q75 - q25)}


def aggregate(rows: pd.DataFrame, curves: Dict[int, np.ndarray], checkpoints: Optional[List[int]]) -> Dict[str, Any]:
    """Statistics over the successful seeds; every number is recomputable from summary.csv and the traces."""
    ok = rows[rows["status"] == "ok"]
    finals = ok["final_cum_regret"].dropna().to_numpy(dtype=float)
    retention = ok["retention"].dropna().to_numpy(dtype=float)
    stats: Dict[str, Any] = {
        "seeds": int(len(rows)),
        "succeeded": int(len(ok)),
        "failed": int(len(rows) - len(ok)),
        "final_cum_regret": _quartiles(finals),
        "retention_mean": float(retention.mean()) if retention.size else None,
        "theory_failures_total": int(ok["theory_failures"].fillna(0).sum()),
        "sublinearity": None,
    }
    mean = mean_curve(curves)
    if mean is not None:
        try:
            stats["sublinearity"] = sublinearity_test(mean, checkpoints).to_dict()
        except ValueError as e:
            log_info(f"Sublinearity test skipped: {e}")
    return stats


def _manifest(root: Path) -> Dict[str, str]:
    skipped = {"manifest.json", "audit.json"}
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.name not in skipped and not p.name.startswith("."))
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest() for p in files}


def sweep(config: Config, algorithm: Optional[Algorithm] = None) -> SweepSummary:
    algorithm = algorithm or Algorithm(config.sweep.algorithm)
    params = config.sweep
    root = sweep_root(config, algorithm)
    config_dict = config.model_dump(mode="json")
    log_info(f"Sweep of {algorithm.value} over {len(params.seeds)} seeds into {root} (n_jobs={params.n_jobs})")

    if params.n_jobs == 1:
        inputs = LabInputs(config)
        outcomes = [
            run_seed(config_dict, algorithm.value, seed, str(root / f"seed_{seed}"), inputs)
            for seed in progress(params.seeds, desc="Seeds", total=len(params.seeds))
        ]
    else:
        outcomes = Parallel(n_jobs=params.n_jobs)(
            delayed(run_seed)(config_dict, algorithm.value, seed, str(root / f"seed_{seed}"))
            for seed in params.seeds
        )

    rows = pd.DataFrame([o.row for o in outcomes], columns=SUMMARY_COLUMNS)
    rows = validate_data(rows, "sweep_summary", f"{algorithm.value} sweep summary", root)
    curves = {int(o.row["seed"]): o.curve for o in outcomes if o.curve is not None}
    stats = aggregate(rows, curves, params.checkpoints)
    baselines = {int(o.row["seed"]): o.baseline for o in outcomes if o.baseline is not None}
    baseline = mean_curve(baselines)
    if baseline is not None:
        stats["baseline_final_cum_regret"] = float(baseline[-1]) if baseline.size else 0.0
        mean_final = stats["final_cum_regret"]["mean"]
        stats["below_baseline"] = None if mean_final is None else bool(mean_final < stats["baseline_final_cum_regret"])

    write_csv(rows, root / "summary.csv", CSV_FLOAT_FORMAT)
    write_json({"algorithm": algorithm.value, "seeds": list(params.seeds), **stats}, root / "summary.json")
    if curves:
        plot_regret_curves(curves, root / "regret.svg", f"{algorithm.value}: cumulative regret", baseline=baseline)
    write_json(_manifest(root), root / "manifest.json")

    summary = SweepSummary(algorithm, root, rows, stats)
    if summary.failed_seeds:
        log_error(f"❌ {len(summary.failed_seeds)} seeds failed: {summary.failed_seeds}")
    else:
        log_success(f"✅ Sweep finished: {len(params.seeds)} seeds written to {root}")
    return summary


def curves_from_disk(root: Path, stems: Tuple[str, ...]) -> Dict[int, np.ndarray]:
    """cum_regret of the first available trace in each seed directory."""
    curves = {}
    for run_dir in sorted(root.glob("seed_*")):
        for stem in stems:
            path = run_dir / f"{stem}.csv"
            if path.exists():
                curves[int(run_dir.name.split("_", 1)[1])] = pd.read_csv(path)["cum_regret"].to_numpy(dtype=float)
                break
    return curves
