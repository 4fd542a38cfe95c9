# src/markov_game_lab/harness/audit.py
"""
Recomputes the derived columns of stored run CSVs and the sweep statistics
from the per-seed files, and reports every mismatch.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from markov_game_lab.harness.runs import CURVE_FILES
from markov_game_lab.harness.sweep import SUMMARY_COLUMNS, aggregate, curves_from_disk
from markov_game_lab.utils.cli_utils import assert_columns_exist, assert_file_exists, read_json, write_json
from markov_game_lab.utils.constants import Algorithm
from markov_game_lab.utils.logger import log_error, log_info, log_success

RTOL = 1e-8
ATOL = 1e-8

CUMULATIVE_COLUMNS = {
    "cum_regret": "regret_increment",
    "cum_regret_unrestricted": "regret_unrestricted",
}


@dataclass
class AuditReport:
    root: Path
    checked: int = 0
    diffs: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.diffs

    def to_dict(self) -> Dict[str, Any]:
        return {"root": str(self.root), "checked": self.checked, "clean": self.clean, "diffs": self.diffs}


def _compare(report: AuditReport, where: str, what: str, stored: Any, recomputed: Any) -> None:
    report.checked += 1
    if stored is None and recomputed is None:
        return
    if stored is None or recomputed is None or not np.isclose(float(stored), float(recomputed), rtol=RTOL, atol=ATOL):
        report.diffs.append({"where": where, "what": what, "stored": stored, "recomputed": recomputed})


def _nullable(value: Any) -> Optional[float]:
    return None if value is None or pd.isna(value) else float(value)


def audit_trace(report: AuditReport, path: Path) -> Optional[float]:
    """Cumulative columns against the running sum of their increments; returns the final cum_regret."""
    frame = pd.read_csv(path)
    for cum, increment in CUMULATIVE_COLUMNS.items():
        if cum not in frame.columns:
            continue
        recomputed = frame[increment].cumsum().to_numpy(dtype=float)
        stored = frame[cum].to_numpy(dtype=float)
        report.checked += len(frame)
        bad = np.flatnonzero(~np.isclose(stored, recomputed, rtol=RTOL, atol=ATOL))
        for i in bad:
            report.diffs.append(
                {"where": path.as_posix(), "what": f"{cum}[k={int(frame['k'].iloc[i])}]",
                 "stored": float(stored[i]), "recomputed": float(recomputed[i])}
            )
    if "cum_regret" in frame.columns:
        return float(frame["cum_regret"].iloc[-1]) if len(frame) else 0.0
    return None


def audit_rounds(report: AuditReport, path: Path) -> None:
    """AOME survivor counts: each round ends with the previous count minus its eliminations."""
    frame = pd.read_csv(path)
    for i in range(1, len(frame)):
        _compare(
            report, path.as_posix(), f"survivors[round={int(frame['round'].iloc[i])}]",
            int(frame["survivors"].iloc[i]),
            int(frame["survivors"].iloc[i - 1]) - int(frame["eliminated"].iloc[i]),
        )


def audit_run(report: AuditReport, run_dir: Path, algorithm: Algorithm) -> Optional[float]:
    """Checks one run directory; returns the final cumulative regret of its lead trace."""
    summary = read_json(run_dir / "summary.json")
    if algorithm is Algorithm.AOME:
        audit_rounds(report, run_dir / "rounds.csv")
        return None
    finals: Dict[str, Optional[float]] = {}
    for stem in CURVE_FILES[algorithm]:
        path = run_dir / f"{stem}.csv"
        if path.exists():
            finals[stem] = audit_trace(report, path)
    if algorithm is Algorithm.AOVE:
        for stem, final in finals.items():
            role = stem.split("_", 1)[1]
            _compare(report, run_dir.as_posix(), f"{role}.final_cum_regret", summary[role]["final_cum_regret"], final)
    else:
        _compare(report, run_dir.as_posix(), "final_cum_regret", summary["final_cum_regret"], finals.get("trace"))
    return next(iter(finals.values()), None)


def audit_sweep(root: Path) -> AuditReport:
    """Every seed directory, then summary.csv and summary.json against what the traces imply."""
    assert_file_exists(str(root / "summary.json"), "Sweep summary")
    stored = read_json(root / "summary.json")
    algorithm = Algorithm(stored["algorithm"])
    rows = pd.read_csv(root / "summary.csv", keep_default_na=True)
    assert_columns_exist(rows, SUMMARY_COLUMNS, "summary.csv")
    report = AuditReport(root)
    log_info(f"Auditing {algorithm.value} sweep at {root}")

    for _, row in rows.iterrows():
        seed = int(row["seed"])
        if row["status"] != "ok":
            continue
        final = audit_run(report, root / f"seed_{seed}", algorithm)
        _compare(report, "summary.csv", f"final_cum_regret[seed={seed}]", _nullable(row["final_cum_regret"]), final)

    recomputed = aggregate(rows, curves_from_disk(root, CURVE_FILES[algorithm]), None)
    for key in ("mean", "median", "iqr"):
        _compare(
            report, "summary.json", f"final_cum_regret.{key}",
            stored["final_cum_regret"][key], recomputed["final_cum_regret"][key],
        )
    _compare(report, "summary.json", "retention_mean", stored["retention_mean"], recomputed["retention_mean"])
    _compare(
        report, "summary.json", "theory_failures_total",
        stored["theory_failures_total"], recomputed["theory_failures_total"],
    )

    write_json(report.to_dict(), root / "audit.json")
    if report.clean:
        log_success(f"✅ Audit clean: {report.checked} values recomputed.")
    else:
        log_error(f"❌ Audit found {len(report.diffs)} mismatches out of {report.checked} checks.")
    return report
