# tests/harness/test_sweep_audit.py

import pandas as pd
import pytest

from markov_game_lab.harness.audit import audit_sweep
from markov_game_lab.harness.commands import run_audit, run_sweep
from markov_game_lab.harness.sweep import SUMMARY_COLUMNS, sweep
from markov_game_lab.utils.cli_utils import read_json
from markov_game_lab.utils.exceptions import AuditFailure, SweepFailure


def test_sweep_writes_a_clean_auditable_tree(make_config):
    """
    Tests the sweep layout and that a fresh sweep audits clean.
    """
    config = make_config()
    summary = sweep(config)
    root = summary.root

    assert summary.failed_seeds == []
    assert list(summary.rows.columns) == SUMMARY_COLUMNS
    for name in ("summary.csv", "summary.json", "regret.svg", "manifest.json"):
        assert (root / name).exists()
    assert (root / "seed_0" / "trace.csv").exists()
    stats = read_json(root / "summary.json")
    assert stats["algorithm"] == "onemg"
    assert stats["succeeded"] == 2

    report = audit_sweep(root)
    assert report.clean, report.diffs
    assert report.checked > 0
    assert (root / "audit.json").exists()


def test_tampered_summary_fails_the_audit(make_config):
    """
    Tests that an edited per-seed regret is reported and raised.
    """
    config = make_config()
    root = sweep(config).root
    rows = pd.read_csv(root / "summary.csv")
    rows.loc[0, "final_cum_regret"] += 1.0
    rows.to_csv(root / "summary.csv", index=False)

    report = audit_sweep(root)
    assert not report.clean
    assert any(d["what"] == "final_cum_regret[seed=0]" for d in report.diffs)
    with pytest.raises(AuditFailure):
        run_audit(config)


def test_failing_seeds_are_recorded_and_raised(make_config):
    """
    Tests that a broken game spec marks every seed as failed.
    """
    config = make_config(game__params="{H: 2, S: 2, A: 2, bogus: 1}")
    with pytest.raises(SweepFailure):
        run_sweep(config)
    rows = pd.read_csv(config.paths.output_root + "/default/sweep_onemg/summary.csv")
    assert set(rows["status"]) == {"error"}
    assert rows["error"].str.contains("ConfigurationError").all()


@pytest.mark.slow
def test_parallel_sweep_matches_serial(make_config, tmp_path):
    """
    Tests that seeds run through joblib write the same bytes as serial seeds.
    """
    serial = make_config(paths__output_root=str(tmp_path / "serial"))
    parallel = make_config(paths__output_root=str(tmp_path / "parallel"), sweep__n_jobs="2")
    first = sweep(serial).root
    second = sweep(parallel).root
    assert read_json(first / "manifest.json") == read_json(second / "manifest.json")
