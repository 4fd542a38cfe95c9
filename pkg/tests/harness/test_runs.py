# tests/harness/test_runs.py

import pytest

from markov_game_lab.harness.runs import execute_run, run_algorithm
from markov_game_lab.utils.cli_utils import read_json
from markov_game_lab.utils.constants import Algorithm


@pytest.mark.parametrize(
    "algorithm, files",
    [
        (Algorithm.ONEMG, ["trace.csv"]),
        (Algorithm.LINEAR, ["trace.csv"]),
        (Algorithm.AOVE, ["trace_p1.csv", "trace_p2.csv"]),
    ],
)
def test_episode_learners_write_traces(make_config, tmp_path, algorithm, files):
    """
    Tests that each episodic learner writes validated traces and a summary.
    """
    config = make_config(aove__role="both")
    run_dir = tmp_path / "run"
    result = execute_run(algorithm, config, 0, run_dir)

    for name in files:
        assert (run_dir / name).exists()
    summary = read_json(run_dir / "summary.json")
    lead = summary["p1"] if algorithm is Algorithm.AOVE else summary
    assert lead["episodes"] == 12
    assert result.row()["status"] == "ok"
    assert result.curve is not None and len(result.curve) == 12
    assert result.final_cum_regret == pytest.approx(result.curve[-1])


def test_onemg_run_records_a_baseline(make_config):
    """
    Tests the fixed non-Nash baseline attached to ONEMG runs.
    """
    result = run_algorithm(Algorithm.ONEMG, make_config(), 0)
    if result.baseline is not None:
        assert len(result.baseline) == 12
        assert "baseline_policy" in result.summary


def test_aome_run_writes_its_round_log(make_config, tmp_path):
    """
    Tests the AOME artifacts with an elimination threshold nothing can cross.
    """
    config = make_config(aome__epsilon="0.5", aome__phi="10.0")
    run_dir = tmp_path / "aome"
    result = execute_run(Algorithm.AOME, config, 0, run_dir)

    assert (run_dir / "rounds.csv").exists()
    summary = read_json(run_dir / "summary.json")
    assert summary["status"] in {"terminated", "round_cap"}
    assert summary["constants"]["phi"] == 10.0
    assert result.retention == 1.0
    assert result.curve is None
