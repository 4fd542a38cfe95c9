# src/markov_game_lab/harness/runs.py
"""
One seeded run of one learner: build its config from the validated lab
config, run it, validate and write its CSVs and summary.

Run directory layout:
    trace.csv | rounds.csv | trace_p1.csv, trace_p2.csv
    summary.json
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from markov_game_lab.algorithms import onemg
from markov_game_lab.algorithms.aome import AomeConfig, run_aome
from markov_game_lab.algorithms.aove import AoveConfig, run_aove, summarize_roles
from markov_game_lab.algorithms.linear_onemg import LinearConfig, run_linear
from markov_game_lab.algorithms.opponents import build_opponent
from markov_game_lab.harness.inputs import LabInputs
from markov_game_lab.hypothesis.induced import solve_family
from markov_game_lab.utils.cli_utils import write_csv, write_json
from markov_game_lab.utils.config_schema import Config
from markov_game_lab.utils.constants import (
    CSV_FLOAT_FORMAT,
    Algorithm,
    AoveRole,
    PlannerMode,
    Side,
    SuccessorLevel,
)
from markov_game_lab.utils.exceptions import TheoryViolation
from markov_game_lab.utils.logger import log_info
from markov_game_lab.utils.schema import validate_data

# CSV file stem -> schema registry key
TRACE_SCHEMAS = {
    "trace": {Algorithm.ONEMG: "onemg_trace", Algorithm.LINEAR: "linear_trace"},
    "rounds": {Algorithm.AOME: "aome_rounds"},
    "trace_p1": {Algorithm.AOVE: "aove_trace"},
    "trace_p2": {Algorithm.AOVE: "aove_trace"},
}

CURVE_FILES = {
    Algorithm.ONEMG: ("trace",),
    Algorithm.LINEAR: ("trace",),
    Algorithm.AOVE: ("trace_p1", "trace_p2"),
    Algorithm.AOME: (),
}


@dataclass
class RunResult:
    algorithm: Algorithm
    seed: int
    frames: Dict[str, pd.DataFrame]
    summary: Dict[str, Any]
    final_cum_regret: Optional[float] = None
    theory_failures: int = 0
    retention: Optional[float] = None
    curve: Optional[np.ndarray] = None
    baseline: Optional[np.ndarray] = None
    violation: Optional[str] = field(default=None, repr=False)

    def row(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "status": "ok",
            "final_cum_regret": self.final_cum_regret,
            "theory_failures": self.theory_failures,
            "retention": self.retention,
            "error": "",
        }


def _experiment(config: Config, algorithm: Algorithm) -> str:
    return f"{config.experiment}/{algorithm.value}"


def _run_onemg(config: Config, seed: int, inputs: LabInputs) -> RunResult:
    params = config.onemg
    game, solution, values = inputs.game, inputs.solution, inputs.values
    opponent = build_opponent(params.opponent, game, solution, inputs.opponent_policies)
    solutions = solve_family(values)
    run_config = onemg.OnemgConfig(
        episodes=params.episodes, beta=params.beta, c=params.c, p=params.p,
        seed=seed, audit=params.audit, experiment=_experiment(config, Algorithm.ONEMG),
    )
    run = onemg.run(game, values, run_config, opponent, solution, solutions)
    summary = dict(run.trace.summary)
    try:
        index, policy = onemg.lowest_non_nash_policy(game, solutions, solution)
        baseline: Optional[np.ndarray] = onemg.fixed_policy_regret(game, policy, opponent, params.episodes, solution)
        summary["baseline_policy"] = values.names[index]
        summary["baseline_final_cum_regret"] = float(baseline[-1]) if len(baseline) else 0.0
    except ValueError:
        baseline = None
    retained = summary["truth_retained"]
    return RunResult(
        Algorithm.ONEMG,
        seed,
        {"trace": run.trace.to_frame()},
        summary,
        final_cum_regret=summary["final_cum_regret"],
        theory_failures=summary["fallback_events"] + summary["optimism_violations"],
        retention=None if retained is None else float(retained),
        curve=run.trace.column("cum_regret"),
        baseline=baseline,
    )


def _run_linear(config: Config, seed: int, inputs: LabInputs) -> RunResult:
    params = config.linear
    game, solution = inputs.game, inputs.solution
    opponent = build_opponent(params.opponent, game, solution, inputs.opponent_policies)
    run_config = LinearConfig(
        episodes=params.episodes, mode=PlannerMode(params.mode), c_beta=params.c_beta,
        c_width=params.c_width, p=params.p, restarts=params.restarts, directions=params.directions,
        n_jobs=params.n_jobs, seed=seed, experiment=_experiment(config, Algorithm.LINEAR),
    )
    run = run_linear(game, inputs.features, run_config, opponent, solution)
    summary = dict(run.trace.summary)
    summary["elliptic_potentials"] = [list(p) for p in run.potentials]
    return RunResult(
        Algorithm.LINEAR,
        seed,
        {"trace": run.trace.to_frame()},
        summary,
        final_cum_regret=summary["final_cum_regret"],
        theory_failures=summary["optimism_violations"],
        retention=summary["theta_star_feasible_fraction"],
        curve=run.trace.column("cum_regret"),
    )


def _run_aome(config: Config, seed: int, inputs: LabInputs) -> RunResult:
    params = config.aome
    models = inputs.models
    run_config = AomeConfig(
        epsilon=params.epsilon, p=params.p, kappa=params.kappa, phi=params.phi, n1=params.n1,
        n=params.n, max_rounds=params.max_rounds, witness_rank=params.witness_rank,
        successor_level=SuccessorLevel(params.successor_level), order=Side(params.order),
        theory_constants=params.theory_constants, c=params.c, seed=seed,
        experiment=_experiment(config, Algorithm.AOME),
    )
    run = run_aome(inputs.game, models, inputs.tests, run_config)
    record = run.termination
    summary = dict(run.log.summary)
    summary["constants"] = {"phi": run.constants.phi, "n1": run.constants.n1, "n": run.constants.n}
    frame = run.log.to_frame()
    failures = (
        int(record.status == "empty_version_space")
        + int(record.certified is False)
        + int(frame["inconclusive"].sum())
        + int((frame["bracket_holds"] == False).sum())  # noqa: E712
    )
    retention = None
    if models.true_index is not None:
        retention = float(models.true_index in record.survivors)
    violation = None
    if record.status == "empty_version_space":
        violation = f"seed {seed}: the model version space emptied after {record.rounds} rounds"
    return RunResult(
        Algorithm.AOME, seed, {"rounds": frame}, summary,
        theory_failures=failures, retention=retention, violation=violation,
    )


def _run_aove(config: Config, seed: int, inputs: LabInputs) -> RunResult:
    params = config.aove
    run_config = AoveConfig(
        episodes=params.episodes, beta=params.beta, c=params.c, p=params.p,
        role=AoveRole(params.role), seed=seed, experiment=_experiment(config, Algorithm.AOVE),
    )
    opponent_values = inputs.opponent_pair_values if run_config.role is not AoveRole.P1 else None
    runs = run_aove(
        inputs.game, inputs.policies, inputs.pair_values, run_config, inputs.opponent_policies, opponent_values
    )
    summary = summarize_roles(runs)
    lead = runs["p1"] if "p1" in runs else runs["p2"]
    retentions = [r.trace.summary["truth_retention"] for r in runs.values()]
    known = [r for r in retentions if r is not None]
    return RunResult(
        Algorithm.AOVE,
        seed,
        {f"trace_{role}": run.trace.to_frame() for role, run in runs.items()},
        summary,
        final_cum_regret=lead.trace.summary["final_cum_regret"],
        theory_failures=sum(
            r.trace.summary["fallback_events"] + r.trace.summary["bracket_violations"] for r in runs.values()
        ),
        retention=min(known) if known else None,
        curve=lead.trace.column("cum_regret"),
    )


RUNNERS = {
    Algorithm.ONEMG: _run_onemg,
    Algorithm.LINEAR: _run_linear,
    Algorithm.AOME: _run_aome,
    Algorithm.AOVE: _run_aove,
}


def run_algorithm(algorithm: Algorithm, config: Config, seed: int, inputs: Optional[LabInputs] = None) -> RunResult:
    return RUNNERS[algorithm](config, seed, inputs or LabInputs(config))


def write_run(result: RunResult, run_dir: Path) -> None:
    for stem, frame in result.frames.items():
        schema = TRACE_SCHEMAS[stem][result.algorithm]
        validated = validate_data(frame, schema, f"{result.algorithm.value} seed {result.seed} {stem}", run_dir)
        write_csv(validated, run_dir / f"{stem}.csv", CSV_FLOAT_FORMAT)
    write_json(result.summary, run_dir / "summary.json")


def execute_run(
    algorithm: Algorithm,
    config: Config,
    seed: int,
    run_dir: Path,
    inputs: Optional[LabInputs] = None,
) -> RunResult:
    """Runs, writes the artifacts, then raises if the run hit an abort-level theory violation."""
    log_info(f"Running {algorithm.value} with seed {seed} into {run_dir}")
    result = run_algorithm(algorithm, config, seed, inputs)
    write_run(result, run_dir)
    if result.violation:
        raise TheoryViolation(result.violation)
    return result
