# src/markov_game_lab/harness/commands.py
from pathlib import Path
from typing import Any, Dict, Optional

from markov_game_lab.complexity.assumptions import check_assumptions, check_witness_domination
from markov_game_lab.complexity.eluder import EluderReport, minimax_eluder_dimension
from markov_game_lab.games.markov_game import GameSolution
from markov_game_lab.games.solvers import duality_gap
from markov_game_lab.harness.audit import AuditReport, audit_sweep
from markov_game_lab.harness.generators import generate_features
from markov_game_lab.harness.inputs import LabInputs
from markov_game_lab.harness.plotting import plot_regret_curves
from markov_game_lab.harness.runs import RunResult, execute_run
from markov_game_lab.harness.sweep import SweepSummary, sweep, sweep_root
from markov_game_lab.utils.cli_utils import write_json
from markov_game_lab.utils.config_schema import Config
from markov_game_lab.utils.constants import Algorithm, EluderMode, EluderVariant
from markov_game_lab.utils.data_loader import (
    save_features,
    save_game,
    save_model_family,
    save_policy_family,
    save_test_family,
    save_value_family,
)
from markov_game_lab.utils.exceptions import AuditFailure, SweepFailure
from markov_game_lab.utils.logger import log_error, log_info, log_success


def output_dir(config: Config, *parts: str) -> Path:
    return Path(config.paths.output_root, config.experiment, *parts)


def solve_ne(config: Config) -> GameSolution:
    try:
        inputs = LabInputs(config)
        game, solution = inputs.game, inputs.solution
        gap = duality_gap(game, solution.pi_star, solution.nu_star)
        payload = {
            "value": solution.value,
            "duality_gap": gap,
            "v_star": solution.v_star.tolist(),
            "pi_star": solution.pi_star.probs.tolist(),
            "nu_star": solution.nu_star.probs.tolist(),
        }
        path = write_json(payload, output_dir(config, "solve-ne", "solution.json"))
        log_success(f"V*(x1) = {solution.value:.9g} (duality gap {gap:.3g}); saved to {path}")
        return solution
    except Exception as e:
        log_error(f"An error occurred while solving the game: {e}", exc_info=True)
        raise


def run_single(config: Config, algorithm: Algorithm) -> RunResult:
    try:
        run_dir = output_dir(config, algorithm.value, f"seed_{config.seed}")
        result = execute_run(algorithm, config, config.seed, run_dir)
        if result.curve is not None:
            plot_regret_curves(
                {config.seed: result.curve}, run_dir / "regret.svg",
                f"{algorithm.value}: cumulative regret (seed {config.seed})", baseline=result.baseline,
            )
        log_success(f"{algorithm.value} run written to {run_dir}")
        return result
    except Exception as e:
        log_error(f"An error occurred during the {algorithm.value} run: {e}", exc_info=True)
        raise


def eluder_dim(config: Config) -> EluderReport:
    try:
        inputs = LabInputs(config)
        params = config.eluder
        variant = EluderVariant(params.variant)
        policies = inputs.policies if variant is EluderVariant.COORDINATED and config.paths.policies else None
        report = minimax_eluder_dimension(
            inputs.game,
            inputs.values,
            params.eps,
            EluderMode(params.mode),
            variant,
            policies=policies,
            opponents=inputs.opponent_policies,
            cap=params.cap,
            shared=params.shared_threshold,
        )
        path = write_json(report.to_dict(), output_dir(config, "eluder-dim", "eluder.json"))
        log_success(f"{variant.value} Eluder dimension at eps={params.eps}: {report.dimension}; saved to {path}")
        return report
    except Exception as e:
        log_error(f"An error occurred while computing the Eluder dimension: {e}", exc_info=True)
        raise


def generate(config: Config) -> Dict[str, Path]:
    """Writes the game and every family the learners run on, then checks their assumptions."""
    try:
        inputs = LabInputs(config)
        out = output_dir(config, "generated")
        game = inputs.game
        written = {
            "game": save_game(game, out / "game.yaml"),
            "features": save_features(generate_features(game), out / "features.yaml"),
            "values": save_value_family(inputs.values, out / "values.yaml"),
            "pair_values": save_value_family(inputs.pair_values, out / "pair_values.yaml"),
            "policies": save_policy_family(inputs.policies, out / "policies.yaml"),
            "models": save_model_family(inputs.models, out / "models.yaml"),
            "tests": save_test_family(inputs.tests, out / "tests.yaml"),
        }
        if inputs.opponent_policies is not None:
            written["opponent_policies"] = save_policy_family(inputs.opponent_policies, out / "opponent_policies.yaml")
        reports: Dict[str, Any] = {
            "values": {k: r.to_dict() for k, r in check_assumptions(game, inputs.values).items()},
            "pair_values": {
                k: r.to_dict()
                for k, r in check_assumptions(
                    game, inputs.pair_values, inputs.policies, inputs.opponent_policies
                ).items()
            },
            "witness_domination": check_witness_domination(inputs.models, inputs.tests, game).to_dict(),
        }
        written["assumptions"] = write_json(reports, out / "assumptions.json")
        for name, path in written.items():
            log_info(f"{name}: {path}")
        log_success(f"Generated inputs written to {out}")
        return written
    except Exception as e:
        log_error(f"An error occurred while generating inputs: {e}", exc_info=True)
        raise


def run_sweep(config: Config) -> SweepSummary:
    try:
        summary = sweep(config)
        if summary.failed_seeds:
            raise SweepFailure(summary.failed_seeds, len(summary.rows))
        return summary
    except Exception as e:
        log_error(f"An error occurred during the sweep: {e}", exc_info=True)
        raise


def run_audit(config: Config, root: Optional[Path] = None) -> AuditReport:
    try:
        if root is None:
            root = Path(config.paths.sweep_dir) if config.paths.sweep_dir else sweep_root(
                config, Algorithm(config.sweep.algorithm)
            )
        report = audit_sweep(root)
        if not report.clean:
            raise AuditFailure(f"{len(report.diffs)} stored values disagree with their recomputation", report.diffs)
        return report
    except Exception as e:
        log_error(f"An error occurred during the audit: {e}", exc_info=True)
        raise
