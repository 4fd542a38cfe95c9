# main.py
import sys
from pathlib import Path

# Make the src layout importable without an install
sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from markov_game_lab.harness import commands  # noqa: E402
from markov_game_lab.utils.config import load_config, parse_overrides, validate_config  # noqa: E402
from markov_game_lab.utils.config_schema import Config  # noqa: E402
from markov_game_lab.utils.constants import Algorithm  # noqa: E402
from markov_game_lab.utils.logger import log_error, log_info, log_success, setup_logging  # noqa: E402

CONFIG_PATH = Path(__file__).resolve().parent / "conf" / "config.yaml"


def main() -> int:
    """
    Entry point: `python main.py command=<name> [key.sub=value ...]`.
    """
    setup_logging()
    try:
        cfg = load_config(CONFIG_PATH, parse_overrides(sys.argv[1:]))
        config_dict = validate_config(cfg)
    except Exception as e:
        log_error(f"Could not load the configuration: {e}")
        return 2
    config = Config(**config_dict)
    setup_logging(config.logging.level, config.logging.json_logs)

    command = config.command
    if not command:
        log_error("No command specified. Use 'command=<name>', e.g., 'python main.py command=solve-ne'")
        return 2

    log_info(f"Running command: {command}")
    try:
        if command == "solve-ne":
            commands.solve_ne(config)

        elif command == "run-onemg":
            commands.run_single(config, Algorithm.ONEMG)

        elif command == "run-linear":
            commands.run_single(config, Algorithm.LINEAR)

        elif command == "run-aome":
            commands.run_single(config, Algorithm.AOME)

        elif command == "run-aove":
            commands.run_single(config, Algorithm.AOVE)

        elif command == "eluder-dim":
            commands.eluder_dim(config)

        elif command == "generate":
            commands.generate(config)

        elif command == "sweep":
            commands.run_sweep(config)

        elif command == "audit":
            commands.run_audit(config)

        else:
            log_error(f"Unknown command: {command}")
            return 2
    except Exception:
        # already logged with its traceback by the command handler
        return 1

    log_success(f"Command '{command}' finished successfully.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
