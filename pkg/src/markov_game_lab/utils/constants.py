# src/markov_game_lab/utils/constants.py
from enum import Enum

# --- Numerical tolerances ---
PROBABILITY_TOL = 1e-12
SOLVER_TOL = 1e-9
SOLVER_MAX_ITER = 10_000
IDENTITY_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
NORM_TOL = 1e-12

# --- Game defaults ---
DEFAULT_REWARD_RANGE = (-1.0, 1.0)
TEST_FUNCTION_BOUND = 2.0

# --- Family construction ---
PRODUCT_EXPANSION_CAP = 100_000
DECOY_RETRY_CAP = 100

# --- Complexity calculators ---
ELUDER_MEASURE_CAP = 64

# --- Harness ---
SUBLINEARITY_RATIO = 0.6
MIN_CHECKPOINTS = 5
REGRET_LOG_FLOOR = 1e-9
SVG_HASH_SALT = "markov-game-lab"
CSV_FLOAT_FORMAT = "%.12g"


class Side(Enum):
    """Which player a policy belongs to (or which one is held fixed)."""

    P1 = "p1"
    P2 = "p2"

    @property
    def other(self) -> "Side":
        return Side.P2 if self is Side.P1 else Side.P1


class OpponentKind(Enum):
    BEST_RESPONSE = "best-response"
    FIXED = "fixed"
    SCHEDULE = "schedule"
    SELF_NASH = "self-nash"


class PlannerMode(Enum):
    DIAG_EXACT = "diag-exact"
    SEARCH = "search"


class AoveRole(Enum):
    P1 = "p1"
    P2 = "p2"
    BOTH = "both"


class EluderMode(Enum):
    EXACT = "exact"
    GREEDY = "greedy"


class EluderVariant(Enum):
    DECOUPLED = "decoupled"
    COORDINATED = "coordinated"


class SuccessorLevel(Enum):
    NEXT = "next"
    SAME = "same"


class Algorithm(Enum):
    ONEMG = "onemg"
    LINEAR = "linear"
    AOME = "aome"
    AOVE = "aove"
