# src/markov_game_lab/utils/config_schema.py

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Paths(Section):
    output_root: str
    game: Optional[str] = None
    values: Optional[str] = None
    policies: Optional[str] = None
    opponent_policies: Optional[str] = None
    models: Optional[str] = None
    tests: Optional[str] = None
    features: Optional[str] = None
    sweep_dir: Optional[str] = None


class SolverParams(Section):
    tol: float = Field(1e-9, gt=0)


class GameSource(Section):
    generator: str = "random"
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0


class FamilyParams(Section):
    seed: int = 0
    n_decoys: int = Field(7, ge=0)
    noise: float = Field(0.5, gt=0)
    n_policies: int = Field(4, ge=1)
    n_opponent_policies: int = Field(0, ge=0)
    include_nash_policy: bool = True
    n_models: int = Field(5, ge=1)
    model_noise: float = Field(0.3, gt=0)
    n_tests: int = Field(6, ge=1)


class OpponentParams(Section):
    kind: Literal["best-response", "fixed", "schedule", "self-nash"] = "best-response"
    policy: str = "uniform"
    schedule: List[int] = Field(default_factory=list)
    cycle: bool = True


class OnemgParams(Section):
    episodes: int = Field(ge=0)
    beta: Optional[float] = Field(None, ge=0)
    c: float = Field(2.0, gt=0)
    p: float = Field(0.05, gt=0, lt=1)
    opponent: OpponentParams = Field(default_factory=OpponentParams)
    audit: bool = False


class LinearParams(Section):
    episodes: int = Field(ge=0)
    mode: Literal["diag-exact", "search"] = "diag-exact"
    c_beta: float = Field(1.0, gt=0)
    c_width: float = Field(1.0, gt=0)
    p: float = Field(0.05, gt=0, lt=1)
    restarts: int = Field(16, ge=1)
    directions: int = Field(8, ge=0)
    n_jobs: int = 1
    opponent: OpponentParams = Field(default_factory=OpponentParams)


class AomeParams(Section):
    epsilon: float = Field(0.1, gt=0)
    p: float = Field(0.05, gt=0, lt=1)
    kappa: float = Field(1.0, gt=0, le=1)
    phi: Optional[float] = Field(None, gt=0)
    n1: int = Field(500, ge=1)
    n: int = Field(500, ge=1)
    max_rounds: int = Field(50, ge=1)
    witness_rank: float = Field(1.0, gt=0)
    successor_level: Literal["next", "same"] = "next"
    order: Literal["p1", "p2"] = "p1"
    theory_constants: bool = False
    c: float = Field(1.0, gt=0)


class AoveParams(Section):
    episodes: int = Field(ge=0)
    beta: Optional[float] = Field(None, ge=0)
    c: float = Field(2.0, gt=0)
    p: float = Field(0.05, gt=0, lt=1)
    role: Literal["p1", "p2", "both"] = "p1"


class EluderParams(Section):
    eps: float = Field(0.25, gt=0)
    variant: Literal["decoupled", "coordinated"] = "decoupled"
    mode: Literal["exact", "greedy"] = "exact"
    cap: int = Field(64, ge=1)
    shared_threshold: bool = True


class SweepParams(Section):
    algorithm: Literal["onemg", "linear", "aome", "aove"] = "onemg"
    seeds: List[int] = Field(default_factory=lambda: [0])
    n_jobs: int = 1
    checkpoints: Optional[List[int]] = None

    @field_validator("seeds")
    @classmethod
    def _unique_seeds(cls, seeds: List[int]) -> List[int]:
        if not seeds:
            raise ValueError("at least one seed is required")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be unique")
        return seeds


class LoggingParams(Section):
    level: str = "INFO"
    json_logs: bool = False


class Config(Section):
    command: Optional[str] = None
    experiment: str = "default"
    seed: int = 0
    paths: Paths
    solver: SolverParams = Field(default_factory=SolverParams)
    game: GameSource = Field(default_factory=GameSource)
    families: FamilyParams = Field(default_factory=FamilyParams)
    onemg: OnemgParams
    linear: LinearParams
    aome: AomeParams = Field(default_factory=AomeParams)
    aove: AoveParams
    eluder: EluderParams = Field(default_factory=EluderParams)
    sweep: SweepParams = Field(default_factory=SweepParams)
    logging: LoggingParams = Field(default_factory=LoggingParams)
