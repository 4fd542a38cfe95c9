# src/markov_game_lab/utils/schema.py
from pathlib import Path
from typing import Optional, cast

import pandas as pd
import pandera.pandas as pa
from pandera.typing import Series

from .logger import log_error, log_info, log_success


class RegretTraceSchema(pa.DataFrameModel):
    """Per-episode ONEMG record."""

    k: Series[int] = pa.Field(ge=1, unique=True, coerce=True)
    chosen: Series[int] = pa.Field(ge=0, coerce=True)
    regret_increment: Series[float] = pa.Field(ge=-1e-9, coerce=True)
    cum_regret: Series[float] = pa.Field(coerce=True)
    vspace_size: Series[int] = pa.Field(ge=1, coerce=True)
    optimism_gap: Series[float] = pa.Field(coerce=True)
    fallback_flag: Series[bool] = pa.Field(coerce=True)
    truth_survives: Series[object] = pa.Field(nullable=True, coerce=True)

    class Config:
        strict = True


class LinearRegretTraceSchema(pa.DataFrameModel):
    """Per-episode linear ONEMG record."""

    k: Series[int] = pa.Field(ge=1, unique=True, coerce=True)
    regret_increment: Series[float] = pa.Field(ge=-1e-9, coerce=True)
    cum_regret: Series[float] = pa.Field(coerce=True)
    planned_value: Series[float] = pa.Field(coerce=True)
    optimism_gap: Series[float] = pa.Field(coerce=True)
    theta_star_feasible: Series[bool] = pa.Field(coerce=True)
    greedy_value: Series[float] = pa.Field(coerce=True)

    class Config:
        strict = True


class AomeRoundLogSchema(pa.DataFrameModel):
    """One row per AOME round."""

    round: Series[int] = pa.Field(ge=1, unique=True, coerce=True)
    m1: Series[int] = pa.Field(ge=0, coerce=True)
    m2: Series[int] = pa.Field(ge=0, coerce=True)
    v_hat: Series[float] = pa.Field(coerce=True)
    q_m1: Series[float] = pa.Field(coerce=True)
    q_m2: Series[float] = pa.Field(coerce=True)
    bracket_holds: Series[object] = pa.Field(nullable=True, coerce=True)
    terminated: Series[bool] = pa.Field(coerce=True)
    h: Series[float] = pa.Field(nullable=True, ge=0, coerce=True)
    inconclusive: Series[bool] = pa.Field(coerce=True)
    eliminated: Series[int] = pa.Field(ge=0, coerce=True)
    survivors: Series[int] = pa.Field(ge=0, coerce=True)
    true_model_present: Series[bool] = pa.Field(coerce=True)

    class Config:
        strict = True


class PolicyRegretTraceSchema(pa.DataFrameModel):
    """Per-episode AOVE record."""

    k: Series[int] = pa.Field(ge=1, unique=True, coerce=True)
    pi_index: Series[int] = pa.Field(ge=0, coerce=True)
    f_index: Series[int] = pa.Field(ge=0, coerce=True)
    g_index: Series[int] = pa.Field(ge=0, coerce=True)
    regret_increment: Series[float] = pa.Field(ge=-1e-9, coerce=True)
    cum_regret: Series[float] = pa.Field(coerce=True)
    regret_unrestricted: Series[float] = pa.Field(ge=-1e-9, coerce=True)
    cum_regret_unrestricted: Series[float] = pa.Field(coerce=True)
    pair_space_size: Series[int] = pa.Field(ge=1, coerce=True)
    upper_bound_slack: Series[float] = pa.Field(coerce=True)
    duality_gap: Series[float] = pa.Field(ge=-1e-9, coerce=True)
    truths_survive: Series[object] = pa.Field(nullable=True, coerce=True)
    fallback_flag: Series[bool] = pa.Field(coerce=True)

    class Config:
        strict = True


class SweepSummarySchema(pa.DataFrameModel):
    """One row per seed of a sweep."""

    seed: Series[int] = pa.Field(unique=True, coerce=True)
    status: Series[str] = pa.Field(isin=["ok", "error"])
    final_cum_regret: Series[float] = pa.Field(nullable=True, coerce=True)
    theory_failures: Series[float] = pa.Field(nullable=True, ge=0, coerce=True)
    retention: Series[float] = pa.Field(nullable=True, ge=0, le=1, coerce=True)
    error: Series[str] = pa.Field(nullable=True, coerce=True)

    class Config:
        strict = True


SCHEMA_REGISTRY = {
    "onemg_trace": RegretTraceSchema,
    "linear_trace": LinearRegretTraceSchema,
    "aome_rounds": AomeRoundLogSchema,
    "aove_trace": PolicyRegretTraceSchema,
    "sweep_summary": SweepSummarySchema,
}


def validate_data(
    df: pd.DataFrame, schema_name: str, context: str, failure_dir: Optional[Path] = None
) -> pd.DataFrame:
    """
    Validates a DataFrame against a specified schema from the registry.
    """
    if schema_name not in SCHEMA_REGISTRY:
        raise ValueError(f"Schema '{schema_name}' not found in registry.")

    schema = SCHEMA_REGISTRY[schema_name]
    try:
        log_info(f"Validating schema for: {context}...")
        validated_df = schema.validate(df, lazy=True)
        log_success(f"✅ Schema validation successful for: {context}")
        return cast(pd.DataFrame, validated_df)
    except pa.errors.SchemaErrors as err:
        log_error(f"❌ Schema validation failed for: {context}")

        failure_cases = err.failure_cases
        failure_cases["failure_case"] = failure_cases["failure_case"].astype(str)
        log_error(failure_cases.groupby(["column", "check"])["failure_case"].first().to_string())

        failure_log_path = (failure_dir or Path("outputs")) / "validation_failures.csv"
        failure_log_path.parent.mkdir(parents=True, exist_ok=True)
        failure_cases.to_csv(failure_log_path, index=False)
        log_error(f"Full failure report saved to: {failure_log_path}")

        raise
