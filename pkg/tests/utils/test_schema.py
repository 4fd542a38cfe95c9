# tests/utils/test_schema.py

import pandas as pd
import pandera.pandas as pa
import pytest

from markov_game_lab.utils.schema import validate_data


@pytest.fixture
def onemg_trace() -> pd.DataFrame:
    """Two well-formed ONEMG trace rows."""
    return pd.DataFrame(
        {
            "k": [1, 2],
            "chosen": [0, 2],
            "regret_increment": [0.5, 0.0],
            "cum_regret": [0.5, 0.5],
            "vspace_size": [4, 2],
            "optimism_gap": [0.1, 0.0],
            "fallback_flag": [False, False],
            "truth_survives": [True, None],
        }
    )


def test_valid_trace_passes(onemg_trace, tmp_path):
    """
    Tests that a well-formed trace validates unchanged.
    """
    validated = validate_data(onemg_trace, "onemg_trace", "test trace", tmp_path)
    assert len(validated) == 2
    assert not (tmp_path / "validation_failures.csv").exists()


def test_invalid_trace_writes_failure_report(onemg_trace, tmp_path):
    """
    Tests that a bad episode index raises and leaves a failure report behind.
    """
    onemg_trace.loc[0, "k"] = 0
    with pytest.raises(pa.errors.SchemaErrors):
        validate_data(onemg_trace, "onemg_trace", "test trace", tmp_path)
    assert (tmp_path / "validation_failures.csv").exists()


def test_extra_column_is_rejected(onemg_trace, tmp_path):
    """
    Tests the strict column set.
    """
    onemg_trace["stray"] = 1
    with pytest.raises(pa.errors.SchemaErrors):
        validate_data(onemg_trace, "onemg_trace", "test trace", tmp_path)


def test_unknown_schema():
    """
    Tests a schema name that is not registered.
    """
    with pytest.raises(ValueError):
        validate_data(pd.DataFrame(), "no_such_schema", "test")
