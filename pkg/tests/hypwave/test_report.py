import json
from types import SimpleNamespace

import numpy as np
import pytest

from hypwave.report import FAILED, PARTIAL, PASSED, SERIES_COLUMNS, ExperimentReport, json_safe


def test_status_follows_checks_and_errors():
    report = ExperimentReport("demo")
    assert report.status == FAILED
    report.check("first", True)
    assert report.status == PASSED
    report.check("second", np.bool_(False), threshold=0.5)
    assert report.status == FAILED
    assert report.thresholds == {"second": 0.5}
    report.errors.append("index 1 (h=0.01): boom")
    assert report.status == PARTIAL
    assert not report.passed


def test_rows_and_columns():
    report = ExperimentReport("demo")
    row = report.add_row(2.0, error=0.1)
    row["extra"] = 1
    report.add_row(4.0, error=0.05)
    assert report.column("error") == [0.1, 0.05]
    assert report.column("extra") == [1]
    assert report.rows[0]["key"] == 2.0


def test_json_safe_conversions():
    value = {
        1: np.float64(0.5),
        "array": np.array([1.0, np.inf]),
        "flag": np.bool_(True),
        "count": np.int64(3),
        "nested": (float("nan"), "text"),
    }
    assert json_safe(value) == {
        "1": 0.5,
        "array": [1.0, "inf"],
        "flag": True,
        "count": 3,
        "nested": ["nan", "text"],
    }


def test_to_dict_is_json_serializable():
    report = ExperimentReport("demo")
    report.add_row(1.0, value=np.float64(2.0), series=np.arange(3.0))
    report.fits["slope"] = np.float64(-1.5)
    report.check("ok", True)
    data = report.to_dict()
    assert data["status"] == PASSED
    assert json.loads(json.dumps(data))["rows"] == [{"key": 1.0, "value": 2.0, "series": [0.0, 1.0, 2.0]}]
    assert set(data) == {"name", "status", "rows", "thresholds", "checks", "fits", "series", "provenance", "errors"}


def test_add_series_keeps_fixed_columns():
    series = {name: np.arange(4.0) for name in SERIES_COLUMNS}
    series["shadow_energy"] = np.zeros(4)
    report = ExperimentReport("demo")
    report.add_series("run", SimpleNamespace(series=series))
    assert tuple(report.series_data["run"]) == SERIES_COLUMNS

    with pytest.raises(KeyError):
        report.add_series("partial", SimpleNamespace(series={"t": np.zeros(2)}))
