"""Experiment reports: metric rows, threshold checks, fits and provenance."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

PASSED = "passed"
FAILED = "failed"
PARTIAL = "partial"

SERIES_COLUMNS = (
    "t",
    "energy_EV",
    "energy_nl",
    "l2",
    "l6",
    "l10",
    "strichartz_accum_5_10",
    "morawetz_accum",
    "led_accum",
)


def json_safe(value: Any) -> Any:
    """Convert numpy scalars and arrays, and non-finite floats, into JSON values."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


@dataclass
class ExperimentReport:
    """Outcome of one experiment or one merged sweep.

    Attributes:
        name: registry name of the experiment
        rows: one metric record per parameter key; every row carries "key"
        thresholds: declared threshold values by check name
        checks: pass/fail of each declared check
        fits: fitted exponents, orders and calibrated constants
        series_data: dense channels to persist, by series name
        series: CSV file names written for each series
        provenance: config hash and package version
        errors: failures recorded for individual sweep indices
    """
    name: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    thresholds: Dict[str, float] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    fits: Dict[str, Any] = field(default_factory=dict)
    series_data: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    series: Dict[str, str] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.errors:
            return PARTIAL
        if not self.checks:
            return FAILED
        return PASSED if all(self.checks.values()) else FAILED

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def add_row(self, key: Any, **metrics: Any) -> Dict[str, Any]:
        row = {"key": key}
        row.update(metrics)
        self.rows.append(row)
        return row

    def check(self, name: str, passed: bool, threshold: Optional[float] = None) -> bool:
        self.checks[name] = bool(passed)
        if threshold is not None:
            self.thresholds[name] = float(threshold)
        return bool(passed)

    def add_series(self, name: str, traj: Any) -> None:
        """Keep the fixed series columns of a trajectory for persistence."""
        self.series_data[name] = {column: np.asarray(traj.series[column]) for column in SERIES_COLUMNS}

    def column(self, metric: str) -> List[Any]:
        return [row[metric] for row in self.rows if metric in row]

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            "name": self.name,
            "status": self.status,
            "rows": self.rows,
            "thresholds": self.thresholds,
            "checks": self.checks,
            "fits": self.fits,
            "series": self.series,
            "provenance": self.provenance,
            "errors": self.errors,
        })
