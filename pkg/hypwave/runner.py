"""Run and sweep experiments, and persist their reports and series.

Reports are JSON with sorted keys; series and metric tables are CSV with a
fixed column order and repr float formatting, so identical configurations
produce byte-identical files.
"""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .__version__ import __version__
from .config import RunConfig, config_hash, worker_count
from .exceptions import ConfigError
from .experiments import Experiment, get_experiment
from .report import SERIES_COLUMNS, ExperimentReport, json_safe

logger = logging.getLogger(__name__)


def provenance(config: RunConfig) -> Dict[str, str]:
    return {"config_hash": config_hash(config), "version": __version__}


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (dict, list, tuple, np.ndarray)):
        return json.dumps(json_safe(value), sort_keys=True)
    if value is None:
        return ""
    return str(value)


def write_series(path: Union[str, Path], data: Dict[str, np.ndarray]) -> Path:
    """CSV with the fixed series columns, one line per recorded step."""
    path = Path(path)
    length = len(data[SERIES_COLUMNS[0]])
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(SERIES_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for i in range(length):
            writer.writerow({column: repr(float(data[column][i])) for column in SERIES_COLUMNS})
    return path


def write_rows(path: Union[str, Path], rows: List[Dict[str, Any]]) -> Path:
    """CSV of the metric rows: "key" first, then every metric in sorted order."""
    path = Path(path)
    metrics = sorted({name for row in rows for name in row if name != "key"})
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["key"] + metrics, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _format(row.get(name)) for name in ["key"] + metrics})
    return path


def write_report(path: Union[str, Path], report: ExperimentReport) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_outputs(report: ExperimentReport, directory: Union[str, Path]) -> Path:
    """Write series CSVs, the metric table and the report JSON; returns the report path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, data in sorted(report.series_data.items()):
        filename = f"{report.name}_{name}.csv"
        write_series(directory / filename, data)
        report.series[name] = filename
    if report.rows:
        write_rows(directory / f"{report.name}_rows.csv", report.rows)
    path = write_report(directory / f"{report.name}.json", report)
    logger.info("wrote %s (%d series)", path, len(report.series))
    return path


def run(config: RunConfig, output_dir: Optional[Union[str, Path]] = None, write: bool = True) -> ExperimentReport:
    """Execute the configured experiment.

    Args:
        config: validated run configuration
        output_dir: overrides config.output.directory
        write: persist the report and series

    Raises:
        SolverAbort: propagated with the time and step of the failure
    """
    experiment = get_experiment(config.experiment)
    logger.info("running %s (criterion %d)", experiment.name, experiment.criterion)
    report = experiment.run(config)
    report.provenance = provenance(config)
    if write:
        write_outputs(report, output_dir or config.output.directory)
    return report


def _sweep_schedule(config: RunConfig, experiment: Experiment):
    name = config.sweep.over or experiment.sweep_key
    if name is None:
        raise ConfigError("sweep.over", f"{experiment.name} has no default schedule; name one")
    values = config.schedules.get(name)
    if not values:
        raise ConfigError(f"schedules.{name}", "a sweep needs a nonempty schedule")
    return name, values


def _run_index(experiment: Experiment, config: RunConfig, index: int) -> ExperimentReport:
    logger.debug("sweep %s index %d start", experiment.name, index)
    report = ExperimentReport(experiment.name)
    experiment.compute(config, report)
    logger.debug("sweep %s index %d done", experiment.name, index)
    return report


def sweep(config: RunConfig, output_dir: Optional[Union[str, Path]] = None, write: bool = True) -> ExperimentReport:
    """Run one schedule entry per index on a bounded pool and merge in schedule order.

    A failing index is recorded in `errors`; the merge continues and the
    merged status becomes "partial".

    Raises:
        ConfigError: for an empty or missing schedule, or a bad HYPWAVE_WORKERS
    """
    experiment = get_experiment(config.experiment)
    name, values = _sweep_schedule(config, experiment)
    workers = min(worker_count(), len(values))
    logger.info("sweeping %s over %s (%d values, %d workers)", experiment.name, name, len(values), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_index, experiment, config.for_schedule_value(name, value), i)
            for i, value in enumerate(values)
        ]
        merged = ExperimentReport(experiment.name)
        for i, (value, future) in enumerate(zip(values, futures)):
            try:
                part = future.result()
            except Exception as e:
                merged.errors.append(f"index {i} ({name}={value:g}): {e}")
                logger.warning("sweep index %d failed: %s: %s", i, type(e).__name__, e)
                continue
            merged.rows.extend(part.rows)
            if part.fits:
                merged.fits[f"{name}={value:g}"] = part.fits
            for series_name, data in part.series_data.items():
                merged.series_data[f"{i:02d}_{series_name}"] = data
    experiment.evaluate(merged, config)
    merged.provenance = provenance(config)
    if write:
        write_outputs(merged, output_dir or config.output.directory)
    return merged
