"""Acceptance criteria runnable by number or experiment name."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .config import RunConfig, config_from_mapping
from .exceptions import CriterionFailure
from .experiments import get_experiment
from .report import ExperimentReport
from .runner import run

logger = logging.getLogger(__name__)

# cheap criteria: exact admissibility, multiplier quadrature and a coarse heat-kernel pair
SELFTEST: Tuple[Tuple[int, Dict[str, Any]], ...] = (
    (6, {}),
    (9, {}),
    (1, {"schedules": {"h": [4e-3, 2e-3]}}),
)


def criterion_config(id_or_name: Union[str, int], overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Default configuration of a criterion, with optional section overrides."""
    experiment = get_experiment(id_or_name)
    mapping: Dict[str, Any] = {"experiment": experiment.name}
    mapping.update(overrides or {})
    return config_from_mapping(mapping)


def require_passed(report: ExperimentReport) -> ExperimentReport:
    """Raise CriterionFailure naming the failed checks unless the report passed."""
    if report.passed:
        return report
    failed = sorted(name for name, ok in report.checks.items() if not ok)
    details = ", ".join(failed + report.errors) or "no checks evaluated"
    raise CriterionFailure(f"{report.name} {report.status}: {details}")


def run_check(
    id_or_name: Union[str, int],
    output_dir: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentReport:
    """Run one acceptance criterion; outputs are written only when a directory is given."""
    config = criterion_config(id_or_name, overrides)
    return run(config, output_dir, write=output_dir is not None)


def selftest(output_dir: Optional[Union[str, Path]] = None) -> List[ExperimentReport]:
    reports = []
    for criterion, overrides in SELFTEST:
        report = run_check(criterion, output_dir, overrides)
        logger.info("selftest criterion %d: %s", criterion, report.status)
        reports.append(report)
    return reports
