import pytest
from unittest.mock import patch

from hypwave.checks import SELFTEST, criterion_config, require_passed, run_check, selftest
from hypwave.exceptions import ConfigError, CriterionFailure
from hypwave.report import PASSED, ExperimentReport


def test_criterion_config_by_number_and_name():
    assert criterion_config(7).experiment == "energy_conservation"
    assert criterion_config("morawetz").experiment == "morawetz"
    overridden = criterion_config(1, {"schedules": {"h": [4e-3]}})
    assert overridden.schedules["h"] == (4e-3,)
    with pytest.raises(ConfigError):
        criterion_config(99)


def test_require_passed_names_failed_checks():
    report = ExperimentReport("morawetz")
    report.check("identity_residual", True)
    assert require_passed(report) is report

    report.check("sextic_bound", False)
    report.check("order", False)
    with pytest.raises(CriterionFailure, match="morawetz failed: order, sextic_bound"):
        require_passed(report)

    partial = ExperimentReport("scattering")
    partial.errors.append("index 0 (delta=0.4): boom")
    with pytest.raises(CriterionFailure, match="scattering partial: index 0"):
        require_passed(partial)


def test_run_check_writes_only_with_directory(tmp_path):
    report = run_check(6)
    assert report.status == PASSED
    assert not any(tmp_path.iterdir())
    run_check("strichartz_admissible", tmp_path)
    assert (tmp_path / "strichartz_admissible.json").exists()


def test_selftest_runs_each_cheap_criterion():
    with patch("hypwave.checks.run_check") as mock_run:
        mock_run.side_effect = lambda criterion, output_dir, overrides: ExperimentReport(str(criterion))
        reports = selftest()
    assert [r.name for r in reports] == [str(c) for c, _ in SELFTEST]
    assert [call.args[0] for call in mock_run.call_args_list] == [6, 9, 1]


@pytest.mark.slow
def test_heat_kernel_criterion_at_selftest_resolution():
    overrides = dict(SELFTEST)[1]
    report = run_check(1, overrides=overrides)
    assert report.checks["error_at_finest_h"]
    assert report.checks["convergence_order"]
    assert report.fits["l1_mass"] == pytest.approx(1.0, abs=1e-6)
