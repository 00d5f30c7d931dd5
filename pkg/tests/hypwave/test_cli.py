import pytest
from unittest.mock import patch

from hypwave import __version__
from hypwave.__main__ import EXIT_ABORT, EXIT_CONFIG, EXIT_FAILED, EXIT_PASSED, build_parser, main
from hypwave.exceptions import ConfigError, GuardError, SolverAbort
from hypwave.report import ExperimentReport


def passing_report(name="strichartz_admissible"):
    report = ExperimentReport(name)
    report.check("reference_triples", True)
    return report


def failing_report(name="morawetz"):
    report = ExperimentReport(name)
    report.check("sextic_bound", False)
    return report


@pytest.fixture(autouse=True)
def quiet_console():
    """Silence console output and logging setup for every CLI test."""
    with patch("hypwave.__main__.configure_logging"), \
            patch("hypwave.__main__.print_report"), \
            patch("hypwave.__main__.print_stage_header"), \
            patch("hypwave.__main__.print_experiment_header"), \
            patch("hypwave.__main__.print_error") as mock_error:
        yield mock_error


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(f"experiment: strichartz_admissible\noutput:\n  directory: {tmp_path / 'out'}\n")
    return path


def test_parser_subcommands():
    parser = build_parser()
    args = parser.parse_args(["check", "7", "-o", "out", "--no-plots"])
    assert args.command == "check"
    assert args.criterion == "7"
    assert args.output == "out"
    assert args.no_plots
    assert parser.parse_args(["-vv", "selftest"]).verbose == 2


def test_command_required():
    with pytest.raises(SystemExit):
        main([])


def test_version(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_run_config_end_to_end(config_file, tmp_path):
    """A real run of the exact admissibility experiment writes its report and passes."""
    assert main(["run", str(config_file), "--no-plots"]) == EXIT_PASSED
    assert (tmp_path / "out" / "strichartz_admissible.json").exists()


def test_output_flag_overrides_config(config_file, tmp_path):
    with patch("hypwave.__main__.run", return_value=passing_report()) as mock_run, \
            patch("hypwave.__main__.emit_plots") as mock_plots:
        assert main(["run", str(config_file), "-o", str(tmp_path / "elsewhere")]) == EXIT_PASSED
    assert mock_run.call_args.args[1] == str(tmp_path / "elsewhere")
    mock_plots.assert_called_once()


def test_sweep_dispatch(config_file):
    with patch("hypwave.__main__.sweep", return_value=failing_report()) as mock_sweep:
        assert main(["sweep", str(config_file), "--no-plots"]) == EXIT_FAILED
    mock_sweep.assert_called_once()


def test_check_passes_and_fails():
    with patch("hypwave.__main__.run_check", return_value=passing_report()) as mock_check:
        assert main(["check", "6"]) == EXIT_PASSED
    mock_check.assert_called_once_with("strichartz_admissible", None)

    with patch("hypwave.__main__.run_check", return_value=failing_report()):
        assert main(["check", "morawetz"]) == EXIT_FAILED


def test_unknown_criterion_is_config_error(quiet_console):
    assert main(["check", "42"]) == EXIT_CONFIG
    assert "Configuration error" in quiet_console.call_args.args[0]


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigError("grid.h", "must be positive"), EXIT_CONFIG),
        (GuardError("domain too small"), EXIT_CONFIG),
        (SolverAbort("energy is not finite", 1.0, 3), EXIT_ABORT),
    ],
)
def test_errors_map_to_exit_codes(error, code):
    with patch("hypwave.__main__.run_check", side_effect=error):
        assert main(["check", "7"]) == code


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_selftest_exit_codes(quiet_console):
    with patch("hypwave.__main__.selftest", return_value=[passing_report(), passing_report("multiplier_bounds")]):
        assert main(["selftest"]) == EXIT_PASSED

    with patch("hypwave.__main__.selftest", return_value=[passing_report(), failing_report("heat_kernel")]):
        assert main(["selftest"]) == EXIT_FAILED
    assert "heat_kernel" in quiet_console.call_args.args[0]
