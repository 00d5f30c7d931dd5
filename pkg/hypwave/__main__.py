import argparse
import logging
import sys
from typing import List, Optional

from rich.logging import RichHandler

from hypwave import __version__
from hypwave.checks import require_passed, run_check, selftest
from hypwave.config import parse_config
from hypwave.console import console, print_error, print_experiment_header, print_report, print_stage_header
from hypwave.exceptions import ConfigError, CriterionFailure, GuardError, SolverAbort
from hypwave.experiments import get_experiment
from hypwave.plots import emit_plots
from hypwave.report import ExperimentReport
from hypwave.runner import run, sweep

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='hypwave',
        description='hypwave - numerical lab for radial waves on hyperbolic space',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
    hypwave run configs/dispersive_decay.yaml
    hypwave sweep configs/euclidean_approx.yaml -o results/euclid
    hypwave check 7
    hypwave check morawetz -v
    hypwave selftest
        '''
    )
    parser.add_argument(
        '--version',
        action='version',
        version=f'%(prog)s {__version__}'
    )
    parser.add_argument(
        '-v', '--verbose',
        action='count',
        default=0,
        help='Log progress (-v) or solver details (-vv)'
    )
    subparsers = parser.add_subparsers(dest='command', metavar='command')

    run_parser = subparsers.add_parser('run', help='Run the experiment named in a config file')
    run_parser.add_argument('config', type=str, help='Path to a YAML run configuration')

    sweep_parser = subparsers.add_parser('sweep', help='Run a config once per schedule value and merge')
    sweep_parser.add_argument('config', type=str, help='Path to a YAML run configuration')

    check_parser = subparsers.add_parser('check', help='Run one acceptance criterion')
    check_parser.add_argument('criterion', type=str, help='Criterion number (1-15) or experiment name')

    subparsers.add_parser('selftest', help='Run the cheap acceptance criteria')

    for sub in (run_parser, sweep_parser, check_parser):
        sub.add_argument(
            '-o', '--output',
            type=str,
            help='Output directory (default: output.directory of the config, or none for check)'
        )
        sub.add_argument(
            '--no-plots',
            action='store_true',
            help='Skip plot-script emission'
        )
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format='%(message)s',
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _finish(report: ExperimentReport, output: Optional[str], plots: bool) -> int:
    print_report(report)
    if plots and output is not None:
        emit_plots(report, output)
    print_stage_header('passed' if report.passed else 'failed')
    return EXIT_PASSED if report.passed else EXIT_FAILED


def _run_config(args: argparse.Namespace, sweeping: bool) -> int:
    print_stage_header('configuration')
    config = parse_config(args.config)
    experiment = get_experiment(config.experiment)
    output = args.output or config.output.directory
    print_experiment_header(experiment.name, experiment.criterion, experiment.summary)
    print_stage_header('sweep' if sweeping else 'run')
    report = sweep(config, output) if sweeping else run(config, output)
    return _finish(report, output, not args.no_plots)


def _check(args: argparse.Namespace) -> int:
    experiment = get_experiment(args.criterion)
    print_experiment_header(experiment.name, experiment.criterion, experiment.summary)
    print_stage_header('check')
    report = run_check(experiment.name, args.output)
    status = _finish(report, args.output, not args.no_plots)
    require_passed(report)
    return status


def _selftest() -> int:
    print_stage_header('selftest')
    failed = []
    for report in selftest():
        print_report(report)
        if not report.passed:
            failed.append(report.name)
    if failed:
        raise CriterionFailure(f"selftest failed: {', '.join(failed)}")
    print_stage_header('passed')
    return EXIT_PASSED


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error('a command is required (run, sweep, check or selftest)')
    configure_logging(args.verbose)

    try:
        if args.command == 'run':
            return _run_config(args, sweeping=False)
        if args.command == 'sweep':
            return _run_config(args, sweeping=True)
        if args.command == 'check':
            return _check(args)
        return _selftest()
    except (ConfigError, GuardError) as e:
        print_error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except SolverAbort as e:
        print_error(f"Solver aborted: {e}")
        return EXIT_ABORT
    except CriterionFailure as e:
        print_error(str(e))
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
