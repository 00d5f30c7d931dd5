from .__version__ import __version__
from .console.formatting import print_error, print_experiment_header, print_stage_header
from .console.output import print_report
from .exceptions import (
    ConfigError,
    CriterionFailure,
    DomainTooSmallError,
    GuardError,
    HypwaveError,
    ResolutionError,
    SolverAbort,
)

__all__ = [
    'print_stage_header',
    'print_experiment_header',
    'print_report',
    'print_error',
    'HypwaveError',
    'GuardError',
    'DomainTooSmallError',
    'ResolutionError',
    'ConfigError',
    'SolverAbort',
    'CriterionFailure',
    '__version__'
]
