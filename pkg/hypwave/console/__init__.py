from .formatting import console, print_error, print_experiment_header, print_stage_header
from .output import print_report

__all__ = ['console', 'print_stage_header', 'print_experiment_header', 'print_error', 'print_report']
