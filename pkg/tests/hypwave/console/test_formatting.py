import pytest
from unittest.mock import patch

from rich.markdown import Markdown
from rich.panel import Panel
from rich.rule import Rule

from hypwave.console.formatting import print_error, print_experiment_header, print_stage_header


@pytest.fixture
def mock_console():
    with patch('hypwave.console.formatting.console') as mock:
        yield mock


def test_print_stage_header(mock_console):
    """Known stages get their icon and title case."""
    print_stage_header('sweep')
    rules = [c.args[0] for c in mock_console.print.call_args_list if c.args and isinstance(c.args[0], Rule)]
    assert len(rules) == 1
    assert str(rules[0].title) == "🔁 Sweep"
    assert mock_console.print.call_count == 3


def test_print_stage_header_unknown_stage(mock_console):
    print_stage_header('post processing')
    rule = mock_console.print.call_args_list[1].args[0]
    assert str(rule.title) == "🚀 Post Processing"


def test_print_experiment_header(mock_console):
    print_experiment_header("morawetz", 11, "Morawetz accumulation stays bounded")
    panel = mock_console.print.call_args.args[0]
    assert isinstance(panel, Panel)
    assert isinstance(panel.renderable, Markdown)
    assert panel.renderable.markup == "**morawetz** (criterion 11)\n\nMorawetz accumulation stays bounded"


def test_print_experiment_header_without_summary(mock_console):
    print_experiment_header("heat_kernel", 1)
    assert mock_console.print.call_args.args[0].renderable.markup == "**heat_kernel** (criterion 1)"


def test_print_error(mock_console):
    print_error("Solver aborted")
    panel = mock_console.print.call_args.args[0]
    assert panel.title == "Error"
    assert panel.renderable.markup == "Solver aborted"
