from rich.console import Console
from rich.markdown import Markdown
from rich.panel import Panel
from rich.rule import Rule

console = Console()


def print_stage_header(stage: str) -> None:
    """Print a green rule announcing a command stage.

    Args:
        stage: Stage name, shown in title case after its icon
    """
    # single-width emojis keep the rule on one line
    icons = {
        'configuration': '📝',
        'run': '🌊',
        'sweep': '🔁',
        'check': '🔎',
        'selftest': '🧪',
        'outputs': '💾',
        'passed': '✅',
        'failed': '❌',
    }

    stage_title = stage.title()
    icon = icons.get(stage.lower(), '🚀')

    console.print()
    console.print(Rule(f"{icon} {stage_title}", style="green bold"))
    console.print()


def print_experiment_header(name: str, criterion: int, summary: str = "") -> None:
    """Print the experiment being run in a yellow panel. The summary is rendered as Markdown.

    Args:
        name: Registry name of the experiment
        criterion: Acceptance criterion number
        summary: One-line description
    """
    body = f"**{name}** (criterion {criterion})"
    if summary:
        body += f"\n\n{summary}"
    console.print(Panel(Markdown(body), title="🔬 Experiment", border_style="yellow bold"))


def print_error(message: str) -> None:
    """Show a configuration, guard or solver error in a red panel.

    Args:
        message: Markdown text of the error
    """
    console.print(Panel(Markdown(message), title="Error", border_style="red bold"))
