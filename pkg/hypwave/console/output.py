from typing import Any, List

from rich.table import Table

from ..report import PASSED, PARTIAL, ExperimentReport

# Import shared console instance
from .formatting import console

STATUS_STYLES = {PASSED: "green bold", PARTIAL: "yellow bold"}


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_cell(v) for v in value) + "]"
    if isinstance(value, bool):
        return "✓" if value else "✗"
    return str(value)


def report_table(report: ExperimentReport) -> Table:
    """Build a table of the report's metric rows, one column per metric."""
    metrics: List[str] = []
    for row in report.rows:
        for name in row:
            if name != "key" and name not in metrics:
                metrics.append(name)
    table = Table(title=report.name, show_lines=False)
    table.add_column("key", style="cyan")
    for name in metrics:
        table.add_column(name, justify="right")
    for row in report.rows:
        table.add_row(_cell(row["key"]), *(_cell(row.get(name, "")) for name in metrics))
    return table


def print_report(report: ExperimentReport) -> None:
    """Print the metric rows of a report, then each check and the overall status.

    Args:
        report: A finished experiment or sweep report
    """
    if report.rows:
        console.print(report_table(report))
    for name, passed in sorted(report.checks.items()):
        mark = "[green]✓[/green]" if passed else "[red]✗[/red]"
        threshold = report.thresholds.get(name)
        suffix = f" (threshold {threshold:g})" if threshold is not None else ""
        console.print(f"  {mark} {name}{suffix}")
    for error in report.errors:
        console.print(f"  [yellow]![/yellow] {error}")
    style = STATUS_STYLES.get(report.status, "red bold")
    console.print(f"[{style}]{report.name}: {report.status}[/{style}]")
