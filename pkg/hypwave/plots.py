"""Plot-script emission.

Figures are written as plain matplotlib scripts next to the CSVs they read,
so the package itself has no graphics dependency. Each script resolves its
CSV relative to its own location.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Union

from .report import ExperimentReport

logger = logging.getLogger(__name__)

SWEEP_SERIES = re.compile(r"^\d{2}_")

# channel overlaid by a sweep figure
SWEEP_CHANNELS = {
    "morawetz": "morawetz_accum",
    "local_energy_decay": "led_accum",
    "scattering": "strichartz_accum_5_10",
    "energy_conservation": "energy_EV",
}

_PRELUDE = '''import csv
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def series(name):
    return np.genfromtxt(HERE / name, delimiter=",", names=True)

'''

_DECAY = _PRELUDE + '''
data = series({csv!r})
t, y = data["t"], data["l10"]
mask = (t > 0) & (y > 0)
exponent = {exponent!r}
window = ({lo!r}, {hi!r})
anchor = np.interp(window[0], t, y)
fit_t = np.linspace(window[0], window[1], 200)

plt.loglog(t[mask], y[mask], label="L10 norm")
plt.loglog(fit_t, anchor * (fit_t / window[0]) ** exponent, "--", label="fit t^%.3f" % exponent)
plt.axvspan(window[0], window[1], alpha=0.1)
plt.xlabel("t")
plt.ylabel("||u(t)||_10")
plt.title({title!r})
plt.legend()
plt.savefig(HERE / {png!r}, dpi=150)
'''

_ERROR_VS_LAMBDA = _PRELUDE + '''
with open(HERE / {csv!r}, newline="") as handle:
    rows = [row for row in csv.DictReader(handle) if row["sup_H_error"]]
lam = np.array([float(row["key"]) for row in rows])
error = np.array([float(row["sup_H_error"]) for row in rows])
order = np.argsort(lam)

plt.loglog(lam[order], error[order], "o-", label="sup energy-norm error")
if len(lam) >= 2:
    slope, intercept = np.polyfit(np.log(lam[order]), np.log(error[order]), 1)
    plt.loglog(lam[order], np.exp(intercept) * lam[order] ** slope, "--", label="fit lambda^%.3f" % slope)
plt.xlabel("lambda")
plt.ylabel("error")
plt.title({title!r})
plt.legend()
plt.savefig(HERE / {png!r}, dpi=150)
'''

_MORAWETZ = _PRELUDE + '''
for name in {csvs!r}:
    data = series(name)
    plt.plot(data["t"], data["morawetz_accum"], label=name)
plt.xlabel("t")
plt.ylabel("accumulated sextic Morawetz term")
plt.title({title!r})
plt.legend()
plt.savefig(HERE / {png!r}, dpi=150)
'''

_SWEEP = _PRELUDE + '''
channel = {channel!r}
for name in {csvs!r}:
    data = series(name)
    plt.plot(data["t"], data[channel], label=name)
plt.xlabel("t")
plt.ylabel(channel)
plt.title({title!r})
plt.legend()
plt.savefig(HERE / {png!r}, dpi=150)
'''


def _series_files(report: ExperimentReport) -> Dict[str, str]:
    names = sorted(set(report.series) | set(report.series_data))
    return {name: report.series.get(name, f"{report.name}_{name}.csv") for name in names}


def _write(directory: Path, filename: str, text: str, written: List[Path]) -> None:
    path = directory / filename
    path.write_text(text, encoding="utf-8")
    written.append(path)
    logger.debug("plot script %s", path)


def emit_plots(report: ExperimentReport, directory: Union[str, Path]) -> List[Path]:
    """Write one plotting script per figure the report supports.

    Figures: log-log decay with the fitted line for rows carrying an exponent
    and a window, error against λ for rows carrying sup_H_error, Morawetz
    accumulation for morawetz runs, and a single overlay for sweep reports.

    Returns:
        paths of the scripts written; empty (with a warning) when the report
        has nothing to plot
    """
    directory = Path(directory)
    files = _series_files(report)
    sweep_names = [name for name in files if SWEEP_SERIES.match(name)]
    written: List[Path] = []
    directory.mkdir(parents=True, exist_ok=True)

    if sweep_names:
        channel = SWEEP_CHANNELS.get(report.name, "l10")
        _write(directory, f"{report.name}_sweep_plot.py", _SWEEP.format(
            channel=channel,
            csvs=[files[name] for name in sweep_names],
            title=f"{report.name}: {channel} across the sweep",
            png=f"{report.name}_sweep.png",
        ), written)
    else:
        for row in report.rows:
            key = str(row["key"])
            if "exponent" not in row or "window" not in row or key not in files:
                continue
            lo, hi = (float(v) for v in row["window"])
            _write(directory, f"{report.name}_decay_{key}_plot.py", _DECAY.format(
                csv=files[key],
                exponent=float(row["exponent"]),
                lo=lo,
                hi=hi,
                title=f"{report.name} ({key}): fitted exponent {float(row['exponent']):.3f}",
                png=f"{report.name}_decay_{key}.png",
            ), written)
        if report.name == "morawetz" and files:
            _write(directory, f"{report.name}_accumulation_plot.py", _MORAWETZ.format(
                csvs=list(files.values()),
                title="Morawetz accumulation",
                png=f"{report.name}_accumulation.png",
            ), written)

    if any("sup_H_error" in row for row in report.rows):
        _write(directory, f"{report.name}_error_vs_lambda_plot.py", _ERROR_VS_LAMBDA.format(
            csv=f"{report.name}_rows.csv",
            title=f"{report.name}: error against lambda",
            png=f"{report.name}_error_vs_lambda.png",
        ), written)

    if not written:
        logger.warning("%s has no series or metrics to plot; no scripts written", report.name)
    return written
