"""
CSV, manifest and plot-script writers shared by the command-line tools.

Every file is written under a ``.partial`` name and renamed into place once
complete.
"""

__all__ = [
    "FLOAT_FORMAT",
    "RunManifest",
    "atomic_write",
    "write_csv",
    "read_csv",
    "spectrum_frame",
    "classical_spectrum_frame",
    "decay_frame",
    "fit_frame",
    "write_plot_script",
    "write_table_plot_script",
    "publish",
    "group_header",
]

import contextlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .analysis import FIT_COLUMNS
from .dynamics import CurveLabel
from .utils import format_nu

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
PARTIAL_SUFFIX = ".partial"

_CLASSICAL = (CurveLabel.CLASSICAL_EXACT, CurveLabel.CLASSICAL_DOMINANT)


@contextlib.contextmanager
def atomic_write(path):
    """
    Open ``<path>.partial`` for writing and rename it to `path` on success.
    On failure the partial file is left behind for inspection.
    """
    path = Path(path)
    partial = path.with_name(path.name + PARTIAL_SUFFIX)
    with open(partial, "w", newline="", encoding="utf-8") as fh:
        yield fh
    os.replace(partial, path)
    logger.info("wrote %s", path)


def group_header(n, nus, gammas, traps):
    """Header for files that span several configurations."""
    return "N=%d nu=%s gamma=%s traps=%s" % (
        n,
        ",".join(format_nu(nu) for nu in nus),
        ",".join(FLOAT_FORMAT % g for g in gammas),
        ",".join(str(m) for m in traps),
    )


def write_csv(frame, path, header):
    """
    Write `frame` with a leading ``# <header>`` comment line.

    Parameters
    ----------
    frame         : pandas.DataFrame
    path          : str or Path
    header        : str or ChainConfig
                    configuration line; ChainConfig instances use their
                    own header()
    """
    if not isinstance(header, str):
        header = header.header()
    with atomic_write(path) as fh:
        fh.write("# %s\n" % header)
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return Path(path)


def read_csv(path):
    return pd.read_csv(path, comment="#")


def spectrum_frame(spectrum):
    """Columns l, epsilon, gamma in the spectrum's ordering."""
    return pd.DataFrame(
        {
            "l": np.arange(1, spectrum.dim + 1),
            "epsilon": spectrum.epsilon,
            "gamma": spectrum.gamma,
        }
    )


def classical_spectrum_frame(spectrum):
    return pd.DataFrame(
        {"l": np.arange(1, spectrum.dim + 1), "lambda": spectrum.lambdas}
    )


def decay_frame(curves):
    """
    Long-format table of several curves, one row per (curve, time).

    Classical values are clipped at zero here; the curves themselves keep
    their raw values.
    """
    frames = []
    for curve in curves:
        frame = curve.to_frame()
        if curve.label in _CLASSICAL:
            frame["value"] = frame["value"].clip(lower=0.0)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def fit_frame(rows):
    return pd.DataFrame(list(rows), columns=list(FIT_COLUMNS))


def write_plot_script(path, csv_path, labels, title="", logscale="xy"):
    """
    gnuplot script plotting the `value` column of a long-format decay CSV,
    one line per label. The script only selects rows; it computes nothing.
    """
    csv_name = Path(csv_path).name
    lines = [
        'set datafile separator ","',
        "set logscale %s" % logscale if logscale else "unset logscale",
        'set xlabel "t"',
        'set ylabel "survival probability"',
        'set title "%s"' % title,
    ]
    plots = [
        '"%s" skip 2 using 1:(strcol(3) eq "%s" ? $2 : 1/0) with lines title "%s"'
        % (csv_name, label, label)
        for label in labels
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    with atomic_write(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)


def write_table_plot_script(
    path, curves, xlabel, ylabel, title="", logscale="", style="lines"
):
    """
    gnuplot script drawing columns of wide CSV tables.

    Parameters
    ----------
    path          : str or Path
    curves        : iterable of tuple
                    (csv_path, columns, x, y, label) where `columns` lists
                    the CSV column names and `x`, `y` name the two plotted
    xlabel        : str
    ylabel        : str
    title         : str
    logscale      : str
                    gnuplot axes to put on a log scale, "" for none
    style         : str
                    gnuplot plotting style
    """
    lines = [
        'set datafile separator ","',
        "set logscale %s" % logscale if logscale else "unset logscale",
        'set xlabel "%s"' % xlabel,
        'set ylabel "%s"' % ylabel,
        'set title "%s"' % title,
    ]
    plots = []
    for csv_path, columns, x, y, label in curves:
        columns = list(columns)
        plots.append(
            '"%s" skip 2 using %d:%d with %s title "%s"'
            % (
                Path(csv_path).name,
                columns.index(x) + 1,
                columns.index(y) + 1,
                style,
                label,
            )
        )
    if not plots:
        raise ValueError("nothing to plot")
    lines.append("plot " + ", \\\n     ".join(plots))
    with atomic_write(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)


def publish(paths, out_dir):
    """
    Move finished files from a staging directory into `out_dir`, keeping
    their names. Returns the new paths in the given order.
    """
    out_dir = Path(out_dir)
    published = []
    for path in paths:
        target = out_dir / Path(path).name
        os.replace(path, target)
        published.append(target)
    logger.info("published %d files into %s", len(published), out_dir)
    return published


@dataclass
class RunManifest:
    """
    Flat ``key = value`` record of one command invocation, written last.

    Parameters
    ----------
        command       : str
        config        : ChainConfig or None
        outputs       : list of Path
        tool_version  : str
        wall_time     : float
                        seconds
        notes         : dict
                        extra resolved settings
    """

    command: str
    config: object = None
    outputs: list = field(default_factory=list)
    tool_version: str = ""
    wall_time: float = 0.0
    notes: dict = field(default_factory=dict)

    def items(self):
        yield "command", self.command
        if self.config is not None:
            yield "n", str(self.config.n_nodes)
            yield "nu", format_nu(self.config.nu)
            yield "gamma", FLOAT_FORMAT % self.config.gamma
            yield "traps", ",".join(str(m) for m in self.config.traps)
        for key in sorted(self.notes):
            yield key, str(self.notes[key])
        yield "outputs", ",".join(Path(p).name for p in self.outputs)
        yield "tool_version", self.tool_version
        yield "wall_time", "%.3f" % self.wall_time

    def write(self, path):
        missing = [str(p) for p in self.outputs if not Path(p).exists()]
        if missing:
            raise FileNotFoundError("outputs missing: %s" % ", ".join(missing))
        with atomic_write(path) as fh:
            for key, value in self.items():
                fh.write("%s = %s\n" % (key, value))
        return Path(path)
