"""
Command-line front end.

Exit codes: 0 on success, 2 for usage or invalid input, 3 for numerical
failures. Settings resolve as flags, then ``--config`` (a flat TOML file with
keys named like the long flags), then built-in defaults.
"""

__all__ = ["main"]

import functools
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import __version__
from .analysis import fit_mu, fit_power_law, plateau_window, small_l_window
from .dynamics import TimeGrid
from .figures import ALIASES, PRESETS, compute_decay, resolve, run_preset
from .model import (
    ChainConfig,
    build_classical_transfer,
    build_h_nu_nnn,
    build_quantum_hamiltonian,
)
from .output import (
    RunManifest,
    classical_spectrum_frame,
    decay_frame,
    fit_frame,
    group_header,
    read_csv,
    spectrum_frame,
    write_csv,
    write_plot_script,
)
from .perturbation import GammaSeries, GammaSource, continuum_survival, overlap_table
from .spectral import Ordering, decompose_classical, decompose_quantum
from .utils import NumericalError, format_nu, parse_nu

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class NumericalFailure(click.ClickException):
    exit_code = 3


class NuType(click.ParamType):
    name = "nu"

    def convert(self, value, param, ctx):
        try:
            return parse_nu(value)
        except ValueError:
            self.fail("%r is not a number or 'inf'" % (value,), param, ctx)


class IntListType(click.ParamType):
    """Comma-separated integers; TOML arrays are accepted as well."""

    name = "list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [s for s in str(value).split(",") if s.strip()]
        try:
            return tuple(int(s) for s in items)
        except ValueError:
            self.fail("%r is not a list of integers" % (value,), param, ctx)


class FloatListType(click.ParamType):
    name = "list"

    def __init__(self, parse=float):
        self.parse = parse

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [s for s in str(value).split(",") if s.strip()]
        try:
            return tuple(self.parse(s) for s in items)
        except ValueError:
            self.fail("%r is not a list of numbers" % (value,), param, ctx)


class WindowType(FloatListType):
    name = "lo,hi"

    def convert(self, value, param, ctx):
        window = super().convert(value, param, ctx)
        if len(window) != 2:
            self.fail(
                "a window needs exactly two values, got %r" % (value,), param, ctx
            )
        return window


def load_config(path):
    """
    Read a flat TOML file into a click default map. Top-level keys apply to
    every command; a table named after a command overrides them there.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    shared = {
        k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)
    }
    default_map = {}
    for name in main.commands:
        values = dict(shared)
        values.update(
            {k.replace("-", "_"): v for k, v in data.get(name, {}).items()}
        )
        default_map[name] = values
    return default_map


_N_OPTION = click.option(
    "--n", "n", type=int, default=100, show_default=True, help="number of nodes N"
)
_TRAPS_OPTION = click.option(
    "--traps",
    type=IntListType(),
    default=None,
    help="1-based trap nodes [default: 1,N]",
)
_CHAIN_OPTIONS = (
    _N_OPTION,
    click.option(
        "--nu",
        type=NuType(),
        default="inf",
        show_default=True,
        help="interaction exponent, or inf",
    ),
    click.option(
        "--gamma", type=float, default=1.0, show_default=True, help="trap strength"
    ),
    _TRAPS_OPTION,
)


def chain_options(func):
    for option in reversed(_CHAIN_OPTIONS):
        func = option(func)
    return func


def out_option(func):
    return click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False),
        default=".",
        show_default=True,
        help="output directory",
    )(func)


def _config(n, nu, gamma, traps):
    return ChainConfig(n, nu, gamma, traps if traps else (1, n))


def _out_dir(out_dir):
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def command(func):
    """
    Time the command, map library errors to exit codes and write the
    manifest last. The wrapped function returns (config, outputs, notes).
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        ctx = click.get_current_context()
        try:
            config, outputs, notes = func(*args, **kwargs)
        except NumericalError as err:
            raise NumericalFailure(str(err)) from err
        except (ValueError, FileNotFoundError) as err:
            raise click.UsageError(str(err), ctx) from err
        manifest = RunManifest(
            command=ctx.info_name,
            config=config,
            outputs=outputs,
            tool_version=__version__,
            wall_time=time.perf_counter() - start,
            notes=notes,
        )
        manifest.write(_out_dir(kwargs["out_dir"]) / MANIFEST_NAME)
        for path in outputs:
            click.echo(str(path))

    return wrapper


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="log debug diagnostics to stderr")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="TOML file with default option values",
)
@click.version_option(__version__, prog_name="lrtrap")
@click.pass_context
def main(ctx, verbose, config_path):
    """Trapping of excitations on chains with long-range couplings."""
    logging.basicConfig(
        format=LOG_FORMAT,
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
    )
    if config_path:
        try:
            ctx.default_map = load_config(config_path)
        except tomllib.TOMLDecodeError as err:
            raise click.BadParameter(str(err), ctx, param_hint="--config") from err


@main.command()
@chain_options
@click.option(
    "--ordering",
    type=click.Choice([o.value for o in Ordering]),
    default=Ordering.BY_GAMMA_ASC.value,
    show_default=True,
)
@click.option(
    "--quantum/--no-quantum",
    default=True,
    show_default=True,
    help="write the spectrum of H = H0 - i Gamma",
)
@click.option(
    "--classical", is_flag=True, help="write the transfer-matrix spectrum"
)
@out_option
@command
def spectrum(n, nu, gamma, traps, ordering, quantum, classical, out_dir):
    """Spectrum of H = H0 - i Gamma and/or of the transfer matrix."""
    if not (quantum or classical):
        raise click.UsageError("--no-quantum needs --classical")
    cfg = _config(n, nu, gamma, traps)
    out = _out_dir(out_dir)
    outputs, notes = [], {"ordering": ordering}
    if quantum:
        spec = decompose_quantum(build_quantum_hamiltonian(cfg), Ordering(ordering))
        outputs.append(write_csv(spectrum_frame(spec), out / "spectrum.csv", cfg))
        notes["n_vanishing"] = spec.n_vanishing
    if classical:
        spec = decompose_classical(build_classical_transfer(cfg))
        outputs.append(
            write_csv(
                classical_spectrum_frame(spec), out / "classical_spectrum.csv", cfg
            )
        )
    return cfg, outputs, notes


@main.command()
@chain_options
@click.option("--points", type=int, default=400, show_default=True, help="grid points")
@click.option("--t-min", type=float, default=None, help="first time [default: 0.1]")
@click.option(
    "--t-max",
    type=float,
    default=None,
    help="last time [default: 1e7 if gamma < 0.01, else 1e5]",
)
@click.option(
    "--continuum", is_flag=True, help="add exp(-at) I0(at) with a = 4 Gamma / N"
)
@click.option(
    "--method",
    type=click.Choice(["series", "quadrature"]),
    default="series",
    show_default=True,
    help="evaluation of the continuum curve",
)
@click.option("--plot", is_flag=True, help="write a gnuplot script next to the CSV")
@out_option
@command
def decay(n, nu, gamma, traps, points, t_min, t_max, continuum, method, plot, out_dir):
    """Mean survival probabilities, quantum and classical."""
    cfg = _config(n, nu, gamma, traps)
    out = _out_dir(out_dir)
    default = TimeGrid.default(gamma, points).points
    grid = TimeGrid.log(
        t_min if t_min is not None else default[0],
        t_max if t_max is not None else default[-1],
        points,
    )
    curves, _ = compute_decay(cfg, grid)
    if continuum:
        curves.append(continuum_survival(4.0 * gamma / n, grid, method))
    path = write_csv(decay_frame(curves), out / "decay.csv", cfg)
    outputs = [path]
    if plot:
        outputs.append(
            write_plot_script(
                out / "decay.gp",
                path,
                [c.label.value for c in curves],
                title=cfg.header(),
            )
        )
    notes = {
        "points": points,
        "t_min": "%.17g" % grid.points[0],
        "t_max": "%.17g" % grid.points[-1],
    }
    return cfg, outputs, notes


@main.command()
@_N_OPTION
@click.option("--nu", type=NuType(), required=True, help="finite interaction exponent")
@click.option(
    "--paper-literal-diag",
    "--literal-diag",
    "literal_diag",
    is_flag=True,
    help="use 2^-nu on interior and 2^(1-nu) on boundary diagonals in the "
    "next-nearest-neighbour operator",
)
@out_option
@command
def perturb(n, nu, literal_diag, out_dir):
    """End overlaps <1|Psi_l>: exact, first order and closed form."""
    if nu == np.inf:
        raise click.BadParameter(
            "no long-range correction for nu = inf", param_hint="--nu"
        )
    cfg = ChainConfig(n, nu)
    out = _out_dir(out_dir)
    table = overlap_table(cfg, build_h_nu_nnn(cfg, literal=literal_diag))
    outputs = [write_csv(table, out / "perturbation.csv", cfg)]
    return cfg, outputs, {"literal_diag": literal_diag}


@main.command()
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="spectrum or decay CSV",
)
@click.option(
    "--window", type=WindowType(), default=None, help="inclusive lo,hi fit range"
)
@click.option(
    "--label",
    default="quantum_exact",
    show_default=True,
    help="curve to fit in a decay CSV",
)
@out_option
@command
def fit(input_path, window, label, out_dir):
    """Power-law fit of gamma_l versus l, or of a decay curve versus t."""
    frame = read_csv(input_path)
    out = _out_dir(out_dir)
    if {"l", "gamma"} <= set(frame.columns):
        series = GammaSeries.from_unsorted(
            frame["gamma"].to_numpy(), GammaSource.EXACT_DIAG
        )
        if window is None:
            window = small_l_window(len(series))
        row = fit_mu(series, window).as_row("mu")
    elif {"t", "value"} <= set(frame.columns):
        if "label" in frame.columns:
            frame = frame[frame["label"] == label]
            if frame.empty:
                raise ValueError("no rows labelled %r in %s" % (label, input_path))
        t, values = frame["t"].to_numpy(), frame["value"].to_numpy()
        if window is None:
            window = plateau_window(t, values)
        row = fit_power_law(t, values, window).as_row("decay_%s" % label)
    else:
        raise ValueError("%s is neither a spectrum nor a decay table" % input_path)
    header = _first_line(input_path) or "source=%s" % Path(input_path).name
    outputs = [write_csv(fit_frame([row]), out / "fit.csv", header)]
    return None, outputs, {"input": Path(input_path).name}


def _first_line(path):
    with open(path, encoding="utf-8") as fh:
        line = fh.readline().strip()
    return line[1:].strip() if line.startswith("#") else ""


@main.command()
@click.argument("name", type=click.Choice(sorted(PRESETS) + sorted(ALIASES)))
@_N_OPTION
@click.option("--points", type=int, default=400, show_default=True, help="grid points")
@click.option("--plot", is_flag=True, help="write gnuplot scripts next to the CSVs")
@out_option
@command
def figure(name, n, points, plot, out_dir):
    """Regenerate the data of a standard plot."""
    preset = resolve(name)
    outputs, notes = run_preset(preset.name, out_dir, n=n, points=points, plot=plot)
    notes = dict(notes, preset=preset.name, description=preset.description)
    return None, outputs, notes


def sweep_cell(n, nu, gamma, traps, window):
    """
    One (nu, gamma) cell: spectrum table and mu fit row. Runs in a worker
    process.
    """
    cfg = ChainConfig(n, nu, gamma, traps)
    spec = decompose_quantum(build_quantum_hamiltonian(cfg))
    series = GammaSeries.from_spectrum(spec, cfg)
    row = fit_mu(series, window).as_row("mu")
    return nu, gamma, spectrum_frame(spec), row


@main.command()
@_N_OPTION
@_TRAPS_OPTION
@click.option(
    "--nu-list", type=FloatListType(parse_nu), default="3,4,5,inf", show_default=True
)
@click.option(
    "--gamma-list", type=FloatListType(), default="0.001,1", show_default=True
)
@click.option(
    "--window",
    type=WindowType(),
    default=None,
    help="inclusive rank range of the mu fit",
)
@click.option(
    "--jobs", type=int, default=None, help="worker processes [default: CPU count]"
)
@out_option
@command
def sweep(n, traps, nu_list, gamma_list, window, jobs, out_dir):
    """Spectra and mu fits over a grid of nu and Gamma values."""
    if not nu_list:
        raise click.BadParameter("empty list", param_hint="--nu-list")
    if not gamma_list:
        raise click.BadParameter("empty list", param_hint="--gamma-list")
    traps = traps if traps else (1, n)
    if window is None:
        window = small_l_window(n)
    # validate every cell before any work starts
    for nu in nu_list:
        for gamma in gamma_list:
            ChainConfig(n, nu, gamma, traps)
    cells = [(n, nu, g, traps, window) for nu in nu_list for g in gamma_list]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as ex:
            results = list(ex.map(sweep_cell, *zip(*cells)))
    else:
        results = [sweep_cell(*cell) for cell in cells]
    results.sort(key=lambda r: (r[0], r[1]))

    out = _out_dir(out_dir)
    outputs, rows = [], []
    for nu, gamma, table, row in results:
        cfg = ChainConfig(n, nu, gamma, traps)
        name = "spectrum_nu%s_gamma%s.csv" % (format_nu(nu), "%.17g" % gamma)
        outputs.append(write_csv(table, out / name, cfg))
        rows.append(dict(nu=format_nu(nu), gamma=gamma, **row))
        logger.info(
            "sweep cell nu=%s gamma=%g: mu=%.4f", format_nu(nu), gamma, row["exponent"]
        )
    frame = pd.DataFrame(rows)
    header = group_header(n, sorted(set(nu_list)), sorted(set(gamma_list)), traps)
    outputs.append(write_csv(frame, out / "sweep.csv", header))
    notes = {"jobs": jobs, "cells": len(cells)}
    return None, outputs, notes


if __name__ == "__main__":
    main()
