"""
Log-log power-law fits and curve comparisons.
"""

__all__ = [
    "PowerLawFit",
    "FIT_COLUMNS",
    "fit_power_law",
    "fit_mu",
    "fit_decay_exponent",
    "intermediate_window",
    "plateau_window",
    "small_l_window",
    "find_crossing",
    "find_crossings",
    "power_law_crossover",
]

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

FIT_COLUMNS = (
    "quantity",
    "exponent",
    "amplitude",
    "window_lo",
    "window_hi",
    "residual",
    "n_points",
)
PLATEAU_POINTS = 5
PLATEAU_FACTOR = 4.0
WINDOW_CEILING = 0.15
CROSSOVER_FACTOR = 2.0


@dataclass(frozen=True)
class PowerLawFit:
    """
    Result of an ordinary least-squares fit of ln y = ln(amplitude) +
    exponent * ln x.

    Parameters
    ----------
        exponent      : float
                        slope in log-log space
        amplitude     : float
                        prefactor exp(intercept)
        window        : tuple of float
                        (lo, hi) extent of the x values actually used
        residual      : float
                        root-mean-square of the log residuals
        n_points      : int
                        number of points in the fit, >= 3
    """

    exponent: float
    amplitude: float
    window: tuple
    residual: float
    n_points: int

    def as_row(self, quantity):
        return {
            "quantity": quantity,
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "window_lo": self.window[0],
            "window_hi": self.window[1],
            "residual": self.residual,
            "n_points": self.n_points,
        }


def fit_power_law(xs, ys, window=None):
    """
    Fit y ~ amplitude * x**exponent on the points with lo <= x <= hi.

    Parameters
    ----------
    xs            : array-like
    ys            : array-like
    window        : tuple of float, optional
                    inclusive (lo, hi) range of x; all points when None

    Returns
    -------
    fit           : PowerLawFit

    Examples
    --------
    >>> import numpy as np
    >>> from lrtrap.analysis import fit_power_law
    >>> xs = np.arange(1.0, 11.0)
    >>> round(fit_power_law(xs, 3 * xs**2).exponent, 12)
    2.0
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise ValueError("xs and ys differ in length: %d vs %d" % (xs.size, ys.size))
    if window is None:
        mask = np.ones(xs.size, dtype=bool)
    else:
        lo, hi = window
        if lo > hi:
            raise ValueError("empty fit window (%r, %r)" % (lo, hi))
        mask = (xs >= lo) & (xs <= hi)
    x, y = xs[mask], ys[mask]
    if x.size < 3:
        raise ValueError("a power-law fit needs at least 3 points, got %d" % x.size)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data inside the window")
    lx, ly = np.log(x), np.log(y)
    reg = stats.linregress(lx, ly)
    resid = ly - (reg.intercept + reg.slope * lx)
    return PowerLawFit(
        exponent=float(reg.slope),
        amplitude=float(np.exp(reg.intercept)),
        window=(float(x.min()), float(x.max())),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(x.size),
    )


def small_l_window(n):
    """Default rank window (2, max(4, N // 10)) for the gamma fits."""
    return (2, max(4, n // 10))


def fit_mu(series, window=None):
    """
    Exponent mu of gamma_l ~ a l**mu over a window of ranks.

    Parameters
    ----------
    series        : GammaSeries
    window        : tuple of int, optional
                    inclusive rank range, default small_l_window(N)
    """
    if window is None:
        window = small_l_window(len(series))
    return fit_power_law(series.ranks, series.gammas, window)


def plateau_window(times, values):
    """
    Time range where the values lie within [4 * floor, max(0.15, 8 * floor)],
    with floor the mean of the last five values.

    Above 0.15 the curve is still leaving its initial plateau and its local
    log-slope is steeper than the asymptotic power law; within a few
    multiples of the floor the slowest modes take over.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    floor = values[-PLATEAU_POINTS:].mean()
    lo = PLATEAU_FACTOR * floor
    hi = max(WINDOW_CEILING, 2.0 * lo)
    mask = (values >= lo) & (values <= hi) & (values > 0)
    if np.count_nonzero(mask) < 3:
        raise ValueError(
            "no intermediate regime between %.3e (%g x plateau) and %.3e"
            % (lo, PLATEAU_FACTOR, hi)
        )
    return float(times[mask].min()), float(times[mask].max())


def intermediate_window(curve):
    """Default decay-fit window of a DecayCurve, see plateau_window."""
    return plateau_window(curve.times, curve.values)


def fit_decay_exponent(curve, window=None):
    """
    Fit Pi(t) ~ t**s over a time window; s is to be compared with -1/mu.

    Parameters
    ----------
    curve         : DecayCurve
    window        : tuple of float, optional
                    inclusive time range, default intermediate_window(curve)
    """
    if window is None:
        window = intermediate_window(curve)
        logger.debug("intermediate window for %s: %r", curve.label.value, window)
    return fit_power_law(curve.times, curve.values, window)


def _check_grids(a, b):
    if a.grid != b.grid:
        raise ValueError("curves are sampled on different time grids")


def _sign_changes(a, b):
    d = a.values - b.values
    nonzero = np.flatnonzero(d != 0)
    s = np.sign(d[nonzero])
    flips = np.flatnonzero(s[1:] != s[:-1])
    return d, [(nonzero[i], nonzero[i + 1]) for i in flips]


def _interpolate(t, d, i, k):
    frac = d[i] / (d[i] - d[k])
    if t[i] > 0:
        return float(np.exp(np.log(t[i]) + frac * (np.log(t[k]) - np.log(t[i]))))
    return float(t[i] + frac * (t[k] - t[i]))


def find_crossing(a, b):
    """
    First time where a - b changes sign, interpolated linearly in (ln t, a - b)
    between the bracketing grid points. None when the sign never changes.
    """
    _check_grids(a, b)
    d, brackets = _sign_changes(a, b)
    if not brackets:
        return None
    i, k = brackets[0]
    return _interpolate(a.times, d, i, k)


def find_crossings(a, b):
    """All sign changes of a - b, in increasing time."""
    _check_grids(a, b)
    d, brackets = _sign_changes(a, b)
    return [_interpolate(a.times, d, i, k) for i, k in brackets]


def power_law_crossover(curve, fit, factor=CROSSOVER_FACTOR):
    """
    Time at which a decay curve leaves its fitted power law for good: the
    first point after the fit window where the curve lies below
    fit.amplitude * t**fit.exponent by more than `factor`, interpolated in
    ln t. None when the curve stays within `factor` up to the last time.

    Parameters
    ----------
    curve         : DecayCurve
    fit           : PowerLawFit
                    usually fit_decay_exponent(curve)
    factor        : float
                    tolerated ratio fit / curve, > 1
    """
    if not factor > 1:
        raise ValueError("crossover factor must exceed 1, got %r" % (factor,))
    t = curve.times
    after = np.flatnonzero(t > fit.window[1])
    if after.size == 0:
        return None
    values = curve.values[after]
    with np.errstate(divide="ignore"):
        excess = (
            np.log(fit.amplitude)
            + fit.exponent * np.log(t[after])
            - np.log(np.clip(values, 0.0, None))
            - np.log(factor)
        )
    beyond = np.flatnonzero(excess > 0)
    if beyond.size == 0:
        return None
    k = beyond[0]
    if k == 0:
        return float(t[after[0]])
    return _interpolate(t[after], excess, k - 1, k)
