"""
Closed forms and perturbative estimates for the decay rates gamma_l.

Mode indices l are 1-based and follow the nearest-neighbour labelling
theta_l = pi (N - l) / N, so l = N is the uniform state with E = 0 and small
l sit at the top of the band.
"""

__all__ = [
    "GammaSource",
    "NNIAnalytic",
    "GammaSeries",
    "nni_analytic",
    "gamma_first_order",
    "gamma_nni_analytic",
    "gamma_nnn_expansion",
    "overlap_first_order",
    "overlap_correction_full",
    "overlap_correction_nnn",
    "overlaps_nnn",
    "overlap_exact",
    "overlap_table",
    "mu_local",
    "mu_terms",
    "continuum_survival",
]

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from .dynamics import CurveLabel, DecayCurve
from .model import ChainConfig, build_h0, build_h_nu_full
from .special import i0e, i0e_quadrature
from .utils import INFINITY, DegenerateGapError, cache_readonly, is_nni

logger = logging.getLogger(__name__)

GAP_TOL = 1.0e-10


class GammaSource(enum.Enum):
    EXACT_DIAG = "exact_diag"
    FIRST_ORDER_NUMERIC = "first_order_numeric"
    NNI_ANALYTIC = "nni_analytic"
    NNN_APPROX = "nnn_approx"


class NNIAnalytic:
    """
    Closed-form spectrum of the nearest-neighbour chain without traps.

    Parameters
    ----------
        n_nodes       : int
                        number of nodes N

    Attributes
    ----------
        theta         : array
                        theta_l = pi (N - l) / N, l = 1..N (theta_N = 0)
        energies      : array
                        E_l = 2 - 2 cos(theta_l); E_N = 0
        vectors       : array
                        N x N, column l-1 is |Psi_l^(0)>:
                        sqrt(2/N) cos[(2j-1) theta_l / 2], and sqrt(1/N) for
                        l = N
    """

    def __init__(self, n_nodes):
        if n_nodes < 2:
            raise ValueError("a chain needs at least 2 nodes, got %r" % n_nodes)
        self.n_nodes = int(n_nodes)
        self._cache = {}

    @cache_readonly
    def modes(self):
        return np.arange(1, self.n_nodes + 1)

    @cache_readonly
    def theta(self):
        n = self.n_nodes
        return np.pi * (n - self.modes) / n

    @cache_readonly
    def energies(self):
        return 2.0 - 2.0 * np.cos(self.theta)

    @cache_readonly
    def vectors(self):
        n = self.n_nodes
        j = np.arange(1, n + 1)[:, None]
        v = np.sqrt(2.0 / n) * np.cos((2 * j - 1) * self.theta[None, :] / 2.0)
        v[:, -1] = np.sqrt(1.0 / n)
        return v

    @cache_readonly
    def end_overlaps(self):
        """<1|Psi_l^(0)> for every l."""
        return self.vectors[0].copy()


def nni_analytic(n):
    return NNIAnalytic(n)


@dataclass(frozen=True, eq=False)
class GammaSeries:
    """
    Decay rates ranked in ascending order.

    Parameters
    ----------
        gammas        : array
                        ascending, all >= -1e-12
        source        : GammaSource
        config        : ChainConfig
        modes         : array, optional
                        1-based mode index of each ranked entry
    """

    gammas: np.ndarray
    source: GammaSource
    config: Optional[ChainConfig] = None
    modes: Optional[np.ndarray] = None

    def __post_init__(self):
        gammas = np.array(self.gammas, dtype=float).ravel()
        if self.config is not None and gammas.size != self.config.n_nodes:
            raise ValueError(
                "series has %d entries for N=%d" % (gammas.size, self.config.n_nodes)
            )
        if gammas.min() < -1.0e-12:
            raise ValueError(
                "%s series has negative decay rates (min %.3e)"
                % (self.source.value, gammas.min())
            )
        if np.any(np.diff(gammas) < 0):
            raise ValueError("gamma series must be sorted ascending")
        gammas.flags.writeable = False
        object.__setattr__(self, "gammas", gammas)

    def __len__(self):
        return self.gammas.size

    @property
    def ranks(self):
        return np.arange(1, self.gammas.size + 1)

    @property
    def config_snapshot(self):
        return self.config

    @classmethod
    def from_unsorted(cls, gammas, source, config=None):
        gammas = np.asarray(gammas, dtype=float)
        order = np.argsort(gammas, kind="stable")
        return cls(gammas[order], source, config, order + 1)

    @classmethod
    def from_spectrum(cls, spectrum, config=None):
        """EXACT_DIAG series from a QuantumSpectrum."""
        return cls.from_unsorted(spectrum.gamma, GammaSource.EXACT_DIAG, config)


def gamma_first_order(h0_states, cfg):
    """
    First-order decay rates gamma_l = Gamma sum_{m in M} |<m|Psi_l^(0)>|^2.

    Parameters
    ----------
    h0_states     : array or NNIAnalytic
                    N x N, orthonormal trap-free eigenvectors as columns
    cfg           : ChainConfig

    Returns
    -------
    series        : GammaSeries
                    FIRST_ORDER_NUMERIC, ranked ascending
    """
    states = h0_states.vectors if isinstance(h0_states, NNIAnalytic) else h0_states
    states = np.asarray(states)
    if states.shape != (cfg.n_nodes, cfg.n_nodes):
        raise ValueError(
            "state table has shape %r for N=%d" % (states.shape, cfg.n_nodes)
        )
    rows = np.asarray(cfg.traps, dtype=int) - 1
    gammas = cfg.gamma * np.sum(np.abs(states[rows]) ** 2, axis=0)
    return GammaSeries.from_unsorted(gammas, GammaSource.FIRST_ORDER_NUMERIC, cfg)


def _check_end_traps(cfg):
    if sorted(cfg.traps) != [1, cfg.n_nodes]:
        raise ValueError(
            "closed forms hold for traps at both chain ends, got %r" % (cfg.traps,)
        )


def _gamma_nni_by_mode(cfg):
    n = cfg.n_nodes
    theta = NNIAnalytic(n).theta
    gamma = (2.0 * cfg.gamma / n) * (1.0 + np.cos(theta))
    gamma[-1] = 2.0 * cfg.gamma / n
    return gamma


def _gamma_lri_by_mode(n, gamma, theta):
    """gamma_l^(1) = (8 Gamma / N) cos(theta/2) sin(2 theta) sin(theta/2)"""
    return (
        (8.0 * gamma / n)
        * np.cos(theta / 2.0)
        * np.sin(2.0 * theta)
        * np.sin(theta / 2.0)
    )


def gamma_nni_analytic(cfg):
    """
    Nearest-neighbour decay rates for traps at both ends:
    gamma_N = 2 Gamma / N and gamma_l = (2 Gamma / N)(1 + cos theta_l).
    """
    _check_end_traps(cfg)
    return GammaSeries.from_unsorted(
        _gamma_nni_by_mode(cfg), GammaSource.NNI_ANALYTIC, cfg
    )


def gamma_nnn_expansion(cfg):
    """
    gamma_l ~ gamma_l^(0) + 2**(-nu) gamma_l^(1) for traps at both ends.

    For nu = INFINITY the correction vanishes and the NNI series is returned
    (still tagged NNN_APPROX). The expansion assumes 2**(-nu) << 1; below
    nu = 3 the small-l entries turn negative and construction fails.
    """
    _check_end_traps(cfg)
    gamma = _gamma_nni_by_mode(cfg)
    if not cfg.is_nni:
        theta = NNIAnalytic(cfg.n_nodes).theta
        gamma = gamma + 2.0 ** (-cfg.nu) * _gamma_lri_by_mode(
            cfg.n_nodes, cfg.gamma, theta
        )
    return GammaSeries.from_unsorted(gamma, GammaSource.NNN_APPROX, cfg)


def overlap_first_order(cfg, h_nu=None):
    """
    First-order end overlaps of the trap-free long-range states,

    <1|Psi_l> = <1|Psi_l^(0)>
                + sum_{r != l} <Psi_r^(0)|H_nu|Psi_l^(0)> / (E_l^(0) - E_r^(0))
                  <1|Psi_r^(0)>.

    Parameters
    ----------
    cfg           : ChainConfig
                    finite nu
    h_nu          : DenseOperator, optional
                    perturbation; defaults to the full correction
                    build_h_nu_full(cfg)

    Returns
    -------
    overlaps      : array
                    indexed by l - 1
    """
    if cfg.is_nni:
        raise ValueError("the long-range correction vanishes for nu = inf")
    nni = NNIAnalytic(cfg.n_nodes)
    if h_nu is None:
        h_nu = build_h_nu_full(cfg)
    v0 = nni.vectors
    coupling = v0.T @ h_nu.real @ v0
    # gaps[r, l] = E_l - E_r
    gaps = nni.energies[None, :] - nni.energies[:, None]
    off = ~np.eye(cfg.n_nodes, dtype=bool)
    tiny = off & (np.abs(gaps) < GAP_TOL)
    if tiny.any():
        r, l = np.argwhere(tiny)[0]  # noqa E741
        raise DegenerateGapError(l + 1, r + 1, abs(gaps[r, l]))
    coeff = np.zeros_like(coupling)
    coeff[off] = coupling[off] / gaps[off]
    correction = v0[0] @ coeff
    logger.debug(
        "first-order end overlaps (N=%d nu=%s): max |correction| %.3e",
        cfg.n_nodes,
        cfg.nu,
        np.abs(correction).max(),
    )
    return v0[0] + correction


def overlap_correction_full(l, cfg):  # noqa E741
    """
    First-order <1|Psi_l> with the full long-range correction, for one mode.
    """
    _check_mode(l, cfg.n_nodes)
    return float(overlap_first_order(cfg)[l - 1])


def _check_mode(l, n):  # noqa E741
    if int(l) != l or not 1 <= l <= n:
        raise ValueError("mode index %r outside 1..%d" % (l, n))


def overlaps_nnn(n, nu):
    """
    Closed-form next-nearest-neighbour end overlaps for all modes,

    <1|Psi_l> ~ <1|Psi_l^(0)> + 2**(-nu) sqrt(2/N) sin(2 theta_l) sin(theta_l/2).
    """
    if is_nni(nu):
        raise ValueError("the long-range correction vanishes for nu = inf")
    nni = NNIAnalytic(n)
    theta = nni.theta
    correction = np.sqrt(2.0 / n) * np.sin(2.0 * theta) * np.sin(theta / 2.0)
    return nni.end_overlaps + 2.0 ** (-nu) * correction


def overlap_correction_nnn(l, n, nu):  # noqa E741
    _check_mode(l, n)
    return float(overlaps_nnn(n, nu)[l - 1])


def overlap_exact(cfg):
    """
    <1|Psi_l> from diagonalising the trap-free H0(nu).

    Each exact state is assigned to the nearest-neighbour mode it overlaps
    most (one-to-one), and its sign is chosen so that <Psi_l^(0)|Psi_l> > 0.
    """
    nni = NNIAnalytic(cfg.n_nodes)
    _, vectors = linalg.eigh(build_h0(cfg).real)
    overlap = nni.vectors.T @ vectors
    rows, cols = optimize.linear_sum_assignment(-np.abs(overlap))
    matched = vectors[:, cols[np.argsort(rows)]]
    signs = np.sign(overlap[rows, cols][np.argsort(rows)])
    signs[signs == 0] = 1.0
    return matched[0] * signs


def overlap_table(cfg, h_nu_nnn=None):
    """
    Three-way comparison of end overlaps against the unperturbed ones.

    Parameters
    ----------
    cfg           : ChainConfig
                    finite nu
    h_nu_nnn      : DenseOperator, optional
                    when given, an extra column evaluates the first-order sum
                    with this truncated operator

    Returns
    -------
    table         : pandas.DataFrame
                    columns l, overlap_exact, overlap_eq8, overlap_eq9,
                    diff_exact, diff_eq8, diff_eq9: the first-order sum with
                    the full correction (eq8) and the closed
                    next-nearest-neighbour form (eq9)
    """
    nni = NNIAnalytic(cfg.n_nodes)
    reference = nni.end_overlaps
    exact = overlap_exact(cfg)
    first = overlap_first_order(cfg)
    nnn = overlaps_nnn(cfg.n_nodes, cfg.nu)
    table = pd.DataFrame(
        {
            "l": nni.modes,
            "overlap_exact": exact,
            "overlap_eq8": first,
            "overlap_eq9": nnn,
            "diff_exact": exact - reference,
            "diff_eq8": first - reference,
            "diff_eq9": nnn - reference,
        }
    )
    if h_nu_nnn is not None:
        truncated = overlap_first_order(cfg, h_nu_nnn)
        table["overlap_nnn_operator"] = truncated
        table["diff_nnn_operator"] = truncated - reference
    return table


def mu_local(series, l):  # noqa E741
    """
    Local log-slope [ln gamma_{l+1} - ln gamma_l] / [ln(l+1) - ln l] of a
    ranked series.
    """
    if int(l) != l or not 1 <= l < len(series):
        raise ValueError("rank %r needs a successor in 1..%d" % (l, len(series)))
    g0, g1 = series.gammas[l - 1], series.gammas[l]
    if g0 <= 0 or g1 <= 0:
        raise ValueError("non-positive decay rate at rank %d or %d" % (l, l + 1))
    return float((np.log(g1) - np.log(g0)) / (np.log(l + 1) - np.log(l)))


def mu_terms(l, n, nu=INFINITY):  # noqa E741
    """
    Analytic pieces of the exponent estimate mu ~ mu0 + 2**(-nu) mu1 at mode l.

    Returns
    -------
    (mu0, mu1)    : tuple of float
                    mu0 from the nearest-neighbour rates; mu1 from the
                    next-nearest-neighbour correction (independent of nu,
                    which is accepted for symmetry with the series API)
    """
    if int(l) != l or not 1 <= l <= n - 2:
        raise ValueError("mode %r needs 1 <= l <= N-2" % (l,))
    theta = NNIAnalytic(n).theta[[l - 1, l]]
    g0 = 1.0 + np.cos(theta)
    ratio = _gamma_lri_by_mode(n, 1.0, theta) / ((2.0 / n) * g0)
    dlog = np.log(l + 1) - np.log(l)
    mu0 = (np.log(g0[1]) - np.log(g0[0])) / dlog
    mu1 = (ratio[1] - ratio[0]) / dlog
    return float(mu0), float(mu1)


def continuum_survival(a, grid, method="series"):
    """
    Continuum limit exp(-a t) I0(a t) of the mean survival probability, with
    a = 4 Gamma / N.

    Parameters
    ----------
    a             : float
                    rate, > 0
    grid          : TimeGrid
    method        : str
                    "series" (power series / asymptotic expansion) or
                    "quadrature" (integral representation)

    Returns
    -------
    curve         : DecayCurve
                    label CONTINUUM_BESSEL
    """
    if not a > 0:
        raise ValueError("continuum rate must be positive, got %r" % (a,))
    x = a * grid.points
    if method == "series":
        values = i0e(x)
    elif method == "quadrature":
        values = i0e_quadrature(x)
    else:
        raise ValueError("unknown method %r" % (method,))
    return DecayCurve(grid, values, CurveLabel.CONTINUUM_BESSEL)
