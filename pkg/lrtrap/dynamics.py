"""
Time-domain observables: transition probabilities, mean survival
probabilities and a matrix-exponential propagation oracle.
"""

__all__ = [
    "Spacing",
    "CurveLabel",
    "TimeGrid",
    "DecayCurve",
    "quantum_transition",
    "classical_transition",
    "total_norm",
    "mean_survival_quantum",
    "mean_survival_quantum_gamma_sum",
    "mean_survival_quantum_double_sum",
    "mean_survival_classical",
    "mean_survival_classical_dominant",
    "mean_survival_classical_double_sum",
    "classical_weights",
    "classical_prefactor",
    "propagate_oracle",
]

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

from .model import ChainConfig, OperatorKind
from .utils import NumericalError, check_node, check_time, format_nu, non_trap_mask

DEFAULT_POINTS = 400
WEAK_TRAP_GAMMA = 0.01
_CHUNK = 256


class Spacing(enum.Enum):
    LINEAR = "linear"
    LOG = "log"


class CurveLabel(enum.Enum):
    QUANTUM_EXACT = "quantum_exact"
    QUANTUM_GAMMA_SUM = "quantum_gamma_sum"
    CLASSICAL_EXACT = "classical_exact"
    CLASSICAL_DOMINANT = "classical_dominant"
    CONTINUUM_BESSEL = "continuum_bessel"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """
    Strictly increasing, finite, non-negative sample times in units of the
    inverse nearest-neighbour coupling.
    """

    points: np.ndarray
    spacing: Spacing = Spacing.LOG

    def __post_init__(self):
        points = np.array(self.points, dtype=float).ravel()
        if points.size == 0:
            raise ValueError("time grid is empty")
        if not np.all(np.isfinite(points)) or points.min() < 0:
            raise ValueError("time grid must be finite and non-negative")
        if np.any(np.diff(points) <= 0):
            raise ValueError("time grid must be strictly increasing")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return (
            isinstance(other, TimeGrid)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )

    @classmethod
    def log(cls, t_min, t_max, n_points=DEFAULT_POINTS):
        if not 0 < t_min < t_max:
            raise ValueError("log grid needs 0 < t_min < t_max")
        return cls(np.logspace(np.log10(t_min), np.log10(t_max), int(n_points)))

    @classmethod
    def linear(cls, t_min, t_max, n_points=DEFAULT_POINTS):
        return cls(np.linspace(t_min, t_max, int(n_points)), Spacing.LINEAR)

    @classmethod
    def default(cls, gamma, n_points=DEFAULT_POINTS):
        """
        Log grid from 1e-1 to 1e7 for weak traps (gamma < 0.01), to 1e5
        otherwise.
        """
        t_max = 1.0e7 if gamma < WEAK_TRAP_GAMMA else 1.0e5
        return cls.log(1.0e-1, t_max, n_points)


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """
    Survival probability sampled on a TimeGrid.

    Values are kept raw; QUANTUM_GAMMA_SUM curves start at N/(N-M) and are
    exempt from the [0, 1] range check.
    """

    grid: TimeGrid
    values: np.ndarray
    label: CurveLabel
    config: Optional[ChainConfig] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.shape != self.grid.points.shape:
            raise ValueError(
                "curve has %d values for %d times" % (values.size, len(self.grid))
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("non-finite survival values in %s" % self.label.value)
        if self.label is not CurveLabel.QUANTUM_GAMMA_SUM:
            if values.min() < -1.0e-9 or values.max() > 1.0 + 1.0e-9:
                raise NumericalError(
                    "%s values leave [0, 1]: [%.3e, %.3e]"
                    % (self.label.value, values.min(), values.max())
                )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def times(self):
        return self.grid.points

    @property
    def config_snapshot(self):
        return self.config

    def to_frame(self):
        """
        Tabular form with columns t, value, label, N, nu, gamma, traps.
        """
        cfg = self.config
        n = len(self.grid)
        return pd.DataFrame(
            {
                "t": self.times,
                "value": self.values,
                "label": [self.label.value] * n,
                "N": [cfg.n_nodes if cfg else ""] * n,
                "nu": [format_nu(cfg.nu) if cfg else ""] * n,
                "gamma": [cfg.gamma if cfg else ""] * n,
                "traps": [",".join(map(str, cfg.traps)) if cfg else ""] * n,
            }
        )


def quantum_transition(spec, j, k, t):
    """
    pi_kj(t) = |sum_l exp(-gamma_l t) exp(-i epsilon_l t) <k|Psi_l><~Psi_l|j>|^2
    """
    row = check_node(k, spec.dim)
    return float(np.abs(spec.amplitudes(j, t)[row]) ** 2)


def classical_transition(spec, j, k, t):
    """
    p_kj(t) = sum_l exp(-lambda_l t) <k|Phi_l><Phi_l|j>

    Returned unclipped; rounding can leave values of order -1e-16.
    """
    row = check_node(k, spec.dim)
    return float(spec.amplitudes(j, t)[row])


def total_norm(spec, j, t):
    """Survival including trap nodes, sum_k pi_kj(t)."""
    return float(np.sum(np.abs(spec.amplitudes(j, t)) ** 2))


def _free(cfg, spec):
    if cfg.n_nodes != spec.dim:
        raise ValueError("config has N=%d but spectrum N=%d" % (cfg.n_nodes, spec.dim))
    if cfg.n_free < 1:
        raise ValueError("no non-trap nodes to average over")
    return non_trap_mask(cfg.n_nodes, cfg.traps)


def _pair_weights(spec, free):
    # A_ll' = sum_{k free} Psi_l(k) conj(Psi_l'(k)); left vectors share the
    # components, so both sums in the double average give the same matrix
    a = spec.vectors[free].T @ spec.vectors[free].conj()
    return a * a


def mean_survival_quantum(spec, cfg, grid):
    """
    Mean quantum survival probability

    Pi_M(t) = 1/(N-M) sum_{j not in M} sum_{k not in M} pi_kj(t),

    evaluated from the spectrum as
    1/(N-M) sum_{l,l'} c_l(t) conj(c_l'(t)) G_ll' with c_l = exp(-i E_l t).

    Parameters
    ----------
    spec          : QuantumSpectrum
    cfg           : ChainConfig
    grid          : TimeGrid

    Returns
    -------
    curve         : DecayCurve
                    label QUANTUM_EXACT
    """
    free = _free(cfg, spec)
    g = _pair_weights(spec, free)
    values = np.empty(len(grid))
    for start in range(0, len(grid), _CHUNK):
        t = grid.points[start : start + _CHUNK]
        c = np.exp(-1j * np.outer(t, spec.values))
        values[start : start + _CHUNK] = np.sum(c * (c.conj() @ g.T), axis=1).real
    return DecayCurve(grid, values / cfg.n_free, CurveLabel.QUANTUM_EXACT, cfg)


def mean_survival_quantum_gamma_sum(spec, cfg, grid):
    """
    Exponential-sum form Pi_M(t) ~ 1/(N-M) sum_l exp(-2 gamma_l t); equals
    N/(N-M) at t = 0.
    """
    _free(cfg, spec)
    decay = np.exp(-2.0 * np.outer(grid.points, np.clip(spec.gamma, 0, None)))
    values = decay.sum(axis=1) / cfg.n_free
    return DecayCurve(grid, values, CurveLabel.QUANTUM_GAMMA_SUM, cfg)


def mean_survival_quantum_double_sum(spec, cfg, grid):
    """
    Direct evaluation of the double sum over pi_kj(t), O(N^3) per time.
    """
    free = _free(cfg, spec)
    v = spec.vectors
    values = np.empty(len(grid))
    for i, t in enumerate(grid.points):
        u = (v * np.exp(-1j * spec.values * t)[None, :]) @ v.T
        values[i] = np.sum(np.abs(u[np.ix_(free, free)]) ** 2)
    return DecayCurve(grid, values / cfg.n_free, CurveLabel.QUANTUM_EXACT, cfg)


def classical_weights(spec, cfg):
    """Per-mode weights |sum_{k not in M} <k|Phi_l>|^2."""
    free = _free(cfg, spec)
    return spec.vectors[free].sum(axis=0) ** 2


def classical_prefactor(spec, cfg):
    """
    Weight |sum_{k not in M} <k|Phi_N>|^2 of the dominant classical mode,
    before the 1/(N-M) average.
    """
    return float(classical_weights(spec, cfg)[0])


def mean_survival_classical(spec, cfg, grid):
    """
    P_M(t) = 1/(N-M) sum_l exp(-lambda_l t) |sum_{k not in M} <k|Phi_l>|^2

    Returns
    -------
    curve         : DecayCurve
                    label CLASSICAL_EXACT
    """
    w = classical_weights(spec, cfg)
    values = np.exp(-np.outer(grid.points, spec.lambdas)) @ w
    return DecayCurve(grid, values / cfg.n_free, CurveLabel.CLASSICAL_EXACT, cfg)


def mean_survival_classical_dominant(spec, cfg, grid):
    """
    Dominant-mode form keeping only the smallest eigenvalue lambda_N.
    """
    w = classical_weights(spec, cfg)
    values = w[0] * np.exp(-spec.lambdas[0] * grid.points)
    return DecayCurve(grid, values / cfg.n_free, CurveLabel.CLASSICAL_DOMINANT, cfg)


def mean_survival_classical_double_sum(spec, cfg, grid):
    free = _free(cfg, spec)
    v = spec.vectors
    values = np.empty(len(grid))
    for i, t in enumerate(grid.points):
        p = (v * np.exp(-spec.lambdas * t)[None, :]) @ v.T
        values[i] = p[np.ix_(free, free)].sum()
    return DecayCurve(grid, values / cfg.n_free, CurveLabel.CLASSICAL_EXACT, cfg)


def propagate_oracle(h, j, t, classical=False):
    """
    Column j of exp(-iHt) (or of exp(Tt) with ``classical=True``) by Pade
    scaling-and-squaring, independent of any eigendecomposition.

    Parameters
    ----------
    h             : DenseOperator
                    quantum Hamiltonian, or REAL_SYMMETRIC transfer matrix
    j             : int
                    1-based initial node
    t             : float
                    time >= 0
    classical     : bool
                    propagate with exp(Tt)

    Returns
    -------
    column        : array
                    complex amplitudes (real probabilities if classical)
    """
    col = check_node(j, h.dim)
    t = check_time(t)
    if not np.all(np.isfinite(h.entries)):
        raise ValueError("operator has non-finite entries")
    if classical:
        if h.kind is not OperatorKind.REAL_SYMMETRIC:
            raise TypeError("classical propagation needs a real transfer matrix")
        column = linalg.expm(h.real * t)[:, col]
    else:
        column = linalg.expm(-1j * h.entries * t)[:, col]
    if not np.all(np.isfinite(column)):
        raise NumericalError("matrix exponential produced non-finite entries")
    return column
