"""
Operators of a finite chain with R**(-nu) couplings and absorbing trap nodes.
"""

__all__ = [
    "ChainConfig",
    "DenseOperator",
    "OperatorKind",
    "build_h0",
    "build_trap_operator",
    "build_quantum_hamiltonian",
    "build_classical_transfer",
    "build_h_nu_nnn",
    "build_h_nu_full",
]

import enum
from dataclasses import dataclass, field

import numpy as np

from .utils import INFINITY, format_nu, is_nni


@dataclass(frozen=True)
class ChainConfig:
    """
    Full description of one trapping experiment.

    Parameters
    ----------
        n_nodes       : int
                        number of chain nodes N, at least 2
        nu            : float
                        interaction exponent, > 1, or INFINITY for
                        nearest-neighbour couplings
        gamma         : float
                        trap strength, >= 0, in units of the nearest-neighbour
                        coupling
        traps         : tuple of int
                        1-based trap nodes; at least one node must remain
                        untrapped

    Examples
    --------
    >>> from lrtrap.model import ChainConfig
    >>> from lrtrap.utils import INFINITY
    >>> cfg = ChainConfig(100, INFINITY, 0.001, (1, 100))
    >>> cfg.n_free
    98
    """

    n_nodes: int
    nu: float = INFINITY
    gamma: float = 0.0
    traps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        traps = tuple(int(m) for m in self.traps)
        object.__setattr__(self, "traps", traps)
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "gamma", float(self.gamma))
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2:
            raise ValueError("a chain needs at least 2 nodes, got %r" % self.n_nodes)
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        if np.isnan(self.nu) or not self.nu > 1:
            raise ValueError(
                "only extensive interactions are supported (nu > 1 or inf), "
                "got nu=%r" % self.nu
            )
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError("trap strength must be >= 0, got %r" % self.gamma)
        for m in traps:
            if not 1 <= m <= self.n_nodes:
                raise ValueError("trap node %d outside 1..%d" % (m, self.n_nodes))
        if len(set(traps)) != len(traps):
            raise ValueError("trap nodes must be distinct: %r" % (traps,))
        if len(traps) >= self.n_nodes:
            raise ValueError("at least one node must not be a trap")

    @property
    def n_traps(self):
        return len(self.traps)

    @property
    def n_free(self):
        return self.n_nodes - len(self.traps)

    @property
    def is_nni(self):
        return is_nni(self.nu)

    def replace(self, **changes):
        values = {
            "n_nodes": self.n_nodes,
            "nu": self.nu,
            "gamma": self.gamma,
            "traps": self.traps,
        }
        values.update(changes)
        return ChainConfig(**values)

    def header(self):
        """Single-line description used as the CSV comment header."""
        return "N=%d nu=%s gamma=%.17g traps=%s" % (
            self.n_nodes,
            format_nu(self.nu),
            self.gamma,
            ",".join(str(m) for m in self.traps),
        )


class OperatorKind(enum.Enum):
    REAL_SYMMETRIC = "real_symmetric"
    COMPLEX_SYMMETRIC = "complex_symmetric"
    DIAGONAL = "diagonal"


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """
    Immutable N x N complex matrix tagged with its symmetry.

    Symmetry (entries == entries.T) is checked bit-exactly at construction;
    REAL_SYMMETRIC and DIAGONAL operators must have vanishing imaginary
    parts, DIAGONAL ones vanishing off-diagonal entries.
    """

    entries: np.ndarray
    kind: OperatorKind

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("operator must be square, got shape %r" % (entries.shape,))
        if not np.array_equal(entries, entries.T):
            raise ValueError("operator entries are not symmetric")
        if self.kind in (OperatorKind.REAL_SYMMETRIC, OperatorKind.DIAGONAL):
            if np.any(entries.imag != 0):
                raise ValueError("%s operator has imaginary entries" % self.kind.value)
        if self.kind is OperatorKind.DIAGONAL:
            if np.count_nonzero(entries - np.diag(np.diag(entries))):
                raise ValueError("diagonal operator has off-diagonal entries")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def real(self):
        return self.entries.real

    def trace(self):
        return np.trace(self.entries)

    def norm_inf(self):
        return np.abs(self.entries).sum(axis=1).max()

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __neg__(self):
        return DenseOperator(-self.entries, self.kind)


def _combine(a, b, sign):
    entries = a.entries + sign * b.entries
    kinds = {a.kind, b.kind}
    if kinds == {OperatorKind.DIAGONAL}:
        kind = OperatorKind.DIAGONAL
    elif OperatorKind.COMPLEX_SYMMETRIC in kinds:
        kind = OperatorKind.COMPLEX_SYMMETRIC
    else:
        kind = OperatorKind.REAL_SYMMETRIC
    return DenseOperator(entries, kind)


def build_h0(config):
    """
    Trap-free chain Hamiltonian H0(nu).

    Off-diagonal entries are -|j-k|**(-nu) (only |j-k| = 1 survives for
    nu = INFINITY); diagonal entries accumulate R**(-nu) over all partners in
    ascending R, so every row sums to zero up to rounding.

    Parameters
    ----------
    config        : ChainConfig
                    traps and trap strength are ignored

    Returns
    -------
    h0            : DenseOperator
                    REAL_SYMMETRIC

    Examples
    --------
    >>> from lrtrap.model import ChainConfig, build_h0
    >>> build_h0(ChainConfig(3, 1.5)).real.round(3)
    array([[ 1.354, -1.   , -0.354],
           [-1.   ,  2.   , -1.   ],
           [-0.354, -1.   ,  1.354]])
    """
    n = config.n_nodes
    coupling = _couplings(n, config.nu)
    h0 = np.zeros((n, n))
    diag = np.zeros(n)
    for r in range(1, n):
        w = coupling[r]
        if w == 0.0:
            continue
        idx = np.arange(n - r)
        h0[idx, idx + r] = -w
        h0[idx + r, idx] = -w
        # node j gains its left partner at distance r, then its right one
        diag[r:] += w
        diag[: n - r] += w
    h0[np.diag_indices(n)] = diag
    return DenseOperator(h0, OperatorKind.REAL_SYMMETRIC)


def _couplings(n, nu):
    """coupling[R] = R**(-nu) for R = 1..n-1; coupling[0] is unused."""
    coupling = np.zeros(n)
    if n < 2:
        return coupling
    if is_nni(nu):
        coupling[1] = 1.0
    else:
        coupling[1:] = np.arange(1, n, dtype=float) ** (-nu)
    return coupling


def build_trap_operator(config):
    """
    Real trap operator Gamma * sum_m |m><m| (the factor i is applied by the
    caller).
    """
    diag = np.zeros(config.n_nodes)
    diag[np.asarray(config.traps, dtype=int) - 1] = config.gamma
    return DenseOperator(np.diag(diag), OperatorKind.DIAGONAL)


def build_quantum_hamiltonian(config):
    """
    Non-hermitian Hamiltonian H = H0(nu) - i Gamma.

    The imaginary part is non-zero only on the trap diagonal; for
    Gamma = 0 the entries equal those of H0.
    """
    h0 = build_h0(config)
    trap = build_trap_operator(config)
    return DenseOperator(h0.entries - 1j * trap.real, OperatorKind.COMPLEX_SYMMETRIC)


def build_classical_transfer(config):
    """
    Transfer matrix T = -H0(nu) - Gamma of the classical random walk with
    absorbing traps.
    """
    h0 = build_h0(config)
    trap = build_trap_operator(config)
    return DenseOperator(-h0.real - trap.real, OperatorKind.REAL_SYMMETRIC)


def build_h_nu_nnn(config, literal=False):
    """
    Next-nearest-neighbour truncation of the long-range correction H_nu.

    Parameters
    ----------
    config        : ChainConfig
                    finite nu, at least 3 nodes
    literal       : bool
                    False (default) puts (number of next-nearest neighbours)
                    * 2**(-nu) on the diagonal so that rows sum to zero.
                    True uses 2**(-nu) for interior nodes 2 < j < N-1 and
                    2**(-nu+1) elsewhere, the rule as usually quoted, which
                    does not conserve the row sums.

    Returns
    -------
    h_nu          : DenseOperator
                    REAL_SYMMETRIC, non-zero only for |j-k| in {0, 2}
    """
    if config.is_nni:
        raise ValueError("the long-range correction vanishes for nu = inf")
    n = config.n_nodes
    if n < 3:
        raise ValueError("next-nearest neighbours need at least 3 nodes")
    w = 2.0 ** (-config.nu)
    h = np.zeros((n, n))
    idx = np.arange(n - 2)
    h[idx, idx + 2] = -w
    h[idx + 2, idx] = -w
    if literal:
        j = np.arange(1, n + 1)
        diag = np.where((j > 2) & (j < n - 1), w, 2.0 * w)
    else:
        partners = (np.arange(n) >= 2).astype(float) + (np.arange(n) < n - 2)
        diag = partners * w
    h[np.diag_indices(n)] = diag
    return DenseOperator(h, OperatorKind.REAL_SYMMETRIC)


def build_h_nu_full(config):
    """
    Full long-range correction H_nu = H0(nu) - H0(inf), all ranges R >= 2.
    """
    if config.is_nni:
        raise ValueError("the long-range correction vanishes for nu = inf")
    lri = build_h0(config)
    nni = build_h0(config.replace(nu=INFINITY))
    return DenseOperator(lri.real - nni.real, OperatorKind.REAL_SYMMETRIC)
