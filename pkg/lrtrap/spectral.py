"""
Dense eigendecompositions of the trap-modified quantum Hamiltonian and of the
classical transfer matrix.
"""

__all__ = [
    "Ordering",
    "QuantumSpectrum",
    "ClassicalSpectrum",
    "decompose_quantum",
    "decompose_classical",
]

import enum
import logging
import warnings

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import csgraph

from .base import SpectrumResults
from .model import OperatorKind
from .utils import (
    ConvergenceError,
    ExceptionalPointError,
    SpectrumError,
    SpectrumWarning,
    cache_readonly,
    check_node,
    check_time,
    fix_sign,
)

logger = logging.getLogger(__name__)

BILINEAR_NORM_TOL = 1.0e-10
BIORTHOGONALITY_TOL = 1.0e-8
COUPLING_TOL = 1.0e-12
DEGENERACY_TOL = 1.0e-6
GAMMA_TIE_TOL = 1.0e-14
NEGATIVE_TOL = 1.0e-12
REFLECTION_TOL = 1.0e-13
RESIDUAL_TOL = 1.0e-10


class Ordering(enum.Enum):
    BY_GAMMA_ASC = "gamma"
    BY_EPSILON_ASC = "epsilon"


class QuantumSpectrum(SpectrumResults):
    """
    Complete biorthogonal spectrum of H = H0 - i Gamma.

    Parameters
    ----------
        operator      : DenseOperator
                        the decomposed Hamiltonian
        values        : array
                        N complex eigenvalues E_l = epsilon_l - i gamma_l
        vectors       : array
                        N x N complex, column l is |Psi_l> normalised with the
                        bilinear form sum_k (Psi_l)_k**2 = 1
        ordering      : Ordering
                        how the modes are ranked

    Attributes
    ----------
        epsilon       : array
                        real parts epsilon_l
        gamma         : array
                        decay rates gamma_l = -Im E_l
        left_vectors  : array
                        N x N, row l is <~Psi_l|; the unconjugated transpose of
                        the right vectors since H is complex symmetric
        left_overlap_rule : str
                        "transpose"
        biorthogonality_error : float
                        max_lk |<~Psi_l|Psi_k> - delta_lk|
        n_vanishing   : int
                        number of gamma_l below 1e-14
    """

    left_overlap_rule = "transpose"

    def __init__(self, operator, values, vectors, ordering=Ordering.BY_GAMMA_ASC):
        super().__init__(operator, values, vectors, ordering=ordering)

    @cache_readonly
    def epsilon(self):
        return self.values.real.copy()

    @cache_readonly
    def gamma(self):
        return -self.values.imag

    @property
    def right_vectors(self):
        return self.vectors

    @cache_readonly
    def left_vectors(self):
        return self.vectors.T

    @cache_readonly
    def biorthogonality_error(self):
        overlap = self.left_vectors @ self.vectors
        return np.abs(overlap - np.eye(self.dim)).max()

    @cache_readonly
    def n_vanishing(self):
        return int(np.count_nonzero(self.gamma < GAMMA_TIE_TOL))

    def trace_errors(self):
        """
        Errors of the trace identities sum_l epsilon_l = Re tr H and
        sum_l gamma_l = -Im tr H, relative where the reference is non-zero.

        Returns
        -------
        (eps_err, gamma_err) : tuple of float
        """
        tr = self.operator.trace()
        return (
            _relative(self.epsilon.sum(), tr.real),
            _relative(self.gamma.sum(), -tr.imag),
        )

    def reconstruct(self):
        """sum_l E_l |Psi_l><~Psi_l|"""
        return (self.vectors * self.values[None, :]) @ self.left_vectors

    def amplitudes(self, j, t):
        """
        Amplitudes <k|exp(-iHt)|j> for all k.

        Parameters
        ----------
        j         : int
                    1-based initial node
        t         : float
                    time >= 0
        """
        col = check_node(j, self.dim)
        t = check_time(t)
        phases = np.exp(-1j * self.values * t)
        return self.vectors @ (phases * self.vectors[col, :])


class ClassicalSpectrum(SpectrumResults):
    """
    Orthonormal spectrum of the real symmetric transfer matrix T.

    Parameters
    ----------
        operator      : DenseOperator
                        the decomposed transfer matrix
        values        : array
                        lambda_l >= 0 in ascending order; T has eigenvalues
                        -lambda_l
        vectors       : array
                        N x N real orthonormal, column l is |Phi_l>
    """

    @property
    def lambdas(self):
        return self.values

    @property
    def operator_values(self):
        return -self.values

    @cache_readonly
    def orthonormality_error(self):
        return np.abs(self.vectors.T @ self.vectors - np.eye(self.dim)).max()

    def amplitudes(self, j, t):
        """
        Classical transition probabilities <k|exp(Tt)|j> for all k.
        """
        col = check_node(j, self.dim)
        t = check_time(t)
        return self.vectors @ (np.exp(-self.values * t) * self.vectors[col, :])


def _relative(value, reference):
    err = abs(value - reference)
    return err / abs(reference) if reference != 0 else err


def _nearest_gap(values, l):  # noqa E741
    others = np.delete(values, l)
    return np.abs(others - values[l]).min() if others.size else np.inf


def _tie_groups(values, tol=GAMMA_TIE_TOL):
    """Group labels joining values whose sorted neighbours lie within `tol`."""
    order = np.argsort(values, kind="stable")
    steps = np.diff(values[order]) > tol
    groups = np.empty(values.size, dtype=np.int64)
    groups[order] = np.concatenate(([0], np.cumsum(steps)))
    return groups


def _rank(gamma, epsilon, vectors, ordering):
    pivot = np.argmax(np.abs(vectors), axis=0)
    if ordering is Ordering.BY_GAMMA_ASC:
        keys = (pivot, epsilon, _tie_groups(gamma))
    else:
        keys = (pivot, gamma, epsilon)
    return np.lexsort(keys)


def _is_reflection_symmetric(a):
    scale = max(np.abs(a).max(), 1.0)
    return np.abs(a - a[::-1, ::-1]).max() <= REFLECTION_TOL * scale


def _reflection_basis(n):
    """
    Real orthogonal basis of R^N: the first columns are even under
    k -> N + 1 - k, the remaining N // 2 columns odd.
    """
    half = n // 2
    n_even = n - half
    k = np.arange(half)
    s = np.sqrt(0.5)
    q = np.zeros((n, n))
    q[k, k] = s
    q[n - 1 - k, k] = s
    if n % 2:
        q[half, half] = 1.0
    q[k, n_even + k] = s
    q[n - 1 - k, n_even + k] = -s
    return q, n_even


def _eig(a):
    """
    Right eigenpairs of a complex symmetric matrix. A reflection-symmetric
    matrix is split into its even and odd blocks first, so that mirror-image
    modes with nearly equal eigenvalues come out of separate solves.
    """
    n = a.shape[0]
    if n < 2 or not _is_reflection_symmetric(a):
        return linalg.eig(a)
    q, n_even = _reflection_basis(n)
    b = q.T @ a @ q
    w_even, v_even = linalg.eig(b[:n_even, :n_even])
    w_odd, v_odd = linalg.eig(b[n_even:, n_even:])
    values = np.concatenate((w_even, w_odd))
    vectors = np.hstack((q[:, :n_even] @ v_even, q[:, n_even:] @ v_odd))
    return values, vectors


def _biorthonormalize(values, vectors):
    """
    Restore sum_k (Psi_l)_k (Psi_m)_k = delta_lm inside each group of
    near-degenerate modes coupled by the bilinear overlap C = V.T V, through
    the symmetric transform V_c <- V_c C_c**(-1/2). Columns must already
    have unit bilinear norm. Returns the vectors and the number of groups
    treated.
    """
    n = vectors.shape[1]
    overlap = vectors.T @ vectors
    scale = max(np.abs(values).max(), 1.0)
    close = np.abs(values[:, None] - values[None, :]) < DEGENERACY_TOL * scale
    coupled = close & (np.abs(overlap - np.eye(n)) > COUPLING_TOL)
    if not coupled.any():
        return vectors, 0
    n_groups, labels = csgraph.connected_components(
        sparse.csr_matrix(coupled), directed=False
    )
    treated = 0
    for label in range(n_groups):
        members = np.flatnonzero(labels == label)
        if members.size < 2:
            continue
        root = linalg.sqrtm(overlap[np.ix_(members, members)])
        if not np.all(np.isfinite(root)):
            raise linalg.LinAlgError("overlap of modes %s has no square root" % members)
        vectors[:, members] = vectors[:, members] @ linalg.inv(root)
        treated += 1
    return vectors, treated


def decompose_quantum(h, ordering=Ordering.BY_GAMMA_ASC):
    """
    Full dense eigendecomposition of a complex symmetric Hamiltonian.

    Left eigenvectors are not solved for: for H = H.T they are the
    unconjugated transposes of the right ones, and each pair is normalised
    by sum_k (Psi_l)_k**2 = 1. Modes with nearly equal eigenvalues may come
    back from the solver with a non-zero mutual bilinear overlap; such
    groups are re-orthonormalised within their span before ranking.

    Parameters
    ----------
    h             : DenseOperator
                    COMPLEX_SYMMETRIC, or REAL_SYMMETRIC in the trap-free case
    ordering      : Ordering
                    BY_GAMMA_ASC (default) or BY_EPSILON_ASC; ties in gamma
                    (within 1e-14) fall back to epsilon, then to the position
                    of the largest eigenvector component

    Returns
    -------
    spectrum      : QuantumSpectrum

    Raises
    ------
    ConvergenceError
        the eigensolver did not converge
    ExceptionalPointError
        a bilinear norm fell below 1e-10, or the pairs cannot be made
        biorthogonal to 1e-8
    SpectrumError
        some gamma_l < -1e-12
    """
    if h.kind not in (OperatorKind.COMPLEX_SYMMETRIC, OperatorKind.REAL_SYMMETRIC):
        raise TypeError("expected a symmetric Hamiltonian, got %s" % h.kind.value)
    a = h.entries
    try:
        if not np.any(a.imag):
            w, v = linalg.eigh(a.real)
            values = w.astype(np.complex128)
            vectors = v.astype(np.complex128)
        else:
            values, vectors = _eig(a)
    except linalg.LinAlgError as err:
        raise ConvergenceError("eigensolver failed: %s" % err) from err

    norms = np.sum(vectors * vectors, axis=0)
    small = np.flatnonzero(np.abs(norms) < BILINEAR_NORM_TOL)
    if small.size:
        l = small[0]  # noqa E741
        raise ExceptionalPointError(l + 1, abs(norms[l]), _nearest_gap(values, l))
    vectors = vectors / np.sqrt(norms)[None, :]
    try:
        vectors, n_groups = _biorthonormalize(values, vectors)
    except linalg.LinAlgError as err:
        l = int(np.argmin(np.abs(norms)))  # noqa E741
        raise ExceptionalPointError(
            l + 1, abs(norms[l]), _nearest_gap(values, l)
        ) from err
    vectors = fix_sign(vectors)

    gamma = -values.imag
    if gamma.min() < -NEGATIVE_TOL:
        raise SpectrumError(
            "negative decay rate %.3e; the trap operator must be absorbing"
            % gamma.min()
        )
    order = _rank(gamma, values.real, vectors, ordering)
    spectrum = QuantumSpectrum(h, values[order], vectors[:, order], ordering)

    logger.debug(
        "decomposed quantum H (N=%d): residual %.2e, biorthogonality %.2e, "
        "%d re-orthonormalised groups, %d vanishing gamma",
        h.dim,
        spectrum.relative_residual,
        spectrum.biorthogonality_error,
        n_groups,
        spectrum.n_vanishing,
    )
    if not spectrum.biorthogonality_error <= BIORTHOGONALITY_TOL:
        overlap = spectrum.left_vectors @ spectrum.vectors - np.eye(h.dim)
        l = int(np.argmax(np.abs(overlap).max(axis=0)))  # noqa E741
        raise ExceptionalPointError(
            l + 1, abs(norms[order][l]), _nearest_gap(spectrum.values, l)
        )
    if n_groups and spectrum.relative_residual > RESIDUAL_TOL:
        warnings.warn(
            "re-orthonormalised modes leave a relative residual of %.2e"
            % spectrum.relative_residual,
            SpectrumWarning,
            stacklevel=2,
        )
    return spectrum


def decompose_classical(t):
    """
    Full orthonormal eigensystem of the real symmetric transfer matrix.

    Parameters
    ----------
    t             : DenseOperator
                    REAL_SYMMETRIC

    Returns
    -------
    spectrum      : ClassicalSpectrum
                    lambda_l ascending, lambda_l = -(eigenvalue of T)
    """
    if t.kind is not OperatorKind.REAL_SYMMETRIC:
        raise TypeError(
            "expected a real symmetric transfer matrix, got %s" % t.kind.value
        )
    try:
        w, v = linalg.eigh(t.real)
    except linalg.LinAlgError as err:
        raise ConvergenceError("eigensolver failed: %s" % err) from err
    lambdas = -w[::-1]
    vectors = fix_sign(np.ascontiguousarray(v[:, ::-1]))
    if lambdas.min() < -NEGATIVE_TOL:
        raise SpectrumError(
            "transfer matrix is not negative semidefinite (lambda = %.3e)"
            % lambdas.min()
        )
    spectrum = ClassicalSpectrum(t, lambdas, vectors)
    logger.debug(
        "decomposed classical T (N=%d): residual %.2e, smallest lambda %.6e",
        t.dim,
        spectrum.relative_residual,
        lambdas[0],
    )
    return spectrum
