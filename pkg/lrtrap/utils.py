import math
import warnings

import numpy as np

INFINITY = math.inf


class NumericalError(ArithmeticError):
    """
    Base class for failures of the numerical routines (as opposed to invalid
    input, which raises ValueError).
    """


class ConvergenceError(NumericalError):
    pass


class SpectrumError(NumericalError):
    pass


class ExceptionalPointError(NumericalError):
    """
    Raised when the bilinear norm of a right eigenvector of a complex
    symmetric operator vanishes, i.e. near an exceptional point.

    Parameters
    ----------
    l         : int
                1-based position of the offending mode in solver order
    norm      : float
                modulus of sum_k (Psi_l)_k**2
    gap       : float
                distance to the nearest other eigenvalue
    """

    def __init__(self, l, norm, gap):  # noqa E741
        self.l = l
        self.norm = norm
        self.gap = gap
        super().__init__(
            "mode %d is near an exceptional point: |bilinear norm| = %.3e, "
            "nearest eigenvalue gap = %.3e" % (l, norm, gap)
        )


class DegenerateGapError(NumericalError):
    def __init__(self, l, r, gap):  # noqa E741
        self.l = l
        self.r = r
        self.gap = gap
        super().__init__(
            "unperturbed levels %d and %d are degenerate (gap %.3e)" % (l, r, gap)
        )


class SpectrumWarning(UserWarning):
    pass


class CacheWriteWarning(UserWarning):
    pass


class CachedAttribute:
    """
    Read-only attribute computed on first access and stored in the
    instance's ``_cache`` dictionary.
    """

    def __init__(self, func, cachename="_cache"):
        self.fget = func
        self.name = func.__name__
        self.cachename = cachename
        self.__doc__ = func.__doc__

    def __get__(self, obj, type_=None):
        if obj is None:
            return self
        cache = obj.__dict__.setdefault(self.cachename, {})
        if self.name not in cache:
            cache[self.name] = self.fget(obj)
        return cache[self.name]

    def __set__(self, obj, value):
        errmsg = "The attribute '%s' cannot be overwritten" % self.name
        warnings.warn(errmsg, CacheWriteWarning, stacklevel=2)


def cache_readonly(func):
    return CachedAttribute(func)


def is_nni(nu):
    """True when `nu` is the nearest-neighbour limit."""
    return nu == INFINITY


def format_nu(nu):
    return "inf" if is_nni(nu) else "%.17g" % nu


def parse_nu(text):
    """
    Parse an interaction exponent; ``inf`` (any case) is the NNI limit.
    """
    if isinstance(text, (int, float)):
        return float(text)
    text = str(text).strip().lower()
    if text in ("inf", "infinity", "nni"):
        return INFINITY
    return float(text)


def check_node(node, n):
    """
    Validate a 1-based node index and return the 0-based storage index.
    """
    if isinstance(node, bool) or int(node) != node:
        raise ValueError("node index must be an integer, got %r" % (node,))
    node = int(node)
    if not 1 <= node <= n:
        raise ValueError("node index %d outside 1..%d" % (node, n))
    return node - 1


def check_time(t):
    if not np.isfinite(t) or t < 0:
        raise ValueError("time must be finite and non-negative, got %r" % (t,))
    return float(t)


def non_trap_mask(n, traps):
    """Boolean mask (0-based) selecting the nodes that are not traps."""
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(traps, dtype=int) - 1] = False
    return mask


def fix_sign(vectors):
    """
    Flip each column so that its largest-magnitude component (first one on
    ties) has a positive real part. Operates in place and returns `vectors`.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    flip = np.real(pivots) < 0
    vectors[:, flip] *= -1
    return vectors
