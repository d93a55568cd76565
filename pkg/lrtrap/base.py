import numpy as np

from .utils import cache_readonly


class SpectrumResults:
    """
    Class to contain a full eigendecomposition of a chain operator

    Parameters
    ----------
    operator : DenseOperator
        the decomposed operator
    values : array
        N eigenvalues in the stored ordering
    vectors : array
        N x N, column l is the right eigenvector of values[l]
    """

    def __init__(self, operator, values, vectors, **kwd):
        self.__dict__.update(kwd)
        self.initialize(operator, values, vectors)

    def initialize(self, operator, values, vectors):
        values = np.array(values)
        vectors = np.array(vectors)
        values.flags.writeable = False
        vectors.flags.writeable = False
        self.operator = operator
        self.values = values
        self.vectors = vectors
        self._cache = {}

    @property
    def dim(self):
        return self.operator.dim

    def __len__(self):
        return self.dim

    def amplitudes(self, j, t):  # noqa ARG002
        """
        Amplitudes <k|U(t)|j> for every node k; implemented by subclasses.
        """
        raise NotImplementedError

    @cache_readonly
    def residual(self):
        """
        Largest eigen-residual max_l ||A v_l - a_l v_l||_inf, where (a_l, v_l)
        are the stored pairs of the decomposed operator A.
        """
        a = self.operator.entries
        res = a @ self.vectors - self.vectors * self.operator_values[None, :]
        return np.abs(res).max()

    @cache_readonly
    def relative_residual(self):
        scale = self.operator.norm_inf()
        return self.residual / scale if scale > 0 else self.residual

    @property
    def operator_values(self):
        """Eigenvalues of the operator itself (see the subclasses' sign maps)."""
        return self.values
