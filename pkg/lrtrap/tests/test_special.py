import numpy
import pytest
from scipy import special as sp

from ..special import SERIES_CUTOFF, i0e, i0e_quadrature


class TestScaledBessel:
    def setup_method(self):
        self.x = numpy.logspace(-3, 5, 81)

    def test_against_quadrature(self):
        numpy.testing.assert_allclose(i0e(self.x), i0e_quadrature(self.x), rtol=1e-10)

    def test_against_scipy(self):
        numpy.testing.assert_allclose(i0e(self.x), sp.i0e(self.x), rtol=1e-12)

    def test_branch_boundary(self):
        x = numpy.array([SERIES_CUTOFF, numpy.nextafter(SERIES_CUTOFF, 100.0)])
        y = i0e(x)
        assert y[0] == pytest.approx(y[1], rel=1e-12)

    def test_zero_and_shape(self):
        assert i0e(0.0) == 1.0
        assert i0e_quadrature(0.0) == pytest.approx(1.0, rel=1e-13)
        assert i0e(numpy.ones((2, 3))).shape == (2, 3)

    def test_large_argument(self):
        x = 1.0e5
        assert i0e(x) == pytest.approx(1.0 / numpy.sqrt(2 * numpy.pi * x), rel=1e-5)

    @pytest.mark.parametrize("bad", [-1.0, numpy.nan, numpy.inf])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            i0e(bad)
        with pytest.raises(ValueError):
            i0e_quadrature(bad)
