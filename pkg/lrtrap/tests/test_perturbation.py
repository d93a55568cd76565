import numpy
import pytest

from ..analysis import fit_decay_exponent, fit_mu
from ..dynamics import CurveLabel, TimeGrid
from ..model import ChainConfig, build_h0, build_h_nu_nnn, build_quantum_hamiltonian
from ..perturbation import (
    GammaSeries,
    GammaSource,
    NNIAnalytic,
    continuum_survival,
    gamma_first_order,
    gamma_nni_analytic,
    gamma_nnn_expansion,
    mu_local,
    mu_terms,
    nni_analytic,
    overlap_correction_full,
    overlap_correction_nnn,
    overlap_exact,
    overlap_first_order,
    overlap_table,
    overlaps_nnn,
)
from ..spectral import decompose_quantum
from ..utils import INFINITY, DegenerateGapError


def _exact_series(cfg):
    return GammaSeries.from_spectrum(decompose_quantum(build_quantum_hamiltonian(cfg)), cfg)


@pytest.fixture(scope="module")
def exact_mu():
    """Fitted mu on the default window for N=100, end traps, per (gamma, nu)."""
    mus = {}
    for gamma in (0.001, 1.0):
        for nu in (INFINITY, 5.0, 4.0, 3.0):
            cfg = ChainConfig(100, nu, gamma, (1, 100))
            mus[gamma, nu] = fit_mu(_exact_series(cfg)).exponent
    return mus


class TestNNIAnalytic:
    def setup_method(self):
        self.n = 40
        self.nni = nni_analytic(self.n)

    def test_uniform_mode(self):
        assert self.nni.theta[-1] == 0.0
        assert self.nni.energies[-1] == 0.0
        numpy.testing.assert_allclose(self.nni.vectors[:, -1], numpy.sqrt(1 / self.n))

    def test_end_symmetry(self):
        v = self.nni.vectors
        numpy.testing.assert_allclose(v[0] ** 2, v[-1] ** 2, atol=1e-12)

    def test_orthonormal(self):
        v = self.nni.vectors
        numpy.testing.assert_allclose(v.T @ v, numpy.eye(self.n), atol=1e-12)

    def test_eigenpairs(self):
        h0 = build_h0(ChainConfig(self.n, INFINITY)).real
        v = self.nni.vectors
        numpy.testing.assert_allclose(h0 @ v, v * self.nni.energies, atol=1e-12)

    def test_too_small(self):
        with pytest.raises(ValueError):
            NNIAnalytic(1)


class TestGammaSeries:
    def setup_method(self):
        self.cfg = ChainConfig(100, INFINITY, 0.001, (1, 100))

    def test_analytic(self):
        series = gamma_nni_analytic(self.cfg)
        assert series.source is GammaSource.NNI_ANALYTIC
        assert len(series) == 100
        assert numpy.all(numpy.diff(series.gammas) >= 0)
        assert 2 * 0.001 / 100 == pytest.approx(series.gammas[series.modes == 100][0])
        assert series.gammas.sum() == pytest.approx(2 * 0.001)

    def test_first_order_matches_closed_form(self):
        numeric = gamma_first_order(nni_analytic(100), self.cfg)
        assert numeric.source is GammaSource.FIRST_ORDER_NUMERIC
        numpy.testing.assert_allclose(
            numeric.gammas, gamma_nni_analytic(self.cfg).gammas, rtol=0, atol=1e-15
        )

    def test_first_order_shape_check(self):
        with pytest.raises(ValueError):
            gamma_first_order(numpy.eye(5), self.cfg)

    def test_closed_form_needs_end_traps(self):
        with pytest.raises(ValueError):
            gamma_nni_analytic(self.cfg.replace(traps=(1,)))
        with pytest.raises(ValueError):
            gamma_nnn_expansion(self.cfg.replace(nu=5.0, traps=(1, 50)))

    def test_validation(self):
        with pytest.raises(ValueError):
            GammaSeries(numpy.array([0.2, 0.1]), GammaSource.EXACT_DIAG)
        with pytest.raises(ValueError):
            GammaSeries(numpy.array([-1e-6, 0.1]), GammaSource.EXACT_DIAG)

    @pytest.mark.parametrize("gamma", [0.001, 0.0005])
    def test_exact_against_first_order(self, gamma):
        cfg = self.cfg.replace(gamma=gamma)
        err = numpy.abs(_exact_series(cfg).gammas - gamma_nni_analytic(cfg).gammas).max()
        assert err <= 50 * gamma**2

    def test_first_order_error_shrinks(self):
        errs = []
        for gamma in (0.001, 0.0005):
            cfg = self.cfg.replace(gamma=gamma)
            errs.append(
                numpy.abs(_exact_series(cfg).gammas - gamma_nni_analytic(cfg).gammas).max()
            )
        assert errs[1] <= errs[0] / 3 + 1e-14


class TestNNNExpansion:
    def test_end_symmetry_of_long_range_states(self):
        h0 = build_h0(ChainConfig(40, 3.0)).real
        _, vectors = numpy.linalg.eigh(h0)
        numpy.testing.assert_allclose(vectors[0] ** 2, vectors[-1] ** 2, atol=1e-10)

    def test_nni_limit(self):
        cfg = ChainConfig(60, INFINITY, 0.01, (1, 60))
        series = gamma_nnn_expansion(cfg)
        assert series.source is GammaSource.NNN_APPROX
        numpy.testing.assert_allclose(series.gammas, gamma_nni_analytic(cfg).gammas)

    def test_uniform_mode_unchanged(self):
        cfg = ChainConfig(60, 5.0, 0.01, (1, 60))
        series = gamma_nnn_expansion(cfg)
        assert series.gammas[series.modes == 60][0] == pytest.approx(2 * 0.01 / 60)

    def test_small_l_reduced(self):
        cfg = ChainConfig(60, 5.0, 0.01, (1, 60))
        lri = gamma_nnn_expansion(cfg)
        nni = gamma_nni_analytic(cfg.replace(nu=INFINITY))
        assert lri.gammas[0] < nni.gammas[0]

    @pytest.mark.parametrize("nu", [2.0, 2.5])
    def test_fails_for_short_range_exponents(self, nu):
        with pytest.raises(ValueError):
            gamma_nnn_expansion(ChainConfig(60, nu, 0.01, (1, 60)))

    @pytest.mark.parametrize("nu", [5.0, 8.0])
    def test_matches_squared_overlaps(self, nu):
        n, gamma = 60, 0.01
        series = gamma_nnn_expansion(ChainConfig(n, nu, gamma, (1, n)))
        by_mode = numpy.empty(n)
        by_mode[series.modes - 1] = series.gammas
        squared = 2 * gamma * overlaps_nnn(n, nu) ** 2
        assert numpy.abs(by_mode - squared).max() <= 2 * gamma * 2.0 ** (-2 * nu) * 2 / n + 1e-15


class TestExponents:
    def test_nni_mu(self, exact_mu):
        assert exact_mu[0.001, INFINITY] == pytest.approx(2.0, abs=0.2)

    def test_nni_mu_strong_traps(self, exact_mu):
        # l**2 growth holds to first order in gamma; at gamma = 1 the small-l
        # rates flatten
        assert 1.3 <= exact_mu[1.0, INFINITY] < 2.0

    def test_long_range_slows_small_l(self):
        cfg = ChainConfig(100, INFINITY, 0.001, (1, 100))
        nni = _exact_series(cfg).gammas[1:10]
        lri = _exact_series(cfg.replace(nu=3.0)).gammas[1:10]
        assert numpy.all(lri < nni)

    def test_mu_grows_with_range(self, exact_mu):
        for gamma in (0.001, 1.0):
            mus = [exact_mu[gamma, nu] for nu in (INFINITY, 5.0, 4.0, 3.0)]
            assert numpy.all(numpy.diff(mus) > 0)

    def test_mu_local(self):
        series = gamma_nni_analytic(ChainConfig(100, INFINITY, 0.001, (1, 100)))
        assert mu_local(series, 2) == pytest.approx(2.0, abs=0.05)
        with pytest.raises(ValueError):
            mu_local(series, 100)

    def test_mu_local_needs_positive_rates(self):
        series = GammaSeries(numpy.array([0.0, 0.1, 0.2]), GammaSource.EXACT_DIAG)
        with pytest.raises(ValueError):
            mu_local(series, 1)

    def test_mid_window_between_one_and_two(self):
        series = gamma_nni_analytic(ChainConfig(100, INFINITY, 0.001, (1, 100)))
        mu = fit_mu(series, (25, 45)).exponent
        assert 1.0 <= mu <= 2.0

    def test_mu_terms(self):
        mu0, mu1 = mu_terms(2, 100)
        assert mu0 == pytest.approx(2.0, abs=0.05)
        assert mu1 > 0
        with pytest.raises(ValueError):
            mu_terms(99, 100)


class TestOverlaps:
    def setup_method(self):
        self.n = 100

    def test_exact_in_nni_limit(self):
        cfg = ChainConfig(self.n, INFINITY)
        numpy.testing.assert_allclose(
            overlap_exact(cfg), nni_analytic(self.n).end_overlaps, atol=1e-10
        )

    def test_nnn_closed_form_at_uniform_mode(self):
        assert overlap_correction_nnn(self.n, self.n, 5.0) == pytest.approx(
            numpy.sqrt(1 / self.n)
        )

    def test_nnn_closed_form_values(self):
        theta = numpy.pi * (self.n - 3) / self.n
        expected = numpy.sqrt(2 / self.n) * (
            numpy.cos(theta / 2) + 2.0**-10 * numpy.sin(2 * theta) * numpy.sin(theta / 2)
        )
        assert overlap_correction_nnn(3, self.n, 10.0) == pytest.approx(expected)
        with pytest.raises(ValueError):
            overlaps_nnn(self.n, INFINITY)

    def test_single_mode_matches_table(self):
        cfg = ChainConfig(30, 6.0)
        assert overlap_correction_full(7, cfg) == pytest.approx(overlap_first_order(cfg)[6])
        with pytest.raises(ValueError):
            overlap_correction_full(31, cfg)

    def test_rejects_nni(self):
        with pytest.raises(ValueError):
            overlap_first_order(ChainConfig(10, INFINITY))

    def test_closed_form_accuracy_at_large_nu(self):
        table = overlap_table(ChainConfig(self.n, 10.0))
        scale = numpy.abs(table["diff_exact"]).max()
        err = numpy.abs(table["overlap_eq9"] - table["overlap_exact"]).max()
        assert err <= 0.15 * scale

    def test_first_order_beats_closed_form_at_nu5(self):
        table = overlap_table(ChainConfig(self.n, 5.0))
        err_full = numpy.abs(table["overlap_eq8"] - table["overlap_exact"]).max()
        err_nnn = numpy.abs(table["overlap_eq9"] - table["overlap_exact"]).max()
        assert err_full <= err_nnn

    def test_truncated_operator_column(self):
        cfg = ChainConfig(self.n, 10.0)
        table = overlap_table(cfg, build_h_nu_nnn(cfg))
        assert "overlap_nnn_operator" in table.columns
        scale = numpy.abs(table["diff_exact"]).max()
        err = numpy.abs(table["overlap_nnn_operator"] - table["overlap_eq9"]).max()
        assert err <= 0.2 * scale

    def test_table_columns(self):
        table = overlap_table(ChainConfig(20, 8.0))
        assert list(table.columns) == [
            "l",
            "overlap_exact",
            "overlap_eq8",
            "overlap_eq9",
            "diff_exact",
            "diff_eq8",
            "diff_eq9",
        ]
        assert list(table["l"]) == list(range(1, 21))

    def test_degenerate_gap_error(self):
        err = DegenerateGapError(3, 5, 1e-12)
        assert (err.l, err.r) == (3, 5)
        assert "degenerate" in str(err)


class TestContinuum:
    def test_slope(self):
        a = 4 * 1.0 / 100
        grid = TimeGrid.log(1.0e3 / a, 1.0e5 / a, 100)
        curve = continuum_survival(a, grid)
        assert curve.label is CurveLabel.CONTINUUM_BESSEL
        fit = fit_decay_exponent(curve, (grid.points[0], grid.points[-1]))
        assert fit.exponent == pytest.approx(-0.5, abs=0.01)

    def test_methods_agree(self):
        grid = TimeGrid.log(0.1, 1.0e5, 40)
        series = continuum_survival(0.04, grid).values
        quad = continuum_survival(0.04, grid, method="quadrature").values
        numpy.testing.assert_allclose(series, quad, rtol=1e-10)

    @pytest.mark.parametrize("a", [0.0, -1.0])
    def test_rate_must_be_positive(self, a):
        with pytest.raises(ValueError):
            continuum_survival(a, TimeGrid.log(1.0, 10.0, 5))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            continuum_survival(1.0, TimeGrid.log(1.0, 10.0, 5), method="pade")
