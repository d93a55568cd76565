import numpy
import pandas
import pytest
from click.testing import CliRunner

from .. import cli, figures
from ..utils import ConvergenceError, SpectrumError


def _read(path):
    return pandas.read_csv(path, comment="#", dtype={"nu": str})


def _manifest(path):
    entries = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        entries[key] = value
    return entries


class TestSpectrumCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_long_range(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["spectrum", "--n", "30", "--nu", "3", "--gamma", "1", "--traps", "1,30",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        csv = tmp_path / "spectrum.csv"
        assert csv.read_text().splitlines()[0] == "# N=30 nu=3 gamma=1 traps=1,30"
        frame = _read(csv)
        assert list(frame.columns) == ["l", "epsilon", "gamma"]
        assert len(frame) == 30
        assert numpy.all(numpy.diff(frame["gamma"]) >= -1e-14)
        manifest = _manifest(tmp_path / "manifest.txt")
        assert manifest["command"] == "spectrum"
        assert manifest["nu"] == "3"
        assert manifest["outputs"] == "spectrum.csv"
        assert not list(tmp_path.glob("*.partial"))

    def test_nni_and_classical(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["spectrum", "--n", "12", "--nu", "inf", "--classical", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "nu=inf" in (tmp_path / "spectrum.csv").read_text()
        frame = _read(tmp_path / "classical_spectrum.csv")
        assert numpy.all(frame["lambda"] >= -1e-12)

    def test_classical_only(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["spectrum", "--n", "12", "--no-quantum", "--classical", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert not (tmp_path / "spectrum.csv").exists()
        assert len(_read(tmp_path / "classical_spectrum.csv")) == 12
        manifest = _manifest(tmp_path / "manifest.txt")
        assert manifest["outputs"] == "classical_spectrum.csv"
        assert "n_vanishing" not in manifest

    def test_nothing_requested(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["spectrum", "--n", "12", "--no-quantum", "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert not (tmp_path / "manifest.txt").exists()

    def test_without_traps(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["spectrum", "--n", "15", "--nu", "4", "--gamma", "0", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        assert numpy.abs(_read(tmp_path / "spectrum.csv")["gamma"]).max() <= 1e-12

    def test_deterministic(self, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            self.runner.invoke(
                cli.main, ["spectrum", "--n", "20", "--nu", "2.5", "--out", str(out)]
            )
            outputs.append((out / "spectrum.csv").read_bytes())
        assert outputs[0] == outputs[1]

    @pytest.mark.parametrize(
        "args",
        [
            ["--nu", "0.5"],
            ["--nu", "abc"],
            ["--n", "1"],
            ["--traps", "0,5"],
            ["--traps", "x"],
            ["--gamma", "-1"],
        ],
    )
    def test_usage_errors(self, tmp_path, args):
        result = self.runner.invoke(
            cli.main, ["spectrum", "--n", "10", *args, "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert not (tmp_path / "manifest.txt").exists()

    def test_numerical_failure(self, tmp_path, monkeypatch):
        def fail(*args, **kwargs):
            raise ConvergenceError("eigensolver failed")

        monkeypatch.setattr(cli, "decompose_quantum", fail)
        result = self.runner.invoke(cli.main, ["spectrum", "--n", "10", "--out", str(tmp_path)])
        assert result.exit_code == 3
        assert "eigensolver failed" in result.output

    def test_config_file(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text('n = 12\ngamma = 0.5\nnu = "inf"\n\n[spectrum]\ntraps = [1, 6]\n')
        out = tmp_path / "out"
        result = self.runner.invoke(
            cli.main, ["--config", str(config), "spectrum", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert (out / "spectrum.csv").read_text().startswith("# N=12 nu=inf gamma=0.5 traps=1,6")
        result = self.runner.invoke(
            cli.main, ["--config", str(config), "spectrum", "--n", "14", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert len(_read(out / "spectrum.csv")) == 14


class TestDecayCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_curves_and_plot(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["decay", "--n", "20", "--nu", "inf", "--gamma", "0.001", "--points", "60",
             "--continuum", "--plot", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "decay.csv")
        assert list(frame.columns) == ["t", "value", "label", "N", "nu", "gamma", "traps"]
        assert set(frame["label"]) == {
            "quantum_exact",
            "quantum_gamma_sum",
            "classical_exact",
            "classical_dominant",
            "continuum_bessel",
        }
        quantum = frame[frame["label"] == "quantum_exact"]
        assert len(quantum) == 60
        assert quantum["value"].iloc[0] >= 0.99
        assert quantum["t"].iloc[-1] == pytest.approx(1.0e7)
        classical = frame[frame["label"].str.startswith("classical")]
        assert classical["value"].min() >= 0.0
        script = (tmp_path / "decay.gp").read_text()
        assert '"decay.csv"' in script
        assert "quantum_exact" in script

    def test_strong_nearest_neighbour_traps(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["decay", "--n", "100", "--nu", "inf", "--gamma", "1", "--traps", "1,100",
             "--points", "40", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "decay.csv")
        quantum = frame[frame["label"] == "quantum_exact"]["value"]
        assert quantum.max() <= 1.0

    def test_time_range_flags(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["decay", "--n", "10", "--points", "20", "--t-min", "1", "--t-max", "100",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        manifest = _manifest(tmp_path / "manifest.txt")
        assert float(manifest["t_min"]) == pytest.approx(1.0)
        assert float(manifest["t_max"]) == pytest.approx(100.0)


class TestPerturbCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_table(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["perturb", "--n", "40", "--nu", "10", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "perturbation.csv")
        assert len(frame) == 40
        assert list(frame.columns[:7]) == [
            "l",
            "overlap_exact",
            "overlap_eq8",
            "overlap_eq9",
            "diff_exact",
            "diff_eq8",
            "diff_eq9",
        ]
        assert "overlap_nnn_operator" in frame.columns

    def test_literal_diagonal_changes_truncated_column(self, tmp_path):
        frames = []
        for extra in ([], ["--paper-literal-diag"]):
            out = tmp_path / str(len(extra))
            self.runner.invoke(
                cli.main, ["perturb", "--n", "30", "--nu", "4", *extra, "--out", str(out)]
            )
            frames.append(_read(out / "perturbation.csv"))
        numpy.testing.assert_array_equal(frames[0]["overlap_eq9"], frames[1]["overlap_eq9"])
        assert not numpy.allclose(
            frames[0]["overlap_nnn_operator"], frames[1]["overlap_nnn_operator"]
        )

    def test_rejects_nni(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["perturb", "--n", "40", "--nu", "inf", "--out", str(tmp_path)]
        )
        assert result.exit_code == 2


class TestFitCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_power_law_fixture(self, tmp_path):
        t = numpy.logspace(0, 4, 50)
        source = tmp_path / "curve.csv"
        source.write_text(
            "# synthetic\nt,value\n"
            + "".join("%.17g,%.17g\n" % (x, 0.3 * x**-0.75) for x in t)
        )
        result = self.runner.invoke(
            cli.main,
            ["fit", "--input", str(source), "--window", "1,10000", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "fit.csv")
        assert frame["exponent"].iloc[0] == pytest.approx(-0.75, abs=1e-10)
        assert frame["quantity"].iloc[0] == "decay_quantum_exact"

    def test_spectrum_fit(self, tmp_path):
        self.runner.invoke(
            cli.main,
            ["spectrum", "--n", "100", "--nu", "inf", "--gamma", "0.001", "--out", str(tmp_path)],
        )
        result = self.runner.invoke(
            cli.main, ["fit", "--input", str(tmp_path / "spectrum.csv"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "fit.csv")
        assert frame["quantity"].iloc[0] == "mu"
        assert frame["exponent"].iloc[0] == pytest.approx(2.0, abs=0.2)
        assert (tmp_path / "fit.csv").read_text().startswith("# N=100 nu=inf")

    def test_unknown_table(self, tmp_path):
        source = tmp_path / "other.csv"
        source.write_text("a,b\n1,2\n2,3\n3,4\n")
        result = self.runner.invoke(
            cli.main, ["fit", "--input", str(source), "--out", str(tmp_path)]
        )
        assert result.exit_code == 2


class TestFigureCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_unknown_preset(self, tmp_path):
        result = self.runner.invoke(cli.main, ["figure", "9z", "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_overlap_preset(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["figure", "2a", "--n", "100", "--plot", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        manifest = _manifest(tmp_path / "manifest.txt")
        assert manifest["preset"] == "2a"
        assert float(manifest["max_abs_err_eq9"]) <= 0.15 * float(manifest["max_abs_correction"])
        script = (tmp_path / "perturbation_nu10.gp").read_text()
        assert '"perturbation_nu10.csv" skip 2 using 1:7' in script
        assert "diff_eq8" in script

    def test_descriptive_alias(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["figure", "overlap-nu5", "--n", "30", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        assert _manifest(tmp_path / "manifest.txt")["preset"] == "2b"
        assert (tmp_path / "perturbation_nu5.csv").exists()

    def test_gamma_preset(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["figure", "3a", "--n", "40", "--plot", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        for nu in ("2", "3", "4", "5", "inf"):
            frame = _read(tmp_path / ("spectrum_nu%s.csv" % nu))
            assert numpy.all(numpy.diff(frame["gamma"]) >= -1e-14)
        fits = _read(tmp_path / "fits.csv")
        assert list(fits["quantity"]) == ["mu_nu2", "mu_nu3", "mu_nu4", "mu_nu5", "mu_nuinf"]
        manifest = _manifest(tmp_path / "manifest.txt")
        assert "2,3,4" in manifest["nu_values_note"]
        assert "3,4,5" in manifest["nu_values_note"]
        script = (tmp_path / "gamma.gp").read_text()
        for nu in ("2", "3", "4", "5", "inf"):
            assert '"spectrum_nu%s.csv" skip 2 using 1:3' % nu in script

    def test_decay_preset(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["figure", "1b", "--n", "30", "--points", "80", "--plot",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        for name in ("decay_nu3.csv", "decay_nuinf.gp", "crossings.csv",
                     "classical_dominant.csv", "fits.csv", "crossover.csv"):
            assert (tmp_path / name).exists()
        dominant = _read(tmp_path / "classical_dominant.csv")
        assert list(dominant["nu"]) == ["3", "4", "5", "inf"]
        crossover = _read(tmp_path / "crossover.csv")
        assert list(crossover.columns) == ["nu", "t_crossover"]
        assert list(crossover["nu"]) == ["3", "4", "5", "inf"]
        assert not (tmp_path / "figure-1b.partial").exists()
        assert _manifest(tmp_path / "manifest.txt")["preset"] == "1b"

    def test_failed_preset_leaves_only_staged_files(self, tmp_path, monkeypatch):
        calls = []
        compute_decay = figures.compute_decay

        def flaky(cfg, grid):
            calls.append(cfg.nu)
            if len(calls) == 2:
                raise SpectrumError("solver gave up")
            return compute_decay(cfg, grid)

        monkeypatch.setattr(figures, "compute_decay", flaky)
        result = self.runner.invoke(
            cli.main, ["figure", "1b", "--n", "12", "--points", "30", "--out", str(tmp_path)]
        )
        assert result.exit_code == 3
        assert "solver gave up" in result.output
        assert not (tmp_path / "decay_nu3.csv").exists()
        assert not (tmp_path / "manifest.txt").exists()
        assert (tmp_path / "figure-1b.partial" / "decay_nu3.csv").exists()


class TestSweepCommand:
    def setup_method(self):
        self.runner = CliRunner()

    def test_empty_list(self, tmp_path):
        result = self.runner.invoke(
            cli.main, ["sweep", "--n", "20", "--nu-list", "", "--out", str(tmp_path)]
        )
        assert result.exit_code == 2

    def test_single_cell_matches_spectrum_and_fit(self, tmp_path):
        sweep_dir, single_dir = tmp_path / "sweep", tmp_path / "single"
        result = self.runner.invoke(
            cli.main,
            ["sweep", "--n", "40", "--nu-list", "3", "--gamma-list", "0.001", "--jobs", "1",
             "--out", str(sweep_dir)],
        )
        assert result.exit_code == 0, result.output
        self.runner.invoke(
            cli.main,
            ["spectrum", "--n", "40", "--nu", "3", "--gamma", "0.001", "--out", str(single_dir)],
        )
        self.runner.invoke(
            cli.main,
            ["fit", "--input", str(single_dir / "spectrum.csv"), "--out", str(single_dir)],
        )
        assert (sweep_dir / "spectrum_nu3_gamma0.001.csv").read_bytes() == (
            single_dir / "spectrum.csv"
        ).read_bytes()
        swept = _read(sweep_dir / "sweep.csv")
        fitted = _read(single_dir / "fit.csv")
        assert swept["exponent"].iloc[0] == fitted["exponent"].iloc[0]

    def test_mu_decreases_towards_two(self, tmp_path):
        result = self.runner.invoke(
            cli.main,
            ["sweep", "--n", "100", "--nu-list", "inf,3,5,4", "--gamma-list", "0.001",
             "--jobs", "2", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        frame = _read(tmp_path / "sweep.csv")
        assert list(frame["nu"]) == ["3", "4", "5", "inf"]
        mus = frame["exponent"].to_numpy()
        assert numpy.all(numpy.diff(mus) < 0)
        assert mus[-1] == pytest.approx(2.0, abs=0.2)
