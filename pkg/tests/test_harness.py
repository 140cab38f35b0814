import subprocess
import sys

import numpy as np
import pytest

from mccdma_ga.airlink import SystemConfig
from mccdma_ga.errors import ConfigError
from mccdma_ga.ga import GaConfig
from mccdma_ga.harness import (
    CurveData,
    ExperimentConfig,
    build_link,
    emit_curves,
    measure_ber,
    reference_weights,
    run_ber_vs_snr,
    run_mse_vs_cycles,
)
from mccdma_ga.numerics import SeededRng


def tiny_config(**kwargs):
    defaults = dict(
        system=SystemConfig(subcarriers=8, users=3, paths=2, noise_variance=0.1, master_seed=11),
        ga=GaConfig(population_size=8, mutants_per_generation=2),
        trials=2,
        cycles=40,
        fitness_blocks=16,
        holdout_blocks=32,
        payload_blocks=2000,
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestExperimentConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(trials=0),
            dict(cycles=0),
            dict(lms_mu=0.0),
            dict(fast_lms_mu=(0.02, -0.01)),
            dict(payload_blocks=0),
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            tiny_config(**kwargs)


class TestBuildLink:
    def test_unit_energy_codes_have_unit_norm(self):
        link = build_link(SystemConfig(master_seed=1), SeededRng(1), unit_energy_codes=True)
        norms = np.sum(np.abs(link.codes) ** 2, axis=2)
        assert np.allclose(norms, 1.0)

    def test_unit_chip_codes_have_norm_m(self):
        link = build_link(SystemConfig(master_seed=1), SeededRng(1), unit_energy_codes=False)
        norms = np.sum(np.abs(link.codes) ** 2, axis=2)
        assert np.allclose(norms, 32.0)

    def test_same_rng_same_link(self):
        a = build_link(SystemConfig(master_seed=2), SeededRng(9), True)
        b = build_link(SystemConfig(master_seed=2), SeededRng(9), True)
        assert np.array_equal(a.codes, b.codes)
        assert np.array_equal(a.channel.taps, b.channel.taps)


class TestMseExperiment:
    def test_single_cycle_series_have_length_one(self):
        data = run_mse_vs_cycles(tiny_config(cycles=1, fitness_blocks=1))
        assert all(len(v) == 1 for v in data.series.values())
        assert len(data.x) == 1

    def test_emits_expected_series(self):
        data = run_mse_vs_cycles(tiny_config(cycles=5, fitness_blocks=5))
        assert list(data.series) == [
            "lms(mu=0.01)",
            "fast-lms(mu_c=0.02)",
            "fast-lms(mu_c=0.01)",
            "ga",
            "mmse",
        ]

    def test_noiseless_single_user_all_receivers_converge(self):
        # with no noise and no interference every receiver drives the
        # held-out error to (near) zero; the genetic receiver needs a
        # long run because its sign-flip search refines slowly
        cfg = ExperimentConfig(
            system=SystemConfig(subcarriers=4, users=1, paths=2, noise_variance=0.0, master_seed=42),
            ga=GaConfig(population_size=128, mutants_per_generation=32),
            trials=5,
            cycles=2000,
            fitness_blocks=64,
            holdout_blocks=64,
        )
        data = run_mse_vs_cycles(cfg)
        for name, series in data.series.items():
            assert series[-1] <= 1e-2, f"{name} ended at {series[-1]}"

    def test_deterministic(self):
        a = run_mse_vs_cycles(tiny_config(cycles=10, fitness_blocks=10))
        b = run_mse_vs_cycles(tiny_config(cycles=10, fitness_blocks=10))
        for name in a.series:
            assert np.array_equal(a.series[name], b.series[name])


class TestBerExperiment:
    def test_high_snr_single_user_error_free_for_model_and_ga(self):
        cfg = ExperimentConfig(
            system=SystemConfig(subcarriers=4, users=1, paths=2, noise_variance=0.1, master_seed=5),
            ga=GaConfig(population_size=32, mutants_per_generation=8),
            snr_grid_db=(60.0,),
            trials=1,
            cycles=200,
            fitness_blocks=32,
            payload_blocks=10_000,
        )
        data = run_ber_vs_snr(cfg)
        assert data.series["mmse"][0] == 0.0
        assert data.series["ga"][0] == 0.0

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            run_ber_vs_snr(tiny_config(snr_grid_db=()))

    def test_mmse_estimator_stable_across_payload_halves(self):
        # disjoint payload halves agree within 3 binomial standard deviations
        link = build_link(SystemConfig(subcarriers=8, users=3, master_seed=31), SeededRng(31), True)
        weights, _ = reference_weights(link, 0.5)
        receivers = {"mmse": weights}
        blocks = 40_000
        rng = SeededRng(77)
        first = measure_ber(link, receivers, 0.5, blocks, rng)["mmse"]
        second = measure_ber(link, receivers, 0.5, blocks, rng)["mmse"]
        pooled = (first + second) / 2
        sigma = np.sqrt(max(pooled * (1 - pooled), 1e-12) / (4 * blocks))
        assert abs(first - second) <= 3 * np.sqrt(2) * sigma

    def test_ber_non_increasing_in_snr_within_tolerance(self):
        cfg = tiny_config(
            snr_grid_db=(0.0, 6.0, 12.0), trials=2, cycles=60, payload_blocks=20_000
        )
        data = run_ber_vs_snr(cfg)
        bits = 4 * cfg.payload_blocks
        for name in ("mmse", "lms(mu=0.01)"):
            series = data.series[name]
            for lo, hi in zip(series[1:], series[:-1]):
                sigma = np.sqrt(max(hi * (1 - hi), 1e-12) / bits)
                assert lo <= hi + 2 * sigma, f"{name} increased: {hi} -> {lo}"


class TestEmitCurves:
    def _curve(self):
        return CurveData(
            x_label="signal to noise ratio",
            x_units="dB",
            y_label="bit error rate",
            y_units="ber",
            x=np.array([0.0]),
            series={"mmse": np.array([0.125]), "ga": np.array([0.25])},
            trials=3,
            metadata={"master_seed": "1"},
        )

    def test_single_point_two_series_layout(self, tmp_path):
        path = tmp_path / "curve.csv"
        emit_curves(self._curve(), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == "signal to noise ratio [dB],mmse [ber],ga [ber]"
        assert lines[1] == "0,0.125,0.25"
        meta = (tmp_path / "curve.csv.meta").read_text()
        assert "master_seed = 1" in meta
        assert "series = mmse, ga" in meta

    def test_byte_identical_re_emission(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_curves(self._curve(), a)
        emit_curves(self._curve(), b)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.csv.meta").read_bytes() == (tmp_path / "b.csv.meta").read_bytes()

    def test_empty_series_refused(self, tmp_path):
        curve = CurveData(
            x_label="x",
            x_units="u",
            y_label="y",
            y_units="v",
            x=np.array([0.0]),
            series={},
            trials=1,
            metadata={},
        )
        with pytest.raises(ConfigError):
            emit_curves(curve, tmp_path / "empty.csv")

    def test_non_finite_series_refused(self):
        with pytest.raises(ConfigError):
            CurveData(
                x_label="x",
                x_units="u",
                y_label="y",
                y_units="v",
                x=np.array([0.0]),
                series={"bad": np.array([np.inf])},
                trials=1,
                metadata={},
            )

    def test_figure_rendering(self, tmp_path):
        from mccdma_ga.plotting import figure_path, render_curves

        png = tmp_path / "curve.png"
        render_curves(self._curve(), png)
        assert png.stat().st_size > 0
        assert figure_path("out/report.csv") == "out/report.png"


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "mccdma_ga.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


class TestCli:
    def test_verify_passes(self, tmp_path):
        result = run_cli(["verify", "--seed", "7"], tmp_path)
        assert result.returncode == 0
        assert "4/4 checks passed" in result.stdout

    def test_selftest_passes(self, tmp_path):
        result = run_cli(["selftest", "--seed", "3"], tmp_path)
        assert result.returncode == 0
        assert "checks passed" in result.stdout

    def test_zero_cycles_is_config_error(self, tmp_path):
        result = run_cli(["mse-curve", "--cycles", "0"], tmp_path)
        assert result.returncode == 2
        assert "cycles" in result.stderr

    def test_unknown_flag_is_usage_error(self, tmp_path):
        result = run_cli(["mse-curve", "--bogus"], tmp_path)
        assert result.returncode == 2

    def test_unknown_subcommand_is_usage_error(self, tmp_path):
        result = run_cli(["frobnicate"], tmp_path)
        assert result.returncode == 2

    def test_config_file_with_unknown_field_rejected(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"system": {"bogus_field": 3}}')
        result = run_cli(["mse-curve", "--config", str(cfg)], tmp_path)
        assert result.returncode == 2
        assert "bogus_field" in result.stderr

    def test_mse_curve_writes_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            '{"system": {"subcarriers": 8, "users": 2, "paths": 2},'
            ' "ga": {"population_size": 8, "mutants_per_generation": 2},'
            ' "trials": 1, "cycles": 10, "fitness_blocks": 10, "holdout_blocks": 16}'
        )
        result = run_cli(
            ["mse-curve", "--config", str(cfg), "--seed", "5", "--out", "mse.csv"], tmp_path
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "mse.csv").exists()
        assert (tmp_path / "mse.csv.meta").exists()
        assert (tmp_path / "mse.png").exists()
        header = (tmp_path / "mse.csv").read_text().splitlines()[0]
        assert header.startswith("training cycle [cycles],lms(mu=0.01) [mse]")

    def test_ber_curve_byte_reproducible(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            '{"system": {"subcarriers": 8, "users": 2, "paths": 2},'
            ' "ga": {"population_size": 8, "mutants_per_generation": 2},'
            ' "trials": 1, "cycles": 20, "fitness_blocks": 16,'
            ' "payload_blocks": 2000}'
        )
        args = ["ber-curve", "--config", str(cfg), "--seed", "9", "--snr-min", "0",
                "--snr-max", "10", "--snr-step", "5"]
        first = run_cli([*args, "--out", "a.csv"], tmp_path)
        second = run_cli([*args, "--out", "b.csv"], tmp_path)
        assert first.returncode == 0, first.stderr
        assert second.returncode == 0, second.stderr
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv.meta").read_bytes().replace(b"a.csv", b"b.csv") == (
            tmp_path / "b.csv.meta"
        ).read_bytes()
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
