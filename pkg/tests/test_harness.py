import json
import os

import numpy as np
import pytest
from scipy import stats

from hilbert_lrd import cli
from hilbert_lrd.defaults import SCHEMA_VERSION
from hilbert_lrd.grid import uniform_grid
from hilbert_lrd.model import InnovationModel, MemoryProfile
from hilbert_lrd.process import ProcessConfig, simulate
from hilbert_lrd.rosenblatt import RosenblattKernelSpec, sample_rosenblatt
from hilbert_lrd.harness import (
    ConfigError,
    ExperimentConfig,
    anderson_darling,
    cross_moment_tensor,
    default_test_kernels,
    mc_scaled_fluctuations,
    moment_summary,
    projected_limit_second_moment,
    projected_statistics,
    read_path_binary,
    rng_stream,
    run,
    write_path_binary,
)


class TestRngStreams:
    def test_reproducible(self):
        a = rng_stream(7, 3, 1).standard_normal(8)
        b = rng_stream(7, 3, 1).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_replication_and_purpose_streams_differ(self):
        base = rng_stream(7, 0, 0).standard_normal(8)
        assert not np.array_equal(base, rng_stream(7, 1, 0).standard_normal(8))
        assert not np.array_equal(base, rng_stream(7, 0, 1).standard_normal(8))
        assert not np.array_equal(base, rng_stream(8, 0, 0).standard_normal(8))


def test_moment_summary_against_scipy():
    v = np.random.default_rng(0).gamma(2.0, size=5000)
    s = moment_summary(v)
    assert s["mean"] == pytest.approx(v.mean())
    assert s["var"] == pytest.approx(v.var(ddof=1))
    assert s["skewness"] == pytest.approx(stats.skew(v), rel=1e-10)
    assert s["excess_kurtosis"] == pytest.approx(stats.kurtosis(v), rel=1e-9)


class TestAndersonDarling:
    def test_matches_scipy_statistic(self):
        v = np.random.default_rng(1).standard_normal(500)
        a2, _ = anderson_darling(v)
        assert a2 == pytest.approx(stats.anderson(v).statistic, rel=1e-9)

    def test_calibration_on_normal_samples(self):
        # level-0.01 test should pass nearly always under the null
        passes = 0
        for rep in range(40):
            v = rng_stream(99, rep, 0).standard_normal(10**4)
            _, p = anderson_darling(v)
            passes += p > 0.01
        assert passes >= 36

    def test_rejects_rosenblatt_draws(self):
        prof = MemoryProfile.constant(0.4, 1)
        spec = RosenblattKernelSpec(profile=prof, innovations=InnovationModel.from_sigma(np.eye(1)))
        draws = sample_rosenblatt(spec, 128, 5.0, np.random.default_rng(0), size=10**4)
        _, p = anderson_darling(draws[:, 0, 0])
        assert p < 0.01

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            anderson_darling(np.arange(5.0))


class TestTestKernels:
    def test_scalar_grid(self):
        kernels = default_test_kernels(uniform_grid(1))
        assert len(kernels) == 1
        np.testing.assert_array_equal(kernels[0], np.ones((1, 1)))

    def test_modes_are_orthonormal(self):
        space = uniform_grid(6)
        kernels = default_test_kernels(space)
        assert len(kernels) == 4
        w = space.weights
        k00, k11 = kernels[0], kernels[1]
        assert np.einsum("rs,rs,r,s->", k00, k00, w, w) == pytest.approx(1.0)
        assert np.einsum("rs,rs,r,s->", k11, k11, w, w) == pytest.approx(1.0)
        assert np.einsum("rs,rs,r,s->", k00, k11, w, w) == pytest.approx(0.0, abs=1e-12)


def test_projected_statistics_flags_constant_projection():
    space = uniform_grid(2)
    samples = np.zeros((32, 2, 2))
    rows = projected_statistics(samples, default_test_kernels(space), space)
    assert all(not row["ad_applicable"] for row in rows)


def test_projected_limit_second_moment_consistent():
    prof = MemoryProfile(d=(0.3, 0.42))
    innov = InnovationModel.from_sigma(np.array([[1.0, 0.5], [0.5, 1.0]]))
    spec = RosenblattKernelSpec(profile=prof, innovations=innov)
    space = uniform_grid(2)
    S = np.array([[1.0, -0.5], [0.25, 2.0]])
    cm = cross_moment_tensor(spec)
    w = space.weights
    direct = np.einsum("rsab,rs,ab,r,s,a,b->", cm, S, S, w, w, w, w)
    assert projected_limit_second_moment(spec, S, space) == pytest.approx(direct)
    # symmetry of the cross-moment tensor under pair swap
    np.testing.assert_allclose(cm, np.transpose(cm, (2, 3, 0, 1)), atol=1e-12)


class TestExperimentConfig:
    def test_json_file_round_trip(self, tmp_path):
        cfg = ExperimentConfig(
            task="verify-clt", m=2, d_spec={"constant": 0.1},
            N_list=(64, 128), replications=10, seed=5, out=str(tmp_path),
        )
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg.to_dict()))
        again = ExperimentConfig.from_file(str(p))
        assert again == cfg

    def test_toml_file(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(
            'task = "simulate"\nout = "."\n\n[model]\nm = 1\n'
            "[model.d]\nconstant = 0.2\n\n[run]\nN = [16]\nJ = 32\nseed = 1\n"
        )
        cfg = ExperimentConfig.from_file(str(p))
        assert cfg.task == "simulate"
        assert cfg.N_list == (16,)
        assert cfg.J == 32

    def test_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig(task="nope")
        with pytest.raises(ConfigError):
            ExperimentConfig(task="simulate", N_list=(64, 32))
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(str(tmp_path / "missing.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(str(bad))

    def test_truncation_rule(self):
        cfg = ExperimentConfig(task="simulate", d_spec={"constant": 0.2}, J=128)
        assert cfg.truncation_for(64) == 128
        auto = ExperimentConfig(task="simulate", d_spec={"constant": 0.2}, J="auto")
        assert auto.truncation_for(64) >= 256

    def test_profile_hash_tracks_model_only(self):
        a = ExperimentConfig(task="simulate", d_spec={"constant": 0.2}, seed=1)
        b = ExperimentConfig(task="simulate", d_spec={"constant": 0.2}, seed=2)
        c = ExperimentConfig(task="simulate", d_spec={"constant": 0.3}, seed=1)
        assert a.profile_hash() == b.profile_hash() != c.profile_hash()


def test_path_binary_round_trip(tmp_path):
    prof = MemoryProfile.constant(0.3, 2)
    innov = InnovationModel.from_sigma(np.eye(2))
    cfg = ProcessConfig(profile=prof, innovations=innov, N=8, J=16, seed=4, H=0)
    path = simulate(cfg)
    f = str(tmp_path / "p.bin")
    write_path_binary(path, f)
    back = read_path_binary(f)
    assert (back["N"], back["m"], back["J"], back["seed"]) == (8, 2, 16, 4)
    np.testing.assert_array_equal(back["x"], path.x)


class TestMcScaledFluctuations:
    def test_truncated_engine_tracks_analytic_limit(self):
        # correlated sigma forces the truncated moving-average engine;
        # its projected variance must approach the sigma_pairing limit
        from hilbert_lrd.gaussian_limit import sigma_pairing

        space = uniform_grid(2)
        prof = MemoryProfile.constant(0.05, 2)
        innov = InnovationModel.from_sigma(np.array([[1.0, 0.5], [0.5, 1.0]]))
        fluct = mc_scaled_fluctuations(space, prof, innov, 512, 600, 3, "SqrtN", J=8192)
        S = np.ones((2, 2))
        w = space.weights
        proj = np.einsum("nrs,rs,r,s->n", fluct, S, w, w)
        limit = sigma_pairing(0, 0, S, S, prof, innov, space).value
        assert proj.var(ddof=1) == pytest.approx(limit, rel=0.3)

    def test_thread_count_does_not_change_values(self):
        space = uniform_grid(2)
        prof = MemoryProfile.constant(0.15, 2)
        innov = InnovationModel.from_sigma(np.eye(2))
        one = mc_scaled_fluctuations(space, prof, innov, 128, 200, 9, "SqrtN", threads=1)
        eight = mc_scaled_fluctuations(space, prof, innov, 128, 200, 9, "SqrtN", threads=8)
        np.testing.assert_array_equal(one, eight)


class TestRunAndCli:
    def _config_file(self, tmp_path, out, task="verify-clt"):
        cfg = {
            "task": task,
            "model": {"m": 1, "d": {"constant": 0.1}, "sigma": {"identity_scaled": 1.0}},
            "run": {"N": [128], "replications": 64, "seed": 12},
            "out": out,
        }
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        return str(p)

    def test_run_writes_report_and_csv(self, tmp_path):
        out = str(tmp_path / "out")
        report = run(ExperimentConfig.from_file(self._config_file(tmp_path, out)))
        assert report.schema_version == SCHEMA_VERSION
        assert os.path.exists(os.path.join(out, "verify_clt.csv"))
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["schema_version"] == SCHEMA_VERSION

    def test_csv_byte_identical_across_threads(self, tmp_path):
        outs = []
        for threads in (1, 8):
            out = str(tmp_path / f"t{threads}")
            run(ExperimentConfig.from_file(self._config_file(tmp_path, out)), threads=threads)
            outs.append(open(os.path.join(out, "verify_clt.csv"), "rb").read())
        assert outs[0] == outs[1]

    def test_cli_success_and_overrides(self, tmp_path, capsys):
        out = str(tmp_path / "cli_out")
        code = cli.main(
            ["verify-clt", "--config", self._config_file(tmp_path, "ignored"), "--out", out, "--threads", "2"]
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["task"] == "verify-clt"
        assert os.path.exists(os.path.join(out, "verify_clt.csv"))

    def test_cli_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"task": "wrong-task"}')
        assert cli.main(["simulate", "--config", str(bad)]) == 2
        capsys.readouterr()

    def test_cli_domain_error(self, tmp_path, capsys):
        cfg = tmp_path / "dom.json"
        cfg.write_text(
            json.dumps(
                {
                    "task": "verify-rosenblatt",
                    "model": {"m": 1, "d": {"constant": 0.1}},
                    "run": {"N": [64], "replications": 16},
                    "out": str(tmp_path),
                }
            )
        )
        assert cli.main(["verify-rosenblatt", "--config", str(cfg)]) == 3
        capsys.readouterr()
