import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sievesim.estimators import fit_krr
from sievesim.functionals import evaluate_functional
from sievesim.harness import (
    ConfigError,
    ExperimentResult,
    config_test_function,
    config_theta,
    emit_results,
    fit_loglog_slope,
    parse_config,
    parse_results_csv,
    run_experiment,
    simulate_cell,
    slopes_from_cells,
)

DATA = Path(__file__).parent / "data"


def write_config(tmp_path, body):
    path = tmp_path / "exp.ini"
    path.write_text(body)
    return path


TINY = """\
[experiment]
kernel = laplace
d = 2
centers = 30
sizes = 30 60 120
m = 2
sigma = 0.5
replications = 2
master_seed = 11
theta_eval_points = 5000
record_timing = false

[estimator sample_average]
[estimator krr]
"""


class TestFitLoglogSlope:
    def test_exact_power_law(self):
        points = [(n, n ** -0.5) for n in (10, 100, 1000, 10_000)]
        slope, _, stderr = fit_loglog_slope(points)
        assert abs(slope - (-0.5)) < 1e-12
        assert stderr < 1e-12

    def test_constant_error(self):
        slope, _, _ = fit_loglog_slope([(10, 0.3), (100, 0.3), (1000, 0.3)])
        assert abs(slope) < 1e-14

    def test_matches_normal_equations_oracle(self):
        # Five perturbed points; the oracle solves the 2x2 normal equations
        # explicitly in log space.
        sizes = np.array([50.0, 100.0, 200.0, 400.0, 800.0])
        errors = sizes ** -0.4 * np.array([1.1, 0.92, 1.05, 0.97, 1.01])
        slope, intercept, stderr = fit_loglog_slope(zip(sizes, errors))
        lx, le = np.log(sizes), np.log(errors)
        A = np.vstack([lx, np.ones(5)]).T
        coef = np.linalg.solve(A.T @ A, A.T @ le)
        assert_allclose([slope, intercept], coef, rtol=1e-10)
        resid = le - A @ coef
        want_se = math.sqrt(resid @ resid / 3.0 / np.sum((lx - lx.mean()) ** 2))
        assert_allclose(stderr, want_se, rtol=1e-10)

    def test_two_points_have_zero_stderr(self):
        slope, _, stderr = fit_loglog_slope([(10, 1.0), (100, 0.1)])
        assert_allclose(slope, -1.0, rtol=1e-12)
        assert stderr == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([(10, 1.0)])
        with pytest.raises(ValueError):
            fit_loglog_slope([(10, 1.0), (20, -0.5)])
        with pytest.raises(ValueError):
            fit_loglog_slope([(10, 1.0), (10, 0.5)])


class TestParseConfig:
    def test_round_trip_fields(self, tmp_path):
        config = parse_config(write_config(tmp_path, TINY))
        assert config.kernel.family == "laplace"
        assert config.kernel.dim == 2
        assert config.sizes == (30, 60, 120)
        assert config.m == 2
        assert config.replications == 2
        assert [e.kind for e in config.estimators] == ["sample_average", "krr"]
        assert config.record_timing is False

    def test_budgets_mode(self, tmp_path):
        body = TINY.replace("sizes = 30 60 120\nm = 2\n", "budgets = 1000 2000\n")
        config = parse_config(write_config(tmp_path, body))
        assert config.cells() == [(100, 10), (159, 12)]

    def test_sizes_and_budgets_conflict(self, tmp_path):
        body = TINY.replace("m = 2\n", "m = 2\nbudgets = 1000\n")
        with pytest.raises(ConfigError):
            parse_config(write_config(tmp_path, body))

    def test_unknown_experiment_key(self, tmp_path):
        body = TINY.replace("m = 2\n", "m = 2\nturbo = yes\n")
        with pytest.raises(ConfigError, match="turbo"):
            parse_config(write_config(tmp_path, body))

    def test_unknown_estimator_kind(self, tmp_path):
        body = TINY + "[estimator spline]\n"
        with pytest.raises(ConfigError, match="spline"):
            parse_config(write_config(tmp_path, body))

    def test_unknown_estimator_option(self, tmp_path):
        body = TINY + "[estimator boosted]\nkind = krr\ndepth = 3\n"
        with pytest.raises(ConfigError, match="depth"):
            parse_config(write_config(tmp_path, body))

    def test_var_requires_tau(self, tmp_path):
        body = TINY.replace("[experiment]\n", "[experiment]\nfunctional = var\n")
        with pytest.raises(ConfigError, match="tau"):
            parse_config(write_config(tmp_path, body))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="no/such"):
            parse_config("no/such/config.ini")

    def test_named_sections_give_distinct_estimators(self, tmp_path):
        body = TINY + "[estimator wide_net]\nkind = relu\nepochs = 5\n"
        config = parse_config(write_config(tmp_path, body))
        assert config.estimators[-1].name == "wide_net"
        assert config.estimators[-1].kind == "relu"


class TestRunExperiment:
    def test_cell_grid_and_determinism(self, tmp_path):
        config = parse_config(write_config(tmp_path, TINY))
        a = run_experiment(config)
        b = run_experiment(config)
        assert len(a.cells) == 6
        for ca, cb in zip(a.cells, b.cells):
            assert ca == cb
        assert a.slopes == b.slopes

    def test_threaded_run_matches_sequential(self, tmp_path, monkeypatch):
        config = parse_config(write_config(tmp_path, TINY))
        seq = run_experiment(config)
        monkeypatch.setenv("SIEVESIM_THREADS", "4")
        par = run_experiment(config)
        assert seq.cells == par.cells

    def test_replication_data_isolated_by_seed(self, tmp_path):
        # The dataset at (size, replication) depends only on the master seed
        # and those two indices, never on the replication total.
        config = parse_config(write_config(tmp_path, TINY))
        import dataclasses
        more = dataclasses.replace(config, replications=5)
        surface = config_test_function(config)
        a = simulate_cell(config, surface, 1, 0)
        b = simulate_cell(more, surface, 1, 0)
        assert_allclose(a.ybar, b.ybar, rtol=0, atol=0)
        c = simulate_cell(config, surface, 1, 1)
        assert not np.allclose(a.ybar, c.ybar)

    def test_statistics_match_two_pass_oracle(self, tmp_path):
        # Recompute every replication error by hand and compare the
        # aggregated mean and unbiased standard deviation.
        body = TINY.replace("[estimator sample_average]\n", "")
        config = parse_config(write_config(tmp_path, body))
        result = run_experiment(config)
        surface = config_test_function(config)
        theta = config_theta(config, surface)
        from sievesim.estimators import default_regularization

        for si, (n, m) in enumerate(config.cells()):
            errs = []
            for r in range(config.replications):
                data = simulate_cell(config, surface, si, r)
                fitted = fit_krr(data, config.kernel,
                                 default_regularization(config.kernel, n))
                est = evaluate_functional(fitted.predict(data.scenarios),
                                          config.functional)
                errs.append(abs(est - theta.value))
            cell = result.get_cell("krr", n)
            assert_allclose(cell.mean_abs_error, np.mean(errs), rtol=1e-12)
            assert_allclose(cell.std_abs_error, np.std(errs, ddof=1), rtol=1e-12)

    def test_noiseless_identity_estimate_is_pure_mc(self, tmp_path):
        # With sigma=0, interpolating KRR, and the identity functional the
        # plug-in is the sample mean of true surface values, so its error is
        # Monte Carlo error alone (plus the reference's own).
        body = """\
[experiment]
eta = identity
kernel = laplace
d = 2
centers = 30
sizes = 512
sigma = 0.0
replications = 8
master_seed = 3
theta_eval_points = 200000

[estimator krr]
lambda = 1e-10
"""
        config = parse_config(write_config(tmp_path, body))
        result = run_experiment(config)
        surface = config_test_function(config)
        probe = surface(np.random.default_rng(0).random((4000, 2)))
        sd = probe.std()
        bound = 3.0 * sd / math.sqrt(512) + 3.0 * sd / math.sqrt(200_000)
        assert result.cells[0].mean_abs_error <= bound

    def test_fit_failures_invalidate_cells_not_runs(self, tmp_path):
        body = TINY + """\
[estimator exploding]
kind = relu
epochs = 10
learning_rate = 1e80
max_param = inf
"""
        config = parse_config(write_config(tmp_path, body))
        with np.errstate(over="ignore", invalid="ignore"):
            result = run_experiment(config)
        bad = [c for c in result.cells if c.estimator == "exploding"]
        assert all(c.replications == 0 for c in bad)
        assert all(math.isnan(c.mean_abs_error) for c in bad)
        assert any("exploding" in w for w in result.warnings)
        assert not any(s.estimator == "exploding" for s in result.slopes)
        good = result.get_cell("sample_average", 30)
        assert math.isfinite(good.mean_abs_error)

    def test_wall_time_recorded_when_enabled(self, tmp_path):
        body = TINY.replace("record_timing = false", "record_timing = true")
        config = parse_config(write_config(tmp_path, body))
        result = run_experiment(config)
        assert all(c.wall_time_s > 0.0 for c in result.cells)


class TestEmission:
    def test_empty_result_is_header_only(self, tmp_path):
        theta = config_theta(parse_config(DATA / "golden_config.ini"))
        empty = ExperimentResult(cells=(), slopes=(), theta=theta)
        paths = emit_results(empty, fmt="csv", path=tmp_path / "empty.csv")
        assert paths[0].read_text() == (
            "estimator,n,m,replications,mean_abs_error,std_abs_error,"
            "wall_time_s\n")
        assert paths[1].read_text() == "estimator,slope,intercept,slope_stderr\n"

    def test_csv_round_trip(self, tmp_path):
        config = parse_config(DATA / "golden_config.ini")
        result = run_experiment(config)
        path = tmp_path / "res.csv"
        emit_results(result, fmt="csv", path=path)
        back = parse_results_csv(path)
        assert tuple(back) == result.cells

    def test_json_mirrors_cells(self, tmp_path):
        import json

        config = parse_config(DATA / "golden_config.ini")
        result = run_experiment(config)
        path = tmp_path / "res.json"
        emit_results(result, fmt="json", path=path)
        doc = json.loads(path.read_text())
        assert len(doc["cells"]) == len(result.cells)
        assert doc["cells"][0]["mean_abs_error"] == result.cells[0].mean_abs_error
        assert doc["slopes"][0]["slope"] == result.slopes[0].slope

    def test_golden_bytes(self, tmp_path):
        """The frozen config reproduces the recorded output byte for byte.

        Pins the whole pipeline: seed derivation, simulation, estimation,
        aggregation, and 17-digit formatting.  Regenerate the fixtures by
        rerunning emit_results on tests/data/golden_config.ini if the seed
        layout ever changes deliberately.
        """
        config = parse_config(DATA / "golden_config.ini")
        result = run_experiment(config)
        paths = emit_results(result, fmt="csv", path=tmp_path / "golden.csv")
        assert paths[0].read_bytes() == (DATA / "golden_results.csv").read_bytes()
        assert paths[1].read_bytes() == (DATA / "golden_results_slopes.csv").read_bytes()

    def test_refit_slopes_from_csv_match(self):
        config = parse_config(DATA / "golden_config.ini")
        result = run_experiment(config)
        refit = slopes_from_cells(parse_results_csv(DATA / "golden_results.csv"))
        assert len(refit) == len(result.slopes)
        for a, b in zip(refit, result.slopes):
            assert a.estimator == b.estimator
            assert_allclose(a.slope, b.slope, rtol=1e-15)
