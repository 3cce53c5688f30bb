"""Config-driven convergence experiments with deterministic seed streams.

A run sweeps scenario counts (or total budgets under an allocation scheme),
replicates each cell with fresh data, fits every configured estimator on the
same data, and records the absolute error of the plug-in functional against
a high-resolution Monte Carlo reference.

Seed layout: all randomness derives from ``master_seed`` through
``numpy.random.SeedSequence`` with fixed integer tags, so any cell can be
reproduced in isolation and replications may run concurrently:

* test function: ``(master, 0)``
* reference value: ``(master, 1)``
* data for size index ``si``, replication ``r``: scenarios ``(master, 2, si, r, 0)``,
  inner noise ``(master, 2, si, r, 1)``
* estimator ``ei`` auxiliary draws (initialization, batching, inducing-point
  selection): ``(master, 3, si, r, ei)``
* fresh evaluation points (optional mode): ``(master, 4, si, r)``

Set the ``SIEVESIM_THREADS`` environment variable to run replications in a
thread pool; output is identical either way.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimators as est_mod
from .estimators import FitError, ReluArchitecture, TrainConfig
from .functionals import FunctionalSpec, evaluate_functional
from .kernels import KernelSpec, farthest_point_sample, random_subsample
from .rates import allocate, inducing_count_schedule
from .synthetic import ThetaOracle, make_test_function, simulate_inner, simulate_outer, true_theta

_TESTFN_TAG = 0
_THETA_TAG = 1
_DATA_TAG = 2
_FIT_TAG = 3
_EVAL_TAG = 4

_CSV_HEADER = "estimator,n,m,replications,mean_abs_error,std_abs_error,wall_time_s"
_SLOPE_HEADER = "estimator,slope,intercept,slope_stderr"

_ESTIMATOR_KINDS = ("sample_average", "krr", "inducing_krr", "relu")


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


@dataclass(frozen=True)
class EstimatorSetting:
    """One estimator entry from the config: a name, a kind, and its options."""

    name: str
    kind: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    functional: FunctionalSpec
    kernel: KernelSpec
    estimators: tuple[EstimatorSetting, ...]
    sizes: tuple[int, ...] | None = None
    m: int = 1
    budgets: tuple[int, ...] | None = None
    allocation: str = "standard"
    centers: int = 1000
    sigma: float = 1.0
    replications: int = 50
    master_seed: int = 0
    theta_eval_points: int = 1_000_000
    record_timing: bool = True
    evaluation: str = "train"
    smoothness: float | None = None
    var_alpha: float | None = None
    var_beta: float = 1.0
    var_gamma: float = 1.0

    def __post_init__(self):
        if (self.sizes is None) == (self.budgets is None):
            raise ConfigError("exactly one of sizes/budgets must be set")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        if self.evaluation not in ("train", "fresh"):
            raise ConfigError(f"evaluation must be 'train' or 'fresh', got {self.evaluation!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")

    def cells(self) -> list[tuple[int, int]]:
        """Resolved (n, m) pairs in sweep order."""
        if self.sizes is not None:
            return [(int(n), self.m) for n in self.sizes]
        out = []
        for budget in self.budgets:
            alloc = allocate(self.allocation, int(budget))
            out.append((alloc.n, alloc.m))
        return out


@dataclass(frozen=True)
class CellStats:
    estimator: str
    n: int
    m: int
    replications: int
    mean_abs_error: float
    std_abs_error: float
    wall_time_s: float


@dataclass(frozen=True)
class SlopeFit:
    estimator: str
    slope: float
    intercept: float
    slope_stderr: float


@dataclass(frozen=True)
class ExperimentResult:
    cells: tuple[CellStats, ...]
    slopes: tuple[SlopeFit, ...]
    theta: ThetaOracle
    warnings: tuple[str, ...] = ()

    def get_cell(self, estimator: str, n: int) -> CellStats:
        for cell in self.cells:
            if cell.estimator == estimator and cell.n == n:
                return cell
        raise KeyError(f"no cell for estimator {estimator!r} at n={n}")

    def get_slope(self, estimator: str) -> SlopeFit:
        for s in self.slopes:
            if s.estimator == estimator:
                return s
        raise KeyError(f"no slope for estimator {estimator!r}")


def fit_loglog_slope(points) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log error)``.

    Returns ``(slope, intercept, slope_stderr)``; the standard error is zero
    for a two-point fit (no residual degrees of freedom).
    """
    pts = [(float(x), float(e)) for x, e in points]
    if len(pts) < 2:
        raise ValueError(f"need at least two points, got {len(pts)}")
    if any(x <= 0 or e <= 0 for x, e in pts):
        raise ValueError("log-log fit needs positive sizes and errors")
    lx = np.log([x for x, _ in pts])
    le = np.log([e for _, e in pts])
    k = len(pts)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("all sizes coincide; slope is undefined")
    slope = float(np.sum((lx - lx.mean()) * (le - le.mean())) / sxx)
    intercept = float(le.mean() - slope * lx.mean())
    if k == 2:
        return slope, intercept, 0.0
    rss = float(np.sum((le - intercept - slope * lx) ** 2))
    return slope, intercept, math.sqrt(rss / (k - 2) / sxx)


# ---------------------------------------------------------------------------
# Config file parsing (INI-style: one [experiment] section plus one
# [estimator NAME] section per estimator; values are flat key = value lines).
# ---------------------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "functional", "eta", "tau", "kernel", "nu", "d", "centers", "sizes", "m",
    "budgets", "allocation", "sigma", "replications", "master_seed",
    "theta_eval_points", "record_timing", "evaluation", "smoothness",
    "alpha", "beta", "gamma",
}
_ESTIMATOR_KEYS = {
    "sample_average": {"kind"},
    "krr": {"kind", "lambda", "jitter"},
    "inducing_krr": {"kind", "schedule", "selection", "ridge"},
    "relu": {"kind", "hidden_widths", "epochs", "batch_size", "learning_rate",
             "sparsity", "max_param"},
}


def _int_list(raw: str) -> tuple[int, ...]:
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ConfigError("empty list value")
    return tuple(int(p) for p in parts)


def parse_config(path) -> ExperimentConfig:
    """Read an experiment description from an INI-style text file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")

    try:
        kind = exp.get("functional", "nested_expectation")
        if kind == "nested_expectation":
            functional = FunctionalSpec.expectation(exp.get("eta", "square"))
        elif kind == "var":
            if "tau" not in exp:
                raise ConfigError("var functional requires tau")
            functional = FunctionalSpec.value_at_risk(exp.getfloat("tau"))
        else:
            raise ConfigError(f"unknown functional {kind!r}")

        family = exp.get("kernel", "laplace")
        d = exp.getint("d")
        if d is None:
            raise ConfigError("experiment key 'd' is required")
        nu = exp.getfloat("nu") if "nu" in exp else None
        kernel = KernelSpec(family, d, nu=nu) if family == "matern" else KernelSpec(family, d)
        if family != "matern" and nu is not None:
            raise ConfigError("nu is only valid for matern kernels")

        sizes = _int_list(exp["sizes"]) if "sizes" in exp else None
        budgets = _int_list(exp["budgets"]) if "budgets" in exp else None

        settings = []
        for section in parser.sections():
            if section == "experiment":
                continue
            if not section.startswith("estimator"):
                raise ConfigError(f"unexpected section [{section}]")
            name = section[len("estimator"):].strip() or "estimator"
            body = parser[section]
            est_kind = body.get("kind", name)
            if est_kind not in _ESTIMATOR_KINDS:
                raise ConfigError(
                    f"section [{section}]: unknown estimator kind {est_kind!r} "
                    f"(name a kind or set kind=...)"
                )
            unknown = set(body) - _ESTIMATOR_KEYS[est_kind]
            if unknown:
                raise ConfigError(f"section [{section}]: unknown keys {sorted(unknown)}")
            settings.append(EstimatorSetting(
                name=name, kind=est_kind,
                options={k: body[k] for k in body if k != "kind"},
            ))

        return ExperimentConfig(
            functional=functional,
            kernel=kernel,
            estimators=tuple(settings),
            sizes=sizes,
            m=exp.getint("m", 1),
            budgets=budgets,
            allocation=exp.get("allocation", "standard"),
            centers=exp.getint("centers", 1000),
            sigma=exp.getfloat("sigma", 1.0),
            replications=exp.getint("replications", 50),
            master_seed=exp.getint("master_seed", 0),
            theta_eval_points=exp.getint("theta_eval_points", 1_000_000),
            record_timing=exp.getboolean("record_timing", True),
            evaluation=exp.get("evaluation", "train"),
            smoothness=exp.getfloat("smoothness") if "smoothness" in exp else None,
            var_alpha=exp.getfloat("alpha") if "alpha" in exp else None,
            var_beta=exp.getfloat("beta", 1.0),
            var_gamma=exp.getfloat("gamma", 1.0),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def _seed(master: int, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master, *tags])


def config_test_function(config: ExperimentConfig):
    return make_test_function(config.kernel, n_centers=config.centers,
                              seed=_seed(config.master_seed, _TESTFN_TAG))


def config_theta(config: ExperimentConfig, surface=None) -> ThetaOracle:
    f = surface if surface is not None else config_test_function(config)
    return true_theta(f, config.functional, eval_points=config.theta_eval_points,
                      seed=_seed(config.master_seed, _THETA_TAG))


def simulate_cell(config: ExperimentConfig, surface, size_index: int, replication: int):
    """Reproduce the dataset used at one (size, replication) cell."""
    n, m = config.cells()[size_index]
    scenarios = simulate_outer(
        n, config.kernel.dim,
        seed=_seed(config.master_seed, _DATA_TAG, size_index, replication, 0))
    return simulate_inner(
        surface, scenarios, m, config.sigma,
        seed=_seed(config.master_seed, _DATA_TAG, size_index, replication, 1))


def _resolve_krr_lambda(setting: EstimatorSetting, data, kernel) -> float:
    raw = setting.options.get("lambda", "default")
    if raw == "default":
        return est_mod.default_regularization(kernel, data.n)
    if raw == "cv":
        return est_mod.cross_validate_regularization(data, kernel)
    return float(raw)


def _resolve_inducing(setting: EstimatorSetting, data, kernel, seed):
    raw = str(setting.options.get("schedule", "experiment"))
    if raw in ("experiment", "theory"):
        count = inducing_count_schedule(kernel.family, kernel.dim, data.n,
                                        s=kernel.smoothness, mode=raw)
    else:
        count = int(raw)
    count = max(1, min(count, data.n))
    selection = setting.options.get("selection", "random")
    if selection == "random":
        return random_subsample(data.scenarios, count, seed=seed)
    if selection == "farthest":
        return farthest_point_sample(data.scenarios, count, seed=seed)
    raise ConfigError(f"unknown inducing selection {selection!r}")


def _relu_setup(setting: EstimatorSetting, seed):
    opts = setting.options
    widths = tuple(int(w) for w in str(opts.get("hidden_widths", "256 128")).replace(",", " ").split())
    sparsity_raw = str(opts.get("sparsity", "auto"))
    sparsity = None if sparsity_raw == "auto" else int(sparsity_raw)
    arch = ReluArchitecture(
        hidden_widths=widths,
        sparsity=sparsity,
        max_param=float(opts.get("max_param", 1000.0)),
    )
    batch_raw = str(opts.get("batch_size", "auto"))
    train = TrainConfig(
        epochs=int(opts.get("epochs", 2000)),
        batch_size=None if batch_raw == "auto" else int(batch_raw),
        learning_rate=float(opts.get("learning_rate", 1e-3)),
        seed=seed,
    )
    return arch, train


def _fit_one(setting: EstimatorSetting, data, kernel, seed):
    if setting.kind == "sample_average":
        return est_mod.fit_sample_average(data)
    if setting.kind == "krr":
        lam = _resolve_krr_lambda(setting, data, kernel)
        jitter = float(setting.options.get("jitter", est_mod.DEFAULT_JITTER))
        return est_mod.fit_krr(data, kernel, lam, jitter=jitter)
    if setting.kind == "inducing_krr":
        inducing = _resolve_inducing(setting, data, kernel, seed)
        ridge_raw = str(setting.options.get("ridge", "default"))
        ridge = None if ridge_raw == "default" else float(ridge_raw)
        return est_mod.fit_krr_inducing(data, kernel, inducing, ridge=ridge)
    arch, train = _relu_setup(setting, seed)
    return est_mod.fit_relu_sieve(data, arch, train)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full sweep and aggregate per-cell error statistics.

    Fit failures (:class:`~sievesim.estimators.FitError`) invalidate single
    replications and the run continues; any other exception aborts with the
    failing cell identified.  Slopes are fitted per estimator to
    ``log(mean_abs_error)`` against ``log(n * m)`` when at least three cells
    are valid; otherwise the slope is omitted and a warning recorded.
    """
    cells = config.cells()
    surface = config_test_function(config)
    theta = config_theta(config, surface)

    errors = {(ei, si): [] for ei in range(len(config.estimators)) for si in range(len(cells))}
    times = {key: 0.0 for key in errors}
    warnings: list[str] = []

    def run_cell(si: int, r: int):
        data = simulate_cell(config, surface, si, r)
        if config.evaluation == "fresh":
            eval_points = simulate_outer(
                data.n, config.kernel.dim,
                seed=_seed(config.master_seed, _EVAL_TAG, si, r))
        else:
            eval_points = data.scenarios
        out = []
        for ei, setting in enumerate(config.estimators):
            fit_seed = _seed(config.master_seed, _FIT_TAG, si, r, ei)
            start = time.perf_counter()
            try:
                fitted = _fit_one(setting, data, config.kernel, fit_seed)
                estimate = evaluate_functional(fitted.predict(eval_points), config.functional)
                err = abs(estimate - theta.value)
            except FitError as exc:
                out.append((ei, None, time.perf_counter() - start,
                            f"{setting.name} at n={data.n}, replication {r}: {exc}"))
                continue
            except Exception as exc:
                raise RuntimeError(
                    f"estimator {setting.name!r} failed at n={data.n}, replication {r}"
                ) from exc
            out.append((ei, err, time.perf_counter() - start, None))
        return out

    jobs = [(si, r) for si in range(len(cells)) for r in range(config.replications)]
    workers = int(os.environ.get("SIEVESIM_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cell_outputs = list(pool.map(lambda sr: run_cell(*sr), jobs))
    else:
        cell_outputs = [run_cell(si, r) for si, r in jobs]

    for (si, r), outputs in zip(jobs, cell_outputs):
        for ei, err, elapsed, warning in outputs:
            errors[(ei, si)].append(err)
            times[(ei, si)] += elapsed
            if warning:
                warnings.append(warning)

    stats: list[CellStats] = []
    slopes: list[SlopeFit] = []
    for ei, setting in enumerate(config.estimators):
        slope_points = []
        for si, (n, m) in enumerate(cells):
            vals = [e for e in errors[(ei, si)] if e is not None]
            if vals:
                mean = float(np.mean(vals))
                std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            else:
                mean, std = float("nan"), float("nan")
                warnings.append(f"{setting.name}: every replication failed at n={n}")
            stats.append(CellStats(
                estimator=setting.name, n=n, m=m, replications=len(vals),
                mean_abs_error=mean, std_abs_error=std,
                wall_time_s=times[(ei, si)] if config.record_timing else 0.0,
            ))
            if math.isfinite(mean) and mean > 0.0:
                slope_points.append((n * m, mean))
            else:
                warnings.append(
                    f"{setting.name}: cell n={n} excluded from slope fit "
                    f"(mean error {mean})"
                )
        if len(slope_points) >= 3:
            slope, intercept, stderr = fit_loglog_slope(slope_points)
            slopes.append(SlopeFit(setting.name, slope, intercept, stderr))
        elif len(cells) >= 3:
            warnings.append(f"{setting.name}: too few valid cells for a slope fit")

    return ExperimentResult(
        cells=tuple(stats),
        slopes=tuple(slopes),
        theta=theta,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def slope_sibling_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_slopes" + path.suffix)


def emit_results(result: ExperimentResult, fmt: str = "csv", path="results.csv") -> list[Path]:
    """Write per-cell statistics (with a slope companion file for CSV).

    CSV columns are fixed; floats carry 17 significant digits so parsing the
    file back reproduces them bit for bit.  JSON mirrors the same fields in
    one document.  Returns the paths written.
    """
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="\n") as fh:
            fh.write(_CSV_HEADER + "\n")
            for c in result.cells:
                fh.write(f"{c.estimator},{c.n},{c.m},{c.replications},"
                         f"{_fmt(c.mean_abs_error)},{_fmt(c.std_abs_error)},"
                         f"{_fmt(c.wall_time_s)}\n")
        slope_path = slope_sibling_path(path)
        with open(slope_path, "w", newline="\n") as fh:
            fh.write(_SLOPE_HEADER + "\n")
            for s in result.slopes:
                fh.write(f"{s.estimator},{_fmt(s.slope)},{_fmt(s.intercept)},"
                         f"{_fmt(s.slope_stderr)}\n")
        return [path, slope_path]
    if fmt == "json":
        doc = {
            "cells": [
                {"estimator": c.estimator, "n": c.n, "m": c.m,
                 "replications": c.replications, "mean_abs_error": c.mean_abs_error,
                 "std_abs_error": c.std_abs_error, "wall_time_s": c.wall_time_s}
                for c in result.cells
            ],
            "slopes": [
                {"estimator": s.estimator, "slope": s.slope, "intercept": s.intercept,
                 "slope_stderr": s.slope_stderr}
                for s in result.slopes
            ],
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        return [path]
    raise ValueError(f"unknown output format {fmt!r}")


def parse_results_csv(path) -> list[CellStats]:
    """Read back a cell CSV written by :func:`emit_results`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        out = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            name, n, m, reps, mean, std, wall = line.split(",")
            out.append(CellStats(
                estimator=name, n=int(n), m=int(m), replications=int(reps),
                mean_abs_error=float(mean), std_abs_error=float(std),
                wall_time_s=float(wall),
            ))
    return out


def slopes_from_cells(cells) -> list[SlopeFit]:
    """Refit per-estimator slopes from cell statistics (e.g. a parsed CSV)."""
    order: list[str] = []
    grouped: dict[str, list[tuple[float, float]]] = {}
    for c in cells:
        if c.estimator not in grouped:
            grouped[c.estimator] = []
            order.append(c.estimator)
        if math.isfinite(c.mean_abs_error) and c.mean_abs_error > 0.0:
            grouped[c.estimator].append((c.n * c.m, c.mean_abs_error))
    out = []
    for name in order:
        pts = grouped[name]
        if len(pts) >= 3:
            slope, intercept, stderr = fit_loglog_slope(pts)
            out.append(SlopeFit(name, slope, intercept, stderr))
    return out
