"""Synthetic ground truth and the two-level simulation of noisy observations.

The standard test function is a seeded kernel mixture

    f(x) = (1/N) * sum_i c_i k(x, U_i),

with ``c_i`` standard normal and ``U_i`` uniform on the unit cube, frozen at
construction.  Its squared RKHS norm is available in closed form.  Constant
and linear overrides are provided for exact-answer checks.

Simulation is two-level: outer scenarios are uniform on ``[0,1]^d``; each
scenario gets ``m`` noisy inner samples ``f(x_i) + eps`` whose average is
retained (raw inner samples are discarded).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._random import as_generator
from .functionals import FunctionalSpec, evaluate_functional
from .kernels import KernelSpec, as_points, kernel_matrix, rkhs_norm_sq

_EVAL_CHUNK = 10_000
_INNER_CHUNK_BUDGET = 50_000_000


@dataclass(frozen=True)
class TestFunction:
    """Ground-truth surface with exact evaluation.

    Either a frozen kernel mixture (``kernel``, ``centers``, ``coefficients``
    set, ``override`` None) or a direct functional form (``override`` set).
    """

    dim: int
    kernel: KernelSpec | None = None
    centers: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    seed: int | None = None
    norm_sq: float | None = None
    override: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "kernel_mixture"

    def __post_init__(self):
        if self.override is None:
            if self.kernel is None or self.centers is None or self.coefficients is None:
                raise ValueError("kernel mixture needs kernel, centers, and coefficients")
            ctr = np.asarray(self.centers, dtype=float)
            coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
            if ctr.shape != (coef.size, self.dim):
                raise ValueError(
                    f"centers shape {ctr.shape} incompatible with "
                    f"{coef.size} coefficients in dimension {self.dim}"
                )
            ctr.setflags(write=False)
            coef.setflags(write=False)
            object.__setattr__(self, "centers", ctr)
            object.__setattr__(self, "coefficients", coef)

    def __call__(self, x) -> np.ndarray:
        return eval_f(self, x)


@dataclass(frozen=True)
class NestedDataset:
    """Outer scenarios with inner-averaged responses."""

    scenarios: np.ndarray
    ybar: np.ndarray
    m: int
    noise_sigma: float
    seed: int | None = None

    def __post_init__(self):
        sc = np.asarray(self.scenarios, dtype=float)
        yb = np.asarray(self.ybar, dtype=float).reshape(-1)
        if sc.ndim != 2 or sc.shape[0] != yb.size:
            raise ValueError(f"scenarios {sc.shape} do not match {yb.size} responses")
        object.__setattr__(self, "scenarios", sc)
        object.__setattr__(self, "ybar", yb)

    @property
    def n(self) -> int:
        return self.scenarios.shape[0]

    @property
    def dim(self) -> int:
        return self.scenarios.shape[1]


@dataclass(frozen=True)
class ThetaOracle:
    """High-resolution Monte Carlo reference for the target functional."""

    functional: FunctionalSpec
    value: float
    eval_points: int
    seed: int | None


def make_test_function(kernel: KernelSpec, n_centers: int = 1000, seed=0) -> TestFunction:
    """Draw and freeze a kernel-mixture test function.

    Centers are drawn first (uniform rows), then coefficients (standard
    normal), from a single generator, so the surface is reproducible from
    ``seed`` alone.  The squared RKHS norm is computed once and cached.
    """
    if n_centers < 1:
        raise ValueError(f"n_centers must be >= 1, got {n_centers}")
    rng = as_generator(seed)
    centers = rng.random((n_centers, kernel.dim))
    coefficients = rng.standard_normal(n_centers)
    norm = rkhs_norm_sq(kernel, coefficients, centers)
    return TestFunction(
        dim=kernel.dim,
        kernel=kernel,
        centers=centers,
        coefficients=coefficients,
        seed=seed if isinstance(seed, int) else None,
        norm_sq=norm,
    )


def constant_test_function(value: float, dim: int) -> TestFunction:
    """Surface identically equal to ``value``; handy for exact checks."""
    return TestFunction(
        dim=dim,
        override=lambda pts: np.full(pts.shape[0], float(value)),
        label=f"constant({value})",
    )


def linear_test_function(weights, dim: int, intercept: float = 0.0) -> TestFunction:
    """Surface ``f(x) = w . x + intercept``."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != dim:
        raise ValueError(f"{w.size} weights for dimension {dim}")
    return TestFunction(
        dim=dim,
        override=lambda pts: pts @ w + intercept,
        label="linear",
    )


def eval_f(f: TestFunction, x) -> np.ndarray:
    """Evaluate the surface at rows of ``x``; chunked so large grids fit in memory."""
    pts = as_points(x)
    if pts.shape[1] != f.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, surface expects {f.dim}")
    if f.override is not None:
        return np.asarray(f.override(pts), dtype=float).reshape(pts.shape[0])
    out = np.empty(pts.shape[0])
    scale = 1.0 / f.coefficients.size
    for start in range(0, pts.shape[0], _EVAL_CHUNK):
        block = pts[start : start + _EVAL_CHUNK]
        out[start : start + _EVAL_CHUNK] = kernel_matrix(f.kernel, block, f.centers) @ f.coefficients
        out[start : start + _EVAL_CHUNK] *= scale
    return out


def simulate_outer(count: int, dim: int, seed=0) -> np.ndarray:
    """Draw ``count`` outer scenarios uniformly from the unit cube."""
    if count < 1 or dim < 1:
        raise ValueError(f"need count >= 1 and dim >= 1, got {count}, {dim}")
    rng = as_generator(seed)
    return rng.random((count, dim))


def simulate_inner(f: TestFunction, scenarios, m: int, sigma: float, seed=0) -> NestedDataset:
    """Average ``m`` noisy inner samples per scenario.

    Observations are ``f(x_i) + eps`` with ``eps ~ Normal(0, sigma^2)``
    i.i.d.; only the per-scenario average is kept.
    """
    pts = as_points(scenarios)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = as_generator(seed)
    values = eval_f(f, pts)
    n = pts.shape[0]
    if sigma == 0.0:
        ybar = values.copy()
    else:
        ybar = np.empty(n)
        rows = max(1, _INNER_CHUNK_BUDGET // m)
        for start in range(0, n, rows):
            stop = min(start + rows, n)
            noise = rng.standard_normal((stop - start, m))
            ybar[start:stop] = values[start:stop] + sigma * noise.mean(axis=1)
    return NestedDataset(
        scenarios=pts,
        ybar=ybar,
        m=m,
        noise_sigma=float(sigma),
        seed=seed if isinstance(seed, int) else None,
    )


def true_theta(
    f: TestFunction,
    functional: FunctionalSpec,
    eval_points: int = 10_000,
    seed=0,
) -> ThetaOracle:
    """Monte Carlo reference value of the functional on the noise-free surface."""
    if eval_points < 1:
        raise ValueError(f"eval_points must be >= 1, got {eval_points}")
    rng = as_generator(seed)
    values = np.empty(eval_points)
    for start in range(0, eval_points, _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, eval_points)
        values[start:stop] = eval_f(f, rng.random((stop - start, f.dim)))
    return ThetaOracle(
        functional=functional,
        value=evaluate_functional(values, functional),
        eval_points=eval_points,
        seed=seed if isinstance(seed, int) else None,
    )


# ---------------------------------------------------------------------------
# Columnar text serialization.
#
# Files are plain text: '#'-prefixed header lines with key=value tokens,
# then one whitespace-separated row per record, floats at 17 significant
# digits so round-trips are exact.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header_fields(line: str) -> dict[str, str]:
    fields = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, _, val = token.partition("=")
            fields[key] = val
    return fields


def _kernel_header(spec: KernelSpec) -> str:
    nu = "-" if spec.nu is None else _fmt(spec.nu)
    return f"family={spec.family} dim={spec.dim} nu={nu} lengthscale={_fmt(spec.lengthscale)}"


def _kernel_from_fields(fields: dict[str, str]) -> KernelSpec:
    nu = None if fields["nu"] == "-" else float(fields["nu"])
    return KernelSpec(
        family=fields["family"],
        dim=int(fields["dim"]),
        nu=nu,
        lengthscale=float(fields["lengthscale"]),
    )


def save_test_function(f: TestFunction, path) -> None:
    """Write a kernel-mixture surface as columnar text (centers then coefficient)."""
    if f.override is not None:
        raise ValueError(f"only kernel mixtures serialize; got {f.label!r}")
    seed = "-" if f.seed is None else str(f.seed)
    with open(path, "w", newline="\n") as fh:
        fh.write("# sievesim test function v1\n")
        fh.write(f"# {_kernel_header(f.kernel)} n_centers={f.coefficients.size} "
                 f"seed={seed} norm_sq={_fmt(f.norm_sq)}\n")
        fh.write("# columns: center_1..center_d coefficient\n")
        for row, c in zip(f.centers, f.coefficients):
            fh.write(" ".join(_fmt(v) for v in row) + " " + _fmt(c) + "\n")


def load_test_function(path) -> TestFunction:
    with open(path) as fh:
        return _read_test_function(fh)


def _read_test_function(fh: io.TextIOBase) -> TestFunction:
    first = fh.readline()
    if "test function v1" not in first:
        raise ValueError(f"not a sievesim test function file: {first.strip()!r}")
    fields = _header_fields(fh.readline())
    fh.readline()  # column comment
    data = np.loadtxt(fh, ndmin=2)
    kernel = _kernel_from_fields(fields)
    n = int(fields["n_centers"])
    if data.shape != (n, kernel.dim + 1):
        raise ValueError(f"expected {n} rows of {kernel.dim + 1} columns, got {data.shape}")
    seed = None if fields["seed"] == "-" else int(fields["seed"])
    return TestFunction(
        dim=kernel.dim,
        kernel=kernel,
        centers=data[:, :-1],
        coefficients=data[:, -1],
        seed=seed,
        norm_sq=float(fields["norm_sq"]),
    )


def save_dataset(data: NestedDataset, path) -> None:
    """Write scenarios and inner averages as columnar text."""
    seed = "-" if data.seed is None else str(data.seed)
    with open(path, "w", newline="\n") as fh:
        fh.write("# sievesim nested dataset v1\n")
        fh.write(f"# dim={data.dim} n={data.n} m={data.m} "
                 f"sigma={_fmt(data.noise_sigma)} seed={seed}\n")
        fh.write("# columns: x_1..x_d ybar\n")
        for row, y in zip(data.scenarios, data.ybar):
            fh.write(" ".join(_fmt(v) for v in row) + " " + _fmt(y) + "\n")


def load_dataset(path) -> NestedDataset:
    with open(path) as fh:
        first = fh.readline()
        if "nested dataset v1" not in first:
            raise ValueError(f"not a sievesim dataset file: {first.strip()!r}")
        fields = _header_fields(fh.readline())
        fh.readline()
        data = np.loadtxt(fh, ndmin=2)
    dim, n = int(fields["dim"]), int(fields["n"])
    if data.shape != (n, dim + 1):
        raise ValueError(f"expected {n} rows of {dim + 1} columns, got {data.shape}")
    seed = None if fields["seed"] == "-" else int(fields["seed"])
    return NestedDataset(
        scenarios=data[:, :-1],
        ybar=data[:, -1],
        m=int(fields["m"]),
        noise_sigma=float(fields["sigma"]),
        seed=seed,
    )
