"""Least-squares surface estimators over interchangeable sieves.

All four estimators consume a :class:`~sievesim.synthetic.NestedDataset`
(outer scenarios with inner-averaged responses) and expose ``predict``:

* sample average: the inner averages themselves, extended off-sample by
  nearest neighbor;
* kernel ridge regression on the full scenario set;
* least squares on the span of kernel sections at a few inducing points;
* a sparse, bounded ReLU network trained by an adaptive first-order method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .kernels import DEFAULT_JITTER, KernelSpec, PointSet, as_points, gram, kernel_matrix
from .network import ReluNetwork
from .synthetic import NestedDataset
from ._random import as_generator


class FitError(RuntimeError):
    """An estimator fit failed; the message carries diagnostics."""


class TrainingDiverged(FitError):
    """Network training produced a non-finite loss."""

    def __init__(self, iteration: int, loss: float):
        super().__init__(f"non-finite training loss ({loss}) at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class TrainingMeta:
    """Fit diagnostics: sample sizes plus the empirical residual norm."""

    n: int
    m: int
    residual_norm: float
    detail: dict = field(default_factory=dict)


def _residual_norm(predictions: np.ndarray, ybar: np.ndarray) -> float:
    return float(np.sqrt(np.mean((predictions - ybar) ** 2)))


# ---------------------------------------------------------------------------
# Sample average
# ---------------------------------------------------------------------------

class SampleAverageEstimator:
    """Inner averages at the scenarios, nearest-neighbor elsewhere."""

    kind = "sample_average"

    def __init__(self, scenarios: np.ndarray, ybar: np.ndarray, meta: TrainingMeta):
        self.scenarios = scenarios
        self.ybar = ybar
        self.meta = meta
        self._tree = None

    def predict(self, x) -> np.ndarray:
        pts = as_points(x)
        if pts.shape[0] == 0:
            return np.empty(0)
        if self._tree is None:
            self._tree = cKDTree(self.scenarios)
        _, idx = self._tree.query(pts)
        return self.ybar[idx]


def fit_sample_average(data: NestedDataset) -> SampleAverageEstimator:
    """Memorize the inner averages; exact at every training scenario."""
    return SampleAverageEstimator(
        scenarios=data.scenarios,
        ybar=data.ybar,
        meta=TrainingMeta(n=data.n, m=data.m, residual_norm=0.0),
    )


# ---------------------------------------------------------------------------
# Kernel ridge regression
# ---------------------------------------------------------------------------

class KRREstimator:
    """Kernel expansion over all scenarios: ``f(x) = sum_i alpha_i k(x, x_i)``."""

    kind = "krr"

    def __init__(self, kernel: KernelSpec, scenarios, alpha, lam: float, meta: TrainingMeta):
        self.kernel = kernel
        self.scenarios = as_points(scenarios)
        self.alpha = np.asarray(alpha, dtype=float).reshape(-1)
        self.lam = lam
        self.meta = meta

    def predict(self, x) -> np.ndarray:
        pts = as_points(x)
        if pts.shape[0] == 0:
            return np.empty(0)
        return kernel_matrix(self.kernel, pts, self.scenarios) @ self.alpha


def default_regularization(spec: KernelSpec, n: int) -> float:
    """Regularization weight matched to the kernel's smoothness.

    Matern-family fits (Laplace included) use ``n**(-2s/(2s+d))`` with
    ``s = nu + d/2``; Gaussian fits use ``1/n``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    s = spec.smoothness
    if s is None:
        return 1.0 / n
    return float(n ** (-2.0 * s / (2.0 * s + spec.dim)))


def fit_krr(
    data: NestedDataset,
    spec: KernelSpec,
    lam: float,
    jitter: float = DEFAULT_JITTER,
) -> KRREstimator:
    """Solve ``(K + n lam I) alpha = ybar`` on the jittered scenario gram.

    ``lam = 0`` is allowed (interpolation up to jitter).  A failed Cholesky
    factorization raises :class:`FitError` with a conditioning diagnostic.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    n = data.n
    k = gram(spec, data.scenarios, jitter=jitter).entries
    system = k.copy()
    system[np.diag_indices_from(system)] += n * lam
    try:
        cho = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
        alpha = scipy.linalg.cho_solve(cho, data.ybar, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        eigs = scipy.linalg.eigvalsh(system)
        raise FitError(
            f"KRR solve failed at n={n}, lam={lam}: {exc}; "
            f"eigenvalue range [{eigs[0]:.3e}, {eigs[-1]:.3e}]"
        ) from exc
    fitted = k @ alpha - jitter * alpha  # predictions use the unjittered kernel
    return KRREstimator(
        kernel=spec,
        scenarios=data.scenarios,
        alpha=alpha,
        lam=lam,
        meta=TrainingMeta(
            n=n,
            m=data.m,
            residual_norm=_residual_norm(fitted, data.ybar),
            detail={"jitter": jitter},
        ),
    )


def cross_validate_regularization(
    data: NestedDataset,
    spec: KernelSpec,
    grid=None,
    folds: int = 5,
    seed=0,
    jitter: float = DEFAULT_JITTER,
) -> float:
    """Pick the regularization weight by k-fold cross-validated squared error."""
    if grid is None:
        grid = np.logspace(-8, 2, 11)
    grid = [float(g) for g in grid]
    if not grid or any(g < 0 for g in grid):
        raise ValueError("grid must be nonempty with nonnegative entries")
    n = data.n
    if folds < 2 or folds > n:
        raise ValueError(f"folds must be in [2, {n}], got {folds}")
    rng = as_generator(seed)
    order = rng.permutation(n)
    fold_ids = np.array_split(order, folds)
    scores = np.zeros(len(grid))
    for held_out in fold_ids:
        train = np.setdiff1d(order, held_out)
        sub = NestedDataset(
            scenarios=data.scenarios[train],
            ybar=data.ybar[train],
            m=data.m,
            noise_sigma=data.noise_sigma,
        )
        target = data.ybar[held_out]
        held_pts = data.scenarios[held_out]
        for gi, lam in enumerate(grid):
            est = fit_krr(sub, spec, lam, jitter=jitter)
            scores[gi] += float(np.sum((est.predict(held_pts) - target) ** 2))
    return grid[int(np.argmin(scores))]


# ---------------------------------------------------------------------------
# Least squares on an inducing-point span
# ---------------------------------------------------------------------------

class InducingKRREstimator:
    """Kernel expansion over inducing points only."""

    kind = "inducing_krr"

    def __init__(self, kernel: KernelSpec, inducing, beta, ridge: float, meta: TrainingMeta):
        self.kernel = kernel
        self.inducing = as_points(inducing)
        self.beta = np.asarray(beta, dtype=float).reshape(-1)
        self.ridge = ridge
        self.meta = meta

    def predict(self, x) -> np.ndarray:
        pts = as_points(x)
        if pts.shape[0] == 0:
            return np.empty(0)
        return kernel_matrix(self.kernel, pts, self.inducing) @ self.beta


def fit_krr_inducing(
    data: NestedDataset,
    spec: KernelSpec,
    inducing,
    ridge: float | None = None,
) -> InducingKRREstimator:
    """Least squares on the span of kernel sections at the inducing points.

    Solves the normal equations ``(K_sn K_ns + ridge I) beta = K_sn ybar``.
    ``ridge=None`` applies the stability default ``1e-8 * trace / S``;
    ``ridge=0`` solves the bare normal equations and raises on rank
    deficiency, reporting the numerical rank.
    """
    ind = as_points(inducing)
    s_count = ind.shape[0]
    design = kernel_matrix(spec, data.scenarios, ind)
    normal = design.T @ design
    rhs = design.T @ data.ybar
    if ridge is None:
        ridge = 1e-8 * float(np.trace(normal)) / s_count
    elif ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    system = normal.copy()
    if ridge:
        system[np.diag_indices_from(system)] += ridge
    try:
        cho = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
        beta = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        rank = int(np.linalg.matrix_rank(normal))
        raise FitError(
            f"inducing-point normal equations are rank deficient without ridge: "
            f"rank {rank} of {s_count}"
        ) from exc
    fitted = design @ beta
    return InducingKRREstimator(
        kernel=spec,
        inducing=inducing if isinstance(inducing, PointSet) else ind,
        beta=beta,
        ridge=ridge,
        meta=TrainingMeta(
            n=data.n,
            m=data.m,
            residual_norm=_residual_norm(fitted, data.ybar),
            detail={"inducing_count": s_count, "ridge": ridge},
        ),
    )


# ---------------------------------------------------------------------------
# Sparse bounded ReLU network sieve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReluArchitecture:
    """Network shape plus the sieve's sparsity and magnitude budgets.

    ``hidden_widths`` lists the hidden layer sizes; ``depth`` counts affine
    maps.  ``sparsity=None`` means "as many nonzeros as there are
    parameters", i.e. no pruning.  ``max_param`` bounds every weight and
    bias in absolute value.
    """

    hidden_widths: tuple[int, ...]
    sparsity: int | None = None
    max_param: float = 1000.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.hidden_widths)
        if not widths or any(w < 1 for w in widths):
            raise ValueError(f"hidden widths must be positive, got {self.hidden_widths}")
        object.__setattr__(self, "hidden_widths", widths)
        if self.sparsity is not None and self.sparsity < 1:
            raise ValueError(f"sparsity must be >= 1, got {self.sparsity}")
        if not self.max_param > 0:
            raise ValueError(f"max_param must be positive, got {self.max_param}")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths) + 1

    @property
    def width(self) -> int:
        return max(self.hidden_widths)

    def layer_dims(self, input_dim: int) -> list[int]:
        return [input_dim, *self.hidden_widths, 1]

    def parameter_count(self, input_dim: int) -> int:
        dims = self.layer_dims(input_dim)
        return sum(fi * fo + fo for fi, fo in zip(dims[:-1], dims[1:]))


def default_relu_architecture() -> ReluArchitecture:
    """Desk-scale default: two hidden layers of 256 and 128 units, no pruning,
    and an effectively inactive magnitude bound of 1e3."""
    return ReluArchitecture(hidden_widths=(256, 128), sparsity=None, max_param=1000.0)


@dataclass(frozen=True)
class TrainConfig:
    """First-order training schedule for the network sieve.

    ``batch_size=None`` trains full-batch up to 4096 scenarios and falls back
    to shuffled minibatches of 1024 beyond that.
    """

    epochs: int = 2000
    batch_size: int | None = None
    learning_rate: float = 1e-3
    seed: object = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    def resolve_batch(self, n: int) -> int:
        if self.batch_size is not None:
            return min(self.batch_size, n)
        return n if n <= 4096 else 1024


def unit_count(delta: float, d: int, s: float) -> int:
    """Number of approximation units needed to reach accuracy ``delta``:
    ``ceil(|delta log delta|**(-d/s))``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if d < 1 or s <= 0:
        raise ValueError(f"need d >= 1 and s > 0, got d={d}, s={s}")
    return int(math.ceil(abs(delta * math.log(delta)) ** (-d / s) - 1e-12))


def sparsity_budget(depth: int, width_unit: int, units: int) -> int:
    """Nonzero-parameter budget ``((depth - 1) * width_unit**2 + 1) * units``."""
    if depth < 2 or width_unit < 1 or units < 1:
        raise ValueError("need depth >= 2, width_unit >= 1, units >= 1")
    return ((depth - 1) * width_unit**2 + 1) * units


def relu_architecture_from_rate(
    d: int,
    s: float,
    delta: float,
    width_unit: int = 16,
    depth_constant: float = 1.0,
) -> ReluArchitecture:
    """Architecture schedule that realizes approximation accuracy ``delta``.

    With ``N = unit_count(delta, d, s)`` the schedule uses depth
    ``3 + 2 ceil(log2(3**(d v floor(s+2)) / (delta C)) + 5) ceil(log2(d v floor(s+2)))``,
    uniform width ``width_unit * N``, sparsity ``((depth-1) width_unit^2 + 1) N``,
    and magnitude bound ``N**(1/d)``.  ``width_unit`` and the depth constant
    ``C`` are free constants of the construction; the defaults are a
    practical choice.
    """
    if width_unit < 1:
        raise ValueError(f"width_unit must be >= 1, got {width_unit}")
    if not depth_constant > 0:
        raise ValueError(f"depth_constant must be positive, got {depth_constant}")
    n_units = unit_count(delta, d, s)
    base = max(d, int(math.floor(s + 2.0)))
    depth = 3 + 2 * math.ceil(math.log2(3.0**base / (delta * depth_constant)) + 5.0) * math.ceil(
        math.log2(base)
    )
    width = width_unit * n_units
    return ReluArchitecture(
        hidden_widths=(width,) * (depth - 1),
        sparsity=sparsity_budget(depth, width_unit, n_units),
        max_param=n_units ** (1.0 / d),
    )


class ReluSieveEstimator:
    """Trained sparse bounded network."""

    kind = "relu"

    def __init__(self, network: ReluNetwork, architecture: ReluArchitecture, meta: TrainingMeta):
        self.network = network
        self.architecture = architecture
        self.meta = meta

    def predict(self, x) -> np.ndarray:
        pts = as_points(x)
        if pts.shape[0] == 0:
            return np.empty(0)
        return self.network.forward(pts)


def _project(params: list[np.ndarray], bound: float, sparsity: int | None, total: int) -> None:
    """Clip parameters into [-bound, bound] and prune the smallest-magnitude
    nonzeros down to the sparsity budget (earliest index wins ties)."""
    for p in params:
        np.clip(p, -bound, bound, out=p)
    if sparsity is None or sparsity >= total:
        return
    flat = np.concatenate([p.ravel() for p in params])
    nonzero = np.flatnonzero(flat)
    excess = nonzero.size - sparsity
    if excess > 0:
        order = np.argsort(np.abs(flat[nonzero]), kind="stable")
        flat[nonzero[order[:excess]]] = 0.0
        at = 0
        for p in params:
            p.flat[:] = flat[at : at + p.size]
            at += p.size


def fit_relu_sieve(
    data: NestedDataset,
    architecture: ReluArchitecture | None = None,
    train: TrainConfig | None = None,
) -> ReluSieveEstimator:
    """Train the network sieve on the inner averages.

    Minimizes the empirical squared loss with Adam-style updates (momentum
    plus per-parameter scaling), projecting after every step onto the sieve's
    magnitude and sparsity constraints.  Raises :class:`TrainingDiverged` if
    the loss turns non-finite.
    """
    arch = architecture if architecture is not None else default_relu_architecture()
    cfg = train if train is not None else TrainConfig()
    net = ReluNetwork(arch.layer_dims(data.dim), seed=cfg.seed)
    total = net.num_params
    params = net.params

    moment = [np.zeros_like(p) for p in params]
    scale = [np.zeros_like(p) for p in params]
    rng = as_generator(cfg.seed)
    batch = cfg.resolve_batch(data.n)
    n = data.n
    step = 0
    for _ in range(cfg.epochs):
        if batch >= n:
            slices = [slice(None)]
        else:
            order = rng.permutation(n)
            slices = [order[at : at + batch] for at in range(0, n, batch)]
        for sel in slices:
            loss, grads = net.loss_and_grad(data.scenarios[sel], data.ybar[sel])
            if not math.isfinite(loss):
                raise TrainingDiverged(iteration=step, loss=loss)
            step += 1
            b1t = 1.0 - cfg.beta1**step
            b2t = 1.0 - cfg.beta2**step
            for p, g, mo, sc in zip(params, grads, moment, scale):
                mo *= cfg.beta1
                mo += (1.0 - cfg.beta1) * g
                sc *= cfg.beta2
                sc += (1.0 - cfg.beta2) * g * g
                p -= cfg.learning_rate * (mo / b1t) / (np.sqrt(sc / b2t) + cfg.eps)
            _project(params, arch.max_param, arch.sparsity, total)

    final_loss = net.loss(data.scenarios, data.ybar)
    if not math.isfinite(final_loss):
        raise TrainingDiverged(iteration=step, loss=final_loss)
    return ReluSieveEstimator(
        network=net,
        architecture=arch,
        meta=TrainingMeta(
            n=n,
            m=data.m,
            residual_norm=math.sqrt(final_loss),
            detail={"steps": step, "epochs": cfg.epochs, "batch": batch},
        ),
    )


def predict(estimator, x) -> np.ndarray:
    """Evaluate any fitted estimator at rows of ``x``."""
    return estimator.predict(x)


# ---------------------------------------------------------------------------
# Columnar text serialization of fitted estimators
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _kernel_tokens(spec: KernelSpec) -> str:
    nu = "-" if spec.nu is None else _fmt(spec.nu)
    return f"family={spec.family} dim={spec.dim} nu={nu} lengthscale={_fmt(spec.lengthscale)}"


def _kernel_from(fields: dict[str, str]) -> KernelSpec:
    nu = None if fields["nu"] == "-" else float(fields["nu"])
    return KernelSpec(fields["family"], int(fields["dim"]), nu=nu,
                      lengthscale=float(fields["lengthscale"]))


def save_estimator(est, path) -> None:
    """Write a fitted estimator's kind and parameters as columnar text."""
    with open(path, "w", newline="\n") as fh:
        fh.write("# sievesim estimator v1\n")
        if est.kind == "sample_average":
            fh.write(f"# kind=sample_average n={len(est.ybar)} dim={est.scenarios.shape[1]}\n")
            fh.write("# columns: x_1..x_d ybar\n")
            for row, y in zip(est.scenarios, est.ybar):
                fh.write(" ".join(_fmt(v) for v in row) + " " + _fmt(y) + "\n")
        elif est.kind == "krr":
            fh.write(f"# kind=krr {_kernel_tokens(est.kernel)} n={len(est.alpha)} "
                     f"lam={_fmt(est.lam)}\n")
            fh.write("# columns: x_1..x_d alpha\n")
            for row, a in zip(est.scenarios, est.alpha):
                fh.write(" ".join(_fmt(v) for v in row) + " " + _fmt(a) + "\n")
        elif est.kind == "inducing_krr":
            fh.write(f"# kind=inducing_krr {_kernel_tokens(est.kernel)} n={len(est.beta)} "
                     f"ridge={_fmt(est.ridge)}\n")
            fh.write("# columns: x_1..x_d beta\n")
            for row, b in zip(est.inducing, est.beta):
                fh.write(" ".join(_fmt(v) for v in row) + " " + _fmt(b) + "\n")
        elif est.kind == "relu":
            arch = est.architecture
            widths = ",".join(str(w) for w in arch.hidden_widths)
            sparsity = "-" if arch.sparsity is None else str(arch.sparsity)
            fh.write(f"# kind=relu dim={est.network.layer_dims[0]} hidden={widths} "
                     f"sparsity={sparsity} max_param={_fmt(arch.max_param)}\n")
            fh.write("# columns: parameter (flattened W1,b1,W2,b2,...)\n")
            for v in est.network.param_vector():
                fh.write(_fmt(v) + "\n")
        else:
            raise ValueError(f"cannot serialize estimator kind {est.kind!r}")


def load_estimator(path):
    with open(path) as fh:
        first = fh.readline()
        if "estimator v1" not in first:
            raise ValueError(f"not a sievesim estimator file: {first.strip()!r}")
        fields = {}
        for token in fh.readline().lstrip("#").split():
            key, _, val = token.partition("=")
            fields[key] = val
        fh.readline()
        data = np.loadtxt(fh, ndmin=2)
    kind = fields["kind"]
    meta = TrainingMeta(n=0, m=0, residual_norm=float("nan"), detail={"loaded": True})
    if kind == "sample_average":
        return SampleAverageEstimator(scenarios=data[:, :-1], ybar=data[:, -1], meta=meta)
    if kind == "krr":
        return KRREstimator(kernel=_kernel_from(fields), scenarios=data[:, :-1],
                            alpha=data[:, -1], lam=float(fields["lam"]), meta=meta)
    if kind == "inducing_krr":
        return InducingKRREstimator(kernel=_kernel_from(fields), inducing=data[:, :-1],
                                    beta=data[:, -1], ridge=float(fields["ridge"]), meta=meta)
    if kind == "relu":
        widths = tuple(int(w) for w in fields["hidden"].split(","))
        sparsity = None if fields["sparsity"] == "-" else int(fields["sparsity"])
        arch = ReluArchitecture(hidden_widths=widths, sparsity=sparsity,
                                max_param=float(fields["max_param"]))
        net = ReluNetwork(arch.layer_dims(int(fields["dim"])), seed=0)
        net.set_param_vector(data.ravel())
        return ReluSieveEstimator(network=net, architecture=arch, meta=meta)
    raise ValueError(f"unknown estimator kind {kind!r} in file")
