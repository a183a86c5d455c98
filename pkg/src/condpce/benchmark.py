"""Synthetic parametric stochastic field and the three-way method comparison.

The response on ``s = (x, y) in [0, 1]^2`` driven by ``xi_1, xi_2 ~ N(0, 1)`` is

    G(s, xi) = g0(s) + g1(s) xi_1 + g2(s) xi_2 + g12(s) xi_1 xi_2

whose conditional variance and Sobol' indices are known in closed form. Three
estimators of the conditional index fields are compared on a shared sample
budget ``N``:

``mc``
    pick-freeze Monte Carlo at every grid point (``N // 4`` base samples).
``pointwise_pce``
    an independent expansion in ``xi`` fitted at every grid point.
``joint``
    one expansion over ``(x, y, xi_1, xi_2)``, post-processed analytically.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .conditional import DEFAULT_VARIANCE_FLOOR, decompose, sweep_grid
from .errors import ConditioningError, DomainError, ParameterError, SchemaError
from .fields import Grid, SensitivityField
from .multiindex import enumerate_total_degree
from .pce_core import GramAccumulator, InputSpec, Marginal, PceModel, basis_matrix, build_design_matrix, fit_ols
from .pickfreeze import first_order_d2_pooled
from .sobol_global import indices_from_coefficients
from .sparse_omp import OmpConfig, default_config, fit_omp, fit_omp_gram

__all__ = [
    "BenchmarkConfig",
    "Dataset",
    "GroundTruth",
    "BenchmarkResult",
    "shaping_functions",
    "analytic_response",
    "ground_truth",
    "add_noise",
    "generate_dataset",
    "pick_freeze_point",
    "pointwise_mc_indices",
    "pointwise_pce_indices",
    "joint_method_indices",
    "joint_input_spec",
    "error_field",
    "smoothness_metric",
    "run_benchmark",
    "write_outputs",
    "METHODS",
    "QUANTITIES",
]

LOGGER = logging.getLogger(__name__)

METHODS = ("mc", "pointwise_pce", "joint")
QUANTITIES = ("S1", "S2", "S12", "variance", "error")
POINTWISE_DEGREE_CAP = 30
THREADS_ENV = "CONDPCE_THREADS"
LAYOUTS = ("field_ensemble", "joint_rows")


@dataclass(frozen=True)
class BenchmarkConfig:
    grid_n: int = 35
    n_samples: int = 500
    joint_degree: int = 8
    pointwise_degree: int = 4
    noise_sigma: float = 0.1
    noise_kernel_width: float = 0.2
    noise_enabled: bool = True
    seed: int = 0
    data_layout: str = "field_ensemble"
    joint_method: str = "ols"
    omp_max_terms: int | None = None
    omp_tol: float = 1e-6
    mc_sampler: str = "sobol"
    variance_floor: float = DEFAULT_VARIANCE_FLOOR

    def __post_init__(self):
        if self.grid_n < 2:
            raise ParameterError("grid_n must be >= 2")
        if self.n_samples < 4:
            raise ParameterError("n_samples must be >= 4 (one pick-freeze base sample)")
        if self.data_layout not in LAYOUTS:
            raise ParameterError(f"data_layout must be one of {LAYOUTS}")
        if self.joint_method not in ("ols", "omp"):
            raise ParameterError("joint_method must be 'ols' or 'omp'")
        if self.mc_sampler not in ("sobol", "random"):
            raise ParameterError("mc_sampler must be 'sobol' or 'random'")
        if not 0 <= self.pointwise_degree <= POINTWISE_DEGREE_CAP:
            raise ParameterError(f"pointwise_degree must be in [0, {POINTWISE_DEGREE_CAP}]")
        if self.joint_degree < 0:
            raise ParameterError("joint_degree must be >= 0")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        if self.noise_enabled and self.noise_sigma > 0 and not self.noise_kernel_width > 0:
            raise ParameterError("noise_kernel_width must be positive")
        n_joint = comb(4 + self.joint_degree, self.joint_degree)
        rows = self.n_samples if self.data_layout == "joint_rows" else self.n_samples * self.grid_n**2
        if self.joint_method == "ols" and rows < n_joint:
            raise ParameterError(
                f"{rows} joint rows cannot determine {n_joint} coefficients (need P = C(M+p, p) <= rows)"
            )

    @property
    def mc_base_size(self) -> int:
        return self.n_samples // 4

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown benchmark config keys: {sorted(unknown)}")
        return cls(**d)


def _check_unit_square(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 2:
        raise ParameterError("conditioning points must have two coordinates")
    if np.any((s < 0.0) | (s > 1.0)) or not np.all(np.isfinite(s)):
        raise DomainError("conditioning point outside [0, 1]^2")
    return s


def shaping_functions(s):
    """``(g0, g1, g2, g12)`` at ``s``; vectorized over leading axes."""
    s = _check_unit_square(s)
    x, y = s[..., 0], s[..., 1]
    base = np.sin(np.pi * x) * np.cos(np.pi * y)
    g0 = base
    g1 = 0.8 * base
    g2 = 0.6 * np.cos(2 * np.pi * x) * np.sin(np.pi * y)
    g12 = 0.4 * np.sin(np.pi * x) * np.sin(np.pi * y)
    return g0, g1, g2, g12


def analytic_response(s, xi1, xi2):
    g0, g1, g2, g12 = shaping_functions(s)
    return g0 + g1 * xi1 + g2 * xi2 + g12 * xi1 * xi2


def _field_response(points, xi):
    """Clean responses with samples along axis 0 and grid points along axis 1."""
    g0, g1, g2, g12 = shaping_functions(points)
    a, b = xi[:, :1], xi[:, 1:2]
    return g0[None, :] + g1[None, :] * a + g2[None, :] * b + g12[None, :] * a * b


@dataclass(eq=False)
class GroundTruth:
    grid: Grid
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g12: np.ndarray
    variance: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S12: np.ndarray
    ST1: np.ndarray
    ST2: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.S12)

    def field(self, name: str) -> SensitivityField:
        return SensitivityField(name, self.grid, getattr(self, name))

    def fields(self) -> dict[str, SensitivityField]:
        names = ("g0", "variance", "S1", "S2", "S12", "ST1", "ST2")
        return {n: self.field(n) for n in names}


def ground_truth(grid: Grid, variance_floor: float = DEFAULT_VARIANCE_FLOOR) -> GroundTruth:
    """Closed-form conditional variance and indices on ``grid``."""
    g0, g1, g2, g12 = (g.reshape(grid.shape) for g in shaping_functions(grid.points()))
    var = g1**2 + g2**2 + g12**2
    ok = var >= variance_floor
    safe = np.where(ok, var, 1.0)

    def ratio(v):
        return np.where(ok, v / safe, np.nan)

    s1, s2, s12 = ratio(g1**2), ratio(g2**2), ratio(g12**2)
    return GroundTruth(grid, g0, g1, g2, g12, var, s1, s2, s12, s1 + s12, s2 + s12)


def noise_kernel(points, width: float) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    r2 = (points[..., 0] - 0.5) ** 2 + (points[..., 1] - 0.5) ** 2
    return np.exp(-r2 / (2.0 * width**2))


def add_noise(clean, points, sigma: float, width: float, rng, scale: float | None = None):
    """Add ``sigma * std(G) * z * exp(-|s - c|^2 / (2 width^2))`` to every entry.

    ``clean`` has samples along axis 0 and the points of ``points`` along the
    last axis (or, for scattered rows, one point per row). ``std(G)`` is the
    standard deviation over all entries of ``clean`` unless ``scale`` is given.
    """
    clean = np.asarray(clean, dtype=float)
    if sigma < 0:
        raise ParameterError("noise sigma must be >= 0")
    if sigma == 0:
        return clean.copy()
    if not width > 0:
        raise ParameterError("noise kernel width must be positive")
    std = float(np.std(clean)) if scale is None else float(scale)
    kern = noise_kernel(points, width)
    return clean + sigma * std * rng.standard_normal(clean.shape) * kern


@dataclass(eq=False)
class Dataset:
    grid: Grid
    xi: np.ndarray
    clean_field: np.ndarray
    field: np.ndarray
    noise_scale: float
    joint_x: np.ndarray | None = None
    joint_y: np.ndarray | None = None


def _streams(seed: int):
    root = np.random.SeedSequence(seed)
    xi, noise, joint, mc = root.spawn(4)
    return {"xi": xi, "noise": noise, "joint": joint, "mc": mc}


def benchmark_grid(config: BenchmarkConfig) -> Grid:
    return Grid.uniform(config.grid_n, 2)


def generate_dataset(config: BenchmarkConfig) -> Dataset:
    """Sample the field ensemble (and joint rows) deterministically from ``config.seed``."""
    grid = benchmark_grid(config)
    pts = grid.points()
    streams = _streams(config.seed)
    xi = np.random.default_rng(streams["xi"]).standard_normal((config.n_samples, 2))
    clean = _field_response(pts, xi)
    noisy_on = config.noise_enabled and config.noise_sigma > 0
    scale = config.noise_sigma * float(np.std(clean)) if noisy_on else 0.0
    if noisy_on:
        noisy = add_noise(clean, pts, config.noise_sigma, config.noise_kernel_width,
                          np.random.default_rng(streams["noise"]), scale=np.std(clean))
    else:
        noisy = clean.copy()
    ds = Dataset(grid, xi, clean, noisy, scale)
    if config.data_layout == "joint_rows":
        if config.joint_method == "ols" and config.n_samples < comb(4 + config.joint_degree, 4):
            raise ParameterError("joint_rows layout needs N >= P = C(M+p, p)")
        rng = np.random.default_rng(streams["joint"])
        s = rng.uniform(0.0, 1.0, size=(config.n_samples, 2))
        x = np.column_stack([s, rng.standard_normal((config.n_samples, 2))])
        y = analytic_response(s, x[:, 2], x[:, 3])
        if noisy_on:
            y = add_noise(y, s, config.noise_sigma, config.noise_kernel_width, rng, scale=np.std(clean))
        ds.joint_x, ds.joint_y = x, y
    return ds


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def _pick_freeze_design(rng, n: int, sampler: str) -> np.ndarray:
    """``(n, 4)`` standard normal draws: columns are A_1, A_2, B_1, B_2."""
    if sampler == "sobol":
        m = max(0, math.ceil(math.log2(n)))
        u = qmc.Sobol(4, scramble=True, seed=rng).random_base2(m)[:n]
        return ndtri(u)
    return rng.standard_normal((n, 4))


def _pick_freeze_evals(points, designs):
    """Clean model values for A, B, A_B1, A_B2 at every point: shape ``(4, n_pts, n)``."""
    g0, g1, g2, g12 = (g[:, None] for g in shaping_functions(points))
    a1, a2, b1, b2 = (designs[..., k] for k in range(4))

    def f(x1, x2):
        return g0 + g1 * x1 + g2 * x2 + g12 * x1 * x2

    return np.stack([f(a1, a2), f(b1, b2), f(b1, a2), f(a1, b2)])


def _mc_estimates(evals, variance_floor):
    f_a, f_b, f_ab1, f_ab2 = evals
    var = np.concatenate([f_a, f_b], axis=-1).var(axis=-1)
    s1, s2 = first_order_d2_pooled(f_a, f_b, f_ab1, f_ab2)
    ok = var >= variance_floor
    s1 = np.clip(np.where(ok, s1, np.nan), 0.0, 1.0)
    s2 = np.clip(np.where(ok, s2, np.nan), 0.0, 1.0)
    s12 = np.clip(1.0 - s1 - s2, 0.0, 1.0)
    return s1, s2, s12, var


def pick_freeze_point(s, n_base: int, rng, sampler: str = "sobol", variance_floor=DEFAULT_VARIANCE_FLOOR):
    """Noise-free pick-freeze estimate ``(S1, S2, S12, variance)`` at one point."""
    pts = _check_unit_square(np.asarray(s, dtype=float).reshape(1, 2))
    design = _pick_freeze_design(rng, n_base, sampler)[None]
    s1, s2, s12, var = _mc_estimates(_pick_freeze_evals(pts, design), variance_floor)
    return float(s1[0]), float(s2[0]), float(s12[0]), float(var[0])


def pointwise_mc_indices(grid: Grid, config: BenchmarkConfig, threads: int | None = None):
    """Pick-freeze estimates at every grid point, ``N`` model evaluations per point.

    Each point draws from its own stream spawned from the seed, so results do
    not depend on ``threads``.
    """
    n = config.mc_base_size
    pts = grid.points()
    seeds = _streams(config.seed)["mc"].spawn(grid.n_points)
    rngs = [np.random.default_rng(sq) for sq in seeds]

    def design(rng):
        return _pick_freeze_design(rng, n, config.mc_sampler)

    with ThreadPoolExecutor(max_workers=resolve_threads(threads)) as pool:
        designs = np.stack(list(pool.map(design, rngs)))
    evals = _pick_freeze_evals(pts, designs)
    if config.noise_enabled and config.noise_sigma > 0:
        scale = float(np.std(evals))
        kern = noise_kernel(pts, config.noise_kernel_width)
        # (n_pts, 4, n) draws, one block per point from that point's stream
        z = np.stack([rng.standard_normal((4, n)) for rng in rngs])
        evals = evals + config.noise_sigma * scale * np.transpose(z, (1, 0, 2)) * kern[None, :, None]
    s1, s2, s12, var = _mc_estimates(evals, config.variance_floor)
    return {
        "S1": SensitivityField("S1", grid, s1),
        "S2": SensitivityField("S2", grid, s2),
        "S12": SensitivityField("S12", grid, s12),
        "variance": SensitivityField("variance", grid, var),
    }


def _index_fields(grid, stoch_indices, coef, variance_floor, mean=None):
    var, first, inter, totals = indices_from_coefficients(stoch_indices, coef, (0, 1), 2)
    ok = var >= variance_floor
    safe = np.where(ok, var, 1.0)

    def ratio(v):
        return np.where(ok, v / safe, np.nan)

    out = {
        "S1": ratio(first[0]),
        "S2": ratio(first[1]),
        "S12": ratio(inter[(0, 1)]),
        "ST1": ratio(totals[0]),
        "ST2": ratio(totals[1]),
        "variance": var,
    }
    if mean is not None:
        out["mean"] = mean
    return {k: SensitivityField(k, grid, v) for k, v in out.items()}


def pointwise_pce_indices(dataset: Dataset, config: BenchmarkConfig):
    """An independent ``(M=2, p=pointwise_degree)`` least-squares expansion per grid point.

    All points share the same ``xi`` draws, so the fits are one multi-RHS solve.
    """
    grid = dataset.grid
    spec = InputSpec((Marginal.gaussian(), Marginal.gaussian()))
    basis = enumerate_total_degree(2, config.pointwise_degree)
    a = build_design_matrix(spec, basis, dataset.xi)
    try:
        coef = fit_ols(a, dataset.field)
    except ConditioningError as exc:
        LOGGER.warning("point-wise fits failed: %s", exc)
        nan = np.full(grid.n_points, np.nan)
        return {k: SensitivityField(k, grid, nan) for k in ("S1", "S2", "S12", "ST1", "ST2", "variance", "mean")}
    return _index_fields(grid, basis.as_array(), coef, config.variance_floor, mean=coef[0])


def joint_input_spec() -> InputSpec:
    return InputSpec((Marginal.uniform(0, 1), Marginal.uniform(0, 1), Marginal.gaussian(), Marginal.gaussian()))


def _joint_gram(dataset: Dataset, basis, block_samples: int = 8) -> GramAccumulator:
    spec = joint_input_spec()
    idx = basis.as_array()
    pts = dataset.grid.points()
    # Psi_alpha(s, xi) = Psi_K(s) Psi_L(xi): build the factors once
    k_part = basis_matrix(spec.subspec((0, 1)), idx[:, :2], pts)
    l_part = basis_matrix(spec.subspec((2, 3)), idx[:, 2:], dataset.xi)
    acc = GramAccumulator(idx.shape[0])
    for start in range(0, l_part.shape[0], block_samples):
        lb = l_part[start : start + block_samples]
        a_block = (lb[:, None, :] * k_part[None, :, :]).reshape(-1, idx.shape[0])
        acc.add(a_block, dataset.field[start : start + block_samples].reshape(-1))
    return acc


def fit_joint_model(dataset: Dataset, config: BenchmarkConfig) -> PceModel:
    """Single expansion over ``(x, y, xi_1, xi_2)`` with the configured layout and solver."""
    spec = joint_input_spec()
    basis = enumerate_total_degree(4, config.joint_degree)
    idx = basis.as_array()
    if config.data_layout == "joint_rows":
        a = build_design_matrix(spec, basis, dataset.joint_x)
        if config.joint_method == "ols":
            return PceModel(spec, idx, fit_ols(a, dataset.joint_y), config.joint_degree)
        omp = OmpConfig(config.omp_max_terms, config.omp_tol) if config.omp_max_terms else default_config(
            *a.shape, tol=config.omp_tol)
        res = fit_omp(a, dataset.joint_y, omp)
    else:
        acc = _joint_gram(dataset, basis)
        if config.joint_method == "ols":
            return PceModel(spec, idx, acc.solve(), config.joint_degree)
        omp = OmpConfig(config.omp_max_terms, config.omp_tol) if config.omp_max_terms else default_config(
            acc.n_rows, len(basis), tol=config.omp_tol)
        res = fit_omp_gram(acc.gram, acc.rhs, acc.y_sq, acc.n_rows, omp)
    active = list(res.active_set)
    return PceModel(spec, idx[active], [res.coefficients[j] for j in active], config.joint_degree)


def joint_method_indices(dataset: Dataset, config: BenchmarkConfig):
    """Conditional index fields of the joint expansion; returns ``(fields, model)``."""
    model = fit_joint_model(dataset, config)
    decomp = decompose(model, (0, 1))
    raw = sweep_grid(decomp, dataset.grid, config.variance_floor, max_order=2)
    rename = {"S_3": "S1", "S_4": "S2", "S_3_4": "S12", "ST_3": "ST1", "ST_4": "ST2",
              "mean": "mean", "variance": "variance"}
    fields = {rename[k]: SensitivityField(rename[k], f.grid, f.values) for k, f in raw.items()}
    return fields, model


def error_field(estimated: SensitivityField, truth: SensitivityField):
    """Pointwise ``|estimated - truth|`` and its ``max``/``mean``/``rms`` over defined points."""
    if not estimated.grid.same_as(truth.grid):
        raise ParameterError("fields live on different grids")
    err = np.abs(estimated.values - truth.values)
    ok = ~np.isnan(err)
    vals = err[ok]
    if vals.size:
        stats = {"max": float(vals.max()), "mean": float(vals.mean()),
                 "rms": float(np.sqrt(np.mean(vals**2))), "n_defined": int(vals.size)}
    else:
        stats = {"max": math.nan, "mean": math.nan, "rms": math.nan, "n_defined": 0}
    return SensitivityField(f"error_{estimated.name}", estimated.grid, err), stats


def smoothness_metric(field: SensitivityField) -> float:
    """RMS of the 5-point (2k+1 in k dims) discrete Laplacian over interior points.

    Only stencils whose points are all defined contribute.
    """
    v = field.values
    if any(n < 3 for n in v.shape):
        raise ParameterError("smoothness needs at least 3 points per axis")
    interior = tuple(slice(1, -1) for _ in v.shape)
    lap = np.zeros(tuple(n - 2 for n in v.shape))
    for ax, coords in enumerate(field.grid.axes):
        h = float(np.mean(np.diff(coords)))
        lo = list(interior)
        hi = list(interior)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        lap += (v[tuple(lo)] - 2.0 * v[interior] + v[tuple(hi)]) / h**2
    ok = ~np.isnan(lap)
    if not ok.any():
        return math.nan
    return float(np.sqrt(np.mean(lap[ok] ** 2)))


@dataclass(eq=False)
class BenchmarkResult:
    config: BenchmarkConfig
    truth: GroundTruth
    fields: dict[str, dict[str, SensitivityField]]
    summary: dict[str, dict[str, float]]
    joint_model: PceModel | None = field(default=None, repr=False)


def run_benchmark(config: BenchmarkConfig, threads: int | None = None) -> BenchmarkResult:
    """Run all three methods on one dataset and score their ``S12`` fields."""
    grid = benchmark_grid(config)
    truth = ground_truth(grid, config.variance_floor)
    truth_s12 = truth.field("S12")
    dataset = generate_dataset(config)

    fields, summary, timings = {}, {}, {}
    t0 = time.perf_counter()
    fields["mc"] = pointwise_mc_indices(grid, config, threads)
    timings["mc"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    fields["pointwise_pce"] = pointwise_pce_indices(dataset, config)
    timings["pointwise_pce"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    fields["joint"], model = joint_method_indices(dataset, config)
    timings["joint"] = time.perf_counter() - t0

    for method in METHODS:
        err, stats = error_field(fields[method]["S12"], truth_s12)
        fields[method]["error"] = SensitivityField("error", grid, err.values)
        summary[method] = {
            "max_err": stats["max"],
            "mean_err": stats["mean"],
            "rms_err": stats["rms"],
            "smoothness": smoothness_metric(fields[method]["S12"]),
            "wall_time_ms": 1e3 * timings[method],
        }
    return BenchmarkResult(config, truth, fields, summary, model)


def write_outputs(result: BenchmarkResult, out_dir) -> list[str]:
    """One CSV per (method, quantity), truth fields, and ``summary.json``; returns file names."""
    import json
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for method in METHODS:
        for q in QUANTITIES:
            name = f"{method}_{q}.csv"
            result.fields[method][q].write_csv(out / name)
            written.append(name)
    for q in ("variance", "S1", "S2", "S12"):
        name = f"truth_{q}.csv"
        result.truth.field(q).write_csv(out / name)
        written.append(name)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump({m: result.summary[m] for m in METHODS}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append("summary.json")
    return written
