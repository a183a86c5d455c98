"""Input specifications, design matrices, least-squares fitting and PCE models."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from . import orthopoly
from .errors import (
    ConditioningError,
    DomainError,
    ParameterError,
    SchemaError,
    UnderdeterminedError,
)
from .multiindex import TruncationSet, enumerate_total_degree
from .orthopoly import FamilyKind, PolynomialFamily

__all__ = [
    "Marginal",
    "InputSpec",
    "PceModel",
    "GramAccumulator",
    "eval_basis",
    "basis_matrix",
    "build_design_matrix",
    "fit_ols",
    "fit_pce",
    "evaluate",
    "MODEL_SCHEMA_VERSION",
    "RANK_RTOL",
]

LOGGER = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1
RANK_RTOL = 1e-10
DEFAULT_MAX_DENSE_ENTRIES = 2_000_000
# cond(A) above which the normal-equation route is flagged as lossy
GRAM_WARN_COND = 1e6

_KINDS = {
    "gaussian": FamilyKind.HERMITE,
    "uniform": FamilyKind.LEGENDRE,
    "gamma": FamilyKind.LAGUERRE,
}


@dataclass(frozen=True)
class Marginal:
    """One independent input variable.

    ``params`` are ``(mean, std)`` for ``gaussian``, ``(lower, upper)`` for
    ``uniform`` and ``(shape, scale)`` for ``gamma``. The canonical variable is
    ``(x - loc) / scale``.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != 2:
            raise ParameterError(f"{self.kind} takes 2 parameters, got {len(params)}")
        a, b = params
        if self.kind == "gaussian" and not b > 0:
            raise ParameterError("gaussian std must be positive")
        if self.kind == "uniform" and not b > a:
            raise ParameterError("uniform bounds must satisfy lower < upper")
        if self.kind == "gamma" and not (a > 0 and b > 0):
            raise ParameterError("gamma shape and scale must be positive")

    @classmethod
    def gaussian(cls, mean=0.0, std=1.0):
        return cls("gaussian", (mean, std))

    @classmethod
    def uniform(cls, lower=-1.0, upper=1.0):
        return cls("uniform", (lower, upper))

    @classmethod
    def gamma(cls, shape=1.0, scale=1.0):
        return cls("gamma", (shape, scale))

    @property
    def family(self) -> PolynomialFamily:
        if self.kind == "gamma":
            return PolynomialFamily.laguerre(self.params[0] - 1.0)
        return PolynomialFamily(_KINDS[self.kind])

    @property
    def loc(self) -> float:
        if self.kind == "gaussian":
            return self.params[0]
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        return 0.0

    @property
    def scale(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.params[1] - self.params[0])
        return self.params[1]

    def to_canonical(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            lo, hi = self.params
            span = hi - lo
            if np.any((x < lo - 1e-12 * span) | (x > hi + 1e-12 * span)):
                raise DomainError(f"value outside uniform support [{lo}, {hi}]")
            t = 2.0 * (x - lo) / span - 1.0
            return np.clip(t, -1.0, 1.0)
        return (x - self.loc) / self.scale

    def sample(self, n, rng):
        if self.kind == "gaussian":
            return rng.normal(self.params[0], self.params[1], size=n)
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size=n)
        return rng.gamma(self.params[0], self.params[1], size=n)

    def ppf(self, u):
        """Inverse CDF; maps unit-interval points (e.g. a QMC design) to this input."""
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            return self.params[0] + self.params[1] * special.ndtri(u)
        if self.kind == "uniform":
            return self.params[0] + (self.params[1] - self.params[0]) * u
        return self.params[1] * special.gammaincinv(self.params[0], u)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": list(self.params),
            "map": {"loc": self.loc, "scale": self.scale},
        }

    @classmethod
    def from_dict(cls, d: dict) -> Marginal:
        try:
            m = cls(d["kind"], tuple(d["params"]))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed input spec entry {d!r}") from exc
        except ParameterError as exc:
            raise SchemaError(str(exc)) from exc
        if "map" in d:
            mp = d["map"]
            if not (np.isclose(mp.get("loc"), m.loc) and np.isclose(mp.get("scale"), m.scale)):
                raise SchemaError(f"affine map {mp!r} inconsistent with {m.kind} parameters")
        return m


@dataclass(frozen=True)
class InputSpec:
    """Independent marginals of an M-dimensional input vector."""

    marginals: tuple[Marginal, ...]

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if not self.marginals:
            raise ParameterError("an input spec needs at least one dimension")

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def __len__(self):
        return self.dim

    def __getitem__(self, i):
        return self.marginals[i]

    def subspec(self, dims) -> InputSpec:
        return InputSpec(tuple(self.marginals[d] for d in dims))

    def as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dim > 1:
            x = x[None, :]
        elif x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ParameterError(f"expected points with {self.dim} coordinates, got shape {x.shape}")
        return x

    def sample(self, n, rng) -> np.ndarray:
        return np.column_stack([m.sample(n, rng) for m in self.marginals])

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.column_stack([m.ppf(u[:, i]) for i, m in enumerate(self.marginals)])

    def to_list(self) -> list:
        return [m.to_dict() for m in self.marginals]

    @classmethod
    def from_list(cls, entries) -> InputSpec:
        if not isinstance(entries, list) or not entries:
            raise SchemaError("input_spec must be a non-empty list")
        return cls(tuple(Marginal.from_dict(e) for e in entries))


def basis_matrix(spec: InputSpec, indices, x) -> np.ndarray:
    """Evaluate every multivariate basis function in ``indices`` at the points ``x``.

    The per-dimension orthonormal sequences are computed once per point and
    combined by multi-index, so the cost is one recurrence per dimension.
    """
    x = spec.as_points(x)
    idx = np.asarray(indices.as_array() if isinstance(indices, TruncationSet) else indices, dtype=np.int64)
    idx = idx.reshape(-1, spec.dim)
    out = np.ones((x.shape[0], idx.shape[0]))
    for d, marginal in enumerate(spec.marginals):
        top = int(idx[:, d].max(initial=0))
        if top == 0:
            # still validate the support of unused coordinates
            marginal.family.check_support(marginal.to_canonical(x[:, d]))
            continue
        seq = orthopoly.eval_orthonormal_sequence(
            marginal.family, top, marginal.to_canonical(x[:, d])
        )
        out *= seq[:, idx[:, d]]
    return out


def eval_basis(spec: InputSpec, alpha, x) -> float:
    """Value of the tensor-product basis function ``Psi_alpha`` at one point."""
    return float(basis_matrix(spec, [tuple(alpha)], np.asarray(x, dtype=float).reshape(1, -1))[0, 0])


def build_design_matrix(spec: InputSpec, basis, samples) -> np.ndarray:
    """Design matrix ``A[i, j] = Psi_j(x_i)`` with columns in basis order."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ParameterError("cannot build a design matrix from an empty sample set")
    if len(basis) == 0:
        raise ParameterError("basis must not be empty")
    return basis_matrix(spec, basis, samples)


def _check_rank(s, n_columns):
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s.size else 0
    if rank < n_columns:
        raise ConditioningError(
            f"design matrix is rank deficient: numerical rank {rank} < {n_columns} columns",
            rank=rank,
            n_columns=n_columns,
        )


class GramAccumulator:
    """Blocked accumulation of ``A^T A`` and ``A^T Y`` for designs too large to hold.

    Blocks must be added in a fixed order for bit-reproducible results.
    """

    def __init__(self, n_columns: int, n_rhs: int | None = None):
        self.n_columns = n_columns
        self.gram = np.zeros((n_columns, n_columns))
        shape = (n_columns,) if n_rhs is None else (n_columns, n_rhs)
        self.rhs = np.zeros(shape)
        self.y_sq = 0.0
        self.n_rows = 0

    def add(self, a_block, y_block):
        a_block = np.asarray(a_block, dtype=float)
        y_block = np.asarray(y_block, dtype=float)
        self.gram += a_block.T @ a_block
        self.rhs += a_block.T @ y_block
        self.y_sq += float(np.sum(y_block**2))
        self.n_rows += a_block.shape[0]

    def solve(self) -> np.ndarray:
        if self.n_rows < self.n_columns:
            raise UnderdeterminedError(
                f"{self.n_rows} observations for {self.n_columns} coefficients",
                n_columns=self.n_columns,
            )
        eig = np.linalg.eigvalsh(self.gram)
        s = np.sqrt(np.clip(eig[::-1], 0.0, None))
        _check_rank(s, self.n_columns)
        cond = s[0] / s[-1]
        if cond > GRAM_WARN_COND:
            LOGGER.warning("normal equations solved with cond(A) ~ %.3g", cond)
        return linalg.cho_solve(linalg.cho_factor(self.gram), self.rhs)


def fit_ols(a, y, max_dense_entries: int = DEFAULT_MAX_DENSE_ENTRIES) -> np.ndarray:
    """Ordinary least-squares coefficients minimizing ``||A c - Y||``.

    Uses a thin SVD of ``A``; designs with more than ``max_dense_entries``
    entries are solved through blocked normal equations instead. ``y`` may hold
    several right-hand sides as columns.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[1] == 0:
        raise ParameterError("design matrix must be 2-d with at least one column")
    n, p = a.shape
    if y.shape[0] != n:
        raise ParameterError(f"{y.shape[0]} responses for {n} design rows")
    if n < p:
        raise UnderdeterminedError(f"{n} observations for {p} coefficients", n_columns=p)
    if a.size > max_dense_entries:
        acc = GramAccumulator(p, None if y.ndim == 1 else y.shape[1])
        block = max(p, max_dense_entries // p)
        for start in range(0, n, block):
            acc.add(a[start : start + block], y[start : start + block])
        return acc.solve()
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    _check_rank(s, p)
    uty = u.T @ y
    if y.ndim == 1:
        return vt.T @ (uty / s)
    return vt.T @ (uty / s[:, None])


@dataclass(frozen=True, eq=False)
class PceModel:
    """A truncated polynomial chaos expansion ``sum_alpha y_alpha Psi_alpha``."""

    input_spec: InputSpec
    indices: np.ndarray
    coefficients: np.ndarray
    degree: int = field(default=-1)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.input_spec.dim)
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if idx.shape[0] != coef.shape[0]:
            raise ParameterError(f"{coef.shape[0]} coefficients for {idx.shape[0]} basis terms")
        if np.any(idx < 0):
            raise ParameterError("multi-index exponents must be non-negative")
        if len({tuple(r) for r in idx.tolist()}) != idx.shape[0]:
            raise ParameterError("basis multi-indices must be unique")
        deg = int(idx.sum(axis=1).max(initial=0))
        declared = deg if self.degree < 0 else int(self.degree)
        if deg > declared:
            raise ParameterError(f"basis contains degree {deg} above declared degree {declared}")
        idx.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "degree", declared)

    @property
    def dim(self) -> int:
        return self.input_spec.dim

    def __len__(self):
        return self.indices.shape[0]

    def multi_indices(self) -> list[tuple[int, ...]]:
        return [tuple(r) for r in self.indices.tolist()]

    def coefficient(self, alpha) -> float:
        alpha = tuple(alpha)
        for i, row in enumerate(self.multi_indices()):
            if row == alpha:
                return float(self.coefficients[i])
        return 0.0

    def evaluate(self, x, chunk: int = 65536) -> np.ndarray:
        x = self.input_spec.as_points(x)
        out = np.empty(x.shape[0])
        for start in range(0, x.shape[0], chunk):
            out[start : start + chunk] = (
                basis_matrix(self.input_spec, self.indices, x[start : start + chunk]) @ self.coefficients
            )
        return out

    @property
    def mean(self) -> float:
        zero = ~self.indices.any(axis=1)
        return float(self.coefficients[zero].sum())

    def to_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "input_spec": self.input_spec.to_list(),
            "degree": self.degree,
            "indices": self.indices.tolist(),
            "coefficients": [float(c).hex() for c in self.coefficients],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> PceModel:
        if not isinstance(d, dict):
            raise SchemaError("model document must be a JSON object")
        if d.get("version") != MODEL_SCHEMA_VERSION:
            raise SchemaError(f"unsupported model schema version {d.get('version')!r}")
        try:
            spec = InputSpec.from_list(d["input_spec"])
            coef = [float.fromhex(c) if isinstance(c, str) else float(c) for c in d["coefficients"]]
            idx = np.array(d["indices"], dtype=np.int64).reshape(len(coef), spec.dim)
            return cls(spec, idx, np.array(coef), int(d["degree"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> PceModel:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model file is not valid JSON: {exc}") from exc


def evaluate(model: PceModel, x):
    """Evaluate the expansion at one point (returns a float) or many (returns an array)."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and not (x.ndim == 1 and model.dim == 1 and x.size > 1):
        return float(model.evaluate(x.reshape(1, -1))[0])
    return model.evaluate(x)


def fit_pce(spec: InputSpec, x, y, degree: int, method: str = "ols", omp_config=None):
    """Fit a total-degree expansion to samples; returns ``(model, relative_residual)``."""
    basis = enumerate_total_degree(spec.dim, degree)
    a = build_design_matrix(spec, basis, x)
    y = np.asarray(y, dtype=float)
    if method == "ols":
        coef = fit_ols(a, y)
        model = PceModel(spec, basis.as_array(), coef, degree)
    elif method == "omp":
        from .sparse_omp import fit_omp

        res = fit_omp(a, y, omp_config)
        active = list(res.active_set)
        model = PceModel(spec, basis.as_array()[active], [res.coefficients[j] for j in active], degree)
    else:
        raise ParameterError(f"unknown fitting method {method!r}")
    resid = y - model.evaluate(x)
    ynorm = np.linalg.norm(y)
    rel = float(np.linalg.norm(resid) / ynorm) if ynorm > 0 else float(np.linalg.norm(resid))
    return model, rel
