"""Orthogonal Matching Pursuit for sparse expansion coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, ParameterError
from .pce_core import RANK_RTOL

__all__ = ["OmpConfig", "OmpResult", "fit_omp", "fit_omp_gram", "default_config"]


@dataclass(frozen=True)
class OmpConfig:
    max_terms: int
    tol: float = 1e-6

    def __post_init__(self):
        if int(self.max_terms) < 1:
            raise ParameterError(f"max_terms must be >= 1, got {self.max_terms}")
        if not self.tol > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tol}")


def default_config(n_rows: int, n_columns: int, tol: float = 1e-6) -> OmpConfig:
    return OmpConfig(max(1, min(n_columns, n_rows // 2)), tol)


@dataclass
class OmpResult:
    active_set: list[int]
    coefficients: dict[int, float]
    residual_history: list[float] = field(default_factory=list)

    def dense(self, n_columns: int) -> np.ndarray:
        out = np.zeros(n_columns)
        for j, c in self.coefficients.items():
            out[j] = c
        return out


def _refit(sub, y):
    u, s, vt = np.linalg.svd(sub, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        rank = int(np.sum(s > RANK_RTOL * s[0]))
        raise ConditioningError(
            f"active columns are numerically collinear (rank {rank} of {sub.shape[1]})",
            rank=rank,
            n_columns=sub.shape[1],
        )
    return vt.T @ ((u.T @ y) / s)


def fit_omp(a, y, config: OmpConfig | None = None) -> OmpResult:
    """Greedy sparse least squares.

    Each iteration adds the inactive column with the largest correlation to the
    residual, refits all active coefficients by least squares and stops once
    ``||R|| / ||Y|| < tol`` or ``max_terms`` columns are active. Correlations
    are computed on unit-norm columns; ties go to the lowest column id.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[1] == 0:
        raise ParameterError("design matrix must be 2-d with at least one column")
    if y.shape != (a.shape[0],):
        raise ParameterError(f"response shape {y.shape} does not match {a.shape[0]} rows")
    n, p = a.shape
    if config is None:
        config = default_config(n, p)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return OmpResult([], {}, [0.0])

    norms = np.linalg.norm(a, axis=0)
    usable = norms > 0
    scale = np.where(usable, norms, 1.0)
    budget = min(int(config.max_terms), p, n)

    active: list[int] = []
    coef = np.zeros(0)
    resid = y.copy()
    history = []
    while len(active) < budget:
        corr = np.abs(a.T @ resid) / scale
        corr[~usable] = -np.inf
        corr[active] = -np.inf
        j = int(np.argmax(corr))
        if not np.isfinite(corr[j]):
            break
        active.append(j)
        coef = _refit(a[:, active], y)
        resid = y - a[:, active] @ coef
        rel = float(np.linalg.norm(resid)) / ynorm
        history.append(rel)
        if rel < config.tol:
            break
    return OmpResult(active, {j: float(c) for j, c in zip(active, coef)}, history)


def fit_omp_gram(gram, rhs, y_sq: float, n_rows: int, config: OmpConfig | None = None) -> OmpResult:
    """OMP driven by the normal-equation quantities ``A^T A``, ``A^T Y`` and ``Y^T Y``.

    Selects the same columns as :func:`fit_omp` in exact arithmetic, for designs
    whose rows were only ever seen blockwise (see ``GramAccumulator``).
    """
    gram = np.asarray(gram, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    p = gram.shape[0]
    if gram.shape != (p, p) or rhs.shape != (p,):
        raise ParameterError("gram must be (P, P) and rhs (P,)")
    if config is None:
        config = default_config(n_rows, p)
    if y_sq <= 0.0:
        return OmpResult([], {}, [0.0])
    ynorm = np.sqrt(y_sq)
    diag = np.diag(gram)
    usable = diag > 0
    scale = np.sqrt(np.where(usable, diag, 1.0))
    budget = min(int(config.max_terms), p, n_rows)

    active: list[int] = []
    coef = np.zeros(0)
    history = []
    while len(active) < budget:
        corr = np.abs(rhs - gram[:, active] @ coef) / scale
        corr[~usable] = -np.inf
        corr[active] = -np.inf
        j = int(np.argmax(corr))
        if not np.isfinite(corr[j]):
            break
        active.append(j)
        sub = gram[np.ix_(active, active)]
        eig = np.linalg.eigvalsh(sub)
        if eig[0] <= (RANK_RTOL**2) * eig[-1]:
            raise ConditioningError(
                f"active columns are numerically collinear ({len(active)} columns)",
                n_columns=len(active),
            )
        coef = np.linalg.solve(sub, rhs[active])
        # ||Y - A c||^2 = Y^T Y - c^T A^T Y at the least-squares solution
        rel = float(np.sqrt(max(y_sq - coef @ rhs[active], 0.0)) / ynorm)
        history.append(rel)
        if rel < config.tol:
            break
    return OmpResult(active, {j: float(c) for j, c in zip(active, coef)}, history)
