"""Global Sobol' indices read directly off expansion coefficients.

Orthonormality of the basis makes every partial variance a sum of squared
coefficients: ``V_u`` collects the terms whose non-zero exponents are exactly
the variables in ``u``, and ``V`` all terms except the constant.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, ParameterError
from .multiindex import subset_mask
from .pce_core import PceModel

__all__ = [
    "SobolReport",
    "total_variance",
    "partial_variance",
    "sobol_indices",
    "indices_from_coefficients",
    "subset_label",
]


def subset_label(u, one_based: bool = True) -> str:
    """``(0, 2) -> "1,3"``; the label used in serialized reports."""
    off = 1 if one_based else 0
    return ",".join(str(i + off) for i in sorted(u))


@dataclass
class SobolReport:
    total_variance: float
    first_order: dict[int, float]
    interactions: dict[tuple[int, ...], float]
    totals: dict[int, float]

    def to_dict(self) -> dict:
        """JSON-ready dict with 1-based variable labels in a stable order."""
        return {
            "total_variance": self.total_variance,
            "first_order": {subset_label((i,)): self.first_order[i] for i in sorted(self.first_order)},
            "interactions": {
                subset_label(u): self.interactions[u]
                for u in sorted(self.interactions, key=lambda u: (len(u), u))
            },
            "totals": {subset_label((i,)): self.totals[i] for i in sorted(self.totals)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def total_variance(model: PceModel) -> float:
    nonzero = model.indices.any(axis=1)
    return float(np.sum(model.coefficients[nonzero] ** 2))


def partial_variance(model: PceModel, u) -> float:
    u = tuple(u)
    if not u:
        raise ParameterError("variable subset must be non-empty")
    mask = subset_mask(model.indices, u)
    return float(np.sum(model.coefficients[mask] ** 2))


def indices_from_coefficients(indices, coefficients, variables, max_order: int = 2):
    """Variance decomposition over ``variables`` (columns of ``indices``).

    ``coefficients`` may carry extra trailing axes (e.g. one column per grid
    point); every returned quantity then has that trailing shape. Returns
    ``(V, first, interactions, totals)`` with dicts keyed by entries of
    ``variables``.
    """
    idx = np.asarray(indices)
    sq = np.asarray(coefficients, dtype=float) ** 2
    nz = idx != 0
    var = sq[nz.any(axis=1)].sum(axis=0)
    first, inter, totals = {}, {}, {}
    for k, v in enumerate(variables):
        only = nz[:, k] & (nz.sum(axis=1) == 1)
        first[v] = sq[only].sum(axis=0)
        totals[v] = sq[nz[:, k]].sum(axis=0)
    for order in range(2, min(max_order, len(variables)) + 1):
        for combo in itertools.combinations(range(len(variables)), order):
            want = np.zeros(len(variables), dtype=bool)
            want[list(combo)] = True
            mask = np.all(nz == want, axis=1)
            inter[tuple(variables[c] for c in combo)] = sq[mask].sum(axis=0)
    return var, first, inter, totals


def sobol_indices(model: PceModel, max_order: int = 2) -> SobolReport:
    """First-order, interaction (up to ``max_order`` variables) and total indices."""
    if max_order < 1:
        raise ParameterError("max_order must be >= 1")
    var, first, inter, totals = indices_from_coefficients(
        model.indices, model.coefficients, tuple(range(model.dim)), max_order
    )
    var = float(var)
    if var <= 0.0:
        raise DegenerateModelError("model has zero variance; Sobol' indices are undefined")
    return SobolReport(
        total_variance=var,
        first_order={i: float(v / var) for i, v in first.items()},
        interactions={u: float(v / var) for u, v in inter.items()},
        totals={i: float(v / var) for i, v in totals.items()},
    )
