"""Conditional moments and Sobol' indices from a single global expansion.

The inputs of a fitted :class:`~condpce.pce_core.PceModel` are split into a
conditioning block ``s`` and a stochastic block ``xi``. Because every basis
function factorizes as ``Psi_alpha(s, xi) = Psi_K(s) Psi_L(xi)``, regrouping
the terms by their stochastic multi-index ``alpha_L`` gives

    M(xi | s) = sum_L c_L(s) Psi_L(xi),   c_L(s) = sum_K y_(K,L) Psi_K(s)

and, for fixed ``s``, the ``Psi_L`` are still orthonormal in ``xi``. The
conditional mean is ``c_0(s)``, the conditional variance is the sum of the
other ``c_L(s)^2``, and the conditional Sobol' indices are ratios of partial
sums of ``c_L(s)^2``, exactly as in the global case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fields import Grid, SensitivityField
from .multiindex import partition
from .pce_core import PceModel, basis_matrix
from .sobol_global import indices_from_coefficients, subset_label

__all__ = [
    "ConditioningSpec",
    "ConditionalDecomposition",
    "ConditionalSobolResult",
    "decompose",
    "coeff_field",
    "conditional_mean",
    "conditional_variance",
    "conditional_sobol",
    "sweep_grid",
    "DEFAULT_VARIANCE_FLOOR",
]

DEFAULT_VARIANCE_FLOOR = 1e-10


@dataclass(frozen=True)
class ConditioningSpec:
    cond_dims: tuple[int, ...]
    stoch_dims: tuple[int, ...]

    def __post_init__(self):
        cond = tuple(sorted(int(d) for d in self.cond_dims))
        stoch = tuple(sorted(int(d) for d in self.stoch_dims))
        object.__setattr__(self, "cond_dims", cond)
        object.__setattr__(self, "stoch_dims", stoch)
        if set(cond) & set(stoch):
            raise ParameterError("conditioning and stochastic dimensions overlap")
        if len(set(cond)) != len(cond) or len(set(stoch)) != len(stoch):
            raise ParameterError("duplicate dimension ids")
        if not stoch:
            raise ParameterError("at least one stochastic dimension is required")

    @classmethod
    def from_cond_dims(cls, dim: int, cond_dims) -> ConditioningSpec:
        cond = set(int(d) for d in cond_dims)
        for d in cond:
            if d < 0 or d >= dim:
                raise IndexError(f"conditioning dimension {d} out of range for {dim} dimensions")
        return cls(tuple(cond), tuple(d for d in range(dim) if d not in cond))

    @property
    def dim(self) -> int:
        return len(self.cond_dims) + len(self.stoch_dims)


class ConditionalDecomposition:
    """A model's terms grouped by stochastic multi-index.

    ``groups`` maps each ``alpha_L`` to its ``(alpha_K, coefficient)`` terms.
    Coefficient fields are evaluated for many conditioning points at once as
    ``Psi_K(s) @ weights``.
    """

    def __init__(self, model: PceModel, spec: ConditioningSpec):
        if spec.dim != model.dim or max(spec.cond_dims + spec.stoch_dims) >= model.dim:
            raise ParameterError("conditioning spec does not match the model dimensions")
        self.model = model
        self.spec = spec
        groups: dict[tuple, list] = {}
        for alpha, y in zip(model.multi_indices(), model.coefficients.tolist()):
            a_k, a_l = partition(alpha, spec.cond_dims)
            groups.setdefault(a_l, []).append((a_k, y))
        # deterministic order: total degree, then larger leading exponents first
        keys = sorted(groups, key=lambda a: (sum(a), tuple(-e for e in a)))
        self.groups = {k: tuple(groups[k]) for k in keys}
        self.stoch_indices = np.array(keys, dtype=np.int64).reshape(len(keys), len(spec.stoch_dims))
        cond_keys = sorted(
            {a_k for terms in self.groups.values() for a_k, _ in terms},
            key=lambda a: (sum(a), tuple(-e for e in a)),
        )
        self.cond_indices = np.array(cond_keys, dtype=np.int64).reshape(len(cond_keys), len(spec.cond_dims))
        pos = {a: i for i, a in enumerate(cond_keys)}
        self.weights = np.zeros((len(cond_keys), len(keys)))
        for j, k in enumerate(keys):
            for a_k, y in self.groups[k]:
                self.weights[pos[a_k], j] += y
        self._cond_spec = model.input_spec.subspec(spec.cond_dims) if spec.cond_dims else None
        self._key_pos = {k: j for j, k in enumerate(keys)}
        self._zero = self._key_pos.get(tuple([0] * len(spec.stoch_dims)))

    @property
    def n_cond(self) -> int:
        return len(self.spec.cond_dims)

    def _points(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.n_cond == 0:
            n = 1 if s.ndim <= 1 else s.shape[0]
            return np.zeros((n, 0))
        if s.ndim <= 1:
            s = s.reshape(1, -1) if self.n_cond > 1 or s.ndim == 0 else s.reshape(-1, 1)
        if s.shape[1] != self.n_cond:
            raise ParameterError(f"expected {self.n_cond} conditioning coordinates, got {s.shape[1]}")
        return s

    def coeff_fields(self, s) -> np.ndarray:
        """All coefficient fields at the conditioning points; shape ``(n_points, n_groups)``."""
        s = self._points(s)
        if self._cond_spec is None:
            return np.repeat(self.weights, s.shape[0], axis=0)
        psi_k = basis_matrix(self._cond_spec, self.cond_indices, s)
        # fixed summation order per point, so a point's value does not depend on the batch
        return np.einsum("nk,kl->nl", psi_k, self.weights)

    def mean_and_variance(self, s):
        c = self.coeff_fields(s)
        mean = c[:, self._zero] if self._zero is not None else np.zeros(c.shape[0])
        nonzero = self.stoch_indices.any(axis=1)
        return mean, np.sum(c[:, nonzero] ** 2, axis=1)

    def sobol_arrays(self, s, variance_floor: float = DEFAULT_VARIANCE_FLOOR, max_order: int = 2):
        """Vectorized conditional indices; undefined points are NaN."""
        c = self.coeff_fields(s)
        var, first, inter, totals = indices_from_coefficients(
            self.stoch_indices, c.T, self.spec.stoch_dims, max_order
        )
        mean = c[:, self._zero] if self._zero is not None else np.zeros(c.shape[0])
        ok = var >= variance_floor
        safe = np.where(ok, var, 1.0)

        def ratio(v):
            return np.where(ok, v / safe, np.nan)

        return {
            "mean": mean,
            "variance": var,
            "defined": ok,
            "first_order": {k: ratio(v) for k, v in first.items()},
            "interactions": {k: ratio(v) for k, v in inter.items()},
            "totals": {k: ratio(v) for k, v in totals.items()},
        }


def decompose(model: PceModel, spec) -> ConditionalDecomposition:
    """Regroup ``model`` by stochastic multi-index.

    ``spec`` is a :class:`ConditioningSpec` or an iterable of conditioning
    dimension ids (0-based).
    """
    if not isinstance(spec, ConditioningSpec):
        spec = ConditioningSpec.from_cond_dims(model.dim, spec)
    return ConditionalDecomposition(model, spec)


def coeff_field(decomp: ConditionalDecomposition, alpha_l, s) -> float:
    """``c_{alpha_L}(s)``; zero for a stochastic index with no retained terms."""
    j = decomp._key_pos.get(tuple(int(a) for a in alpha_l))
    c = decomp.coeff_fields(s)
    if j is None:
        return 0.0
    return float(c[0, j])


def conditional_mean(decomp: ConditionalDecomposition, s) -> float:
    return float(decomp.mean_and_variance(s)[0][0])


def conditional_variance(decomp: ConditionalDecomposition, s) -> float:
    return float(decomp.mean_and_variance(s)[1][0])


@dataclass
class ConditionalSobolResult:
    mean: float
    variance: float
    defined: bool
    first_order: dict[int, float] = field(default_factory=dict)
    interactions: dict[tuple[int, ...], float] = field(default_factory=dict)
    totals: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """JSON-ready dict; variables use 1-based model dimension ids."""
        out = {"mean": self.mean, "variance": self.variance, "defined": self.defined}
        if not self.defined:
            out["status"] = "undefined"
            return out
        out["first_order"] = {subset_label((i,)): v for i, v in sorted(self.first_order.items())}
        out["interactions"] = {
            subset_label(u): self.interactions[u] for u in sorted(self.interactions, key=lambda u: (len(u), u))
        }
        out["totals"] = {subset_label((i,)): v for i, v in sorted(self.totals.items())}
        return out


def conditional_sobol(
    decomp: ConditionalDecomposition,
    s,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    max_order: int = 2,
) -> ConditionalSobolResult:
    """Conditional indices at one point; below ``variance_floor`` the result is undefined."""
    r = decomp.sobol_arrays(s, variance_floor, max_order)
    mean, var, ok = float(r["mean"][0]), float(r["variance"][0]), bool(r["defined"][0])
    if not ok:
        return ConditionalSobolResult(mean, var, False)
    return ConditionalSobolResult(
        mean,
        var,
        True,
        {k: float(v[0]) for k, v in r["first_order"].items()},
        {k: float(v[0]) for k, v in r["interactions"].items()},
        {k: float(v[0]) for k, v in r["totals"].items()},
    )


def field_name(kind: str, u) -> str:
    return f"{kind}_" + "_".join(str(i + 1) for i in u)


def sweep_grid(
    decomp: ConditionalDecomposition,
    grid: Grid,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    max_order: int = 2,
) -> dict[str, SensitivityField]:
    """Mean, variance and every index as fields over ``grid``.

    Index fields are named ``S_i``, ``S_i_j`` and ``ST_i`` with 1-based model
    dimension ids. Points below ``variance_floor`` are NaN in index fields.
    """
    if grid.n_points == 0:
        raise ParameterError("empty grid")
    if grid.dim != decomp.n_cond:
        raise ParameterError(f"grid has {grid.dim} axes for {decomp.n_cond} conditioning dimensions")
    r = decomp.sobol_arrays(grid.points(), variance_floor, max_order)
    out = {
        "mean": SensitivityField("mean", grid, r["mean"]),
        "variance": SensitivityField("variance", grid, r["variance"]),
    }
    for k, v in r["first_order"].items():
        name = field_name("S", (k,))
        out[name] = SensitivityField(name, grid, v)
    for u, v in r["interactions"].items():
        name = field_name("S", u)
        out[name] = SensitivityField(name, grid, v)
    for k, v in r["totals"].items():
        name = field_name("ST", (k,))
        out[name] = SensitivityField(name, grid, v)
    return out
