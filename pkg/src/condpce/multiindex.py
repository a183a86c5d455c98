"""Total-degree multi-index sets and their subset partitions.

A multi-index is a plain tuple of non-negative ints. Dimension ids are 0-based
throughout the library; the CLI converts from 1-based ids at its boundary.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ParameterError

__all__ = [
    "MultiIndex",
    "TruncationSet",
    "enumerate_total_degree",
    "partition",
    "support",
    "subset_mask",
    "subset_members",
    "DEFAULT_MAX_TERMS",
]

MultiIndex = tuple[int, ...]

DEFAULT_MAX_TERMS = 5_000_000


def _compositions(dim: int, total: int):
    # exponents of earlier dimensions descend: (2,0), (1,1), (0,2)
    if dim == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(dim - 1, total - head):
            yield (head,) + tail


@dataclass(frozen=True)
class TruncationSet:
    """All multi-indices of ``dim`` variables with total degree ``<= degree``.

    Ordered by total degree, then lexicographically with larger leading
    exponents first. The ordering is part of the serialization contract.
    """

    dim: int
    degree: int
    indices: tuple[MultiIndex, ...]
    _position: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_position", {a: i for i, a in enumerate(self.indices)})

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, i):
        return self.indices[i]

    def __contains__(self, alpha):
        return tuple(alpha) in self._position

    def position(self, alpha) -> int:
        return self._position[tuple(alpha)]

    def as_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.dim)


def enumerate_total_degree(dim: int, degree: int, max_terms: int = DEFAULT_MAX_TERMS) -> TruncationSet:
    """Enumerate the total-degree set ``{alpha : |alpha| <= degree}``.

    >>> enumerate_total_degree(2, 1).indices
    ((0, 0), (1, 0), (0, 1))
    """
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    if degree < 0:
        raise ParameterError(f"degree must be >= 0, got {degree}")
    count = comb(dim + degree, degree)
    if count > max_terms:
        raise ParameterError(
            f"total-degree set with M={dim}, p={degree} has {count} terms, above the cap of {max_terms}"
        )
    indices = tuple(a for d in range(degree + 1) for a in _compositions(dim, d))
    return TruncationSet(dim, degree, indices)


def _check_dims(dims: Iterable[int], dim: int) -> tuple[int, ...]:
    dims = tuple(sorted(set(int(d) for d in dims)))
    for d in dims:
        if d < 0 or d >= dim:
            raise IndexError(f"dimension id {d} out of range for {dim} dimensions")
    return dims


def partition(alpha: Sequence[int], cond_dims: Iterable[int]) -> tuple[MultiIndex, MultiIndex]:
    """Split ``alpha`` into its conditioning and complementary blocks.

    Both blocks keep the original dimension order.
    """
    alpha = tuple(int(a) for a in alpha)
    cond = set(_check_dims(cond_dims, len(alpha)))
    alpha_k = tuple(a for i, a in enumerate(alpha) if i in cond)
    alpha_l = tuple(a for i, a in enumerate(alpha) if i not in cond)
    return alpha_k, alpha_l


def support(alpha: Sequence[int]) -> frozenset[int]:
    """Dimensions on which ``alpha`` has a non-zero exponent."""
    return frozenset(i for i, a in enumerate(alpha) if a != 0)


def subset_mask(indices, u: Iterable[int]) -> np.ndarray:
    """Boolean mask over ``indices`` selecting the set A_u (non-zero exactly on ``u``)."""
    arr = np.asarray(indices.as_array() if isinstance(indices, TruncationSet) else indices)
    if arr.ndim != 2:
        raise ParameterError("indices must be a 2-d array of exponents")
    u = _check_dims(u, arr.shape[1])
    if not u:
        raise ParameterError("variable subset must be non-empty")
    want = np.zeros(arr.shape[1], dtype=bool)
    want[list(u)] = True
    return np.all((arr != 0) == want, axis=1)


def subset_members(indices, u: Iterable[int]) -> list[MultiIndex]:
    """Members of ``indices`` whose non-zero exponents are exactly the dimensions ``u``."""
    u = tuple(u)
    if not u:
        raise ParameterError("variable subset must be non-empty")
    seq = list(indices)
    if not seq:
        return []
    mask = subset_mask(np.array(seq, dtype=np.int64), u)
    return [tuple(int(a) for a in seq[i]) for i in np.flatnonzero(mask)]
