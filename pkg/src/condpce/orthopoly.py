"""One-dimensional orthonormal polynomial families.

Each family is orthonormal with respect to a probability density:

========  =====================  ==================================
kind      density                normalization ``gamma_k``
========  =====================  ==================================
hermite   standard normal        ``k!``
legendre  uniform 1/2 on [-1,1]  ``1 / (2k + 1)``
laguerre  Gamma(alpha + 1, 1)    ``Gamma(k+alpha+1) / (k! Gamma(alpha+1))``
========  =====================  ==================================

The Hermite polynomials are the probabilists' ones, ``He_{k+1} = x He_k - k He_{k-1}``,
which is the convention whose squared norm under N(0, 1) is ``k!``.

Values are produced by running the classical three-term recurrence directly on
the orthonormal polynomials ``phi_k = P_k / sqrt(gamma_k)``, so no factorials
or monomial coefficients are ever formed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ParameterError

__all__ = [
    "FamilyKind",
    "PolynomialFamily",
    "HERMITE",
    "LEGENDRE",
    "normalization",
    "eval_orthonormal_sequence",
]

# slack for points mapped onto [-1, 1] or [0, inf) by floating point affine maps
_SUPPORT_TOL = 1e-12


class FamilyKind(str, enum.Enum):
    HERMITE = "hermite"
    LEGENDRE = "legendre"
    LAGUERRE = "laguerre"


@dataclass(frozen=True)
class PolynomialFamily:
    """A family of orthonormal polynomials tied to a canonical distribution.

    ``shape_param`` is the Laguerre ``alpha`` (> -1); it is ignored by the
    other kinds.
    """

    kind: FamilyKind
    shape_param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.kind is FamilyKind.LAGUERRE and not self.shape_param > -1.0:
            raise ParameterError(
                f"Laguerre shape parameter must be > -1, got {self.shape_param}"
            )

    @classmethod
    def laguerre(cls, alpha: float = 0.0) -> PolynomialFamily:
        return cls(FamilyKind.LAGUERRE, float(alpha))

    def check_support(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError(f"non-finite argument for {self.kind.value} polynomials")
        if self.kind is FamilyKind.LEGENDRE:
            if np.any(np.abs(x) > 1.0 + _SUPPORT_TOL):
                raise DomainError("Legendre argument outside [-1, 1]")
        elif self.kind is FamilyKind.LAGUERRE:
            if np.any(x < -_SUPPORT_TOL):
                raise DomainError("Laguerre argument outside [0, inf)")


HERMITE = PolynomialFamily(FamilyKind.HERMITE)
LEGENDRE = PolynomialFamily(FamilyKind.LEGENDRE)


def normalization(family: PolynomialFamily, k: int) -> float:
    """Squared norm ``gamma_k`` of the classical degree-``k`` polynomial."""
    if k < 0:
        raise ParameterError(f"degree must be non-negative, got {k}")
    if family.kind is FamilyKind.HERMITE:
        return float(math.factorial(k))
    if family.kind is FamilyKind.LEGENDRE:
        return 1.0 / (2 * k + 1)
    a = family.shape_param
    return float(np.exp(gammaln(k + a + 1) - gammaln(k + 1) - gammaln(a + 1)))


def _recurrence(family: PolynomialFamily, k: int) -> tuple[float, float, float]:
    """Coefficients of ``P_{k+1} = (a x + b) P_k - c P_{k-1}``."""
    if family.kind is FamilyKind.HERMITE:
        return 1.0, 0.0, float(k)
    if family.kind is FamilyKind.LEGENDRE:
        return (2 * k + 1) / (k + 1), 0.0, k / (k + 1)
    a = family.shape_param
    return -1.0 / (k + 1), (2 * k + a + 1) / (k + 1), (k + a) / (k + 1)


def _norm_ratio(family: PolynomialFamily, k: int) -> float:
    """``gamma_{k+1} / gamma_k`` in closed form."""
    if family.kind is FamilyKind.HERMITE:
        return float(k + 1)
    if family.kind is FamilyKind.LEGENDRE:
        return (2 * k + 1) / (2 * k + 3)
    return (k + family.shape_param + 1) / (k + 1)


def eval_orthonormal_sequence(family: PolynomialFamily, max_degree: int, x):
    """Evaluate ``[phi_0(x), ..., phi_p(x)]``.

    ``x`` may be a scalar or an array; the degree axis is appended last, so an
    input of shape ``(n,)`` gives an output of shape ``(n, p + 1)``.
    """
    if max_degree < 0:
        raise ParameterError(f"max_degree must be non-negative, got {max_degree}")
    x = np.asarray(x, dtype=float)
    family.check_support(x)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree == 0:
        return out
    # phi_k = P_k / sqrt(gamma_k); substituting into the classical recurrence
    #   phi_{k+1} = [(a x + b) phi_k - c sqrt(gamma_{k-1}/gamma_k) phi_{k-1}]
    #               * sqrt(gamma_k / gamma_{k+1})
    prev = np.zeros_like(x)
    cur = out[..., 0]
    for k in range(max_degree):
        a, b, c = _recurrence(family, k)
        nxt = (a * x + b) * cur
        if k > 0:
            nxt -= c * prev / math.sqrt(_norm_ratio(family, k - 1))
        nxt /= math.sqrt(_norm_ratio(family, k))
        out[..., k + 1] = nxt
        prev, cur = cur, out[..., k + 1]
    return out
