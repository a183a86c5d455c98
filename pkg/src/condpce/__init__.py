"""Conditional Sobol' indices from a single global polynomial chaos expansion."""

from .conditional import (
    ConditionalDecomposition,
    ConditionalSobolResult,
    ConditioningSpec,
    coeff_field,
    conditional_mean,
    conditional_sobol,
    conditional_variance,
    decompose,
    sweep_grid,
)
from .errors import (
    CondPceError,
    ConditioningError,
    DegenerateModelError,
    DomainError,
    ParameterError,
    SchemaError,
    UnderdeterminedError,
)
from .fields import Grid, SensitivityField
from .multiindex import TruncationSet, enumerate_total_degree, partition, subset_members
from .orthopoly import FamilyKind, PolynomialFamily, eval_orthonormal_sequence, normalization
from .pce_core import (
    InputSpec,
    Marginal,
    PceModel,
    build_design_matrix,
    eval_basis,
    evaluate,
    fit_ols,
    fit_pce,
)
from .sobol_global import SobolReport, partial_variance, sobol_indices, total_variance
from .sparse_omp import OmpConfig, OmpResult, fit_omp

__version__ = "0.1.0"
