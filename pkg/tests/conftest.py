import numpy as np
import pytest

from condpce.benchmark import shaping_functions
from condpce.multiindex import enumerate_total_degree
from condpce.pce_core import InputSpec, Marginal, PceModel, basis_matrix

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


MARGINALS = (
    Marginal.gaussian(0.5, 2.0),
    Marginal.uniform(-1.0, 3.0),
    Marginal.gamma(2.5, 1.5),
    Marginal.gaussian(),
    Marginal.uniform(0.0, 1.0),
)


def random_spec(rng, dim: int) -> InputSpec:
    return InputSpec(tuple(MARGINALS[int(k)] for k in rng.integers(0, len(MARGINALS), dim)))


def random_model(rng, dim: int, degree: int, spec: InputSpec | None = None, decay: float = 0.7) -> PceModel:
    """Full total-degree model with coefficients shrinking geometrically in degree."""
    spec = spec or random_spec(rng, dim)
    basis = enumerate_total_degree(dim, degree)
    idx = basis.as_array()
    coef = rng.standard_normal(len(basis)) * decay ** idx.sum(axis=1)
    return PceModel(spec, idx, coef, degree)


def benchmark_structured_model(cond_degree: int = 30, n_quad: int = 48) -> PceModel:
    """Joint ``(x, y, xi_1, xi_2)`` model reproducing the synthetic field.

    ``G = g0 + g1 xi_1 + g2 xi_2 + g12 xi_1 xi_2`` is exact in the Hermite block;
    each shaping function is projected onto the Legendre block by tensor
    Gauss-Legendre quadrature, which converges spectrally for these entire
    functions.
    """
    t, w = np.polynomial.legendre.leggauss(n_quad)
    nodes, weights = 0.5 * (t + 1.0), 0.5 * w
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    wts = np.outer(weights, weights).ravel()
    cond_spec = InputSpec((Marginal.uniform(0, 1), Marginal.uniform(0, 1)))
    k_idx = enumerate_total_degree(2, cond_degree).as_array()
    psi = basis_matrix(cond_spec, k_idx, pts)
    groups = dict(zip(((0, 0), (1, 0), (0, 1), (1, 1)), shaping_functions(pts)))
    indices, coef = [], []
    for a_l, g in groups.items():
        proj = psi.T @ (wts * g)
        for a_k, y in zip(k_idx, proj):
            indices.append(tuple(a_k) + a_l)
            coef.append(y)
    spec = InputSpec(cond_spec.marginals + (Marginal.gaussian(), Marginal.gaussian()))
    return PceModel(spec, np.array(indices), np.array(coef), cond_degree + 2)


@pytest.fixture(scope="session")
def bench_model():
    return benchmark_structured_model()


def pick_freeze_oracle(model: PceModel, n: int = 1_000_000, seed: int = 0, max_order: int = 2) -> dict:
    """Saltelli pick-freeze estimates on the surrogate from a scrambled Sobol' design.

    ``A`` and ``B`` are the two halves of one ``2M``-dimensional low-discrepancy
    sequence mapped through the marginals' inverse CDFs.
    """
    from scipy.stats import qmc

    from condpce.pickfreeze import estimate_indices

    m = model.dim
    u = qmc.Sobol(2 * m, scramble=True, seed=seed).random_base2(int(np.ceil(np.log2(n))))[:n]
    u = np.clip(u, 1e-15, 1 - 1e-15)
    a = model.input_spec.ppf(u[:, :m])
    b = model.input_spec.ppf(u[:, m:])
    return estimate_indices(model.evaluate, a, b, max_order)
