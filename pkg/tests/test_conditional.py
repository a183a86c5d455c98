import math

import numpy as np
import pytest

from condpce.conditional import (
    ConditionalDecomposition,
    ConditioningSpec,
    coeff_field,
    conditional_mean,
    conditional_sobol,
    conditional_variance,
    decompose,
    sweep_grid,
)
from condpce.errors import DomainError, ParameterError
from condpce.fields import Grid
from condpce.multiindex import enumerate_total_degree
from condpce.pce_core import InputSpec, Marginal, PceModel, basis_matrix
from condpce.sobol_global import sobol_indices

from conftest import random_model

JOINT = InputSpec((Marginal.uniform(0, 1), Marginal.uniform(0, 1), Marginal.gaussian(), Marginal.gaussian()))


def joint_random_model(seed, degree=4):
    return random_model(np.random.default_rng(seed), 4, degree, JOINT)


def reconstruct(decomp: ConditionalDecomposition, s, xi):
    c = decomp.coeff_fields(s)
    psi_l = basis_matrix(decomp.model.input_spec.subspec(decomp.spec.stoch_dims), decomp.stoch_indices, xi)
    return np.sum(c * psi_l, axis=1)


def test_conditioning_spec():
    spec = ConditioningSpec.from_cond_dims(4, [1, 0])
    assert spec.cond_dims == (0, 1) and spec.stoch_dims == (2, 3)
    with pytest.raises(ParameterError):
        ConditioningSpec((0, 1), ())
    with pytest.raises(ParameterError):
        ConditioningSpec((0, 1), (1, 2))
    with pytest.raises(IndexError):
        ConditioningSpec.from_cond_dims(3, [3])
    with pytest.raises(ParameterError):
        decompose(joint_random_model(0, 2), (0, 1, 2, 3))


def test_groups_partition_the_coefficients():
    model = joint_random_model(1)
    d = decompose(model, (0, 1))
    seen = []
    for a_l, terms in d.groups.items():
        for a_k, y in terms:
            seen.append((a_k + a_l, y))
    assert sorted(seen) == sorted(zip(model.multi_indices(), model.coefficients.tolist()))
    assert (0, 0) in d.groups


def test_bookkeeping_example():
    idx = [(0, 0, 0, 0), (2, 1, 0, 3)]
    model = PceModel(JOINT, idx, [1.0, 0.25])
    d = decompose(model, (0, 1))
    assert d.groups[(0, 3)] == (((2, 1), 0.25),)


def test_no_conditioning_dependence():
    idx = [(0, 0, 0, 0), (0, 0, 1, 0), (0, 0, 1, 1), (0, 0, 0, 2)]
    coef = [0.5, 1.0, -0.3, 0.7]
    model = PceModel(JOINT, idx, coef)
    d = decompose(model, (0, 1))
    assert all(len(t) == 1 for t in d.groups.values())
    glob = sobol_indices(model)
    for s in ([0.1, 0.9], [0.5, 0.5], [1.0, 0.0]):
        assert coeff_field(d, (1, 0), s) == 1.0
        r = conditional_sobol(d, s)
        for i in (2, 3):
            assert r.first_order[i] == pytest.approx(glob.first_order[i], abs=1e-14)
            assert r.totals[i] == pytest.approx(glob.totals[i], abs=1e-14)
        assert r.interactions[(2, 3)] == pytest.approx(glob.interactions[(2, 3)], abs=1e-14)


def test_coeff_field_examples():
    spec = InputSpec((Marginal.uniform(0, 1), Marginal.gaussian()))
    model = PceModel(spec, [(0, 0), (1, 1)], [4.0, 2.0])
    d = decompose(model, (0,))
    assert coeff_field(d, (1,), 0.75) == pytest.approx(2 * math.sqrt(3) * 0.5, abs=1e-15)
    assert coeff_field(d, (0,), 0.2) == 4.0
    assert coeff_field(d, (5,), 0.2) == 0.0
    with pytest.raises(DomainError):
        coeff_field(d, (1,), 1.5)


@pytest.mark.parametrize("seed", range(3))
def test_reconstruction_identity(seed):
    model = joint_random_model(seed)
    d = decompose(model, (0, 1))
    rng = np.random.default_rng(100 + seed)
    x = JOINT.sample(100, rng)
    np.testing.assert_allclose(reconstruct(d, x[:, :2], x[:, 2:]), model.evaluate(x), rtol=0, atol=1e-12)


def test_non_contiguous_conditioning_dims():
    model = joint_random_model(7, 3)
    d = decompose(model, (0, 2))
    rng = np.random.default_rng(1)
    x = JOINT.sample(50, rng)
    np.testing.assert_allclose(reconstruct(d, x[:, [0, 2]], x[:, [1, 3]]), model.evaluate(x), atol=1e-12)


def test_deterministic_and_zero_mean_models():
    spec = InputSpec((Marginal.uniform(0, 1), Marginal.gaussian()))
    det = PceModel(spec, [(0, 0), (2, 0)], [1.0, 0.5])
    d = decompose(det, (0,))
    for s in (0.0, 0.3, 1.0):
        assert conditional_mean(d, s) == pytest.approx(det.evaluate([[s, 0.7]])[0], abs=1e-14)
        assert conditional_variance(d, s) == 0.0
        assert not conditional_sobol(d, s).defined
    zero_mean = PceModel(spec, [(1, 1), (0, 2)], [1.0, 0.5])
    d = decompose(zero_mean, (0,))
    assert conditional_mean(d, 0.4) == 0.0


def test_benchmark_structured_values(bench_model):
    d = decompose(bench_model, (0, 1))
    r = conditional_sobol(d, [0.5, 0.5])
    assert r.defined
    assert r.variance == pytest.approx(0.52, abs=1e-12)
    assert r.first_order[2] == pytest.approx(0.0, abs=1e-12)
    assert r.first_order[3] == pytest.approx(9 / 13, abs=1e-10)
    assert r.interactions[(2, 3)] == pytest.approx(4 / 13, abs=1e-10)
    assert r.totals[2] == pytest.approx(4 / 13, abs=1e-10)
    assert r.totals[3] == pytest.approx(1.0, abs=1e-10)
    assert conditional_variance(d, [0.25, 0.25]) == pytest.approx(0.2, abs=1e-12)
    assert conditional_mean(d, [0.25, 0.25]) == pytest.approx(0.5, abs=1e-12)
    corner = conditional_sobol(d, [0.0, 0.0])
    assert not corner.defined and corner.to_dict()["status"] == "undefined"


def test_index_invariants_on_random_points():
    model = joint_random_model(3)
    d = decompose(model, (0, 1))
    s = JOINT.subspec((0, 1)).sample(200, np.random.default_rng(0))
    r = d.sobol_arrays(s)
    total = r["first_order"][2] + r["first_order"][3] + r["interactions"][(2, 3)]
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    for group in ("first_order", "interactions", "totals"):
        for v in r[group].values():
            assert np.all((v >= -1e-12) & (v <= 1 + 1e-12))


def test_degenerate_direction():
    idx = [a for a in enumerate_total_degree(4, 3) if a[3] == 0]
    model = PceModel(JOINT, idx, np.random.default_rng(2).standard_normal(len(idx)))
    d = decompose(model, (0, 1))
    s = JOINT.subspec((0, 1)).sample(20, np.random.default_rng(3))
    r = d.sobol_arrays(s)
    np.testing.assert_array_equal(r["first_order"][3], 0.0)
    np.testing.assert_array_equal(r["totals"][3], 0.0)


def test_moments_match_monte_carlo_over_xi():
    model = joint_random_model(4, 3)
    d = decompose(model, (0, 1))
    rng = np.random.default_rng(9)
    s = np.array([0.3, 0.8])
    xi = rng.standard_normal((200_000, 2))
    y = model.evaluate(np.column_stack([np.broadcast_to(s, (len(xi), 2)), xi]))
    assert abs(y.mean() - conditional_mean(d, s)) <= 4 * y.std() / math.sqrt(len(y))
    assert y.var() == pytest.approx(conditional_variance(d, s), rel=0.02)


def test_law_of_total_variance():
    model = joint_random_model(5, 3)
    d = decompose(model, (0, 1))
    s = JOINT.subspec((0, 1)).sample(100_000, np.random.default_rng(4))
    mean, var = d.mean_and_variance(s)
    v = float(np.sum(model.coefficients[1:] ** 2))
    assert var.mean() + mean.var() == pytest.approx(v, rel=0.01)


def test_sweep_grid_matches_pointwise(bench_model):
    d = decompose(bench_model, (0, 1))
    grid = Grid.uniform(7)
    fields = sweep_grid(d, grid)
    assert set(fields) == {"mean", "variance", "S_3", "S_4", "S_3_4", "ST_3", "ST_4"}
    for f in fields.values():
        assert f.values.shape == (7, 7)
    for (i, j), s in zip(np.ndindex(7, 7), grid.points()):
        r = conditional_sobol(d, s)
        assert fields["variance"].values[i, j] == r.variance
        if r.defined:
            assert fields["S_4"].values[i, j] == r.first_order[3]
            assert fields["S_3_4"].values[i, j] == r.interactions[(2, 3)]
        else:
            assert np.isnan(fields["S_4"].values[i, j])
    ok = fields["S_3"].defined
    assert not ok[0, 0] and not ok[-1, -1] and ok[3, 3]
    total = fields["S_3"].values + fields["S_4"].values + fields["S_3_4"].values
    np.testing.assert_allclose(total[ok], 1.0, atol=1e-12)
    assert np.all(np.isfinite(fields["S_3"].values[ok]))


def test_sweep_grid_single_point_and_errors(bench_model):
    d = decompose(bench_model, (0, 1))
    one = sweep_grid(d, Grid((np.array([0.5]), np.array([0.5]))))
    assert one["S_4"].values.shape == (1, 1)
    assert one["S_4"].values[0, 0] == conditional_sobol(d, [0.5, 0.5]).first_order[3]
    with pytest.raises(ParameterError):
        sweep_grid(d, Grid.uniform(3, dim=1))
    with pytest.raises(DomainError):
        sweep_grid(d, Grid.uniform(3, lower=0.0, upper=2.0))
