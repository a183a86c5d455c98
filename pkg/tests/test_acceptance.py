"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they are
also repeated in the terminal summary of any pytest run.
"""

import math
import time
from math import comb

import numpy as np
from numpy.polynomial import hermite_e, legendre
from scipy.special import gamma as gamma_fn
from scipy.special import roots_genlaguerre

from condpce.benchmark import BenchmarkConfig, error_field, run_benchmark
from condpce.cli import main
from condpce.conditional import conditional_mean, conditional_sobol, conditional_variance, decompose
from condpce.multiindex import enumerate_total_degree
from condpce.orthopoly import HERMITE, LEGENDRE, FamilyKind, PolynomialFamily, eval_orthonormal_sequence
from condpce.pce_core import InputSpec, Marginal, basis_matrix, build_design_matrix, fit_ols
from condpce.sobol_global import sobol_indices
from condpce.sparse_omp import OmpConfig, fit_omp

from conftest import pick_freeze_oracle, random_model

SEEDS = range(5)


def test_criterion_01_orthonormality(acceptance):
    t0 = time.perf_counter()
    families = [HERMITE, LEGENDRE] + [PolynomialFamily.laguerre(a) for a in (0.0, 0.5, 2.3, -0.4)]
    worst = 0.0
    for fam in families:
        if fam.kind is FamilyKind.HERMITE:
            x, w = hermite_e.hermegauss(64)
            w = w / math.sqrt(2 * math.pi)
        elif fam.kind is FamilyKind.LEGENDRE:
            x, w = legendre.leggauss(64)
            w = w / 2
        else:
            x, w = roots_genlaguerre(64, fam.shape_param)
            w = w / gamma_fn(fam.shape_param + 1)
        phi = eval_orthonormal_sequence(fam, 10, x)
        worst = max(worst, float(np.abs(phi.T @ (w[:, None] * phi) - np.eye(11)).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    acceptance(1, "Gauss-quadrature orthonormality, i,j <= 10", ok, f"max |<phi_i,phi_j> - delta_ij| = {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_truncation_cardinality(acceptance):
    t0 = time.perf_counter()
    bad = [(m, p) for m in range(1, 7) for p in range(11) if len(enumerate_total_degree(m, p)) != comb(m + p, p)]
    ops = (len(enumerate_total_degree(4, 8)), len(enumerate_total_degree(2, 30)))
    elapsed = time.perf_counter() - t0
    ok = not bad and ops == (495, 496) and elapsed < 1.0
    acceptance(2, "truncation set cardinality", ok, f"mismatches={bad}, (4,8)->{ops[0]}, (2,30)->{ops[1]}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_exact_recovery(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    model = random_model(rng, 3, 4)
    x = model.input_spec.sample(400, rng)
    a = build_design_matrix(model.input_spec, enumerate_total_degree(3, 4), x)
    ols_err = float(np.abs(fit_ols(a, model.evaluate(x)) - model.coefficients).max())

    support, values = [4, 19, 31], np.array([2.0, -1.0, 0.5])
    a = rng.standard_normal((200, 40))
    res = fit_omp(a, a[:, support] @ values, OmpConfig(10, 1e-10))
    omp_support_ok = sorted(res.active_set) == support
    omp_err = max(abs(res.coefficients.get(j, np.inf) - v) for j, v in zip(support, values))

    monotone = 0
    for _ in range(100):
        n, p = int(rng.integers(10, 80)), int(rng.integers(2, 50))
        inst = fit_omp(rng.standard_normal((n, p)), rng.standard_normal(n), OmpConfig(p, 1e-12))
        monotone += bool(np.all(np.diff(inst.residual_history) <= 0.0))
    elapsed = time.perf_counter() - t0
    ok = ols_err <= 1e-8 and omp_support_ok and omp_err <= 1e-8 and monotone == 100 and elapsed < 10
    acceptance(3, "exact recovery (OLS, OMP) and monotone OMP residuals", ok,
               f"OLS err {ols_err:.1e}, OMP support {'ok' if omp_support_ok else 'WRONG'} err {omp_err:.1e}, "
               f"monotone {monotone}/100, {elapsed:.1f}s")
    assert ok


def test_criterion_04_global_sobol_oracle(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(44)
    worst = 0.0
    for k in range(20):
        dim, degree = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        model = random_model(rng, dim, degree)
        rep = sobol_indices(model, max_order=dim)
        est = pick_freeze_oracle(model, n=1_000_000, seed=k, max_order=dim)
        for i in range(dim):
            worst = max(worst, abs(est["first_order"][i] - rep.first_order[i]), abs(est["totals"][i] - rep.totals[i]))
        for u, v in rep.interactions.items():
            worst = max(worst, abs(est["interactions"][u] - v))
    elapsed = time.perf_counter() - t0
    ok = worst <= 5e-3 and elapsed < 120
    acceptance(4, "coefficient Sobol' indices vs pick-freeze MC (n=1e6)", ok, f"max abs diff {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_05_reconstruction_identity(acceptance):
    spec = InputSpec((Marginal.uniform(0, 1), Marginal.gamma(2.0, 1.0), Marginal.gaussian(), Marginal.uniform(-1, 1)))
    rng = np.random.default_rng(5)
    worst = 0.0
    for cond in [(0, 1), (0,), (1, 3), (2,)]:
        model = random_model(rng, 4, 4, spec)
        d = decompose(model, cond)
        x = spec.sample(100, rng)
        c = d.coeff_fields(x[:, list(cond)])
        psi_l = basis_matrix(spec.subspec(d.spec.stoch_dims), d.stoch_indices, x[:, list(d.spec.stoch_dims)])
        worst = max(worst, float(np.abs(np.sum(c * psi_l, axis=1) - model.evaluate(x)).max()))
    ok = worst <= 1e-12
    acceptance(5, "conditional reconstruction identity", ok, f"max |sum c_L Psi_L - M| = {worst:.2e}")
    assert ok


def test_criterion_06_conditional_moments(acceptance):
    spec = InputSpec((Marginal.uniform(0, 1), Marginal.uniform(0, 1), Marginal.gaussian(), Marginal.uniform(-1, 1)))
    rng = np.random.default_rng(6)
    model = random_model(rng, 4, 3, spec)
    d = decompose(model, (0, 1))
    n = 1_000_000
    mean_z, var_rel = 0.0, 0.0
    for s in rng.uniform(0, 1, (5, 2)):
        xi = spec.subspec((2, 3)).sample(n, rng)
        y = model.evaluate(np.column_stack([np.broadcast_to(s, (n, 2)), xi]))
        mean_z = max(mean_z, abs(y.mean() - conditional_mean(d, s)) / (y.std() / math.sqrt(n)))
        var_rel = max(var_rel, abs(y.var() - conditional_variance(d, s)) / conditional_variance(d, s))
    ok = mean_z <= 3.0 and var_rel <= 0.01
    acceptance(6, "conditional moments vs 1e6-draw MC", ok, f"mean deviation {mean_z:.2f} sigma, variance rel err {var_rel:.2e}")
    assert ok


def test_criterion_07_closed_form_spot_checks(acceptance, bench_model):
    d = decompose(bench_model, (0, 1))
    s2 = conditional_sobol(d, [0.5, 0.5]).first_order[3]
    s1 = conditional_sobol(d, [0.25, 0.25]).first_order[2]
    e2, e1 = abs(s2 - 9 / 13), abs(s1 - 0.8)
    ok = e2 <= 1e-10 and e1 <= 1e-10
    acceptance(7, "closed-form conditional indices", ok, f"|S2(0.5,0.5) - 9/13| = {e2:.1e}, |S1(0.25,0.25) - 0.8| = {e1:.1e}")
    assert ok


def test_criterion_08_benchmark_noise_free(acceptance):
    t0 = time.perf_counter()
    cfg = BenchmarkConfig(noise_enabled=False, joint_degree=8, pointwise_degree=8, grid_n=35, n_samples=500)
    res = run_benchmark(cfg)
    truth = res.truth.field("S12")
    _, joint = error_field(res.fields["joint"]["S12"], truth)
    _, pw = error_field(res.fields["pointwise_pce"]["S12"], truth)
    ok_pts = res.truth.defined
    total = sum(res.fields["joint"][q].values for q in ("S1", "S2", "S12"))
    completeness = float(np.abs(total[ok_pts] - 1.0).max())
    elapsed = time.perf_counter() - t0
    ok = joint["max"] <= 5e-2 and joint["mean"] <= 1e-2 and pw["max"] <= 1e-4 and completeness <= 1e-12 and elapsed < 300
    acceptance(8, "noise-free benchmark", ok,
               f"joint max {joint['max']:.2e} mean {joint['mean']:.2e}, point-wise PCE max {pw['max']:.2e}, "
               f"completeness {completeness:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_09_benchmark_noisy(acceptance):
    t0 = time.perf_counter()
    mc_peaks, joint_peaks, orderings = [], [], []
    for seed in SEEDS:
        res = run_benchmark(BenchmarkConfig(seed=seed))
        sm = {m: res.summary[m]["smoothness"] for m in res.summary}
        mc_peaks.append(res.summary["mc"]["max_err"])
        joint_peaks.append(res.summary["joint"]["max_err"])
        orderings.append(sm["joint"] < sm["pointwise_pce"] < sm["mc"])
        print(f"  seed {seed}: peaks mc={mc_peaks[-1]:.3f} pw={res.summary['pointwise_pce']['max_err']:.3f} "
              f"joint={joint_peaks[-1]:.4f}; smoothness joint={sm['joint']:.2f} pw={sm['pointwise_pce']:.2f} "
              f"mc={sm['mc']:.1f}")
    mc, jt = float(np.mean(mc_peaks)), float(np.mean(joint_peaks))
    elapsed = time.perf_counter() - t0
    ok = 3e-2 <= mc <= 3e-1 and 5e-3 <= jt <= 5e-2 and all(orderings) and elapsed < 600
    acceptance(9, "noisy benchmark (5 seeds)", ok,
               f"mean MC peak {mc:.3f}, mean joint peak {jt:.4f}, ordering held on {sum(orderings)}/5 seeds, "
               f"{elapsed:.0f}s")
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path, capsys):
    dirs = {}
    for name, threads in (("run1", 1), ("run2", 1), ("threads8", 8)):
        out = tmp_path / name
        assert main(["benchmark", "--seed", "11", "--threads", str(threads), "-o", str(out)]) == 0
        dirs[name] = out
    capsys.readouterr()
    files = sorted(p.name for p in dirs["run1"].glob("*.csv"))
    diffs = [
        f"{other}/{f}"
        for other in ("run2", "threads8")
        for f in files
        if (dirs[other] / f).read_bytes() != (dirs["run1"] / f).read_bytes()
    ]
    ok = len(files) == 19 and not diffs
    acceptance(10, "byte-identical field CSVs across runs and thread counts", ok,
               f"{len(files)} CSVs compared, differing: {diffs or 'none'}")
    assert ok
