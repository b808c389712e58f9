import math

import numpy as np
import pytest

from gddsg import (
    BrooksParams,
    TheoryParams,
    brooks_probability,
    expected_forgetting,
    expected_generalization,
    permutation_variance_study,
)
from gddsg.errors import DomainError

from helpers import forgetting_loop_oracle, generalization_loop_oracle


def _params(ws, n=10, p=20, sigma=0.0):
    return TheoryParams(w_stars=tuple(np.asarray(w, dtype=np.float64) for w in ws), n=n, p=p, sigma=sigma)


def _e(p, i, scale=1.0):
    w = np.zeros(p)
    w[i] = scale
    return w


def test_forgetting_two_equal_tasks_no_noise():
    # T=2, n=10, p=20 (r=1/2), w1 == w2 with unit norm, sigma=0:
    # only the self-decay term survives: r^2 - r = -1/4
    w = _e(20, 0)
    assert expected_forgetting(_params([w, w])) == pytest.approx(-0.25, abs=1e-15)


def test_forgetting_zero_vectors_pure_noise():
    # w* = 0, sigma=1: noise factor p/(p-n-1) = 20/9 times (r - r^2) = 1/4,
    # minus nothing else: 20/9 * 1/4 = 5/9
    z = np.zeros(20)
    got = expected_forgetting(_params([z, z], sigma=1.0))
    assert got == pytest.approx(5.0 / 9.0, abs=1e-15)


def test_generalization_single_noise_task():
    # T=1, w*=0, sigma=1: (p/(p-n-1)) * (1 - r) = (20/9) * (1/2) = 10/9
    z = np.zeros(20)
    got = expected_generalization(_params([z], sigma=1.0))
    assert got == pytest.approx(10.0 / 9.0, abs=1e-15)


def test_generalization_two_equal_tasks_no_noise():
    # T=2, sigma=0, w1 == w2 unit norm: (r^2/2) * 1 = 1/8
    w = _e(20, 0)
    assert expected_generalization(_params([w, w])) == pytest.approx(0.125, abs=1e-15)


def test_forgetting_matches_literal_loop_oracle():
    rng = np.random.default_rng(3)
    for _ in range(60):
        T = int(rng.integers(2, 7))
        n = int(rng.integers(1, 15))
        p = n + 2 + int(rng.integers(0, 20))
        sigma = float(rng.uniform(0.0, 2.0))
        ws = [rng.standard_normal(p) for _ in range(T)]
        params = _params(ws, n=n, p=p, sigma=sigma)
        want = forgetting_loop_oracle(ws, n, p, sigma)
        got = expected_forgetting(params)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_generalization_matches_literal_loop_oracle():
    rng = np.random.default_rng(5)
    for _ in range(60):
        T = int(rng.integers(1, 7))
        n = int(rng.integers(1, 15))
        p = n + 2 + int(rng.integers(0, 20))
        sigma = float(rng.uniform(0.0, 2.0))
        ws = [rng.standard_normal(p) for _ in range(T)]
        params = _params(ws, n=n, p=p, sigma=sigma)
        want = generalization_loop_oracle(ws, n, p, sigma)
        got = expected_generalization(params)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_forgetting_scales_quadratically_in_signal():
    rng = np.random.default_rng(7)
    ws = [rng.standard_normal(20) for _ in range(3)]
    base = expected_forgetting(_params(ws))
    scaled = expected_forgetting(_params([3.0 * w for w in ws]))
    assert scaled == pytest.approx(9.0 * base, rel=1e-12)


def test_identical_tasks_decay_with_repetition():
    w = _e(20, 0)
    # a single clean task is interpolated exactly: no residual error at all
    assert expected_generalization(_params([w])) == pytest.approx(0.0, abs=1e-15)
    # from T=2 on, the early-task residual r^T (T-1)/T decays toward zero
    gens = [expected_generalization(_params([w] * T)) for T in (2, 4, 8)]
    assert all(a > b for a, b in zip(gens, gens[1:]))
    assert all(g > 0 for g in gens)
    assert gens[0] == pytest.approx(0.125)


def test_theory_params_validation():
    with pytest.raises(DomainError):
        _params([np.zeros(11)], n=10, p=11)
    with pytest.raises(ValueError):
        _params([])
    with pytest.raises(ValueError):
        _params([np.zeros(5)], n=0, p=20)
    with pytest.raises(ValueError):
        _params([np.zeros(20), np.zeros(19)])
    with pytest.raises(ValueError):
        _params([np.zeros(20)], sigma=-1.0)
    with pytest.raises(ValueError):
        expected_forgetting(_params([np.zeros(20)]))


def test_brooks_probability_values():
    assert brooks_probability(BrooksParams(num_classes=35, p_sim=0.9)) > 0.99
    # p=1: complete graph is certain, term2 = 1, term1 = 0 for N > 2
    assert brooks_probability(BrooksParams(num_classes=5, p_sim=1.0)) == pytest.approx(0.0)
    # p=0: empty graph, term1 = 0 unless exponent 0, term2 = 0, so 1.0
    assert brooks_probability(BrooksParams(num_classes=5, p_sim=0.0)) == pytest.approx(1.0)
    # N=2, p=1: both terms are 1, raw value is -1 and is NOT clamped
    assert brooks_probability(BrooksParams(num_classes=2, p_sim=1.0)) == pytest.approx(-1.0)


def test_brooks_probability_monotone_in_classes():
    vals = [brooks_probability(BrooksParams(num_classes=nc, p_sim=0.5)) for nc in (3, 5, 10, 20)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.999


def test_brooks_matches_direct_formula_in_safe_range():
    for nc in (3, 4, 6):
        for p in (0.2, 0.5, 0.8):
            direct = 1.0 - p ** (2 * nc) * (1 - p) ** (nc * nc - 2 * nc) - p ** (nc * (nc - 1) / 2)
            got = brooks_probability(BrooksParams(num_classes=nc, p_sim=p))
            assert got == pytest.approx(direct, abs=1e-12)


def test_brooks_params_validation():
    with pytest.raises(ValueError):
        BrooksParams(num_classes=1, p_sim=0.5)
    with pytest.raises(ValueError):
        BrooksParams(num_classes=5, p_sim=1.5)


def test_permutation_study_exhaustive():
    rng = np.random.default_rng(11)
    ws = [rng.standard_normal(12) for _ in range(3)]
    params = _params(ws, n=4, p=12, sigma=0.5)
    study = permutation_variance_study(params)
    assert study.exhaustive
    assert len(study.rows) == 6
    perms = {r.perm for r in study.rows}
    assert perms == {p for p in __import__("itertools").permutations(range(3))}
    # identity row matches direct evaluation
    ident = next(r for r in study.rows if r.perm == (0, 1, 2))
    assert ident.forgetting == pytest.approx(expected_forgetting(params))
    assert ident.generalization == pytest.approx(expected_generalization(params))
    assert study.var_forgetting > 0.0
    assert study.var_generalization > 0.0
    # reversal changes forgetting for generic vectors
    rev = next(r for r in study.rows if r.perm == (2, 1, 0))
    assert rev.forgetting != pytest.approx(ident.forgetting)


def test_permutation_study_identical_tasks_has_zero_variance():
    w = _e(20, 0)
    study = permutation_variance_study(_params([w, w, w]))
    assert study.var_forgetting == pytest.approx(0.0, abs=1e-20)
    assert study.var_generalization == pytest.approx(0.0, abs=1e-20)
    assert study.sum_sq_distances == pytest.approx(0.0)


def test_permutation_study_sum_sq_distances():
    a = _e(20, 0)
    b = _e(20, 1)
    study = permutation_variance_study(_params([a, b]))
    # ordered pairs (0,1) and (1,0) each contribute 2.0
    assert study.sum_sq_distances == pytest.approx(4.0)


def test_permutation_study_single_task():
    study = permutation_variance_study(_params([_e(20, 0)], sigma=1.0))
    assert len(study.rows) == 1
    assert math.isnan(study.rows[0].forgetting)
    assert math.isnan(study.var_forgetting)
    assert study.var_generalization == pytest.approx(0.0)


def test_permutation_study_sampled_path():
    rng = np.random.default_rng(2)
    ws = [rng.standard_normal(10) for _ in range(8)]
    params = _params(ws, n=3, p=10, sigma=0.0)
    with pytest.raises(ValueError):
        permutation_variance_study(params)  # 8 > default exhaustive limit
    study = permutation_variance_study(params, num_samples=25, seed=0)
    assert not study.exhaustive
    assert len(study.rows) == 25
    again = permutation_variance_study(params, num_samples=25, seed=0)
    assert [r.perm for r in again.rows] == [r.perm for r in study.rows]
    assert again.var_forgetting == study.var_forgetting
