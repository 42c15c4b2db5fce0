import math

import numpy as np
import pytest
from scipy.special import roots_hermitenorm

from ksslab.asymptotics import m_kj, v_infinity
from ksslab.hermite import (
    b_coefficient,
    chaos_functional_m1,
    delta_eps_coefficient,
    f_coefficient,
    f_coefficients,
    f_tilde_22,
    hermite_all,
    hermite_eval,
    i2d_lower_bound,
    q2_projection_diagnostic,
    univariate_abs_det_coefficient,
)
from ksslab.seeds import derive_seed, philox
from ksslab.systems import sample_coefficients


# ---------------------------------------------------------------------------
# polynomials


def test_recurrence_values():
    assert hermite_eval(2, 2.0) == 3.0  # H2(x) = x^2 - 1
    assert hermite_eval(3, 1.0) == -2.0  # H3 = x H2 - 2 H1
    assert hermite_eval(0, 5.0) == 1.0
    assert hermite_eval(1, -1.5) == -1.5


def test_hermite_all_consistent():
    x = np.linspace(-3, 3, 11)
    tab = hermite_all(8, x)
    for n in range(9):
        assert np.allclose(tab[n], hermite_eval(n, x), rtol=1e-13)


def test_orthogonality_gauss_hermite():
    # int H_n H_k phi = n! delta_{nk} via 200-node Gauss-Hermite (probabilists')
    x, w = roots_hermitenorm(200)
    w = w / math.sqrt(2 * math.pi)
    for n in range(11):
        hn = hermite_eval(n, x)
        for k in range(11):
            val = float(np.sum(w * hn * hermite_eval(k, x)))
            target = math.factorial(n) if n == k else 0.0
            assert abs(val - target) < 1e-10 * max(1.0, math.factorial(n))


# ---------------------------------------------------------------------------
# b coefficients


def test_b_zero_is_gaussian_normalization():
    for m in (1, 2, 3):
        assert b_coefficient((0,) * m) == pytest.approx((2 * math.pi) ** (-m / 2), rel=1e-14)


def test_b_literal_value():
    target = (1 / math.sqrt(2 * math.pi)) * (-0.5) * (1 / math.sqrt(2 * math.pi))
    assert b_coefficient((2, 0)) == pytest.approx(target, rel=1e-14)


def test_b_odd_vanishes_and_sign_pattern():
    assert b_coefficient((1, 0)) == 0.0
    assert b_coefficient((3,)) == 0.0
    for alpha in [(2,), (4,), (2, 2), (6,), (4, 2)]:
        total = sum(alpha)
        sign = (-1) ** (total // 2)
        assert math.copysign(1, b_coefficient(alpha)) == sign


def test_window_coefficients_converge_to_b():
    for n in (0, 2, 4):
        approx = delta_eps_coefficient(n, 1e-3)
        assert abs(approx - b_coefficient((n,))) < 1e-3
    # tighter at the example order
    assert abs(delta_eps_coefficient(2, 1e-3) - b_coefficient((2,))) < 1e-6


# ---------------------------------------------------------------------------
# f coefficients


def test_f0_m1_is_mean_abs_normal():
    v, se = f_coefficient((0,), 1, 200_000, seed=1)
    assert abs(v - math.sqrt(2 / math.pi)) < 3 * se


def test_f2_m1_value():
    v, se = f_coefficient((2,), 1, 200_000, seed=1)
    assert abs(v - 0.5 * math.sqrt(2 / math.pi)) < 3 * se


def test_f_odd_row_group_vanishes_exactly():
    # antithetic pairing cancels odd total orders identically
    v, se = f_coefficient((1, 0, 0, 0), 2, 50_000, seed=2)
    assert v == 0.0
    v, se = f_coefficient((1, 1, 1, 0), 2, 50_000, seed=2)
    assert v == 0.0


def test_f_symmetry_across_entries():
    betas = [(2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 2, 0), (0, 0, 0, 2)]
    res = f_coefficients(betas, 2, 400_000, seed=3)
    vals = [r[0] for r in res]
    ses = [r[1] for r in res]
    for v, s in zip(vals[1:], ses[1:]):
        assert abs(v - vals[0]) < 3 * math.hypot(s, ses[0])


def test_f_cost_guard():
    with pytest.raises(ValueError):
        f_coefficient((8,), 1)


def test_e_abs_det_chi_factorization():
    for m in (1, 2, 3):
        v, se = f_coefficient((0,) * (m * m), m, 300_000, seed=4)
        target = float(np.prod([m_kj(k, 1) for k in range(1, m + 1)]))
        assert abs(v - target) < 3.5 * se


def test_f_tilde_positive_beyond_five_se():
    for m in (1, 2, 3):
        v, se = f_tilde_22(m, 300_000, seed=5)
        assert v > 5 * se


def test_f_tilde_m1_analytic():
    v, se = f_tilde_22(1, 400_000, seed=6)
    assert abs(v - math.sqrt(2 / math.pi)) < 3 * se
    ve, _ = f_tilde_22(1, 400_000, seed=6, normalization="expansion")
    assert ve == pytest.approx(v / 2)


def test_f_tilde_expansion_matches_f_coefficient():
    ve, se1 = f_tilde_22(2, 400_000, seed=7, normalization="expansion")
    fc, se2 = f_coefficient((2, 0, 0, 0), 2, 400_000, seed=7)
    assert abs(ve - fc) < 3 * math.hypot(se1, se2)


def test_parseval_truncation_below_total_mass():
    # sum over |beta| <= 6 of f^2 beta! <= E det^2 = m! (m = 1)
    total = 0.0
    for n in (0, 2, 4, 6):
        f = univariate_abs_det_coefficient(n // 2)
        total += f * f * math.factorial(n)
    assert total <= 1.0
    assert total > 0.98  # the tail above order 6 is small


def test_univariate_f_table_matches_mc():
    res = f_coefficients([(0,), (2,), (4,), (6,)], 1, 600_000, seed=8)
    for (v, se), n in zip(res, (0, 2, 4, 6)):
        assert abs(v - univariate_abs_det_coefficient(n // 2)) < 3.5 * se


# ---------------------------------------------------------------------------
# Mehler and the chaos structure


def test_mehler_identity_simulated():
    rng = philox(99)
    n = 400_000
    x = rng.standard_normal(n)
    y = 0.7 * x + math.sqrt(1 - 0.49) * rng.standard_normal(n)
    prod = hermite_eval(2, x) * hermite_eval(2, y)
    se = float(np.std(prod) / math.sqrt(n))
    assert abs(float(np.mean(prod)) - 0.98) < 3 * se  # 2 rho^2 at rho = 0.7


def test_chaos_levels_orthogonal():
    # empirical covariance of I_2 and I_4 over simulated systems -> 0
    d, n = 10, 600
    i2 = np.empty(n)
    i4 = np.empty(n)
    for i in range(n):
        c = sample_coefficients(1, d, derive_seed(17, i))[0]
        i2[i] = chaos_functional_m1(c, 2, n_theta=256)
        i4[i] = chaos_functional_m1(c, 4, n_theta=256)
    prod = i2 * i4
    assert abs(float(np.mean(prod))) < 3.5 * float(np.std(prod)) / math.sqrt(n)


def test_q2_projection_normalization():
    # ratio E[I2 Nbar]/E[I2^2] = 1 identifies the true projection scale;
    # the doubled normalization would give 1/2
    diag = q2_projection_diagnostic(12, 600, seed=21)
    se = 3 * (diag["cross_se"] + diag["auto_se"]) / diag["auto"]
    assert abs(diag["ratio"] - 1.0) < max(0.12, se)
    diag2 = q2_projection_diagnostic(12, 600, seed=21, scale=2.0)
    assert abs(diag2["ratio"] - 0.5) < max(0.06, se / 2)


# ---------------------------------------------------------------------------
# the degree-two lower bound


def test_i2d_positive_and_cauchy():
    vals = []
    for d in (100, 1000, 10_000):
        v, se = i2d_lower_bound(d, 1, 200_000, seed=9)
        assert v > 5 * se
        vals.append(v)
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    # m = 1 limit is 1/(2 sqrt(pi)) (exact positive limit of the z-integral)
    assert vals[-1] == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=0.02)


def test_i2d_below_v_infinity():
    for m in (1, 2):
        v, se = i2d_lower_bound(10_000, m, 300_000, seed=10)
        vinf, vinf_err = v_infinity(m)
        assert v <= vinf + 3 * se + vinf_err


def test_i2d_rejects_bad_degree():
    with pytest.raises(ValueError):
        i2d_lower_bound(1, 1)
