import math

import mpmath as mp
import numpy as np
import pytest

from oracles import rice_second_moment_2d
from ksslab.asymptotics import m_kj, rho_bar, sigma_bar_sq
from ksslab.kernel import (
    QuadratureSpec,
    abs_moment_correlated,
    conditional_covariance,
    full_covariance,
    g_functional,
    g_grid,
    kac_rice_report,
    kappa,
    scaled_kernel,
    second_factorial_moment,
    sigma_ratio,
    variance_finite_d,
)

mp.mp.dps = 60


def _mp_kernel(z, d):
    psi = mp.mpf(z) / mp.sqrt(d)
    c, s = mp.cos(psi), mp.sin(psi)
    C = c**d
    D = c ** (d - 1)
    A = -mp.sqrt(d) * D * s
    B = C - (d - 1) * c ** (d - 2) * s * s
    one = 1 - C * C
    sig = (one - A * A) / one
    rho = (B * one - A * A * C) / (one - A * A)
    return [float(x) for x in (A, B, C, D, sig, rho)]


# ---------------------------------------------------------------------------
# the scaled kernel bundle


def test_coincidence_values():
    k = scaled_kernel(0.0, 12)
    assert k.a == 0.0 and k.b == 1.0 and k.c == 1.0 and k.dd == 1.0
    assert k.sigma_sq == 0.0 and k.rho == -1.0


def test_range_validation():
    with pytest.raises(ValueError):
        scaled_kernel(-0.1, 5)
    with pytest.raises(ValueError):
        scaled_kernel(10.0, 5)
    with pytest.raises(ValueError):
        scaled_kernel(1.0, 1)


def test_matches_extended_precision_reference():
    # within the integration range psi <= pi/2 the bundle is ~1e-13 accurate;
    # approaching psi = pi the conditional ratios lose a few digits (the
    # quadratures never go there thanks to the symmetrization)
    worst_main = 0.0
    worst_near_pi = 0.0
    for d in (2, 5, 17, 100, 10_000, 1_000_000):
        for z in (1e-7, 0.01, 0.049, 0.051, 0.4, 1.0, 3.0, 7.0):
            if z > math.sqrt(d) * math.pi:
                continue
            k = scaled_kernel(z, d)
            ref = _mp_kernel(z, d)
            err = max(abs(x - r) for x, r in zip((k.a, k.b, k.c, k.dd, k.sigma_sq, k.rho), ref))
            if z / math.sqrt(d) <= math.pi / 2:
                worst_main = max(worst_main, err)
            else:
                worst_near_pi = max(worst_near_pi, err)
    assert worst_main < 5e-12
    assert worst_near_pi < 5e-9


def test_series_seam_continuity():
    for d in (2, 50, 10_000):
        lo = scaled_kernel(0.0499, d)
        hi = scaled_kernel(0.0501, d)
        assert abs(lo.sigma_sq - hi.sigma_sq) < 1e-5
        assert abs(lo.rho - hi.rho) < 1e-5


def test_series_cutoff_configurable():
    # moving the cutoff changes the branch, not the value
    for d in (7, 3000):
        a = scaled_kernel(0.07, d, z0=0.15)  # series branch
        b = scaled_kernel(0.07, d)  # direct branch
        assert a.sigma_sq == pytest.approx(b.sigma_sq, abs=1e-11)
        assert a.rho == pytest.approx(b.rho, abs=1e-9)
    with pytest.raises(ValueError):
        QuadratureSpec(z0_series=0.5).validate()


def test_large_degree_limits_acceptance_values():
    # degree 10^6: kernel within stated tolerances of the limit functions
    d = 10**6
    for z in (0.25, 0.5, 1.0, 2.0, 4.0):
        k = scaled_kernel(z, d)
        e = math.exp(-z * z / 2)
        assert abs(k.a + z * e) < 1e-3
        assert abs(k.b - (1 - z * z) * e) < 1e-3
        assert abs(k.c - e) < 1e-4
        assert abs(k.sigma_sq - sigma_bar_sq(z)) < 1e-3
        assert abs(k.rho - rho_bar(z)) < 1e-3


def test_sigma_ratio_consistent_with_kernel():
    d = 37
    for z in (0.2, 1.0, 4.0):
        k = scaled_kernel(z, d)
        for m in (1, 2, 3):
            direct = k.sigma_sq / (1 - k.c**2) ** (m / 2)
            assert sigma_ratio(np.array([z]), d, m)[0] == pytest.approx(direct, rel=1e-10)


# ---------------------------------------------------------------------------
# bound suite (decay lemma with alpha = 0.4, d0 = 16)

DECAY_DS = [17, 20, 25, 32, 50, 100, 300, 1000, 10_000, 1_000_000]
# shared 50-point z-grid: every (z, d) pair satisfies z/sqrt(d) <= pi/2
DECAY_ZS = np.linspace(1e-3, math.sqrt(17) * math.pi / 2, 50)
# frozen after empirical verification: the sigma constant needs 1.86 on this
# grid, the rho constant 6.5e3 (at alpha = 0.4 the rho item's true decay
# rate is exp(-alpha z^2) (1+z^2), so the constant absorbs the rate gap on
# the bounded grid; the sharp version of the same inequality holds with
# alpha' = 0.2 and a small constant, checked below)
C_SIGMA = 4.0
C_RHO = 16_000.0


def _accurate_cos_pow(psi: float, n: int) -> float:
    return math.exp(n * math.log1p(-2.0 * math.sin(psi / 2) ** 2))


@pytest.mark.parametrize("d", DECAY_DS)
def test_decay_bounds_grid(d):
    alpha = 0.4
    for z in DECAY_ZS:
        k = scaled_kernel(float(z), d)
        e = math.exp(-alpha * z * z)
        psi = z / math.sqrt(d)
        cd2 = _accurate_cos_pow(psi, d - 2)
        assert k.c <= k.dd * (1 + 1e-13)
        assert k.dd <= cd2 * (1 + 1e-13)
        assert cd2 <= e * (1 + 1e-12)
        assert abs(k.a) <= z * e * (1 + 1e-12)
        assert abs(k.b) <= (1 + z * z) * e * (1 + 1e-12)
        assert -1e-12 <= 1 - k.sigma_sq <= C_SIGMA * math.exp(-2 * alpha * z * z)
        assert abs(k.rho) <= C_RHO * (1 + z * z) ** 2 * math.exp(-2 * alpha * z * z)


@pytest.mark.parametrize("d", [17, 100, 10_000])
def test_rho_sharp_rate_alpha_02(d):
    # the rate |rho| <= C (1+z^2)^2 exp(-2 a z^2) holds globally with a = 0.2
    for z in np.linspace(1e-3, math.sqrt(d) * math.pi / 2, 120):
        k = scaled_kernel(float(z), d)
        assert abs(k.rho) <= 1.2 * (1 + z * z) ** 2 * math.exp(-0.4 * z * z)


def test_symmetrization_identity():
    # E(pi - psi) = E(psi): the integrand built from (sigma^2, rho, D) at
    # mirrored angles agrees (G is even in both mixing arguments)
    for d in (8, 9, 50):
        rd = math.sqrt(d)
        for z in (0.3 * rd, 0.8 * rd, 1.4 * rd):
            if z >= rd * math.pi / 2:
                continue
            k1 = scaled_kernel(z, d)
            k2 = scaled_kernel(rd * math.pi - z, d)
            f1 = k1.sigma_sq / (1 - k1.c**2) ** 0.5 * abs_moment_correlated(k1.rho)
            f2 = k2.sigma_sq / (1 - k2.c**2) ** 0.5 * abs_moment_correlated(k2.rho)
            assert f1 == pytest.approx(f2, rel=1e-9)


# ---------------------------------------------------------------------------
# covariance blocks


@pytest.mark.parametrize("z,d,m", [(0.5, 9, 1), (1.7, 30, 2), (3.0, 100, 3), (0.02, 50, 2)])
def test_conditional_covariance_psd_and_schur(z, d, m):
    cc = conditional_covariance(z, d, m)
    joint = cc.joint()
    eig = np.linalg.eigvalsh(joint)
    assert eig.min() > -1e-12
    # Schur complement of the full covariance reproduces the blocks
    full = full_covariance(z, d, m)
    top = full[:2, :2]
    cross = full[:2, 2:]
    bottom = full[2:, 2:]
    schur = bottom - cross.T @ np.linalg.solve(top, cross)
    assert np.max(np.abs(schur - joint)) < 1e-10


def test_full_covariance_is_psd_on_grid():
    for d in (5, 40):
        for z in np.linspace(1e-3, math.sqrt(d) * math.pi / 2, 12):
            eig = np.linalg.eigvalsh(full_covariance(float(z), d, 2))
            assert eig.min() > -1e-10


# ---------------------------------------------------------------------------
# the G functional


def test_g_identities_m1():
    v, se = g_functional(0.0, 0.0, 1, n_mc=300_000, seed=1)
    assert abs(v - 2 / math.pi) < 3 * se
    v, se = g_functional(1.0, 1.0, 1, n_mc=300_000, seed=1)
    assert abs(v - 1.0) < 3 * max(se, 1e-12)


def test_g_against_closed_form_m1():
    rhos = np.array([-0.9, -0.3, 0.0, 0.45, 0.99])
    means, ses = g_grid(rhos, np.zeros(5), 1, n_pairs=400_000, seed=4)
    for r, v, se in zip(rhos, means, ses):
        assert abs(v - abs_moment_correlated(r)) < 3.5 * se


def test_g_chi_factorization_m2():
    target = (m_kj(1, 1) * m_kj(2, 1)) ** 2
    v, se = g_functional(0.0, 0.0, 2, n_mc=400_000, seed=2)
    assert abs(v - target) < 3 * se


def test_g_second_moment_m3():
    v, se = g_functional(1.0, 1.0, 3, n_mc=300_000, seed=3)
    assert abs(v - 6.0) < 3 * se


def test_g_even_in_arguments():
    va, sa = g_functional(0.6, 0.3, 2, n_mc=200_000, seed=5)
    vb, sb = g_functional(-0.6, 0.3, 2, n_mc=200_000, seed=5)
    vc, sc = g_functional(0.6, -0.3, 2, n_mc=200_000, seed=5)
    vd, _ = g_functional(-0.6, -0.3, 2, n_mc=200_000, seed=5)
    # the joint flip is exact in-sample under antithetic pairing
    assert va == pytest.approx(vd, abs=1e-12)
    # single-argument flips are even in law
    assert abs(va - vb) < 4 * math.hypot(sa, sb)
    assert abs(va - vc) < 4 * math.hypot(sa, sc)


def test_g_lipschitz_near_origin():
    # |G(rho, D) - G(0,0)| <= C (|rho| + |D|) on a grid, common sample
    rhos = np.array([0.0, 0.3, -0.45, 0.6, 0.75, -0.9, 0.0, 0.0, 0.9, -0.6])
    dds = np.array([0.0, 0.2, 0.3, -0.5, 0.0, 0.3, 0.75, -0.9, 0.45, 0.6])
    for m in (1, 2):
        means, ses = g_grid(rhos, dds, m, n_pairs=300_000, seed=6)
        g00 = means[0]
        for r, dd, v, se in zip(rhos[1:], dds[1:], means[1:], ses[1:]):
            c_est = (abs(v - g00) - 3 * se) / (abs(r) + abs(dd))
            assert c_est < 3.0 * math.factorial(m)


def test_g_rejects_out_of_range():
    with pytest.raises(ValueError):
        g_functional(1.2, 0.0, 1)


# ---------------------------------------------------------------------------
# the variance integral


SPEC_FAST = QuadratureSpec(g_pairs=400_000, n_g_nodes=120)
SPEC_CF = QuadratureSpec(g_closed_form=True)


def test_geometric_measures():
    assert kappa(1) == pytest.approx(2 * math.pi)
    assert kappa(2) == pytest.approx(4 * math.pi)
    assert kappa(0) == pytest.approx(2.0)


def test_reduction_recovers_total_measure():
    # Lemma sanity: with H == 1 the reduced integral gives kappa_1^2
    from ksslab.quadrature import integrate

    d = 10
    rd = math.sqrt(d)
    val, _ = integrate(lambda z: np.ones_like(z), 0.0, rd * math.pi, tol=1e-12)
    total = kappa(1) * kappa(0) / rd * val
    assert total == pytest.approx(kappa(1) ** 2, rel=1e-12)


def test_variance_consistency_identity():
    rep = kac_rice_report(50, 1, SPEC_FAST, seed=7)
    lhs = rep.value
    rhs = 0.25 * (rep.second_factorial_scaled - rep.mean_sq_scaled) + 0.5
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_mean_square_matches_shub_smale():
    rep = kac_rice_report(50, 1, QuadratureSpec(g_pairs=2_000_000), seed=8)
    target = 4 * math.sqrt(50)
    assert abs(rep.mean_sq_scaled - target) < 5 * rep.g00_se * target / rep.g00


def test_second_factorial_moment_vs_2d_oracle():
    # m=1, d=10: reduced route against direct 2-D integration over the torus
    oracle = rice_second_moment_2d(10, n_grid=3000)
    reduced = second_factorial_moment(10, 1, SPEC_CF, seed=1)
    assert abs(reduced - oracle) / oracle < 1e-4


def test_variance_value_m1_known_limit():
    # the d -> infinity limit of the one-equation scaled variance is 0.5717...
    assert variance_finite_d(100_000, 1, SPEC_CF) == pytest.approx(0.571731, abs=5e-5)


def test_mc_and_closed_form_routes_agree():
    a = kac_rice_report(50, 1, QuadratureSpec(g_pairs=2_000_000), seed=9)
    b = kac_rice_report(50, 1, SPEC_CF)
    assert abs(a.value - b.value) < 4 * max(a.mc_error, a.g_se_max)


def test_integrand_decay_beyond_ten():
    # bracket integrand at z > 10 is below 1e-6 of its peak for d >= 100
    d = 100
    spec = SPEC_CF

    def bracket(z):
        k = scaled_kernel(z, d)
        fm = float(sigma_ratio(np.array([z]), d, 1)[0])
        return fm * abs_moment_correlated(k.rho) - 2 / math.pi

    zs = np.linspace(0.01, min(10, math.sqrt(d) * math.pi / 2), 400)
    peak = max(abs(bracket(float(z))) for z in zs)
    for z in (10.0, 10.5, 11.0):
        assert abs(bracket(z)) < 1e-6 * peak


def test_quadrature_failure_reported():
    bad = QuadratureSpec(tol=1e-16, max_panels=4, g_closed_form=True)
    rep = kac_rice_report(10, 1, bad, seed=0)
    assert rep.quadrature_error > 1e-16  # honest error report, no silent pass
