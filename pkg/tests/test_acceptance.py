"""Acceptance suite: one test per criterion, each printing a PASS line.

Criteria run at their stated sample sizes and tolerances; the Monte Carlo
runs are shared session fixtures (see conftest).  The full module is the
slowest part of the test suite (minutes, not hours, on two cores).
"""

import math
import time

import numpy as np
import pytest
from scipy.special import roots_hermitenorm

from oracles import resultant_root_count
from ksslab import sturm
from ksslab.asymptotics import m_kj, rho_bar, sigma_bar_sq, v_infinity
from ksslab.engine import ExperimentConfig, run_experiment
from ksslab.hermite import (
    b_coefficient,
    delta_eps_coefficient,
    f_coefficients,
    f_tilde_22,
    hermite_eval,
    i2d_lower_bound,
)
from ksslab.kernel import (
    QuadratureSpec,
    abs_moment_correlated,
    g_functional,
    kac_rice_report,
    scaled_kernel,
    sigma_ratio,
    variance_finite_d,
)
from ksslab.rootcount import (
    certified_disk_count,
    count_univariate,
    eigenvalue_count_naive,
)
from ksslab.seeds import derive_seed
from ksslab.systems import sample_coefficients, sample_system


def _report(criterion: int, passed: bool, detail: str):
    print(f"ACCEPTANCE {criterion:>2}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


# ---------------------------------------------------------------------------


def test_criterion_01_mean_law(mc_m1_estimates, mc_m2_estimates):
    t0 = time.perf_counter()
    details = []
    ok = True
    for d, est in sorted(mc_m1_estimates.items()):
        scaled = est.mean / math.sqrt(d)
        tol = 3 * est.se_mean / math.sqrt(d)
        ok &= abs(scaled - 1.0) <= tol and est.uncertified_fraction == 0.0
        details.append(f"m=1 d={d}: {scaled:.4f}+-{tol:.4f}")
    for d, est in sorted(mc_m2_estimates.items()):
        scaled = est.mean / d
        tol = 3 * est.se_mean / d
        ok &= abs(scaled - 1.0) <= tol and est.uncertified_fraction == 0.0
        details.append(f"m=2 d={d}: {scaled:.4f}+-{tol:.4f}")
    wall = sum(e.wall_time for e in mc_m1_estimates.values()) + sum(
        e.wall_time for e in mc_m2_estimates.values()
    )
    ok &= wall < 1200.0
    _report(1, ok, "; ".join(details) + f"; total count time {wall:.0f}s (< 1200s)")


def test_criterion_02_dual_route_variance(mc_m1_estimates):
    ok = True
    details = []
    for d in (10, 50):
        est = mc_m1_estimates[d]
        mc = est.variance / math.sqrt(d)
        se = est.se_variance / math.sqrt(d)
        kr = variance_finite_d(d, 1, QuadratureSpec(), seed=0)
        gap = abs(mc - kr)
        ok &= gap <= 3 * se
        details.append(f"d={d}: MC {mc:.4f}+-{se:.4f} vs KR {kr:.4f} (gap/SE {gap / se:.2f})")
    _report(2, ok, "; ".join(details))


def test_criterion_03_convergence_to_limit():
    spec = QuadratureSpec(g_closed_form=True)  # deterministic m=1 route
    vinf, vinf_err = v_infinity(1)
    gaps = []
    for d in (100, 1000, 10_000):
        gaps.append(abs(variance_finite_d(d, 1, spec) - vinf))
    monotone = gaps[0] >= gaps[1] >= gaps[2]
    final_rel = gaps[-1] / vinf
    ok = monotone and final_rel < 0.02 and vinf_err / vinf < 0.005
    _report(
        3,
        ok,
        f"gaps {gaps[0]:.2e} >= {gaps[1]:.2e} >= {gaps[2]:.2e}, final rel "
        f"{final_rel:.2e} < 2e-2, v_inf err {vinf_err / vinf:.1e} < 5e-3",
    )


def test_criterion_04_positivity_chain():
    ok = True
    details = []
    for m in (1, 2):
        val, se = i2d_lower_bound(10_000, m, 400_000, seed=44)
        vinf, vinf_err = v_infinity(m)
        ok &= val > 5 * se
        ok &= val <= vinf + 3 * se + vinf_err
        details.append(f"m={m}: i2d {val:.4f} ({val / se:.0f} SE), v_inf {vinf:.4f}")
    _report(4, ok, "; ".join(details))


def test_criterion_05_kernel_limits():
    d = 10**6
    worst = {"a": 0.0, "b": 0.0, "c": 0.0, "s": 0.0, "r": 0.0}
    for z in (0.25, 0.5, 1.0, 2.0, 4.0):
        k = scaled_kernel(z, d)
        e = math.exp(-z * z / 2)
        worst["a"] = max(worst["a"], abs(k.a + z * e))
        worst["b"] = max(worst["b"], abs(k.b - (1 - z * z) * e))
        worst["c"] = max(worst["c"], abs(k.c - e))
        worst["s"] = max(worst["s"], abs(k.sigma_sq - float(sigma_bar_sq(z))))
        worst["r"] = max(worst["r"], abs(k.rho - float(rho_bar(z))))
    ok = (
        worst["a"] < 1e-3
        and worst["b"] < 1e-3
        and worst["c"] < 1e-4
        and worst["s"] < 1e-3
        and worst["r"] < 1e-3
    )
    _report(5, ok, f"max deviations at d=1e6: {', '.join(f'{k}={v:.1e}' for k, v in worst.items())}")


def test_criterion_06_bound_suite():
    alpha, d0 = 0.4, 16
    ds = [17, 20, 25, 32, 50, 100, 300, 1000, 10_000, 1_000_000]
    zs = np.linspace(1e-3, math.sqrt(17) * math.pi / 2, 50)
    ok = True
    for d in ds:
        assert d > d0
        for z in zs:
            k = scaled_kernel(float(z), d)
            e = math.exp(-alpha * z * z)
            psi = z / math.sqrt(d)
            cd2 = math.exp((d - 2) * math.log1p(-2 * math.sin(psi / 2) ** 2))
            ok &= k.c <= k.dd * (1 + 1e-13) <= cd2 * (1 + 1e-12)
            ok &= cd2 <= e * (1 + 1e-12)
            ok &= abs(k.a) <= z * e * (1 + 1e-12)
            ok &= abs(k.b) <= (1 + z * z) * e * (1 + 1e-12)
            ok &= -1e-12 <= 1 - k.sigma_sq <= 4.0 * math.exp(-2 * alpha * z * z)
            ok &= abs(k.rho) <= 16_000.0 * (1 + z * z) ** 2 * math.exp(-2 * alpha * z * z)
    # symmetrization: the one-equation conditional integrand at mirrored angles
    sym_worst = 0.0
    for d in (8, 9, 24, 25):
        rd = math.sqrt(d)
        for z in np.linspace(0.1, rd * math.pi / 2 * 0.98, 9):
            k1 = scaled_kernel(float(z), d)
            k2 = scaled_kernel(rd * math.pi - float(z), d)
            f1 = k1.sigma_sq / math.sqrt(1 - k1.c**2) * abs_moment_correlated(k1.rho)
            f2 = k2.sigma_sq / math.sqrt(1 - k2.c**2) * abs_moment_correlated(k2.rho)
            sym_worst = max(sym_worst, abs(f1 - f2))
    ok &= sym_worst < 1e-8
    _report(6, ok, f"decay bounds on 50x10 grid (alpha=0.4, d0=16); symmetrization {sym_worst:.1e} < 1e-8")


def test_criterion_07_g_identities():
    ok = True
    details = []
    for m in (1, 2, 3):
        tgt00 = float(np.prod([m_kj(k, 1) for k in range(1, m + 1)])) ** 2
        v00, se00 = g_functional(0.0, 0.0, m, n_mc=600_000, seed=m)
        v11, se11 = g_functional(1.0, 1.0, m, n_mc=600_000, seed=m)
        ok &= abs(v00 - tgt00) <= 3 * se00
        ok &= abs(v11 - math.factorial(m)) <= 3 * max(se11, 1e-12)
        details.append(
            f"m={m}: G00 {(v00 - tgt00) / se00:+.2f}SE, "
            f"G11 {(v11 - math.factorial(m)) / max(se11, 1e-12):+.2f}SE"
        )
    _report(7, ok, "; ".join(details))


def test_criterion_08_hermite_suite():
    ok = hermite_eval(2, 2.0) == 3.0 and hermite_eval(3, 1.0) == -2.0
    # orthogonality via 200-node Gauss-Hermite
    x, w = roots_hermitenorm(200)
    w = w / math.sqrt(2 * math.pi)
    worst = 0.0
    for n in range(11):
        hn = hermite_eval(n, x)
        for k in range(n, 11):
            val = float(np.sum(w * hn * hermite_eval(k, x)))
            target = math.factorial(n) if n == k else 0.0
            worst = max(worst, abs(val - target) / max(1.0, math.factorial(n)))
    ok &= worst < 1e-10
    # Mehler at rho = 0.7
    rng = np.random.default_rng(808)
    xg = rng.standard_normal(400_000)
    yg = 0.7 * xg + math.sqrt(0.51) * rng.standard_normal(400_000)
    prod = (xg * xg - 1) * (yg * yg - 1)
    mehler_ok = abs(float(np.mean(prod)) - 0.98) < 3 * float(np.std(prod)) / math.sqrt(prod.size)
    ok &= mehler_ok
    # window-coefficient convergence
    ok &= abs(delta_eps_coefficient(2, 1e-3) - b_coefficient((2,))) < 1e-3
    # f symmetry and odd-index vanishing
    res = f_coefficients([(2, 0, 0, 0), (0, 0, 0, 2), (1, 0, 0, 0)], 2, 400_000, seed=88)
    (v1, s1), (v2, s2), (vodd, _) = res
    ok &= abs(v1 - v2) < 3 * math.hypot(s1, s2)
    ok &= vodd == 0.0
    # positivity of the H2 coefficient
    pos = []
    for m in (1, 2, 3):
        v, se = f_tilde_22(m, 400_000, seed=m)
        pos.append(v / se)
        ok &= v > 5 * se
    _report(
        8,
        ok,
        f"orthogonality {worst:.1e} < 1e-10; Mehler ok={mehler_ok}; "
        f"f~22 positivity {min(pos):.0f} SE (>5)",
    )


def test_criterion_09_root_count_integrity(mc_m1_estimates, mc_m2_estimates, workers):
    # univariate: naive eigenvalue oracle vs exact chain at d=20, 10^3 draws
    naive_agree = 0
    disk_resolved = True
    for i in range(1000):
        c = sample_coefficients(1, 20, derive_seed(0xC9, i))[0]
        exact = sturm.count_real_roots(c)
        if eigenvalue_count_naive(c, band=1e-8) == exact:
            naive_agree += 1
        disk = certified_disk_count(np.asarray(c))
        if disk is not None and disk != exact:
            disk_resolved = False
        res = count_univariate(c, method="auto")
        disk_resolved &= res.count == exact and res.certified
        disk_resolved &= res.count <= 20
    ok = naive_agree >= 999 and disk_resolved
    # bivariate: subdivision vs resultant elimination at d=2, 200 draws
    m2_agree = 0
    for i in range(200):
        s = sample_system(2, 2, derive_seed(0xD2, i))
        from ksslab.rootcount import count_system

        a = count_system(s)
        if a.certified and a.count == resultant_root_count(s) and a.count <= 4:
            m2_agree += 1
    ok &= m2_agree == 200
    # zero uncertified counts in the accepted Monte Carlo runs
    unc = max(
        [e.uncertified_fraction for e in mc_m1_estimates.values()]
        + [e.uncertified_fraction for e in mc_m2_estimates.values()]
    )
    ok &= unc == 0.0
    _report(
        9,
        ok,
        f"naive-oracle agreement {naive_agree}/1000 (>=999), exact-path agreement 100%, "
        f"resultant agreement {m2_agree}/200, uncertified fraction {unc}",
    )


def test_criterion_10_determinism(tmp_path):
    payloads = []
    for w in (1, 4, 8):
        cfg = ExperimentConfig(
            m=1, d_list=(8,), n_samples=120, master_seed=31,
            workers=w, out_dir=str(tmp_path / f"w{w}"),
        )
        run = run_experiment(cfg)
        payloads.append(open(run.json_path, "rb").read())
    ok = payloads[0] == payloads[1] == payloads[2]
    _report(10, ok, "aggregate JSON byte-identical across workers {1, 4, 8}")
