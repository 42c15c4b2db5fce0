"""Hermite polynomials, chaos coefficients, and the degree-two variance bound.

Probabilists' Hermite polynomials H_n (recurrence H_{n+1} = x H_n - n H_{n-1})
underlie the orthogonal expansion of the normalized root count.  The
expansion needs two coefficient families: b (the Gaussian-delta
coefficients, closed form) and f (Hermite coefficients of the absolute
determinant of a standard Gaussian matrix, Monte Carlo).  Only the
degree-two projection is required quantitatively: its variance is a lower
bound for the limit variance and is strictly positive, which is what makes
the limit variance positive.

Normalization note: the expansion coefficient of H_2 in one matrix entry is
f~ = (1/2) (1/m^2) (E|det W| ||W||_F^2 - m^2 E|det W|); the same quantity
without the 1/2 (the raw moment combination) is also exposed because both
appear in the source material.  The degree-two bound uses the expansion
normalization; the projection diagnostic (see q2_projection_diagnostic)
confirms that choice empirically.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .kernel import kappa
from .quadrature import integrate
from .seeds import philox

__all__ = [
    "hermite_eval",
    "hermite_all",
    "b_coefficient",
    "f_coefficient",
    "f_coefficients",
    "f_tilde_22",
    "i2d_lower_bound",
    "delta_eps_coefficient",
    "q2_projection_diagnostic",
    "univariate_abs_det_coefficient",
]


def hermite_eval(n: int, x):
    """H_n(x) by the three-term recurrence (probabilists' normalization)."""
    if n < 0:
        raise ValueError("n >= 0 required")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, n):
        h, h_prev = x * h - k * h_prev, h
    return h if h.ndim else float(h)


def hermite_all(nmax: int, x: np.ndarray) -> np.ndarray:
    """H_0..H_nmax stacked along the first axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for k in range(1, nmax):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


def b_coefficient(alpha) -> float:
    """Expansion coefficient of the Gaussian point mass at the origin.

    b_alpha = prod_j (2 pi)^(-1/2) (-1/2)^(alpha_j/2) / (alpha_j/2)! for even
    multi-indices, zero otherwise; b_0 = (2 pi)^(-m/2).
    """
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError("negative index")
    if any(a % 2 for a in alpha):
        return 0.0
    out = 1.0
    for a in alpha:
        j = a // 2
        out *= (-0.5) ** j / (math.sqrt(2 * math.pi) * math.factorial(j))
    return out


def delta_eps_coefficient(n: int, eps: float, tol: float = 1e-12) -> float:
    """Hermite coefficient of the width-eps window (1/2eps) 1{|y| < eps}.

    Quadrature oracle for the delta-coefficient limit: tends to the
    b-coefficient of the corresponding even order as eps -> 0.
    """

    def integrand(y):
        return hermite_eval(n, y) * np.exp(-y * y / 2) / math.sqrt(2 * math.pi)

    val, _ = integrate(integrand, -eps, eps, tol=tol * eps)
    return val / (2 * eps * math.factorial(n))


# ---------------------------------------------------------------------------
# f coefficients (absolute determinant expansion), Monte Carlo


def _sample_matrices(m: int, n_mc: int, seed: int) -> np.ndarray:
    return philox(seed, 0xF, m).standard_normal((n_mc, m, m))


def f_coefficients(
    betas: list, m: int, n_mc: int = 500_000, seed: int = 0
) -> list[tuple[float, float]]:
    """Hermite coefficients f_beta of |det W| for several multi-indices.

    One common matrix sample drives every beta (so symmetry relations hold
    exactly in-sample) with antithetic pairs (W, -W); for odd |beta| the
    pair average vanishes identically.  beta may be given flat (length m^2)
    or as an (m, m) array of entry orders; f_beta includes the 1/beta!
    normalization.  Returns (estimate, standard error) per beta.
    """
    if n_mc < 2:
        raise ValueError("n_mc >= 2 required")
    w = _sample_matrices(m, n_mc, seed)
    adet = _abs_det_small(w)
    nmax = max(int(np.max(np.asarray(b).ravel())) for b in betas)
    htab = hermite_all(nmax, w)  # (nmax+1, n, m, m)
    out = []
    for beta in betas:
        bmat = np.asarray(beta, dtype=int).reshape(m, m)
        if np.any(bmat < 0):
            raise ValueError("negative index")
        order = int(bmat.sum())
        hb = np.ones(n_mc)
        for i in range(m):
            for j in range(m):
                if bmat[i, j]:
                    hb = hb * htab[bmat[i, j], :, i, j]
        sign = (-1.0) ** order
        pair = 0.5 * adet * (hb + sign * hb)  # antithetic (W, -W)
        fact = 1.0
        for v in bmat.ravel():
            fact *= math.factorial(int(v))
        vals = pair / fact
        out.append((float(np.mean(vals)), float(np.std(vals) / math.sqrt(n_mc))))
    return out


def f_coefficient(beta, m: int, n_mc: int = 500_000, seed: int = 0) -> tuple[float, float]:
    """Single Hermite coefficient of |det W|; see f_coefficients."""
    if int(np.sum(np.asarray(beta))) > 6:
        raise ValueError("|beta| <= 6 (cost guard)")
    return f_coefficients([beta], m, n_mc, seed)[0]


def _abs_det_small(w: np.ndarray) -> np.ndarray:
    m = w.shape[-1]
    if m == 1:
        return np.abs(w[:, 0, 0])
    if m == 2:
        return np.abs(w[:, 0, 0] * w[:, 1, 1] - w[:, 0, 1] * w[:, 1, 0])
    return np.abs(np.linalg.det(w))


def f_tilde_22(
    m: int, n_mc: int = 500_000, seed: int = 0, normalization: str = "moment"
) -> tuple[float, float]:
    """The shared H_2 single-entry coefficient of |det W|.

    normalization="moment" returns
        (1/m^2) (E|det W| ||W||_F^2 - m^2 E|det W|),
    the raw moment combination; "expansion" divides by 2! and is the actual
    expansion coefficient (equal, by symmetry, to f_beta with beta putting a
    2 on any single entry).  Strictly positive for every m >= 1.
    """
    w = _sample_matrices(m, n_mc, seed)
    adet = _abs_det_small(w)
    fro2 = np.sum(w * w, axis=(1, 2))
    vals = adet * (fro2 - m * m) / (m * m)
    if normalization == "expansion":
        vals = vals / 2.0
    elif normalization != "moment":
        raise ValueError(f"unknown normalization {normalization!r}")
    return float(np.mean(vals)), float(np.std(vals) / math.sqrt(n_mc))


# ---------------------------------------------------------------------------
# the degree-two variance lower bound


def i2d_lower_bound(
    d: int, m: int, n_mc: int = 500_000, seed: int = 0, tol: float = 1e-10
) -> tuple[float, float]:
    """Scaled variance of the degree-two chaos projection (lower bound).

    Var(I_2) >= (b_0^m f~_22)^2 (d^(m/2)/2) Int (E Ybar'_2(s) Ybar'_2(t))^2 ds dt
    with the correlation kernel cos^(d-1)(psi) of the second tangent
    component; the double sphere integral reduces to one dimension in the
    scaled angle.  Already normalized to compare against the limit variance.
    Returns (value, standard error from the f~ estimate).
    """
    if d < 2:
        raise ValueError("d >= 2 required")
    ft, ft_se = f_tilde_22(m, n_mc, seed, normalization="expansion")
    b0m = (2.0 * math.pi) ** (-m / 2.0)
    rd = math.sqrt(d)
    z_hi = min(rd * math.pi / 2.0, 12.0)

    def integrand(z):
        psi = z / rd
        return np.sin(psi) ** (m - 1) * np.cos(psi) ** (2 * (d - 1))

    j, jerr = integrate(integrand, 0.0, z_hi, tol=tol)
    j *= 2.0  # symmetric about psi = pi/2
    geom = kappa(m) * kappa(m - 1) * d ** ((m - 1) / 2.0) / 2.0
    value = (b0m * ft) ** 2 * geom * j
    se = 2.0 * abs(ft) * ft_se * b0m * b0m * geom * j
    return float(value), float(se)


# ---------------------------------------------------------------------------
# univariate helpers for projection diagnostics


@lru_cache(maxsize=None)
def univariate_abs_det_coefficient(j2: int) -> float:
    """Analytic f_{2j} for m = 1: E[|xi| H_{2j}(xi)] / (2j)!.

    E|xi|^(2k+1) = sqrt(2/pi) 2^k k! gives f_0 = sqrt(2/pi),
    f_2 = f_0/2, f_4 = -f_0/24, f_6 = f_0/240.
    """
    table = {0: 1.0, 1: 0.5, 2: -1.0 / 24, 3: 1.0 / 240}
    if j2 not in table:
        raise ValueError("tabulated through H_6 only")
    return math.sqrt(2.0 / math.pi) * table[j2]


def circle_field(coeffs: np.ndarray, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Y, Ybar') of a univariate homogenized system on the unit circle.

    Y(theta) = sum_j a_j cos^(d-j) sin^j; the derivative is taken in
    arclength and scaled by sqrt(d) to unit variance.
    """
    a = np.asarray(coeffs, dtype=float)
    d = a.size - 1
    c, s = np.cos(thetas), np.sin(thetas)
    j = np.arange(d + 1)
    cm = c[:, None] ** (d - j)
    sm = s[:, None] ** j
    y = (cm * sm) @ a
    # d/dtheta of cos^(d-j) sin^j
    cpow = np.where(d - j - 1 >= 0, c[:, None] ** np.maximum(d - j - 1, 0), 0.0)
    spow = np.where(j - 1 >= 0, s[:, None] ** np.maximum(j - 1, 0), 0.0)
    dmono = -(d - j) * cpow * s[:, None] * sm + j * cm * c[:, None] * spow
    yp = (dmono @ a) / math.sqrt(d)
    return y, yp


def chaos_functional_m1(coeffs: np.ndarray, q: int, n_theta: int = 512,
                        scale: float = 1.0) -> float:
    """Degree-q chaos functional I_q of a sampled univariate system.

    I_q = (d^(1/4)/2) Int sum_{a+b=q} b_a f_b H_a(Y) H_b(Ybar') dtheta over
    the circle, with analytic coefficients; `scale` multiplies the f
    normalization (used by the projection diagnostic to discriminate
    candidate conventions).  Trapezoid over the periodic grid.
    """
    a = np.asarray(coeffs, dtype=float)
    d = a.size - 1
    thetas = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    y, yp = circle_field(a, thetas)
    hy = hermite_all(q, y)
    hyp = hermite_all(q, yp)
    total = np.zeros_like(y)
    for aa in range(0, q + 1, 2):
        bb = q - aa
        if bb % 2:
            continue
        coef = b_coefficient((aa,)) * univariate_abs_det_coefficient(bb // 2) * scale
        total += coef * hy[aa] * hyp[bb]
    integral = float(np.mean(total)) * 2.0 * math.pi
    return d**0.25 / 2.0 * integral


def q2_projection_diagnostic(
    d: int, n_systems: int, seed: int = 0, scale: float = 1.0, n_theta: int = 512
) -> dict:
    """Empirical check that I_2 is the actual projection of the root count.

    For the true projection, E[I_2 * Nbar] = E[I_2^2] (orthogonality of
    chaos levels); a wrongly scaled I_2 = c I_2true shows up as the ratio
    E[I_2 Nbar]/E[I_2^2] = 1/c.  Returns both moments and their ratio.
    """
    from .rootcount import count_univariate
    from .seeds import derive_seed
    from .systems import sample_coefficients

    i2 = np.empty(n_systems)
    nbar = np.empty(n_systems)
    for i in range(n_systems):
        coeffs = sample_coefficients(1, d, derive_seed(seed, i))[0]
        i2[i] = chaos_functional_m1(coeffs, 2, n_theta=n_theta, scale=scale)
        n_roots = count_univariate(coeffs, method="auto").count
        nbar[i] = (2 * n_roots - 2 * math.sqrt(d)) / (2 * d**0.25)
    cross = float(np.mean(i2 * nbar))
    auto = float(np.mean(i2 * i2))
    cross_se = float(np.std(i2 * nbar) / math.sqrt(n_systems))
    auto_se = float(np.std(i2 * i2) / math.sqrt(n_systems))
    return {
        "cross": cross,
        "cross_se": cross_se,
        "auto": auto,
        "auto_se": auto_se,
        "ratio": cross / auto if auto else float("nan"),
    }
