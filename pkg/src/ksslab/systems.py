"""Kostlan-Shub-Smale random polynomial systems.

A square system of m polynomials in m variables with common degree d > 1.
Coefficients are independent centered Gaussians whose variances are the
multinomial weights d!/(j_1!...j_m!(d-|j|)!), which makes the homogenized
system's law invariant under the orthogonal group of R^{m+1} and gives the
covariance kernel <s,t>^d on the unit sphere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .multiindex import graded_lex_indices, index_rank, multinomial_weights
from .seeds import philox, standard_normal_inverse_cdf

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere S^m in R^{m+1}."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", c)
        if abs(np.dot(c, c) - 1.0) > 2.0 * len(c) * UNIT_NORM_TOL:
            raise ValueError(f"point is not on the unit sphere: |x|^2={np.dot(c, c)!r}")


@dataclass(frozen=True)
class KssSystem:
    """A sampled KSS system.

    ``coefficients`` has shape (m, n_coeffs) with columns in graded-lex
    multi-index order.  The same storage serves the affine form (exponents
    over m variables, total degree <= d) and the homogeneous form (slack
    exponent d-|j| prepended); ``form`` records which reading applies.
    Instances are immutable and safe to share across threads.
    """

    m: int
    d: int
    coefficients: np.ndarray
    seed: int
    form: str = "affine"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.d <= 1:
            raise ValueError("degree must be > 1 (the model assumes d > 1)")
        if self.form not in ("affine", "homogeneous"):
            raise ValueError(f"unknown form {self.form!r}")
        c = np.asarray(self.coefficients, dtype=float)
        n = len(graded_lex_indices(self.m, self.d))
        if c.shape != (self.m, n):
            raise ValueError(f"coefficient array must have shape {(self.m, n)}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    # -- structure ---------------------------------------------------------

    @property
    def n_coefficients(self) -> int:
        return self.coefficients.shape[1]

    def multi_indices(self) -> tuple[tuple[int, ...], ...]:
        """Affine exponent vectors in storage order."""
        return graded_lex_indices(self.m, self.d)

    def exponent_matrix(self) -> np.ndarray:
        """Exponents as an (n_coeffs, n_vars) int array matching ``form``."""
        affine = np.array(graded_lex_indices(self.m, self.d), dtype=np.int64)
        if self.form == "affine":
            return affine
        slack = self.d - affine.sum(axis=1)
        return np.column_stack([slack, affine])

    def coefficient(self, ell: int, j: tuple[int, ...]) -> float:
        """Coefficient of monomial t^j in equation ell (affine index j)."""
        return float(self.coefficients[ell, index_rank(self.m, self.d)[j]])

    # -- evaluation --------------------------------------------------------

    def __call__(self, point: np.ndarray) -> np.ndarray:
        return eval_system(self, point)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        flat = [format(x, ".17g") for x in self.coefficients.ravel(order="C")]
        payload = {
            "m": self.m,
            "d": self.d,
            "form": self.form,
            "seed": self.seed,
            "coefficients": flat,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "KssSystem":
        obj = json.loads(text)
        n = len(graded_lex_indices(obj["m"], obj["d"]))
        coeffs = np.array([float(x) for x in obj["coefficients"]], dtype=float)
        return cls(
            m=obj["m"],
            d=obj["d"],
            coefficients=coeffs.reshape(obj["m"], n),
            seed=obj["seed"],
            form=obj["form"],
        )


# ---------------------------------------------------------------------------
# sampling


def sample_coefficients(m: int, d: int, seed: int) -> np.ndarray:
    """Draw one replicate's coefficient array, shape (m, n_coeffs).

    Equation ell reads from the counter-based stream keyed by (seed, ell);
    position within the stream is the multi-index rank, so the draw is a
    pure function of (m, d, seed) regardless of thread or worker count.
    Normals come from the inverse CDF applied to bin-center uniforms.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if d <= 1:
        raise ValueError("degree must be > 1 (the model assumes d > 1)")
    sigma = np.sqrt(np.array(multinomial_weights(m, d), dtype=float))
    out = np.empty((m, sigma.size))
    for ell in range(m):
        z = standard_normal_inverse_cdf(philox(seed, ell), sigma.size)
        out[ell] = z * sigma
    return out


def sample_system(m: int, d: int, seed: int) -> KssSystem:
    """Sample a KSS system; identical seeds reproduce identical coefficients."""
    return KssSystem(m=m, d=d, coefficients=sample_coefficients(m, d, seed), seed=seed)


def sample_coefficient_block(m: int, d: int, seed: int, n: int) -> np.ndarray:
    """n replicates of coefficients, shape (n, m, n_coeffs), one shared stream.

    Bulk sampler for Monte Carlo estimates over many replicates where only
    the block's master seed matters; per-replicate provenance (resume,
    worker determinism) should go through ``sample_system`` instead.
    """
    sigma = np.sqrt(np.array(multinomial_weights(m, d), dtype=float))
    z = standard_normal_inverse_cdf(philox(seed, 0xB10C), n * m * sigma.size)
    return z.reshape(n, m, sigma.size) * sigma


# ---------------------------------------------------------------------------
# homogenization and the covariance kernel


def homogenize(system: KssSystem) -> KssSystem:
    """Homogeneous form: monomial j gains the factor t0^(d-|j|).

    Shares the coefficient storage; evaluation agrees with the affine system
    on the chart t0 = 1 and is degree-d homogeneous.
    """
    if system.form != "affine":
        raise ValueError("homogenize expects an affine-form system")
    return replace(system, form="homogeneous")


def covariance(s, t, d: int) -> float:
    """E(Y_l(s) Y_l(t)) = <s,t>^d for unit vectors s, t."""
    sv = s.coords if isinstance(s, SpherePoint) else np.asarray(s, dtype=float)
    tv = t.coords if isinstance(t, SpherePoint) else np.asarray(t, dtype=float)
    return float(np.dot(sv, tv)) ** d


# ---------------------------------------------------------------------------
# evaluation


def eval_system(system: KssSystem, point: np.ndarray) -> np.ndarray:
    """Evaluate all m equations at one point (length m or m+1 by form).

    Univariate affine systems use compensated Horner; otherwise a monomial
    sum over precomputed coordinate powers.  The monomial sum's rounding
    error is bounded by ~n_coeffs * u * sum_j |c_j| |t^j|, which at desk
    scale (d <= a few hundred) stays far below the certification tolerances
    used by the root counters.
    """
    x = np.asarray(point, dtype=float)
    nvars = system.m if system.form == "affine" else system.m + 1
    if x.shape != (nvars,):
        raise ValueError(f"expected point of length {nvars}, got {x.shape}")
    if system.form == "affine" and system.m == 1:
        return np.array(
            [compensated_horner(system.coefficients[ell], x[0]) for ell in range(system.m)]
        )
    mono = _monomials(system.exponent_matrix(), x)
    return system.coefficients @ mono


def eval_on_sphere(system: KssSystem, point: SpherePoint) -> np.ndarray:
    """Evaluate a homogeneous system at a unit point of S^m."""
    if system.form != "homogeneous":
        raise ValueError("sphere evaluation requires the homogeneous form")
    return eval_system(system, point.coords)


def _monomials(exps: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values of all monomials x^E, via per-variable power tables."""
    dmax = int(exps.max(initial=0))
    pows = np.vander(x, dmax + 1, increasing=True).T  # (dmax+1, nvars)
    mono = np.ones(exps.shape[0])
    for v in range(exps.shape[1]):
        mono *= pows[exps[:, v], v]
    return mono


def compensated_horner(coeffs_low_first: np.ndarray, x: float) -> float:
    """Horner evaluation with Dekker/Knuth error-free compensation.

    The compensated result behaves like Horner in twice the working
    precision: |error| ~ u + O(u^2 * condition number).
    """
    c = np.asarray(coeffs_low_first, dtype=float)
    s = float(c[-1])
    comp = 0.0
    for a in c[-2::-1]:
        p, pe = _two_prod(s, x)
        s, se = _two_sum(p, float(a))
        comp = comp * x + (pe + se)
    return s + comp


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


_SPLIT = 2**27 + 1.0


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    aa = a * _SPLIT
    ah = aa - (aa - a)
    al = a - ah
    bb = b * _SPLIT
    bh = bb - (bb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


# ---------------------------------------------------------------------------
# gradients on the sphere


def free_gradient(system: KssSystem, point: np.ndarray) -> np.ndarray:
    """Full-space gradient matrix, shape (m, n_vars): rows are grad Y_l."""
    x = np.asarray(point, dtype=float)
    exps = system.exponent_matrix()
    nvars = exps.shape[1]
    if x.shape != (nvars,):
        raise ValueError(f"expected point of length {nvars}, got {x.shape}")
    dmax = int(exps.max(initial=0))
    pows = np.vander(x, dmax + 1, increasing=True).T
    grad = np.empty((system.m, nvars))
    for v in range(nvars):
        e = exps.copy()
        fac = e[:, v].astype(float)
        e[:, v] = np.maximum(e[:, v] - 1, 0)
        mono = np.ones(exps.shape[0])
        for w in range(nvars):
            mono *= pows[e[:, w], w]
        grad[:, v] = system.coefficients @ (fac * mono)
    return grad


def spherical_gradient(
    system: KssSystem,
    point: SpherePoint,
    basis: np.ndarray | None = None,
    scaled: bool = False,
) -> np.ndarray:
    """Gradient projected on the tangent space of S^m, in a chosen basis.

    Returns the (m, m) matrix with entry (l, k) = <grad Y_l, b_k> for the
    orthonormal tangent basis columns b_k.  With ``scaled`` the entries are
    divided by sqrt(d), which standardizes their variance to 1.
    """
    if system.form != "homogeneous":
        raise ValueError("spherical gradients require the homogeneous form")
    x = point.coords
    if basis is None:
        basis = tangent_basis(x)
    b = np.asarray(basis, dtype=float)
    if b.shape != (system.m + 1, system.m):
        raise ValueError(f"basis must have shape {(system.m + 1, system.m)}")
    if np.max(np.abs(b.T @ x)) > 1e-9:
        raise ValueError("basis columns must be orthogonal to the point")
    g = free_gradient(system, x) @ b
    if scaled:
        g = g / math.sqrt(system.d)
    return g


def tangent_basis(x: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of x-perp, shape (m+1, m).

    Columns 1..m of the Householder reflection exchanging e0 and x; falls
    back to the coordinate basis when x is (numerically) e0.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if 1.0 - x[0] < 1e-12:
        return np.eye(n)[:, 1:]
    v = x - np.eye(n)[:, 0]
    h = np.eye(n) - 2.0 * np.outer(v, v) / np.dot(v, v)
    return h[:, 1:]


def canonical_pair(psi: float, m: int) -> tuple[SpherePoint, SpherePoint]:
    """The pair s = e0, t = cos(psi) e0 + sin(psi) e1 on S^m."""
    s = np.zeros(m + 1)
    s[0] = 1.0
    t = np.zeros(m + 1)
    t[0] = math.cos(psi)
    t[1] = math.sin(psi)
    return SpherePoint(s), SpherePoint(t)


def canonical_pair_bases(psi: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tangent bases at the canonical pair: {e1..em} at s and
    {sin(psi) e0 - cos(psi) e1, e2..em} at t."""
    eye = np.eye(m + 1)
    basis_s = eye[:, 1:]
    first = math.sin(psi) * eye[:, 0] - math.cos(psi) * eye[:, 1]
    basis_t = np.column_stack([first] + [eye[:, k] for k in range(2, m + 1)])
    return basis_s, basis_t


def rotation_to_canonical(s: SpherePoint, t: SpherePoint) -> np.ndarray:
    """Orthogonal Q with Q s = e0 and Q t = cos(psi) e0 + sin(psi) e1.

    psi is the angle between s and t (sin(psi) >= 0).  Rows are built by
    Gram-Schmidt over s, the s-orthogonal part of t, then the coordinate
    axes, so the result is deterministic.
    """
    sv, tv = s.coords, t.coords
    n = sv.size
    rows = [sv]
    t_perp = tv - np.dot(sv, tv) * sv
    nrm = np.linalg.norm(t_perp)
    if nrm > 1e-12:
        rows.append(t_perp / nrm)
    for k in range(n):
        cand = np.eye(n)[k]
        for r in rows:
            cand = cand - np.dot(r, cand) * r
        nn = np.linalg.norm(cand)
        if nn > 1e-8:
            rows.append(cand / nn)
        if len(rows) == n:
            break
    q = np.array(rows)
    assert q.shape == (n, n)
    return q


def pair_tangent_bases(s: SpherePoint, t: SpherePoint) -> tuple[np.ndarray, np.ndarray]:
    """Tangent bases at an arbitrary pair, pulled back from canonical position.

    Rotating (s, t) to the canonical pair and transporting the canonical
    bases back makes the derivative cross-covariances literal functions of
    the angle, which the kernel-block tests rely on.
    """
    q = rotation_to_canonical(s, t)
    m = s.coords.size - 1
    psi = math.atan2(
        float(np.linalg.norm(t.coords - np.dot(s.coords, t.coords) * s.coords)),
        float(np.dot(s.coords, t.coords)),
    )
    basis_s, basis_t = canonical_pair_bases(psi, m)
    return q.T @ basis_s, q.T @ basis_t
