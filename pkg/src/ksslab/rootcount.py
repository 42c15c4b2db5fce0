"""Certified counting of real roots of sampled KSS systems.

Univariate counts are exact: either the integer Sturm chain directly, or a
fast rigorous filter (companion-matrix eigenvalues certified through
Gershgorin disks of the Weierstrass corrections) that escalates the rare
ambiguous draw to the Sturm chain.  Multivariate (m = 2) counts come from
verified subdivision on the sphere (see ``bivariate``).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import sturm
from .parallel import deterministic_map
from .seeds import derive_seed
from .systems import KssSystem, sample_coefficients

logger = logging.getLogger(__name__)

_U = 2.0**-53  # unit roundoff


@dataclass(frozen=True)
class RootCountResult:
    """A verified integer root count.

    ``certified`` means the count is rigorous; for subdivision counts it
    requires every cell to be resolved.  ``bezout_cap`` is d^m.
    """

    count: int
    certified: bool
    unresolved_regions: int
    bezout_cap: int
    method: str

    def __post_init__(self):
        if self.count > self.bezout_cap:
            raise ValueError(
                f"count {self.count} exceeds the Bezout cap {self.bezout_cap}"
            )
        if self.certified and self.unresolved_regions:
            raise ValueError("certified results cannot have unresolved regions")


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo moment estimate of the root count over replicates."""

    mean: float
    variance: float
    se_mean: float
    se_variance: float
    n: int
    uncertified_fraction: float
    wall_time: float


class EquatorRootError(RuntimeError):
    """A verified root sits within tolerance of the equator t0 = 0.

    This is a probability-zero event for KSS samples; callers should
    discard the replicate and redraw with a derived retry seed.
    """


# ---------------------------------------------------------------------------
# univariate counting


def count_univariate(coeffs, method: str = "sturm") -> RootCountResult:
    """Exact number of distinct real roots of a univariate float polynomial.

    ``method="sturm"`` runs the exact sign-variation chain.  ``"auto"``
    first tries the certified eigenvalue-disk filter and falls back to the
    chain only when the disks cannot decide; the returned count is exact
    either way.  Distinctness is what is counted, which for KSS samples is
    almost surely the same as the number of real roots.
    """
    cs = np.asarray(coeffs, dtype=float)
    if cs.ndim != 1 or cs.size < 1:
        raise ValueError("need a 1-d coefficient sequence (low order first)")
    if not np.all(np.isfinite(cs)):
        raise ValueError("non-finite coefficient")
    if not np.any(cs != 0.0):
        raise ValueError("zero polynomial")
    deg = int(np.max(np.nonzero(cs != 0.0)))
    cap = max(deg, 0)
    if method not in ("sturm", "auto", "disk"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "disk"):
        n = certified_disk_count(cs)
        if n is not None:
            return RootCountResult(n, True, 0, cap, "eigenvalue-disk")
        if method == "disk":
            return RootCountResult(0, False, 1, cap, "eigenvalue-disk")
    n = sturm.count_real_roots(cs)
    return RootCountResult(n, True, 0, cap, "sturm")


def certified_disk_count(coeffs: np.ndarray) -> int | None:
    """Certified real-root count from eigenvalues, or None if undecidable.

    Companion-matrix eigenvalues z_i give Weierstrass corrections
    w_i = p(z_i) / (lc * prod_{j!=i} (z_i - z_j)); all roots of p lie in the
    union of disks B(z_i, d|w_i|), and a connected component of k disks
    holds exactly k roots.  With rigorous upper bounds on |w_i| (float
    Horner plus a running error bound), an isolated disk that meets the
    real axis and whose mirror image meets no other disk certifies one real
    root; disks and clusters that stay off the axis certify none.  Any
    other configuration returns None.
    """
    cs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    d = cs.size - 1
    if d <= 0:
        return 0
    if d == 1:
        return 1
    lc = cs[-1]
    high_first = cs[::-1]
    with np.errstate(all="ignore"):
        z = np.roots(high_first)
    if z.size != d or not np.all(np.isfinite(z.view(float))):
        return None

    # rigorous upper bound on log |p(z_i)|: float Horner plus a Higham-style
    # running error bound.  Outer roots (|z| > 1, e.g. when the leading
    # coefficient is small) evaluate the reversed polynomial at 1/z so that
    # nothing overflows: p(z) = z^d q(1/z) with q's high-first coefficients
    # being p's ascending ones.
    gamma = 5.7 * d * _U / (1.0 - 5.7 * d * _U)  # complex Horner, conservative
    az = np.abs(z)
    outer = az > 1.0
    log_p_up = np.empty(d)
    with np.errstate(all="ignore"):
        if np.any(~outer):
            zi = z[~outer]
            pz = np.polyval(high_first, zi)
            p_abs = np.polyval(np.abs(high_first), np.abs(zi))
            log_p_up[~outer] = np.log(np.abs(pz) + gamma * p_abs + 5e-324)
        if np.any(outer):
            w = 1.0 / z[outer]
            qz = np.polyval(cs, w)
            q_abs = np.polyval(np.abs(cs), np.abs(w))
            log_p_up[outer] = d * np.log(az[outer]) + np.log(
                np.abs(qz) + gamma * q_abs + 5e-324
            )
    if not np.all(np.isfinite(log_p_up)):
        return None

    # rigorous lower bound on log |prod_{j!=i} (z_i - z_j)|
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    adiff = np.abs(diff)
    if np.any(adiff == 0.0):
        return None  # coincident numerical roots: escalate
    log_prod = np.sum(np.log(adiff), axis=1)

    # log radius with a generous rounding inflation folded in
    log_radius = (
        math.log(d) + log_p_up - math.log(abs(lc)) - log_prod + 16.0 * d * _U + 1e-9
    )
    if np.any(log_radius > 100.0):
        return None
    radius = np.exp(log_radius)

    # disk intersection graph -> connected components
    centers_dist = np.abs(diff)
    np.fill_diagonal(centers_dist, np.inf)
    touching = centers_dist <= (radius[:, None] + radius[None, :])
    comp = _components(touching)

    touches_axis = np.abs(z.imag) <= radius
    mirror_dist = np.abs(np.conj(z)[:, None] - z[None, :])
    np.fill_diagonal(mirror_dist, np.inf)
    mirror_clear = np.all(mirror_dist > (radius[:, None] + radius[None, :]), axis=1)

    count = 0
    for members in comp:
        if len(members) == 1:
            i = members[0]
            if not touches_axis[i]:
                continue  # one certified non-real root
            if mirror_clear[i]:
                count += 1  # one certified simple real root
            else:
                return None
        else:
            if any(touches_axis[i] for i in members):
                return None  # axis-touching cluster: undecidable here
            # whole cluster certified off-axis: contributes no real roots
    return count


def _components(adj: np.ndarray) -> list[list[int]]:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    out = []
    for s in range(n):
        if seen[s]:
            continue
        stack, members = [s], []
        seen[s] = True
        while stack:
            i = stack.pop()
            members.append(i)
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        out.append(members)
    return out


def eigenvalue_count_naive(coeffs, band: float = 1e-8) -> int:
    """Plain eigenvalue count: roots with |Im z| below the tolerance band.

    Non-rigorous reference oracle; disagreements with the exact chain are
    expected exactly when a root pair sits near the band.
    """
    cs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if cs.size - 1 <= 0:
        return 0
    z = np.roots(cs[::-1])
    return int(np.sum(np.abs(z.imag) < band))


# ---------------------------------------------------------------------------
# system-level counting


def count_system(system: KssSystem, **kwargs) -> RootCountResult:
    """Count the real solutions of a sampled square system.

    m = 1 dispatches to the exact univariate counters; m = 2 runs the
    verified spherical subdivision (desk scale: d <= 8 recommended; larger
    degrees may come back uncertified).
    """
    if system.form != "affine":
        raise ValueError("count_system expects the affine form")
    if system.m == 1:
        return count_univariate(system.coefficients[0], **kwargs)
    if system.m == 2:
        from .bivariate import count_bivariate

        return count_bivariate(system, **kwargs)
    raise NotImplementedError("verified counting is implemented for m in {1, 2}")


# ---------------------------------------------------------------------------
# Monte Carlo moments


def _count_one(args) -> tuple[int, bool, int, float]:
    m, d, seed, method = args
    t0 = time.perf_counter()
    retries = 0
    while True:
        use_seed = seed if retries == 0 else derive_seed(seed, 0xE0, retries)
        coeffs = sample_coefficients(m, d, use_seed)
        try:
            if m == 1:
                res = count_univariate(coeffs[0], method=method)
            else:
                res = count_system(
                    KssSystem(m=m, d=d, coefficients=coeffs, seed=use_seed)
                )
            break
        except EquatorRootError:
            retries += 1
            logger.warning(
                "root within tolerance of the equator (m=%d d=%d seed=%d); "
                "discarding the sample and redrawing (retry %d)", m, d, use_seed, retries,
            )
            if retries > 8:
                raise
    return res.count, res.certified, res.unresolved_regions, time.perf_counter() - t0


def estimate_moments(
    m: int,
    d: int,
    n_samples: int,
    seed: int,
    method: str = "auto",
    workers: int | None = None,
) -> MomentEstimate:
    """Sample n_samples systems and estimate mean and variance of the count.

    Replicate i uses the derived seed hash(seed, i), so results are
    independent of worker count and runs can be resumed replicate-by-
    replicate.  The variance standard error uses the fourth central moment.
    """
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    t0 = time.perf_counter()
    tasks = [(m, d, derive_seed(seed, i), method) for i in range(n_samples)]
    rows = deterministic_map(_count_one, tasks, workers=workers)
    counts = np.array([r[0] for r in rows], dtype=float)
    certified = np.array([r[1] for r in rows], dtype=bool)
    return summarize_counts(counts, certified, time.perf_counter() - t0)


def moment_rows(
    m: int, d: int, n_samples: int, seed: int, method: str = "auto",
    workers: int | None = None,
) -> list[tuple[int, int, bool, int, float]]:
    """Per-replicate rows (index, count, certified, unresolved, wall_time_s)."""
    tasks = [(m, d, derive_seed(seed, i), method) for i in range(n_samples)]
    rows = deterministic_map(_count_one, tasks, workers=workers)
    return [(i, r[0], r[1], r[2], r[3]) for i, r in enumerate(rows)]


def summarize_counts(
    counts: np.ndarray, certified: np.ndarray, wall_time: float
) -> MomentEstimate:
    """Moment summary of a vector of counts (unbiased variance, SEs)."""
    n = counts.size
    mean = float(np.mean(counts))
    var = float(np.var(counts, ddof=1))
    se_mean = math.sqrt(var / n)
    centered = counts - mean
    m4 = float(np.mean(centered**4))
    # Var(s^2) = (m4 - (n-3)/(n-1) s^4) / n
    var_of_var = max(0.0, (m4 - (n - 3) / (n - 1) * var * var) / n)
    return MomentEstimate(
        mean=mean,
        variance=var,
        se_mean=se_mean,
        se_variance=math.sqrt(var_of_var),
        n=n,
        uncertified_fraction=float(np.mean(~certified)),
        wall_time=wall_time,
    )


