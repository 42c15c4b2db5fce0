"""Verified real-root counting for m = 2 systems on the sphere.

The homogenized pair (Y1, Y2) is counted on a hemisphere of S^2.  Five cube
charts cover the closed hemisphere; by homogeneity a root of Y on the
sphere is a root of the chart polynomial on the chart box, so adaptive
bisection with an interval exclusion test and the Krawczyk
existence/uniqueness test certifies each root cell in the plane.  Verified
enclosures are mapped back to the sphere and deduplicated across chart
boundaries.  Almost surely each affine root of the original system
corresponds to exactly one hemisphere root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.polynomial import polyval2d

from . import intervals as iv
from .rootcount import EquatorRootError, RootCountResult
from .systems import KssSystem, homogenize

KRAWCZYK_START_WIDTH = 0.5  # skip the K test on boxes wider than this
OVERLAP_REL = 1e-10  # relative bisection overlap (duplicates are merged)
DEDUP_DIST = 1e-8  # sphere distance under which two enclosures are one root
REFINE_STEPS = 30
CHART_MARGIN = 1e-6  # initial boxes extend past the cube edges so that a
# root sitting exactly on a chart boundary is interior to some chart; the
# equator edge w = 0 is never extended (antipodal double counting)


@dataclass(frozen=True)
class _Chart:
    """One cube chart of a hemisphere: x = embed(a, b) up to positive scale."""

    name: str
    grids: tuple  # ((C, Ca, Cb) for each of the two equations)
    box: tuple[float, float, float, float]  # alo, ahi, blo, bhi
    axis_a: int
    axis_b: int
    fixed_axis: int
    fixed_value: float
    s0: float  # hemisphere sign applied to the t0 slot when it is a variable

    def embed(self, a: float, b: float) -> np.ndarray:
        x = np.empty(3)
        x[self.fixed_axis] = self.fixed_value
        x[self.axis_a] = a * (self.s0 if self.axis_a == 0 else 1.0)
        x[self.axis_b] = b * (self.s0 if self.axis_b == 0 else 1.0)
        return x


def _derivative_grids(c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    na, nb = c.shape
    ca = np.zeros_like(c)
    cb = np.zeros_like(c)
    ca[: na - 1, :] = c[1:, :] * np.arange(1, na)[:, None]
    cb[:, : nb - 1] = c[:, 1:] * np.arange(1, nb)[None, :]
    return c, ca, cb


def build_charts(system: KssSystem, hemisphere: str = "upper") -> list[_Chart]:
    """Chart polynomials of the homogenized system over one hemisphere."""
    h = system if system.form == "homogeneous" else homogenize(system)
    if h.m != 2:
        raise ValueError("spherical chart counting is implemented for m = 2")
    exps = h.exponent_matrix()  # (n, 3) with columns (j0, j1, j2)
    d = h.d
    s0 = 1.0 if hemisphere == "upper" else -1.0

    def make(axis_a, axis_b, fixed_axis, fixed_value, name, w_is_a):
        # the chart polynomial is Y evaluated with s0*w in the t0 slot, so
        # s0^j0 folds into the coefficients when t0 is a chart variable
        fac = np.power(fixed_value, exps[:, fixed_axis]).astype(float)
        if fixed_axis != 0:
            fac = fac * np.power(s0, exps[:, 0])
        grids = []
        for ell in range(2):
            c = np.zeros((d + 1, d + 1))
            np.add.at(c, (exps[:, axis_a], exps[:, axis_b]), h.coefficients[ell] * fac)
            grids.append(_derivative_grids(c))
        g = CHART_MARGIN
        box = (0.0, 1.0 + g, -1.0 - g, 1.0 + g) if w_is_a else (
            -1.0 - g, 1.0 + g, -1.0 - g, 1.0 + g)
        return _Chart(name, tuple(grids), box, axis_a, axis_b, fixed_axis,
                      fixed_value, s0)

    charts = [make(1, 2, 0, s0, "t0", False)]
    for s in (1.0, -1.0):
        charts.append(make(0, 2, 1, s, f"t1{'+' if s > 0 else '-'}", True))
    for s in (1.0, -1.0):
        charts.append(make(0, 1, 2, s, f"t2{'+' if s > 0 else '-'}", True))
    return charts


def _eval_grid(c: np.ndarray, pa, pb):
    """Interval value of sum c[i,j] a^i b^j over batched boxes."""
    slo = np.zeros(pa[0].shape[1])
    shi = np.zeros(pa[0].shape[1])
    for i, j in np.argwhere(c != 0.0):
        term = iv.imul((pa[0][i], pa[1][i]), (pb[0][j], pb[1][j]))
        term = iv.iscale(float(c[i, j]), term)
        slo, shi = iv.iadd((slo, shi), term)
    return slo, shi


def _krawczyk(chart: _Chart, alo, ahi, blo, bhi):
    """Batched Krawczyk operator for the chart's 2x2 system.

    Returns (unique, empty, (k_alo, k_ahi, k_blo, k_bhi)).
    """
    (c1, c1a, c1b), (c2, c2a, c2b) = chart.grids
    dmax = c1.shape[0] - 1
    pa = iv.power_table(alo, ahi, dmax)
    pb = iv.power_table(blo, bhi, dmax)

    j11 = _eval_grid(c1a, pa, pb)
    j12 = _eval_grid(c1b, pa, pb)
    j21 = _eval_grid(c2a, pa, pb)
    j22 = _eval_grid(c2b, pa, pb)

    ya = 0.5 * (alo + ahi)
    yb = 0.5 * (blo + bhi)
    pya = iv.power_table(ya, ya, dmax)
    pyb = iv.power_table(yb, yb, dmax)
    f1 = _eval_grid(c1, pya, pyb)
    f2 = _eval_grid(c2, pya, pyb)

    m11 = polyval2d(ya, yb, c1a)
    m12 = polyval2d(ya, yb, c1b)
    m21 = polyval2d(ya, yb, c2a)
    m22 = polyval2d(ya, yb, c2b)
    det = m11 * m22 - m12 * m21
    ok = np.abs(det) > 1e-300
    safe_det = np.where(ok, det, 1.0)
    y0_11 = np.where(ok, m22 / safe_det, 0.0)
    y0_12 = np.where(ok, -m12 / safe_det, 0.0)
    y0_21 = np.where(ok, -m21 / safe_det, 0.0)
    y0_22 = np.where(ok, m11 / safe_det, 0.0)

    def tscale(v, intvl):
        return iv.imul((v, v), intvl)

    # R = I - Y0 J(B)
    r11 = iv.isub(iv.thin(np.ones_like(ya)), iv.iadd(tscale(y0_11, j11), tscale(y0_12, j21)))
    r12 = iv.iscale(-1.0, iv.iadd(tscale(y0_11, j12), tscale(y0_12, j22)))
    r21 = iv.iscale(-1.0, iv.iadd(tscale(y0_21, j11), tscale(y0_22, j21)))
    r22 = iv.isub(iv.thin(np.ones_like(ya)), iv.iadd(tscale(y0_21, j12), tscale(y0_22, j22)))

    da = iv.widen(alo - ya, ahi - ya)
    db = iv.widen(blo - yb, bhi - yb)

    newton_a = iv.iadd(tscale(y0_11, f1), tscale(y0_12, f2))
    newton_b = iv.iadd(tscale(y0_21, f1), tscale(y0_22, f2))
    ka = iv.iadd(iv.isub(iv.thin(ya), newton_a), iv.iadd(iv.imul(r11, da), iv.imul(r12, db)))
    kb = iv.iadd(iv.isub(iv.thin(yb), newton_b), iv.iadd(iv.imul(r21, da), iv.imul(r22, db)))

    contraction = (iv.mag(r11) + iv.mag(r12) < 1.0) & (iv.mag(r21) + iv.mag(r22) < 1.0)
    inside = (ka[0] > alo) & (ka[1] < ahi) & (kb[0] > blo) & (kb[1] < bhi)
    unique = ok & contraction & inside
    empty = (ka[1] < alo) | (ka[0] > ahi) | (kb[1] < blo) | (kb[0] > bhi)
    return unique, empty, (ka[0], ka[1], kb[0], kb[1])


def _exclusion(chart: _Chart, alo, ahi, blo, bhi) -> np.ndarray:
    """True where the box may still contain a root (0 in both components)."""
    (c1, _, _), (c2, _, _) = chart.grids
    dmax = c1.shape[0] - 1
    pa = iv.power_table(alo, ahi, dmax)
    pb = iv.power_table(blo, bhi, dmax)
    f1 = _eval_grid(c1, pa, pb)
    keep = iv.contains_zero(f1)
    if not np.any(keep):
        return keep
    f2 = _eval_grid(c2, pa, pb)
    return keep & iv.contains_zero(f2)


def _count_chart(chart: _Chart, min_width: float, max_boxes: int):
    """Verified root enclosures (a, b, radius) of one chart; returns
    (roots, unresolved)."""
    alo = np.array([chart.box[0]])
    ahi = np.array([chart.box[1]])
    blo = np.array([chart.box[2]])
    bhi = np.array([chart.box[3]])
    roots: list[tuple[float, float, float]] = []
    unresolved = 0
    processed = 0

    while alo.size:
        processed += alo.size
        if processed > max_boxes:
            unresolved += alo.size
            break
        keep = _exclusion(chart, alo, ahi, blo, bhi)
        alo, ahi, blo, bhi = alo[keep], ahi[keep], blo[keep], bhi[keep]
        if not alo.size:
            break
        width = np.maximum(ahi - alo, bhi - blo)
        try_k = width <= KRAWCZYK_START_WIDTH
        unique = np.zeros(alo.size, dtype=bool)
        empty = np.zeros(alo.size, dtype=bool)
        if np.any(try_k):
            u, e, k = _krawczyk(chart, alo[try_k], ahi[try_k], blo[try_k], bhi[try_k])
            unique[try_k] = u
            empty[try_k] = e
            for idx_local, idx in enumerate(np.nonzero(try_k)[0]):
                if u[idx_local]:
                    enc = _refine(
                        chart,
                        max(k[0][idx_local], alo[idx]),
                        min(k[1][idx_local], ahi[idx]),
                        max(k[2][idx_local], blo[idx]),
                        min(k[3][idx_local], bhi[idx]),
                    )
                    roots.append(enc)
        rest = ~(unique | empty)
        alo, ahi, blo, bhi = alo[rest], ahi[rest], blo[rest], bhi[rest]
        if not alo.size:
            break
        width = np.maximum(ahi - alo, bhi - blo)
        stuck = width < min_width
        unresolved += int(np.sum(stuck))
        alo, ahi, blo, bhi = alo[~stuck], ahi[~stuck], blo[~stuck], bhi[~stuck]
        if alo.size:
            alo, ahi, blo, bhi = _bisect(alo, ahi, blo, bhi)
    return roots, unresolved


def _bisect(alo, ahi, blo, bhi):
    wa = ahi - alo
    wb = bhi - blo
    split_a = wa >= wb
    ov = OVERLAP_REL * np.maximum(wa, wb)
    mids_a = 0.5 * (alo + ahi)
    mids_b = 0.5 * (blo + bhi)
    parts = []
    # split along a
    sa = split_a
    if np.any(sa):
        parts.append((alo[sa], mids_a[sa] + ov[sa], blo[sa], bhi[sa]))
        parts.append((mids_a[sa] - ov[sa], ahi[sa], blo[sa], bhi[sa]))
    sb = ~split_a
    if np.any(sb):
        parts.append((alo[sb], ahi[sb], blo[sb], mids_b[sb] + ov[sb]))
        parts.append((alo[sb], ahi[sb], mids_b[sb] - ov[sb], bhi[sb]))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def _refine(chart: _Chart, alo: float, ahi: float, blo: float, bhi: float):
    """Contract a verified box by iterating K; returns (a, b, radius)."""
    a0, a1, b0, b1 = (np.array([v]) for v in (alo, ahi, blo, bhi))
    for _ in range(REFINE_STEPS):
        _, _, k = _krawczyk(chart, a0, a1, b0, b1)
        na0 = float(np.maximum(k[0], a0)[0])
        na1 = float(np.minimum(k[1], a1)[0])
        nb0 = float(np.maximum(k[2], b0)[0])
        nb1 = float(np.minimum(k[3], b1)[0])
        if na0 > na1 or nb0 > nb1:
            break
        shrunk = (na1 - na0) < 0.9 * float(a1[0] - a0[0]) or (nb1 - nb0) < 0.9 * float(
            b1[0] - b0[0]
        )
        a0, a1, b0, b1 = (np.array([v]) for v in (na0, na1, nb0, nb1))
        if not shrunk:
            break
    a = 0.5 * (float(a0[0]) + float(a1[0]))
    b = 0.5 * (float(b0[0]) + float(b1[0]))
    rad = 0.5 * max(float(a1[0] - a0[0]), float(b1[0] - b0[0]))
    return a, b, rad


def count_bivariate(
    system: KssSystem,
    min_width: float = 1e-6,
    max_boxes: int = 100_000,
    hemisphere: str = "upper",
    equator_tol: float = 1e-12,
) -> RootCountResult:
    """Count real solutions of an m = 2 system via certified subdivision.

    Counts verified zeros of the homogenized system on one hemisphere
    (equivalently: affine real roots).  Budgeted for desk scale (d <= 8);
    exhausting the box budget or the minimum width degrades to
    certified=False instead of aborting.  A verified root within
    ``equator_tol`` of the equator raises EquatorRootError (measure-zero
    event; callers redraw the sample).
    """
    charts = build_charts(system, hemisphere)
    d = system.d
    points = []
    unresolved = 0
    for chart in charts:
        roots, unres = _count_chart(chart, min_width, max_boxes)
        unresolved += unres
        for a, b, rad in roots:
            x = chart.embed(a, b)
            nrm = float(np.linalg.norm(x))
            x = x / nrm
            if abs(x[0]) <= equator_tol + rad / nrm:
                raise EquatorRootError(
                    f"verified root within {equator_tol} of the equator"
                )
            points.append((x, rad / nrm))
    count = _dedupe(points)
    return RootCountResult(
        count=count,
        certified=unresolved == 0,
        unresolved_regions=unresolved,
        bezout_cap=d * d,
        method="krawczyk-subdivision",
    )


def _dedupe(points: list[tuple[np.ndarray, float]]) -> int:
    """Merge sphere enclosures that can only be the same root."""
    reps: list[tuple[np.ndarray, float]] = []
    for x, rad in points:
        merged = False
        for y, yrad in reps:
            if np.linalg.norm(x - y) < max(DEDUP_DIST, 4.0 * (rad + yrad)):
                merged = True
                break
        if not merged:
            reps.append((x, rad))
    return len(reps)
