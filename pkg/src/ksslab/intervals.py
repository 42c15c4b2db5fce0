"""Vectorized outward-rounded interval arithmetic.

Intervals are (lo, hi) pairs of equal-shape float arrays.  Every arithmetic
result is widened by one ulp in each direction, which dominates the at most
half-ulp rounding of each correctly-rounded double operation, so enclosures
are rigorous.  Only the operations needed by the verified polynomial-system
counter are provided.
"""

from __future__ import annotations

import numpy as np

_INF = np.inf


def widen(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.nextafter(lo, -_INF), np.nextafter(hi, _INF)


def iadd(a, b):
    (alo, ahi), (blo, bhi) = a, b
    return widen(alo + blo, ahi + bhi)


def isub(a, b):
    (alo, ahi), (blo, bhi) = a, b
    return widen(alo - bhi, ahi - blo)


def imul(a, b):
    (alo, ahi), (blo, bhi) = a, b
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return widen(lo, hi)


def iscale(c: float, a):
    """Multiply by an exact float scalar."""
    alo, ahi = a
    if c >= 0:
        return widen(c * alo, c * ahi)
    return widen(c * ahi, c * alo)


def thin(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return x.copy(), x.copy()


def power_table(lo: np.ndarray, hi: np.ndarray, dmax: int):
    """Interval powers [lo,hi]^k for k = 0..dmax, each shape like lo.

    Built by repeated interval multiplication (rigorous for every sign
    pattern); even powers are additionally clipped at zero, which is always
    valid and keeps enclosures tight on boxes straddling the origin.
    """
    n = lo.shape
    plo = [np.ones(n), lo.copy()]
    phi = [np.ones(n), hi.copy()]
    cur = (lo, hi)
    base = (lo, hi)
    for k in range(2, dmax + 1):
        cur = imul(cur, base)
        clo = np.maximum(cur[0], 0.0) if k % 2 == 0 else cur[0]
        plo.append(clo)
        phi.append(cur[1])
        cur = (clo, cur[1])
    return np.array(plo), np.array(phi)


def contains_zero(a) -> np.ndarray:
    lo, hi = a
    return (lo <= 0.0) & (hi >= 0.0)


def mag(a) -> np.ndarray:
    lo, hi = a
    return np.maximum(np.abs(lo), np.abs(hi))


def intersect(a, b):
    (alo, ahi), (blo, bhi) = a, b
    return np.maximum(alo, blo), np.minimum(ahi, bhi)
