"""Exact real-root counting for univariate polynomials with float coefficients.

Doubles are dyadic rationals, so a float polynomial maps exactly to an
integer polynomial after scaling by a common power of two.  The number of
distinct real roots is then the sign-variation difference of a generalized
Sturm chain at -inf and +inf.  The chain is a negative pseudo-remainder
sequence over exact integers: remainders are only ever multiplied by
positive constants and divided by positive content, which preserves the
Sturm counting property, and GMP integers (when available) keep the
coefficient growth affordable at desk-scale degrees.
"""

from __future__ import annotations

try:
    from gmpy2 import gcd as _gcd
    from gmpy2 import mpz as _int
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from math import gcd as _gcd

    _int = int


def float_poly_to_int(coeffs_low_first) -> list:
    """Exact integer image of a float polynomial (common power-of-two scale).

    Trailing (leading-coefficient) zeros are stripped; raises on the zero
    polynomial and on non-finite coefficients.
    """
    cs = [float(c) for c in coeffs_low_first]
    if any(c != c or c in (float("inf"), float("-inf")) for c in cs):
        raise ValueError("non-finite coefficient")
    while cs and cs[-1] == 0.0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial has no root count")
    ratios = [c.as_integer_ratio() for c in cs]
    common = 1
    for _, den in ratios:
        # denominators are powers of two; lcm = max
        if den > common:
            common = den
    return [_int(num) * (common // den) for num, den in ratios]


def _degree(p: list) -> int:
    return len(p) - 1


def _neg_pseudo_rem(a: list, b: list) -> list:
    """-(prem(a, b)) up to a positive constant factor, exactly over Z."""
    da, db = _degree(a), _degree(b)
    lc = b[db]
    r = list(a)
    sign_flips = 0
    for k in range(da, db - 1, -1):
        coef = r[k]
        # r <- lc * r - coef * x^(k-db) * b   (kills degree k; exact)
        r = [lc * x for x in r[:k]] + [_int(0)] * (da - k + 1)
        if lc < 0:
            sign_flips += 1
        if coef:
            off = k - db
            for i in range(db):
                r[off + i] -= coef * b[i]
    while r and r[-1] == 0:
        r.pop()
    if not r:
        return r
    if sign_flips % 2:
        r = [-x for x in r]
    return [-x for x in r]


def _primitive(p: list) -> list:
    """Divide by the (positive) integer content."""
    g = _int(0)
    for x in p:
        g = _gcd(g, x)
        if g == 1:
            return p
    return [x // g for x in p]


def sturm_chain(coeffs_low_first) -> list[list]:
    """Generalized Sturm chain of p over exact integers."""
    p = float_poly_to_int(coeffs_low_first)
    if _degree(p) == 0:
        return [p]
    dp = [p[i] * i for i in range(1, len(p))]
    chain = [p, _primitive(dp)]
    while _degree(chain[-1]) > 0:
        r = _neg_pseudo_rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append(_primitive(r))
    return chain


def _variations(signs) -> int:
    v, prev = 0, 0
    for s in signs:
        if s == 0:
            continue
        if prev != 0 and s != prev:
            v += 1
        prev = s
    return v


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def count_real_roots(coeffs_low_first) -> int:
    """Exact number of distinct real roots of a float-coefficient polynomial.

    Works for arbitrary (also non-squarefree) polynomials: the chain
    terminates at the gcd of p and p', and the variation difference counts
    distinct roots.
    """
    chain = sturm_chain(coeffs_low_first)
    at_plus = [_sign(q[-1]) for q in chain]
    at_minus = [_sign(q[-1]) * (-1 if _degree(q) % 2 else 1) for q in chain]
    return _variations(at_minus) - _variations(at_plus)


def count_real_roots_in_interval(coeffs_low_first, lo: float, hi: float) -> int:
    """Distinct real roots in (lo, hi], endpoints evaluated exactly."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    chain = sturm_chain(coeffs_low_first)
    return _variations([_eval_sign(q, lo) for q in chain]) - _variations(
        [_eval_sign(q, hi) for q in chain]
    )


def _eval_sign(p: list, x: float) -> int:
    """Sign of p(x) for dyadic rational x, computed exactly.

    Scaled Horner: p(num/den) * den^deg is an integer with the sign of p(x).
    """
    num, den = float(x).as_integer_ratio()  # den is a power of two
    num, den = _int(num), _int(den)
    deg = _degree(p)
    dpow = [_int(1)]
    for _ in range(deg):
        dpow.append(dpow[-1] * den)
    acc = _int(p[-1])
    for i in range(deg - 1, -1, -1):
        acc = acc * num + p[i] * dpow[deg - i]
    return _sign(acc)
