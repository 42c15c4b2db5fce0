"""Multi-indices of bounded total degree and their multinomial weights.

The coefficient layout used throughout the package is a fixed graded
lexicographic enumeration of {j in N^m : |j| <= d}: indices are ordered by
total degree, ties broken lexicographically.  This gives O(1) rank lookups
and a deterministic serialization order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of an m-variate monomial under a degree-d cap.

    In affine form ``exponents`` has m entries and sum <= d; the homogeneous
    form is obtained by prepending the slack exponent d - |j| for the
    auxiliary variable.
    """

    exponents: tuple[int, ...]
    degree_bound: int

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")
        if self.total_degree > self.degree_bound:
            raise ValueError(
                f"|j|={self.total_degree} exceeds degree bound {self.degree_bound}"
            )

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)

    def multinomial_weight(self) -> int:
        """d! / (j_1! ... j_m! (d - |j|)!), the KSS coefficient variance."""
        d = self.degree_bound
        w = factorial(d) // factorial(d - self.total_degree)
        for e in self.exponents:
            w //= factorial(e)
        return w

    def homogenized(self) -> tuple[int, ...]:
        """Exponents with the slack variable prepended (sum == d exactly)."""
        return (self.degree_bound - self.total_degree,) + self.exponents


@lru_cache(maxsize=None)
def graded_lex_indices(m: int, d: int) -> tuple[tuple[int, ...], ...]:
    """All exponent vectors j in N^m with |j| <= d in graded-lex order."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out: list[tuple[int, ...]] = []
    for deg in range(d + 1):
        out.extend(_compositions(deg, m))
    assert len(out) == comb(d + m, m)
    return tuple(out)


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Weak compositions of `total` into `parts` parts, lexicographic."""
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    out.sort()
    return out


@lru_cache(maxsize=None)
def index_rank(m: int, d: int) -> dict[tuple[int, ...], int]:
    """Rank of each exponent vector within the graded-lex enumeration."""
    return {j: r for r, j in enumerate(graded_lex_indices(m, d))}


@lru_cache(maxsize=None)
def multinomial_weights(m: int, d: int) -> tuple[int, ...]:
    """Multinomial weights in graded-lex order (KSS coefficient variances)."""
    return tuple(
        MultiIndex(j, d).multinomial_weight() for j in graded_lex_indices(m, d)
    )
