"""Deterministic seed derivation for reproducible parallel Monte Carlo.

Every random quantity in the package is drawn from a counter-based Philox
stream whose 64-bit key is derived from a master seed by splitmix64 mixing.
Derived streams are independent of worker count and of the order in which
work items are scheduled.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One step of the splitmix64 mixing function (public-domain constants)."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Derive a 64-bit stream seed from a master seed and an index path.

    ``derive_seed(s, i, j)`` is a pure function of its arguments; distinct
    index paths give (with overwhelming probability) distinct streams.
    """
    h = splitmix64(master_seed & _MASK64)
    for ix in indices:
        h = splitmix64(h ^ ((ix & _MASK64) * 0xD1B54A32D192ED03 & _MASK64))
    return h


def philox(seed: int, *indices: int) -> np.random.Generator:
    """Counter-based generator for the stream addressed by (seed, *indices)."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *indices)))


def standard_normal_inverse_cdf(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normal variates by inverse CDF over open-interval uniforms.

    Uniforms are taken as bin centers (k + 0.5) * 2^-53 from the top 53 bits
    of the raw 64-bit Philox output, so 0 and 1 are never hit and the
    transformation is symmetric.
    """
    from scipy.special import ndtri

    k = rng.integers(0, 1 << 64, size=n, dtype=np.uint64) >> np.uint64(11)
    u = (k.astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)
