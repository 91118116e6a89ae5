"""Seedable, platform-portable random numbers for the distortion ladders.

Built on numpy's counter-based Philox4x64-10 bit generator with the key set
directly to ``(seed, stream)``, so the raw stream is pinned by the Philox
algorithm itself rather than by an implementation-defined seeding path.
Gaussians come from an explicit Box-Muller transform of the top 53 bits,
making the exact values reproducible from this file alone.
"""

import numpy as np

_U53 = np.uint64(11)
_INV53 = 2.0**-53


def raw_uint64(seed: int, n: int, stream: int = 0) -> np.ndarray:
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Philox(key=key).random_raw(n)


def uniform01(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """n doubles in [0, 1), one per 64-bit word."""
    return (raw_uint64(seed, n, stream) >> _U53) * _INV53


def gaussian(seed: int, n: int, stream: int = 0) -> np.ndarray:
    """n standard-normal doubles via Box-Muller on Philox uniforms."""
    m = (n + 1) // 2
    raw = raw_uint64(seed, 2 * m, stream)
    # u1 in (0, 1] so the log is finite; u2 in [0, 1)
    u1 = ((raw[0::2] >> _U53) + np.uint64(1)) * _INV53
    u2 = (raw[1::2] >> _U53) * _INV53
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * m, dtype=np.float64)
    z[0::2] = radius * np.cos(theta)
    z[1::2] = radius * np.sin(theta)
    return z[:n]
