"""Keyed, counter-addressed random bits.

Nothing in this package draws from a shared stream.  Every random quantity
is *addressed*: a 64-bit key plus one or two integer counters map to a
uniform value through a fixed avalanche function (the splitmix64 output
permutation).  Matrix bit (i, t) therefore depends only on (seed, i, t) and
is the same no matter how large the matrix is, in what order bits are
materialized, or how many threads are running.

Two-level addressing: ``mix64(key, a)`` derives a sub-key, and a second
application indexed by ``b`` produces the draw for cell (a, b).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN_INT = 0x9E3779B97F4A7C15
_GOLDEN = np.uint64(_GOLDEN_INT)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# 2^-53; top 53 bits of the mixed word become the uniform draw
_U53 = 1.0 / (1 << 53)


def mix64(key: int, counter: int) -> int:
    """Derive a 64-bit value from (key, counter); pure and collision-resistant."""
    z = (key + _GOLDEN_INT * (counter + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform_grid(key: int, rows, cols) -> np.ndarray:
    """(len(rows), len(cols)) uniforms in [0,1); cell (a,b) depends only on (key, rows[a], cols[b])."""
    rows = np.asarray(rows, dtype=np.uint64)
    cols = np.asarray(cols, dtype=np.uint64)
    row_keys = _finalize(np.uint64(key & _MASK64) + _GOLDEN * (rows + np.uint64(1)))
    z = _finalize(row_keys[:, None] + _GOLDEN * (cols[None, :] + np.uint64(1)))
    return (z >> np.uint64(11)).astype(np.float64) * _U53


def bernoulli_grid(key: int, rows, cols, prob: float) -> np.ndarray:
    """0/1 uint8 grid; cell (a,b) is 1 with probability ``prob``, addressed as in uniform_grid."""
    return (uniform_grid(key, rows, cols) < prob).astype(np.uint8)
