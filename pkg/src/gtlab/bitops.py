"""Row-major bit packing in 64-bit words.

Bit t of a row lives in word t // 64 at position t % 64, so OR and popcount
over whole rows are word-parallel.  Unused tail bits in the last word are
kept at zero by construction and must stay zero.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64
_SHIFTS = np.arange(WORD_BITS, dtype=np.uint64)


def n_words(n_bits: int) -> int:
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits) -> np.ndarray:
    """Pack a (..., T) array of {0,1} into (..., n_words(T)) uint64."""
    bits = np.asarray(bits, dtype=np.uint64)
    n_bits = bits.shape[-1]
    words = n_words(n_bits)
    padded = np.zeros(bits.shape[:-1] + (words * WORD_BITS,), dtype=np.uint64)
    padded[..., :n_bits] = bits
    chunks = padded.reshape(bits.shape[:-1] + (words, WORD_BITS))
    return (chunks << _SHIFTS).sum(axis=-1, dtype=np.uint64)


def unpack_bits(words, n_bits: int) -> np.ndarray:
    """Inverse of pack_bits; returns a (..., n_bits) uint8 array."""
    words = np.asarray(words, dtype=np.uint64)
    expanded = (words[..., :, None] >> _SHIFTS) & np.uint64(1)
    flat = expanded.reshape(words.shape[:-1] + (words.shape[-1] * WORD_BITS,))
    return flat[..., :n_bits].astype(np.uint8)


def popcount(words, axis=-1) -> np.ndarray:
    """Number of set bits along ``axis`` of a packed uint64 array."""
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).sum(axis=axis, dtype=np.int64)
