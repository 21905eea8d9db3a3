"""Counter-based random streams.

Every random object in the package is drawn from a Philox counter-based
stream addressed by ``(seed, tag)``.  The tag separates the streams used
for different object kinds (matrix entries, signal supports, noise
vectors, probe directions) so that a single integer seed can safely feed
several samplers.  Within a stream, draw ``i`` is a fixed function of
``(seed, tag, i)``: any contiguous block of uniforms can be regenerated
without producing its prefix, which makes sub-ranges (single matrix rows,
parallel workers) bit-for-bit reproducible regardless of traversal order.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1

# Stream tags.  Distinct per object kind; values are arbitrary but frozen.
TAG_MATRIX = 0x4D41
TAG_SIGNAL = 0x5349
TAG_NOISE = 0x4E4F
TAG_PROBE = 0x5052
TAG_GENERIC = 0x4745

# Philox emits 4 64-bit words per counter increment; one uniform double
# consumes one word, so draw i lives in counter block i // 4.
_BLOCK = 4


def stream(seed: int, tag: int = TAG_GENERIC) -> Generator:
    """Sequential generator for the stream addressed by ``(seed, tag)``."""
    key = np.array([seed & _MASK64, tag & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


def uniform_block(seed: int, tag: int, start: int, count: int) -> np.ndarray:
    """Uniforms ``[start, start + count)`` of stream ``(seed, tag)``.

    Bitwise identical to ``stream(seed, tag).random(start + count)[start:]``
    but generated without materialising the prefix.
    """
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    key = np.array([seed & _MASK64, tag & _MASK64], dtype=np.uint64)
    first_block = start // _BLOCK
    last_block = (start + count + _BLOCK - 1) // _BLOCK
    bg = Philox(key=key, counter=[first_block, 0, 0, 0])
    draws = Generator(bg).random((last_block - first_block) * _BLOCK)
    offset = start - first_block * _BLOCK
    return draws[offset:offset + count]


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of printable parts.

    Uses SHA-256 of the ``|``-joined decimal/string rendering, so the
    derivation is identical across processes, platforms and runs (unlike
    the builtin ``hash``).
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
