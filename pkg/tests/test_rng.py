"""Counter-based stream contracts: random access, tag separation, seed derivation."""

import numpy as np
import pytest

from noiseblind.rng import (
    TAG_MATRIX,
    TAG_NOISE,
    TAG_PROBE,
    TAG_SIGNAL,
    derive_seed,
    stream,
    uniform_block,
)


def test_stream_is_deterministic():
    a = stream(123, TAG_MATRIX).random(32)
    b = stream(123, TAG_MATRIX).random(32)
    assert np.array_equal(a, b)


def test_tags_separate_streams():
    seen = []
    for tag in (TAG_MATRIX, TAG_SIGNAL, TAG_NOISE, TAG_PROBE):
        seen.append(stream(7, tag).random(16))
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            assert not np.array_equal(seen[i], seen[j])


def test_uniform_block_matches_sequential_prefix():
    # random access must agree bitwise with the sequential stream
    for seed in range(5):
        full = stream(seed, TAG_MATRIX).random(64)
        for start, count in ((0, 64), (1, 7), (4, 4), (13, 23), (63, 1), (10, 0)):
            block = uniform_block(seed, TAG_MATRIX, start, count)
            assert np.array_equal(block, full[start:start + count])


def test_uniform_block_rejects_negative():
    with pytest.raises(ValueError):
        uniform_block(0, TAG_MATRIX, -1, 4)
    with pytest.raises(ValueError):
        uniform_block(0, TAG_MATRIX, 0, -4)


def test_derive_seed_is_frozen_across_runs():
    # SHA-256 of "11|gaussian|150|0", first 8 bytes little-endian; value
    # recomputed here through hashlib as an independent oracle
    import hashlib

    expected = int.from_bytes(
        hashlib.sha256(b"11|gaussian|150|0").digest()[:8], "little"
    )
    assert derive_seed(11, "gaussian", 150, 0) == expected


def test_derive_seed_distinguishes_parts():
    assert derive_seed(1, 23) != derive_seed(12, 3)
    assert derive_seed("a", "b") != derive_seed("ab")
    assert derive_seed(0) != derive_seed(1)
    assert 0 <= derive_seed(0) < 2**64
