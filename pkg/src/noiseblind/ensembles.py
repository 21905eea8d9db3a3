"""Measurement matrices, planted sparse signals, and noise models.

Matrix entries are drawn i.i.d. in row-major order from a counter-based
stream keyed by the seed: entry ``(j, i)`` is the transform of uniform
draw ``j*N + i``, so any block of rows can be regenerated independently
of traversal order (bit-for-bit, including under parallel generation).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import distributions as dist_mod
from . import rng
from .distributions import DistributionSpec
from .errors import DimensionError, ParamError

_HEADER = struct.Struct("<QQ")  # m, N as little-endian uint64


@dataclass(frozen=True)
class MeasurementMatrix:
    """An m-by-N sensing matrix together with its provenance.

    ``row_scaled`` records whether the 1/sqrt(m) factor is applied.
    ``dist``/``seed`` may be ``None`` for matrices loaded from a file or
    wrapped from raw arrays; sampled matrices always carry them, and the
    triple (dist, seed, row_scaled) reproduces ``entries`` bit-for-bit.
    """

    entries: np.ndarray
    m: int
    N: int
    dist: DistributionSpec | None
    row_scaled: bool
    seed: int | None

    def __post_init__(self):
        if self.m < 1 or self.m > self.N:
            raise DimensionError("need 1 <= m <= N")
        if self.entries.shape != (self.m, self.N):
            raise DimensionError("entries shape does not match (m, N)")


@dataclass(frozen=True)
class PlantedSignal:
    """Unit-norm signal with exactly ``s`` nonzeros on ``support``."""

    x0: np.ndarray
    support: np.ndarray  # sorted indices, length s
    s: int


def matrix_entries(A) -> np.ndarray:
    """Entries of a MeasurementMatrix, or a raw array passed through."""
    if isinstance(A, MeasurementMatrix):
        return A.entries
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("matrix must be two-dimensional")
    return arr


def from_array(entries, row_scaled: bool = False) -> MeasurementMatrix:
    """Wrap a raw array (no sampling provenance)."""
    arr = np.asarray(entries, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("matrix must be two-dimensional")
    return MeasurementMatrix(
        entries=arr, m=arr.shape[0], N=arr.shape[1], dist=None,
        row_scaled=row_scaled, seed=None,
    )


def sample_matrix(
    dist: DistributionSpec, m: int, N: int, row_scaled: bool, seed: int
) -> MeasurementMatrix:
    """i.i.d. matrix with entries addressed by counter position.

    Entry ``(j, i)`` consumes uniform ``j*N + i`` of the matrix stream for
    ``seed``; ``row_scaled`` multiplies everything by 1/sqrt(m).
    """
    if m < 1 or m > N:
        raise DimensionError("need 1 <= m <= N")
    u = rng.uniform_block(seed, rng.TAG_MATRIX, 0, m * N)
    entries = dist_mod.from_uniform(dist, u).reshape(m, N)
    if row_scaled:
        entries = entries / np.sqrt(m)
    return MeasurementMatrix(
        entries=entries, m=m, N=N, dist=dist, row_scaled=row_scaled, seed=seed
    )


def sample_matrix_rows(
    dist: DistributionSpec, m: int, N: int, row_scaled: bool, seed: int,
    row_start: int, row_stop: int,
) -> np.ndarray:
    """Rows ``[row_start, row_stop)`` of the matrix ``sample_matrix`` would
    produce, generated without the preceding rows."""
    if not 0 <= row_start <= row_stop <= m:
        raise DimensionError("row range out of bounds")
    count = (row_stop - row_start) * N
    u = rng.uniform_block(seed, rng.TAG_MATRIX, row_start * N, count)
    rows = dist_mod.from_uniform(dist, u).reshape(row_stop - row_start, N)
    if row_scaled:
        rows = rows / np.sqrt(m)
    return rows


def sample_sparse_vector(N: int, s: int, seed: int) -> PlantedSignal:
    """Planted signal: uniform random support of size ``s`` via a partial
    Fisher-Yates shuffle, nonzeros standard normal projected to the unit
    sphere."""
    if not 1 <= s <= N:
        raise DimensionError("need 1 <= s <= N")
    u = rng.uniform_block(seed, rng.TAG_SIGNAL, 0, 2 * s)
    pool = np.arange(N)
    for i in range(s):
        j = i + int(u[i] * (N - i))
        pool[i], pool[j] = pool[j], pool[i]
    support = pool[:s]
    values = dist_mod.from_uniform(dist_mod.gaussian(), u[s:])
    nrm = np.linalg.norm(values)
    if nrm == 0.0:  # pragma: no cover - measure-zero guard
        values[0] = 1.0
        nrm = 1.0
    x0 = np.zeros(N)
    x0[support] = values / nrm
    return PlantedSignal(x0=x0, support=np.sort(support), s=s)


def sample_spherical_noise(m: int, radius: float, seed: int) -> np.ndarray:
    """Uniform on the sphere of the given radius (exactly that norm)."""
    if radius <= 0:
        raise ParamError("radius must be positive")
    u = rng.uniform_block(seed, rng.TAG_NOISE, 0, m)
    w = dist_mod.from_uniform(dist_mod.gaussian(), u)
    return w * (radius / np.linalg.norm(w))


def sample_heavy_noise(m: int, radius: float, alpha: float, seed: int) -> np.ndarray:
    """Exponential-type noise: i.i.d. tail-exponent-``alpha`` entries,
    renormalized so the vector has norm exactly ``radius``.

    Entries are drawn unnormalized; renormalization makes the law
    identical either way and dodges the huge variance constants at small
    ``alpha``.
    """
    if radius <= 0:
        raise ParamError("radius must be positive")
    if alpha <= 0:
        raise ParamError("alpha must be positive")
    spec = dist_mod.exp_type(1.0 / alpha, normalized=False)
    u = rng.uniform_block(seed, rng.TAG_NOISE, 0, m)
    w = dist_mod.from_uniform(spec, u)
    return w * (radius / np.linalg.norm(w))


def save_matrix(A, path) -> None:
    """Binary layout: 16-byte header (m, N as little-endian uint64), then
    the entries as little-endian float64 in row-major order."""
    arr = matrix_entries(A)
    m, N = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(m, N))
        fh.write(payload.tobytes())


def load_matrix(path) -> MeasurementMatrix:
    """Read the binary layout written by :func:`save_matrix`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DimensionError(f"{path}: truncated matrix file")
    m, N = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 8 * m * N
    if len(raw) != expected:
        raise DimensionError(
            f"{path}: expected {expected} bytes for a {m}x{N} matrix, got {len(raw)}"
        )
    entries = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(m, N).copy()
    return MeasurementMatrix(
        entries=entries, m=int(m), N=int(N), dist=None, row_scaled=False, seed=None
    )
