"""Norm calculus: lp norms, the clipped l2 norm and its dual, the block
partition norm, best s-term approximation error, and the sparsity scale.

The clipped norm is ``max(||y||_2, alpha * ||y||_inf)`` for ``alpha >= 1``;
its unit ball is the intersection of the l2 ball with the box of radius
``1/alpha``, so the dual norm is the support function of that body and is
computed exactly by water-filling over the sorted magnitudes.  (The often
quoted split ``||y_T||_2 + (1/alpha)*||y_{T^c}||_1`` with ``T`` cut at the
full l2 norm is only a two-sided approximation: it is the value of a
feasible decomposition, not of the optimal one.)  The partition
("dagger") norm is the maximum over assignments of coordinates into ``k``
blocks of the sum of block l2 norms; it brackets the dual clipped norm at
``alpha = sqrt(k)`` within ``[1/alpha, sqrt(2)/alpha]`` factors.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import DimensionError, ParamError, SizeError

_DAGGER_MAX_LEN = 14
_DAGGER_MAX_K = 4


def lp_norm(x, p: float) -> float:
    """The lp norm for p in [1, inf]; ``p = inf`` gives the max magnitude."""
    x = np.asarray(x, dtype=np.float64)
    if math.isinf(p):
        return float(np.max(np.abs(x))) if x.size else 0.0
    if p < 1:
        raise ParamError("lp_norm requires p >= 1")
    if p == 1:
        return float(np.sum(np.abs(x)))
    if p == 2:
        return float(np.linalg.norm(x))
    ax = np.abs(x)
    top = ax.max(initial=0.0)
    if top == 0.0:
        return 0.0
    return float(top * np.sum((ax / top) ** p) ** (1.0 / p))


def clipped_norm(y, alpha: float) -> float:
    """``max(||y||_2, alpha * ||y||_inf)``; requires ``alpha >= 1``."""
    if alpha < 1:
        raise ParamError("clipped norm requires alpha >= 1")
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        return 0.0
    return max(float(np.linalg.norm(y)), alpha * float(np.max(np.abs(y))))


def dual_clipped_norm(y, alpha: float) -> float:
    """Dual of the clipped norm: ``sup <y,z>`` over the unit ball
    ``{z : ||z||_2 <= 1, alpha*||z||_inf <= 1}``.

    The maximizer has the form ``z = clip(t*y, +-1/alpha)``: the largest
    magnitudes saturate the box, the rest align with ``y`` inside the l2
    ball.  With magnitudes sorted descending, the scale ``t`` for a clip
    count ``k`` is closed form; every candidate is rescaled into the box,
    making it a feasible lower bound, and the consistent count attains
    the supremum, so the maximum over candidates is exact.  When fewer
    than ``alpha**2`` entries are nonzero the box corner lies inside the
    l2 ball and the value is ``||y||_1 / alpha``; at ``alpha = 1`` no
    coordinate can clip and the value is exactly the l2 norm.
    """
    if alpha < 1:
        raise ParamError("dual clipped norm requires alpha >= 1")
    y = np.asarray(y, dtype=np.float64).ravel()
    if alpha == 1.0:
        # dual of the l2 norm; shares the l2 code path bit for bit
        return float(np.linalg.norm(y)) if y.size else 0.0
    ay = np.abs(y[y != 0.0])
    if ay.size == 0:
        return 0.0
    nnz = ay.size
    inv2 = 1.0 / (alpha * alpha)
    if nnz * inv2 <= 1.0:
        return float(ay.sum() / alpha)
    ay = np.sort(ay)[::-1]
    sq = ay * ay
    # suffix[k] = sum of sq[k:], prefix[k] = sum of ay[:k]
    suffix = np.concatenate((np.cumsum(sq[::-1])[::-1], [0.0]))
    prefix = np.concatenate(([0.0], np.cumsum(ay)))
    k_max = min(nnz - 1, int(math.ceil(alpha * alpha)) - 1)
    k = np.arange(k_max + 1)
    rem = 1.0 - k * inv2
    keep = rem > 0.0
    k, rem = k[keep], rem[keep]
    s_k = suffix[k]
    t = np.sqrt(rem / s_k)
    # box violation factor of each candidate; dividing restores feasibility
    f = np.maximum(1.0, alpha * t * ay[k])
    vals = (prefix[k] / alpha + t * s_k) / f
    return float(np.max(vals))


def dagger_norm_exact(y, k: int) -> float:
    """Exact partition norm: max over assignments of coordinates into
    ``k`` blocks (empty blocks allowed) of the sum of block l2 norms.

    The maximum is invariant under permuting block labels, so instead of
    walking all ``k**m`` labeled assignments the search enumerates
    unordered splits through a subset DP: pairwise block values for every
    coordinate subset, then one combine step for three and four blocks
    (a four-block partition is two two-block partitions of a bipartition).
    Guarded to ``len(y) <= 14`` and ``k <= 4``.
    """
    if k < 1 or k != int(k):
        raise ParamError("k must be a positive integer")
    k = int(k)
    y = np.asarray(y, dtype=np.float64).ravel()
    m = y.size
    if m > _DAGGER_MAX_LEN:
        raise SizeError(f"exact partition norm limited to length {_DAGGER_MAX_LEN}")
    if k > _DAGGER_MAX_K:
        raise SizeError(f"exact partition norm limited to k <= {_DAGGER_MAX_K}")
    if m == 0:
        return 0.0
    if k == 1:
        return float(np.linalg.norm(y))

    sq = (y * y).tolist()
    n_masks = 1 << m
    # sums[mask] = sum of squared entries indexed by the mask's bits
    sums = [0.0] * n_masks
    for mask in range(1, n_masks):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + sq[low.bit_length() - 1]
    roots = np.sqrt(np.asarray(sums))

    full = n_masks - 1
    if k == 2:
        # complement of mask i within [m] is full - i: reversed order
        return float(np.max(roots + roots[::-1]))

    # f2[mask]: best two-block value on the coordinates in mask
    f2 = roots.tolist()
    rt = f2[:]  # plain-list alias: scalar indexing is faster than ndarray
    for mask in range(1, n_masks):
        best = f2[mask]
        sub = (mask - 1) & mask
        while sub > mask ^ sub:
            val = rt[sub] + rt[mask ^ sub]
            if val > best:
                best = val
            sub = (sub - 1) & mask
        f2[mask] = best
    f2 = np.asarray(f2)

    if k == 3:
        return float(np.max(roots + f2[::-1]))
    return float(np.max(f2 + f2[::-1]))


def dagger_norm_lower(y, k: int) -> float:
    """Greedy feasible partition value, a lower bound of the exact norm.

    Squared entries are sorted descending and each assigned to the block
    with the smallest running squared sum.
    """
    if k < 1 or k != int(k):
        raise ParamError("k must be a positive integer")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        return 0.0
    k = int(k)
    if k == 1:
        return float(np.linalg.norm(y))
    sq = np.sort(y * y)[::-1]
    blocks = [0.0] * k
    heapq.heapify(blocks)
    for v in sq:
        heapq.heappush(blocks, heapq.heappop(blocks) + float(v))
    return float(sum(math.sqrt(b) for b in blocks))


def best_s_term_error(x, s: int, p: float) -> float:
    """lp norm of ``x`` with its ``s`` largest-magnitude entries zeroed.

    Magnitude ties keep the lowest-index entry in the dropped set (the
    value is tie-independent; only the kept support varies).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if not 0 <= s <= x.size:
        raise DimensionError("s must satisfy 0 <= s <= len(x)")
    if s == 0:
        return lp_norm(x, p)
    if s == x.size:
        return 0.0
    order = np.argsort(-np.abs(x), kind="stable")
    rest = x.copy()
    rest[order[:s]] = 0.0
    return lp_norm(rest, p)


def s_star(m: int, N: int) -> float:
    """Sparsity scale ``m / log(e N / m)``."""
    if not 1 <= m <= N:
        raise DimensionError("need 1 <= m <= N")
    return m / (1.0 + math.log(N / m))
