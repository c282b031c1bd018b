"""Variable subsets as bit masks plus the colexicographic layer order.

A subset of the n variables (n <= 63) lives in the low n bits of an int,
so a set also fits the 8-byte key field of every on-disk record.  Layers
(all sets of one cardinality) are kept in colexicographic order
everywhere: queues, layer files, presence bitmaps.  For equal-size sets
colex order coincides with numeric order of the masks, which is what
makes plain key-sorting of fixed-width records sufficient.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator

import numpy as np

MAX_VARS = 63


def bits(mask: int) -> list[int]:
    """Indices of the set bits, ascending."""
    mask = int(mask)
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def top_bit(mask: int) -> int:
    """Index of the largest element; -1 for the empty set."""
    return int(mask).bit_length() - 1


def colex_rank(mask: int) -> int:
    """Position of a size-k set within the colex sequence of size-k sets.

    The rank is the combinadic value sum(C(c_i, i+1)) over the ascending
    elements c_0 < c_1 < ...; the empty set ranks 0.
    """
    mask = int(mask)
    rank = 0
    i = 0
    while mask:
        low = mask & -mask
        i += 1
        rank += math.comb(low.bit_length() - 1, i)
        mask ^= low
    return rank


def colex_unrank(rank: int, k: int, n: int) -> int:
    """Inverse of colex_rank for size-k subsets of n variables."""
    if k < 0 or k > n:
        raise ValueError(f"invalid cardinality {k} for {n} variables")
    if not 0 <= rank < math.comb(n, k):
        raise ValueError(f"rank {rank} out of range for C({n},{k})")
    mask = 0
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        mask |= 1 << c
        rank -= math.comb(c, i)
    return mask


def successors(mask: int, n: int) -> Iterator[tuple[int, int]]:
    """(x, mask | {x}) for every x outside the set, x ascending."""
    for x in range(n):
        if not (mask >> x) & 1:
            yield x, mask | (1 << x)


def layer_size(n: int, layer: int) -> int:
    """Number of sets in a layer: C(n, layer), exact integer arithmetic."""
    if not 0 <= layer <= n:
        raise ValueError(f"layer {layer} out of range for n={n}")
    return math.comb(n, layer)


def iter_layer(n: int, k: int) -> Iterator[int]:
    """All size-k subsets of n variables in colex (= ascending mask) order."""
    if k == 0:
        yield 0
        return
    mask = (1 << k) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        # Gosper's hack: next larger int with the same popcount.
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


@lru_cache(maxsize=None)
def _comb_table(n: int) -> np.ndarray:
    t = np.zeros((n + 1, n + 2), dtype=np.int64)
    for b in range(n + 1):
        for j in range(n + 2):
            t[b, j] = math.comb(b, j)
    return t


def colex_rank_batch(masks: np.ndarray, n: int) -> np.ndarray:
    """Vectorised colex_rank over an array of uint64 masks."""
    m = masks.astype(np.int64)
    comb = _comb_table(n)
    rank = np.zeros(len(m), dtype=np.int64)
    seen = np.zeros(len(m), dtype=np.int64)
    for b in range(n):
        member = (m >> b) & 1
        rank += member * comb[b, seen + 1]
        seen += member
    return rank


def top_bit_mask_batch(masks: np.ndarray) -> np.ndarray:
    """Per element, the mask of just the highest set bit (0 for empty)."""
    m = masks.astype(np.uint64).copy()
    for s in (1, 2, 4, 8, 16, 32):
        m |= m >> np.uint64(s)
    return m - (m >> np.uint64(1))
