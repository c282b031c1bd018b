"""Local MDL scores and the disk-resident score cache.

The local score of variable x with parent set U decomposes as

    score(x|U) = H(x|U) + (log2 N / 2) * K(x|U)
    H(x|U)     = T(U) - T(U | {x})
    K(x|U)     = (r_x - 1) * prod_{j in U} r_j

where T(S) = sum over the observed instantiations s of S of N_s*log2(N_s)
(T of the empty set is N*log2(N)).  One depth-limited depth-first sweep
of the instantiation lattice computes T for every set up to size
max_parents+1 by refining a partition of the record index array; zero
counts never appear, and a subtree whose partition is all singletons
contributes exactly 0 and is skipped.

Scores are written to one file per (variable, layer), ordered by the
key (colex rank of U minus its largest element, largest element): the
exact order in which the parent-graph expansion of the previous layer
consumes them, so that file is read once, front to back.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import storage, varset
from .errors import DataError
from .dataset import Dataset


def max_parents(num_records: int) -> int:
    """Largest parent-set size worth scoring: floor(log2(2N / log2 N)).

    Computed in floating point, then corrected against the exact integer
    condition N**(2**k) <= 2**(2N) so boundary cases cannot drift.
    """
    N = int(num_records)
    if N < 2:
        raise DataError(f"need at least 2 records, got {N}")
    k = int(math.floor(math.log2(2 * N / math.log2(N))))
    two_2n = 1 << (2 * N)
    while k > 1 and N ** (1 << k) > two_2n:
        k -= 1
    while N ** (1 << (k + 1)) <= two_2n:
        k += 1
    return k


def mdl_score_direct(x: int, parents_mask: int, data: Dataset, log_base: float = 2.0) -> float:
    """Score one (variable, parent set) pair by plain counting.

    Independent of the sweep: encodes the joint instantiation of
    {x} + parents per record, tallies it, and sums the two entropy
    terms directly.  0 * log 0 never arises because only observed
    instantiations are tallied.
    """
    if (parents_mask >> x) & 1:
        raise ValueError(f"variable {x} cannot be its own parent")
    cols = data.columns
    r = data.arities
    N = data.num_records
    code = cols[x].copy()
    stride = r[x]
    for j in varset.bits(parents_mask):
        code += cols[j] * stride
        stride *= r[j]
    if stride <= (1 << 22):
        counts = np.bincount(code, minlength=stride)
        joint = counts[counts > 0]
        pcounts = np.bincount(code // r[x], minlength=stride // r[x])
        marg = pcounts[pcounts > 0]
    else:
        _, joint = np.unique(code, return_counts=True)
        _, marg = np.unique(code // r[x], return_counts=True)
    log = np.log2 if log_base == 2.0 else (lambda v: np.log(v) / math.log(log_base))
    entropy = float((marg * log(marg)).sum() - (joint * log(joint)).sum())
    k_param = (r[x] - 1) * math.prod(r[j] for j in varset.bits(parents_mask))
    half_log_n = math.log(N, log_base) / 2.0
    return entropy + half_log_n * k_param


def _count_stat_sweep(data: Dataset, depth: int) -> dict[int, float]:
    """T(S) for every variable set S with |S| <= depth and T(S) != 0.

    Depth-first over sets built by appending variables in ascending
    index order; each node carries the partition of the record array
    into instantiation groups as a compact group-id vector.
    """
    n = data.n
    N = data.num_records
    cols = [c.astype(np.int64) for c in data.columns]
    r = data.arities
    stats: dict[int, float] = {0: float(N * math.log2(N))}

    def recurse(mask: int, last: int, gids: np.ndarray, ngroups: int, size: int) -> None:
        for j in range(last + 1, n):
            code = gids * r[j] + cols[j]
            counts = np.bincount(code, minlength=ngroups * r[j])
            nz = np.flatnonzero(counts)
            c = counts[nz]
            child = mask | (1 << j)
            t = float((c * np.log2(c)).sum())
            if t != 0.0:
                stats[child] = t
            if size + 1 < depth and c.max() > 1:
                relabel = np.empty(ngroups * r[j], dtype=np.int64)
                relabel[nz] = np.arange(len(nz))
                recurse(child, j, relabel[code], len(nz), size + 1)

    if depth > 0:
        recurse(0, -1, np.zeros(N, dtype=np.int64), 1, 0)
    return stats


@dataclass
class ScoreCache:
    """Handle to the on-disk score files: scores/X{i}/layer{l}.bin."""

    root: str
    n: int
    num_records: int
    max_parents: int

    def layer_path(self, x: int, layer: int) -> str:
        return os.path.join(self.root, f"X{x}", f"layer{layer}.bin")

    def has_layer(self, x: int, layer: int) -> bool:
        return layer <= self.max_parents and os.path.exists(self.layer_path(x, layer))

    def delete_layer(self, x: int, layer: int) -> None:
        path = self.layer_path(x, layer)
        if os.path.exists(path):
            os.remove(path)

    def load_table(self, x: int) -> dict[int, float]:
        """All cached scores for one variable as {parent mask: score}."""
        table: dict[int, float] = {}
        for layer in range(self.max_parents + 1):
            path = self.layer_path(x, layer)
            if not os.path.exists(path):
                continue
            recs = storage.read_records(path, storage.SCORE_DTYPE)
            table.update(zip(recs["mask"].tolist(), recs["score"].tolist()))
        return table

    def write_meta(self) -> None:
        meta = {
            "n": self.n,
            "N": self.num_records,
            "max_parents": self.max_parents,
            "log_base": 2,
        }
        with open(os.path.join(self.root, "meta.json"), "w") as f:
            json.dump(meta, f, indent=2)

    @classmethod
    def open(cls, root: str) -> "ScoreCache":
        with open(os.path.join(root, "meta.json")) as f:
            meta = json.load(f)
        return cls(root, meta["n"], meta["N"], meta["max_parents"])


def compute_scores(data: Dataset, scores_dir: str) -> tuple[ScoreCache, np.ndarray]:
    """Score every (x, U) with |U| <= max_parents; write the cache files.

    Returns the cache handle and the per-variable global best scores
    (the heuristic's lower-bound table).  Files for layer l hold the
    size-l parent sets of x in consumption order; each score equals the
    direct computation to within accumulation rounding.
    """
    n = data.n
    N = data.num_records
    mp = min(max_parents(N), n - 1)
    depth = min(mp + 1, n)
    stats = _count_stat_sweep(data, depth)

    r = data.arities
    rx_minus_1 = [float(a - 1) for a in r]
    half_log_n = math.log2(N) / 2.0
    lb = np.full(n, np.inf)

    os.makedirs(scores_dir, exist_ok=True)
    for x in range(n):
        os.makedirs(os.path.join(scores_dir, f"X{x}"), exist_ok=True)

    cache = ScoreCache(scores_dir, n, N, mp)
    for layer in range(mp + 1):
        per_var = [
            np.empty(math.comb(n - 1, layer), dtype=storage.SCORE_DTYPE) for _ in range(n)
        ]
        fill = [0] * n
        for _, parent_set, set_stat, radix in _layer_sets(data, layer, stats):
            m = parent_set
            for x in range(n):
                if (m >> x) & 1:
                    continue
                score = (
                    set_stat
                    - stats.get(m | (1 << x), 0.0)
                    + half_log_n * rx_minus_1[x] * radix
                )
                rec = per_var[x]
                i = fill[x]
                rec[i] = (m, score)
                fill[x] = i + 1
        for x in range(n):
            assert fill[x] == len(per_var[x])
            if len(per_var[x]):
                lo = per_var[x]["score"].min()
                if lo < lb[x]:
                    lb[x] = lo
            storage.write_records(cache.layer_path(x, layer), per_var[x])
    cache.write_meta()
    return cache, lb


def _layer_sets(data: Dataset, layer: int, stats: dict[int, float]):
    """Size-`layer` sets in consumption order: canonical predecessor in
    colex order, then the added (largest) variable ascending.

    Yields (predecessor mask, set mask, T(set), prod of arities in set).
    """
    n = data.n
    r = data.arities
    if layer == 0:
        yield 0, 0, stats[0], 1.0
        return
    for pred in varset.iter_layer(n, layer - 1):
        radix_pred = 1.0
        m = pred
        while m:
            low = m & -m
            radix_pred *= r[low.bit_length() - 1]
            m ^= low
        for top in range(varset.top_bit(pred) + 1, n):
            full = pred | (1 << top)
            yield pred, full, stats.get(full, 0.0), radix_pred * r[top]


def best_scores(cache: ScoreCache) -> np.ndarray:
    """Recompute the lower-bound table by scanning the cache files."""
    lb = np.full(cache.n, np.inf)
    for x in range(cache.n):
        for layer in range(cache.max_parents + 1):
            path = cache.layer_path(x, layer)
            if not os.path.exists(path):
                continue
            recs = storage.read_records(path, storage.SCORE_DTYPE)
            if recs.size:
                lb[x] = min(lb[x], float(recs["score"].min()))
    return lb
