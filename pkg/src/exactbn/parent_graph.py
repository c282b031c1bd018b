"""Layer-by-layer propagation of best parent-set scores per variable.

A layer-l entry for variable x is a candidate set U (x not in U) with
the best score over all scored subsets of U and the subset attaining
it.  Expansion to layer l+1 combines, per successor S = U + {x'},
the inherited candidate (carried best of U) from every predecessor
with the direct score of using all of S, which is consumed exactly
once: when S is generated from its canonical predecessor S minus its
largest element.  That predecessor has the smallest colex rank of all
predecessors, so consumption walks the per-layer score file strictly
front to back whatever the duplicate-table spill schedule does.

Duplicates keep the smallest (score, parents-mask) record, so a direct
candidate (parents = S itself) loses ties to any inherited, smaller
parent set.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import storage, varset
from .errors import CorruptionError


class PresenceMap:
    """Bit array over the colex ranks of one layer.

    A set bit means the order graph generated (and did not prune) the
    corresponding subset, so the parent graphs must keep it.
    """

    def __init__(self, n: int, layer: int):
        self.n = n
        self.layer = layer
        self.size = math.comb(n, layer)
        self._bits = np.zeros((self.size + 7) // 8, dtype=np.uint8)

    def mark(self, masks: np.ndarray) -> None:
        ranks = varset.colex_rank_batch(masks, self.n)
        np.bitwise_or.at(self._bits, ranks >> 3, (1 << (ranks & 7)).astype(np.uint8))

    def contains(self, masks: np.ndarray) -> np.ndarray:
        ranks = varset.colex_rank_batch(masks, self.n)
        probed = self._bits[ranks >> 3] >> (ranks & 7).astype(np.uint8)
        return (probed & 1).astype(bool)

    def count(self) -> int:
        return int(np.bitwise_count(self._bits).sum())


class _ScoreStream:
    """Sequential reader of one (variable, layer) score file.

    Records are keyed by (canonical predecessor, added top variable);
    take_for(bound) hands out every record whose predecessor mask is
    <= bound, loading blocks as needed and validating the order.
    """

    def __init__(self, path: str | None, block: int):
        self._blocks = storage.iter_blocks(path, storage.SCORE_DTYPE, block) if path else None
        self._buf: np.ndarray | None = None
        self._preds: np.ndarray | None = None
        self._last_key = (-1, -1)

    def _load(self) -> bool:
        if self._blocks is None:
            return False
        chunk = next(self._blocks, None)
        if chunk is None:
            self._blocks = None
            return False
        preds = (chunk["mask"] ^ varset.top_bit_mask_batch(chunk["mask"])).astype(np.int64)
        masks = chunk["mask"].astype(np.int64)
        ordered = np.all(
            (preds[1:] > preds[:-1]) | ((preds[1:] == preds[:-1]) & (masks[1:] > masks[:-1]))
        )
        first = (int(preds[0]), int(masks[0]))
        if not ordered or first <= self._last_key:
            raise CorruptionError("score file out of consumption order")
        self._last_key = (int(preds[-1]), int(masks[-1]))
        if self._buf is not None and self._buf.size:
            self._buf = np.concatenate([self._buf, chunk])
            self._preds = np.concatenate([self._preds, preds])
        else:
            self._buf = chunk
            self._preds = preds
        return True

    def take_for(self, bound_mask: int) -> tuple[np.ndarray, np.ndarray]:
        """Records (and their predecessor masks) with predecessor <= bound."""
        while (self._buf is None or self._buf.size == 0 or self._preds[-1] <= bound_mask) and self._load():
            pass
        if self._buf is None or self._buf.size == 0:
            return np.empty(0, storage.SCORE_DTYPE), np.empty(0, np.int64)
        cut = int(np.searchsorted(self._preds, bound_mask, side="right"))
        out, preds = self._buf[:cut], self._preds[:cut]
        self._buf, self._preds = self._buf[cut:], self._preds[cut:]
        return out, preds


def init_layer0(x: int, score_layer0_path: str, out_path: str) -> None:
    """Seed variable x's graph with the single empty candidate set."""
    recs = storage.read_records(score_layer0_path, storage.SCORE_DTYPE)
    if len(recs) != 1 or recs["mask"][0] != 0:
        raise CorruptionError(f"{score_layer0_path}: expected exactly the empty-set score")
    out = np.zeros(1, storage.PARENT_DTYPE)
    out["score"] = recs["score"]
    storage.write_records(out_path, out)


def expand_layer(
    x: int,
    layer: int,
    n: int,
    in_path: str,
    score_path: str | None,
    presence: PresenceMap | None,
    out_path: str,
    max_size: int,
    tmpdir: str,
    block: int = storage.DEFAULT_BLOCK,
) -> int:
    """Expand variable x's parent graph from `layer` to layer+1.

    presence=None keeps every successor (pruning of the parent graphs
    disabled); otherwise successors absent from the map are dropped.
    Returns the number of entries in the new layer.
    """
    table = storage.DedupTable(
        storage.PARENT_DTYPE, max_size, tmpdir, f"pg-x{x}-l{layer + 1}", block=block
    )
    stream = _ScoreStream(score_path, block)
    for chunk in storage.iter_blocks(in_path, storage.PARENT_DTYPE, block):
        masks = chunk["mask"]
        # inherited candidates: carry (score, parents) of U up to U + {xp}
        for xp in range(n):
            if xp == x:
                continue
            sel = (masks >> np.uint64(xp)) & np.uint64(1) == 0
            if not sel.any():
                continue
            cand = chunk[sel].copy()
            cand["mask"] = cand["mask"] | np.uint64(1 << xp)
            if presence is not None:
                cand = cand[presence.contains(cand["mask"])]
            table.add(cand)
        if score_path is None:
            continue
        # direct candidates: scores of successors generated canonically here
        recs, preds = stream.take_for(int(masks[-1]))
        expected = _canonical_successor_count(masks, x, n)
        if recs.size or expected:
            pos = np.searchsorted(masks, preds.astype(np.uint64))
            pos_c = np.minimum(pos, len(masks) - 1)
            hit = masks[pos_c] == preds.astype(np.uint64)
            if int(hit.sum()) != expected:
                raise CorruptionError(
                    f"score file for X{x} layer {layer + 1}: "
                    f"matched {int(hit.sum())} records, expected {expected}"
                )
            direct = recs[hit]
            cand = np.empty(len(direct), storage.PARENT_DTYPE)
            cand["mask"] = direct["mask"]
            cand["score"] = direct["score"]
            cand["parents"] = direct["mask"]
            if presence is not None:
                cand = cand[presence.contains(cand["mask"])]
            table.add(cand)
    writer = storage.ChunkWriter(out_path)
    try:
        _, unique = table.finish(writer)
    finally:
        writer.close()
    return unique


def _canonical_successor_count(masks: np.ndarray, x: int, n: int) -> int:
    """How many score records this block must consume: for each entry U,
    one per variable above max(U) other than x."""
    top = varset.top_bit_mask_batch(masks)
    top_idx = np.where(masks == 0, -1, np.log2(np.maximum(top, 1)).astype(np.int64))
    return int(((n - 1) - top_idx - (top_idx < x)).sum())
