"""Frontier breadth-first branch and bound over the subset lattice.

A layer-l entry is a variable subset U with its cost f = g + h, where g
is the best sum of edge scores reaching U and h the sum of each missing
variable's global best score (a consistent lower bound).  Expanding U
by leaf x costs the best parent-set score of x over candidates U, read
in lockstep from x's parent-graph layer; successors with f above the
upper bound are pruned, duplicates keep the cheapest record, survivors
seed the presence map that gates the parent graphs' next layer and
leave one (leaf, leaf parents) reconstruction record behind.  Only the
current and next layer exist at any time; reconstruction records are
the single per-layer remnant.
"""

from __future__ import annotations

import os
import shutil
import time
from dataclasses import dataclass, field

import numpy as np

from . import storage, varset
from .bounds import Network, greedy_upper_bound, network_score, topological_order
from .dataset import Dataset
from .errors import CorruptionError, DataError, SearchError
from .parent_graph import PresenceMap
from . import parent_graph
from .scorer import compute_scores

STATS_COLUMNS = ("layer", "generated", "pruned", "surviving", "disk_bytes")


@dataclass
class SearchStats:
    """Per-layer search counters plus total wall time.

    Per layer: generated = pruned + surviving + duplicates merged away.
    disk_bytes is the total size of the work directory when the layer
    finished (the rise-and-fall profile of the frontier).
    """

    layers: list[dict] = field(default_factory=list)
    wall_time: float = 0.0

    def to_csv(self) -> str:
        lines = [",".join(STATS_COLUMNS)]
        for row in self.layers:
            lines.append(",".join(str(row[c]) for c in STATS_COLUMNS))
        return "\n".join(lines) + "\n"


def heuristic(mask: int, lb: np.ndarray) -> float:
    """Sum of global best scores over the variables outside the set."""
    n = len(lb)
    outside = [x for x in range(n) if not (mask >> x) & 1]
    return float(np.sum(lb[outside]))


class _LayerCursor:
    """Lockstep reader of one parent-graph layer file.

    lookup() is called with ascending key batches; entries for sets the
    order graph never asks about (possible only when parent-graph
    pruning is off) are skipped.  A requested key that is absent means
    the queues lost sync: corruption.
    """

    def __init__(self, path: str, block: int):
        self._blocks = storage.iter_blocks(path, storage.PARENT_DTYPE, block)
        self._buf: np.ndarray | None = None

    def lookup(self, masks: np.ndarray) -> np.ndarray:
        need_last = int(masks[-1])
        parts = [] if self._buf is None or not self._buf.size else [self._buf]
        while not parts or int(parts[-1]["mask"][-1]) < need_last:
            chunk = next(self._blocks, None)
            if chunk is None:
                break
            parts.append(chunk)
        buf = np.concatenate(parts) if parts else np.empty(0, storage.PARENT_DTYPE)
        pos = np.searchsorted(buf["mask"], masks)
        pos_c = np.minimum(pos, max(len(buf) - 1, 0))
        if buf.size == 0 or not np.all(buf["mask"][pos_c] == masks):
            raise CorruptionError("parent-graph queue desynchronized from order graph")
        out = buf[pos_c]
        cut = int(np.searchsorted(buf["mask"], np.uint64(need_last), side="right"))
        self._buf = buf[cut:]
        return out


def expand_layer(
    layer: int,
    n: int,
    in_path: str,
    parent_paths: list[str],
    lb: np.ndarray,
    upper: float,
    max_size: int,
    tmpdir: str,
    out_path: str,
    recon_path: str,
    build_presence: bool,
    block: int = storage.DEFAULT_BLOCK,
) -> tuple[dict, PresenceMap | None]:
    """Expand order-graph layer -> layer+1.

    Writes the surviving (set, cost) entries and their reconstruction
    records, and returns the layer counters plus the presence map for
    the new layer (when requested).
    """
    cursors = [_LayerCursor(p, block) for p in parent_paths]
    table = storage.DedupTable(storage.OPEN_DTYPE, max_size, tmpdir, f"og-l{layer + 1}", block=block)
    generated = 0
    pruned = 0
    for chunk in storage.iter_blocks(in_path, storage.ORDER_DTYPE, block):
        masks = chunk["mask"]
        costs = chunk["cost"]
        for x in range(n):
            sel = (masks >> np.uint64(x)) & np.uint64(1) == np.uint64(0)
            if not sel.any():
                continue
            um = masks[sel]
            entry = cursors[x].lookup(um)
            edge = entry["score"]
            if np.any(edge < lb[x]):
                raise SearchError(
                    f"consistency violated: a best score for X{x} fell below its global bound"
                )
            s = costs[sel] + (edge - lb[x])
            generated += len(s)
            keep = s <= upper
            kept = int(keep.sum())
            pruned += len(s) - kept
            if not kept:
                continue
            cand = np.empty(kept, storage.OPEN_DTYPE)
            cand["mask"] = um[keep] | np.uint64(1 << x)
            cand["cost"] = s[keep]
            cand["leaf"] = x
            cand["parents"] = entry["parents"][keep]
            table.add(cand)

    presence = PresenceMap(n, layer + 1) if build_presence else None
    order_w = storage.ChunkWriter(out_path)
    recon_w = storage.ChunkWriter(recon_path)

    def write(chunk: np.ndarray) -> None:
        entries = np.empty(len(chunk), storage.ORDER_DTYPE)
        entries["mask"] = chunk["mask"]
        entries["cost"] = chunk["cost"]
        order_w(entries)
        recs = np.empty(len(chunk), storage.RECON_DTYPE)
        recs["mask"] = chunk["mask"]
        recs["leaf"] = chunk["leaf"]
        recs["parents"] = chunk["parents"]
        recon_w(recs)
        if presence is not None:
            presence.mark(chunk["mask"])

    try:
        _, surviving = table.finish(write)
    finally:
        order_w.close()
        recon_w.close()
    row = {
        "layer": layer + 1,
        "generated": generated,
        "pruned": pruned,
        "surviving": surviving,
        "disk_bytes": 0,
    }
    return row, presence


def reconstruct(recon_dir: str, n: int) -> tuple[int, ...]:
    """Walk the per-layer reconstruction records back from the goal.

    At the full set, its record names the last leaf and that leaf's
    parents; recurse on the set minus the leaf until empty.
    """
    parents = [0] * n
    mask = (1 << n) - 1
    for layer in range(n, 0, -1):
        path = os.path.join(recon_dir, f"layer{layer}.bin")
        if not os.path.exists(path):
            raise CorruptionError(f"missing reconstruction file for layer {layer}")
        recs = storage.read_records(path, storage.RECON_DTYPE)
        pos = int(np.searchsorted(recs["mask"], np.uint64(mask)))
        if pos >= len(recs) or int(recs["mask"][pos]) != mask:
            raise CorruptionError(f"no reconstruction record for subset {mask:#x} in layer {layer}")
        leaf = int(recs["leaf"][pos])
        pmask = int(recs["parents"][pos])
        if not (mask >> leaf) & 1 or pmask & ~(mask & ~(1 << leaf)):
            raise CorruptionError(f"invalid reconstruction record for subset {mask:#x}")
        parents[leaf] = pmask
        mask &= ~(1 << leaf)
    return tuple(parents)


def _disk_usage(root: str) -> int:
    total = 0
    for dirpath, _, files in os.walk(root):
        for name in files:
            total += os.path.getsize(os.path.join(dirpath, name))
    return total


def _fresh_dir(path: str) -> str:
    if os.path.isdir(path):
        shutil.rmtree(path)
    os.makedirs(path)
    return path


def learn(
    data: Dataset,
    workdir: str,
    *,
    max_size: int = 1_000_000,
    upper: float | None = None,
    parent_pruning: bool = True,
    beam: int = 5,
    max_iters: int = 1000,
    seed: int = 0,
    block: int = storage.DEFAULT_BLOCK,
    layer_hook=None,
) -> tuple[Network, SearchStats]:
    """Learn the optimal-score network for a discrete dataset.

    Pipeline: score every admissible (variable, parent set); find an
    upper bound by greedy search (unless one is supplied); then expand
    the order graph layer by layer, advancing every parent graph one
    layer behind it under the presence map, deleting each layer as soon
    as its consumers are done.  The goal entry's cost is the optimal
    score; the network is rebuilt from the reconstruction records.

    layer_hook(layer, workdir), when given, runs after each layer
    finishes (for instrumentation).
    """
    t0 = time.perf_counter()
    n = data.n
    if not 1 <= n <= varset.MAX_VARS:
        raise DataError(f"need between 1 and {varset.MAX_VARS} variables, got {n}")
    scores_dir = os.path.join(workdir, "scores")
    parents_dir = os.path.join(workdir, "parents")
    order_dir = os.path.join(workdir, "order")
    recon_dir = os.path.join(workdir, "recon")
    tmpdir = os.path.join(workdir, "tmp")
    for d in (scores_dir, parents_dir, order_dir, recon_dir, tmpdir):
        _fresh_dir(d)

    cache, lb = compute_scores(data, scores_dir)
    h0 = float(np.sum(lb))

    if upper is None:
        tables = [cache.load_table(x) for x in range(n)]
        seed_net = greedy_upper_bound(tables, n, cache.max_parents, beam, max_iters, seed)
        # Telescope the bound through the same arithmetic the search
        # uses, so rounding can never prune the incumbent's own path.
        upper_val = h0
        for v in topological_order(seed_net.parents):
            upper_val = upper_val + (tables[v][seed_net.parents[v]] - float(lb[v]))
        del tables
    else:
        upper_val = float(upper)

    def parent_path(x: int, layer: int) -> str:
        return os.path.join(parents_dir, f"X{x}", f"layer{layer}.bin")

    for x in range(n):
        os.makedirs(os.path.join(parents_dir, f"X{x}"))
        parent_graph.init_layer0(x, cache.layer_path(x, 0), parent_path(x, 0))
        cache.delete_layer(x, 0)

    start = np.zeros(1, storage.ORDER_DTYPE)
    start["cost"] = h0
    storage.write_records(os.path.join(order_dir, "layer0.bin"), start)

    stats = SearchStats()
    stats.layers.append(
        {"layer": 0, "generated": 1, "pruned": 0, "surviving": 1, "disk_bytes": _disk_usage(workdir)}
    )

    for layer in range(n):
        in_path = os.path.join(order_dir, f"layer{layer}.bin")
        out_path = os.path.join(order_dir, f"layer{layer + 1}.bin")
        recon_path = os.path.join(recon_dir, f"layer{layer + 1}.bin")
        need_presence = parent_pruning and layer + 1 <= n - 1
        row, presence = expand_layer(
            layer,
            n,
            in_path,
            [parent_path(x, layer) for x in range(n)],
            lb,
            upper_val,
            max_size,
            tmpdir,
            out_path,
            recon_path,
            need_presence,
            block,
        )
        os.remove(in_path)
        if layer + 1 <= n - 1:
            for x in range(n):
                score_path = (
                    cache.layer_path(x, layer + 1) if cache.has_layer(x, layer + 1) else None
                )
                parent_graph.expand_layer(
                    x,
                    layer,
                    n,
                    parent_path(x, layer),
                    score_path,
                    presence,
                    parent_path(x, layer + 1),
                    max_size,
                    tmpdir,
                    block,
                )
            for x in range(n):
                os.remove(parent_path(x, layer))
                cache.delete_layer(x, layer + 1)
        else:
            for x in range(n):
                os.remove(parent_path(x, layer))
        row["disk_bytes"] = _disk_usage(workdir)
        stats.layers.append(row)
        if layer_hook is not None:
            layer_hook(layer, workdir)

    goal_path = os.path.join(order_dir, f"layer{n}.bin")
    goal = storage.read_records(goal_path, storage.ORDER_DTYPE)
    if len(goal) != 1 or int(goal["mask"][0]) != (1 << n) - 1:
        raise SearchError(
            "goal node was pruned; the supplied upper bound is below the optimal score"
        )
    optimal = float(goal["cost"][0])
    os.remove(goal_path)

    parents = reconstruct(recon_dir, n)
    check = network_score(parents, data)
    if abs(check - optimal) > 1e-9 * max(1.0, abs(optimal)):
        raise SearchError(
            f"reconstructed network rescored to {check!r}, search reported {optimal!r}"
        )
    stats.wall_time = time.perf_counter() - t0
    return Network(parents, optimal), stats
