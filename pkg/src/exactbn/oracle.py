"""Independent correctness oracles.

dp_optimal evaluates the textbook subset recurrence in RAM over all 2^n
variable sets: the best network over V is the best choice of leaf X
plus the best network over V minus X.  exhaustive_optimal enumerates
every labeled DAG outright (tiny n only).  Both build on the direct
counting scorer and share nothing with the streaming search they vouch
for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bounds import Network, topological_order
from .dataset import Dataset
from .errors import DataError
from .scorer import max_parents, mdl_score_direct
from .varset import bits, iter_layer

DP_CAP = 15
EXHAUSTIVE_CAP = 4


@dataclass(frozen=True)
class OracleResult:
    score: float
    network: Network


def dp_optimal(data: Dataset, cap: int = DP_CAP) -> OracleResult:
    """Exact optimum via the in-memory lattice recurrence (n <= cap)."""
    n = data.n
    if n > cap:
        raise DataError(f"dp oracle capped at {cap} variables, got {n}")
    N = data.num_records
    mp = min(max_parents(N), n - 1)
    full = 1 << n

    # Best parent-set score for every (x, candidate set): start from the
    # direct scores of admissible sets, then take mins over the lattice.
    best = np.full((n, full), np.inf)
    bestp = np.zeros((n, full), dtype=np.int64)
    for x in range(n):
        others = [v for v in range(n) if v != x]
        for size in range(mp + 1):
            for combo in itertools.combinations(others, size):
                pm = 0
                for v in combo:
                    pm |= 1 << v
                best[x, pm] = mdl_score_direct(x, pm, data)
                bestp[x, pm] = pm
        for y in range(n):
            if y == x:
                continue
            idx = np.arange(full)
            has = idx[(idx >> y) & 1 == 1]
            src = has ^ (1 << y)
            better = best[x, src] < best[x, has]
            best[x, has] = np.where(better, best[x, src], best[x, has])
            bestp[x, has] = np.where(better, bestp[x, src], bestp[x, has])

    total = np.full(full, np.inf)
    total[0] = 0.0
    leaf = np.full(full, -1, dtype=np.int64)
    for size in range(1, n + 1):
        masks = np.fromiter(iter_layer(n, size), dtype=np.int64)
        for y in range(n):
            has = masks[(masks >> y) & 1 == 1]
            if not len(has):
                continue
            sub = has ^ (1 << y)
            cand = total[sub] + best[y, sub]
            better = cand < total[has]
            total[has] = np.where(better, cand, total[has])
            leaf[has] = np.where(better, y, leaf[has])

    parents = [0] * n
    mask = full - 1
    while mask:
        y = int(leaf[mask])
        sub = mask ^ (1 << y)
        parents[y] = int(bestp[y, sub])
        mask = sub
    score = float(total[full - 1])
    return OracleResult(score, Network(tuple(parents), score))


def all_dags(n: int):
    """Every labeled DAG on n vertices, as parent-mask tuples."""
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    for edge_mask in range(1 << len(pairs)):
        parents = [0] * n
        for i, (u, v) in enumerate(pairs):
            if (edge_mask >> i) & 1:
                parents[v] |= 1 << u
        parents = tuple(parents)
        if topological_order(parents) is not None:
            yield parents


def exhaustive_optimal(data: Dataset, log_base: float = 2.0) -> OracleResult:
    """Minimum over every labeled DAG, parent sizes unrestricted (n <= 4)."""
    n = data.n
    if n > EXHAUSTIVE_CAP:
        raise DataError(f"exhaustive oracle capped at {EXHAUSTIVE_CAP} variables, got {n}")
    memo: dict[tuple[int, int], float] = {}

    def local(x: int, pm: int) -> float:
        key = (x, pm)
        if key not in memo:
            memo[key] = mdl_score_direct(x, pm, data, log_base)
        return memo[key]

    best_score = np.inf
    best_net: tuple[int, ...] | None = None
    for parents in all_dags(n):
        sc = sum(local(x, parents[x]) for x in range(n))
        if sc < best_score:
            best_score = sc
            best_net = parents
    assert best_net is not None
    return OracleResult(float(best_score), Network(best_net, float(best_score)))


def max_parent_size(network: Network) -> int:
    return max((len(bits(pm)) for pm in network.parents), default=0)
