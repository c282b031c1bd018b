"""Upper bound from greedy beam local search, and whole-network scoring.

Any acyclic network's total score is a valid pruning bound; the beam
search only has to find a decent one quickly.  Moves are single-edge
add / delete / reverse; candidate parent sets are restricted to the
cached sizes, and scores are looked up from the cache so the bound is
a sum of the exact same floats the search later accumulates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .dataset import Dataset
from .errors import CycleError
from .scorer import mdl_score_direct
from .varset import bits


@dataclass(frozen=True)
class Network:
    """A DAG as one parent mask per variable, with its total score."""

    parents: tuple[int, ...]
    score: float

    @property
    def n(self) -> int:
        return len(self.parents)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for v, pm in enumerate(self.parents) for u in bits(pm)]


def topological_order(parents: tuple[int, ...]) -> list[int] | None:
    """Kahn order (parents before children), or None if cyclic."""
    n = len(parents)
    remaining = list(parents)
    placed = 0
    done_mask = 0
    order = []
    while len(order) < n:
        progressed = False
        for v in range(n):
            if (placed >> v) & 1:
                continue
            if remaining[v] & ~done_mask:
                continue
            order.append(v)
            placed |= 1 << v
            progressed = True
        if not progressed:
            return None
        done_mask = placed
    return order


def network_score(parents, data: Dataset, log_base: float = 2.0) -> float:
    """Sum of local scores over the variables; rejects cyclic input."""
    parents = tuple(parents)
    if topological_order(parents) is None:
        raise CycleError("network contains a directed cycle")
    return sum(mdl_score_direct(x, parents[x], data, log_base) for x in range(len(parents)))


def _reachable(children: list[list[int]], start: int) -> int:
    seen = 1 << start
    stack = [start]
    while stack:
        u = stack.pop()
        for v in children[u]:
            if not (seen >> v) & 1:
                seen |= 1 << v
                stack.append(v)
    return seen


def _children(parents: tuple[int, ...]) -> list[list[int]]:
    kids: list[list[int]] = [[] for _ in parents]
    for v, pm in enumerate(parents):
        for u in bits(pm):
            kids[u].append(v)
    return kids


def _neighbors(state, tables, max_parents, n):
    """Legal single-edge moves with their exact new total scores."""
    score_of = lambda v, pm: tables[v][pm]
    total = sum(score_of(v, state[v]) for v in range(n))
    kids = _children(state)
    out = []
    for v in range(n):
        pm = state[v]
        reach_from_v = None
        for u in range(n):
            if u == v:
                continue
            if (pm >> u) & 1:
                # delete u -> v
                npm = pm & ~(1 << u)
                child = state[:v] + (npm,) + state[v + 1 :]
                out.append((total - score_of(v, pm) + score_of(v, npm), child))
                # reverse u -> v (becomes v -> u)
                if bin(state[u]).count("1") < max_parents:
                    kids_wo = [list(c) for c in kids]
                    kids_wo[u] = [w for w in kids_wo[u] if w != v]
                    if not (_reachable(kids_wo, u) >> v) & 1:
                        npu = state[u] | (1 << v)
                        child2 = list(child)
                        child2[u] = npu
                        out.append(
                            (
                                total
                                - score_of(v, pm)
                                + score_of(v, npm)
                                - score_of(u, state[u])
                                + score_of(u, npu),
                                tuple(child2),
                            )
                        )
            else:
                # add u -> v
                if bin(pm).count("1") >= max_parents:
                    continue
                if reach_from_v is None:
                    reach_from_v = _reachable(kids, v)
                if (reach_from_v >> u) & 1:
                    continue
                npm = pm | (1 << u)
                child = state[:v] + (npm,) + state[v + 1 :]
                out.append((total - score_of(v, pm) + score_of(v, npm), child))
    return out


def greedy_upper_bound(
    tables: list[dict[int, float]],
    n: int,
    max_parents: int,
    beam: int = 5,
    max_iters: int = 1000,
    seed: int = 0,
    trace: list | None = None,
) -> Network:
    """Beam local search over DAGs; returns the best network found.

    Deterministic for a fixed seed: the beam is seeded with the empty
    network plus seeded random single-edge networks, moves are
    enumerated in a fixed order, and ties rank by the state tuple.
    The empty network is always a valid fallback.
    """
    empty = tuple(0 for _ in range(n))
    empty_score = sum(tables[v][0] for v in range(n))
    rng = random.Random(seed)
    states = {empty: empty_score}
    if n >= 2 and max_parents >= 1:
        for _ in range(max(0, beam - 1)):
            u, v = rng.sample(range(n), 2)
            st = empty[:v] + (1 << u,) + empty[v + 1 :]
            states[st] = empty_score - tables[v][0] + tables[v][1 << u]
    frontier = sorted(states.items(), key=lambda kv: (kv[1], kv[0]))[:beam]
    best_state, best_score = min(frontier, key=lambda kv: (kv[1], kv[0]))
    if trace is not None:
        trace.append(best_score)
    for _ in range(max_iters):
        pool: dict[tuple, float] = {}
        for state, _ in frontier:
            for cand_score, cand in _neighbors(state, tables, max_parents, n):
                prev = pool.get(cand)
                if prev is None or cand_score < prev:
                    pool[cand] = cand_score
        if not pool:
            break
        ranked = sorted(pool.items(), key=lambda kv: (kv[1], kv[0]))
        if ranked[0][1] >= best_score:
            break
        best_state, best_score = ranked[0]
        if trace is not None:
            trace.append(best_score)
        frontier = ranked[:beam]
    return Network(best_state, best_score)
