"""Preserved instances where presence-pruned parent graphs lose the optimum.

When the order graph prunes an intermediate subset, the default mode
also drops that subset from every parent graph.  A dropped node stops
carrying its accumulated best parent set upward, so a surviving
superset can end up with an inflated best score.  On most data the
surviving chains still deliver the true minimum, but the two datasets
preserved here (found by randomized search over structured generators)
are cases where they do not: on one the search returns a valid but
suboptimal network, on the other every completion of the goal exceeds
the upper bound and the search aborts.

Disabling the parent-graph side of the pruning (parent_pruning=False)
keeps every carrier and is exact on every instance; so is disabling
pruning altogether (upper=inf).  These tests pin all three behaviors;
if the default mode ever becomes exact on the preserved instances, the
pins below should be revisited together with the pruning design.
"""

import os

import pytest

from exactbn.dataset import load_csv, preprocess
from exactbn.errors import SearchError
from exactbn.oracle import dp_optimal
from exactbn.order_graph import learn

DATA = os.path.join(os.path.dirname(__file__), "data")


def load(name):
    return preprocess(load_csv(os.path.join(DATA, name), has_header=False))


def run(d, tmp_path, tag, **kw):
    try:
        net, _ = learn(d, str(tmp_path / tag), **kw)
        return net.score
    except SearchError:
        return None  # goal pruned away


@pytest.mark.parametrize("name", ["carrier_loss_a.csv", "carrier_loss_b.csv"])
def test_safe_modes_recover_the_optimum(name, tmp_path):
    d = load(name)
    want = dp_optimal(d).score
    tol = 1e-9 * max(1.0, abs(want))
    safe = run(d, tmp_path, "safe", parent_pruning=False)
    nopr = run(d, tmp_path, "nopr", upper=float("inf"))
    assert safe is not None and abs(safe - want) <= tol
    assert nopr is not None and abs(nopr - want) <= tol


@pytest.mark.parametrize("name", ["carrier_loss_a.csv", "carrier_loss_b.csv"])
def test_default_mode_never_undercuts_the_optimum(name, tmp_path):
    # even when carriers are lost, any returned network is real, so its
    # score can only sit at or above the true optimum
    d = load(name)
    want = dp_optimal(d).score
    got = run(d, tmp_path, "default")
    if got is not None:
        assert got >= want - 1e-9 * max(1.0, abs(want))


def test_preserved_instances_still_reproduce_the_loss(tmp_path):
    # documentation pin: at least one preserved instance must still show
    # the divergence, otherwise this record is stale
    diverged = []
    for name in ["carrier_loss_a.csv", "carrier_loss_b.csv"]:
        d = load(name)
        want = dp_optimal(d).score
        got = run(d, tmp_path, f"d-{name}")
        tol = 1e-9 * max(1.0, abs(want))
        diverged.append(got is None or abs(got - want) > tol)
        print(f"{name}: optimal={want!r} default-mode={got!r}")
    assert any(diverged), "divergence no longer reproduces; update this record"
