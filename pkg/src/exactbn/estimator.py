"""Scikit-learn style estimator wrapping the exact structure search.

fit(X) discretizes the input table, runs the frontier branch-and-bound
search in a work directory, and exposes the learned structure through
fitted attributes, so the learner drops into pipelines and anything
else that speaks get_params/set_params.
"""

from __future__ import annotations

import os
import tempfile

from sklearn.base import BaseEstimator

from . import validation
from .cli import format_dot, format_network
from .order_graph import learn
from .varset import bits


class OptimalStructureLearner(BaseEstimator):
    """Exact minimum-score Bayesian-network structure learner.

    Parameters
    ----------
    max_states : binarize columns with more distinct values than this.
    max_ram_nodes : duplicate-table budget before layers spill to disk.
    upper : pruning bound override; float('inf') disables pruning.
    parent_pruning : propagate order-graph pruning into the per-variable
        parent graphs (the memory-saving default).
    beam, max_iters, seed : greedy bound-search controls.
    workdir : directory for layer files; a temp dir when None.
    missing_token : token marking missing cells in string data.

    Attributes (after fit)
    ----------------------
    network_ : tuple of parent-index tuples, one per column.
    score_ : total score of the optimal network (lower is better).
    arities_ : number of states per discretized column.
    search_stats_ : per-layer search counters.
    n_features_in_, feature_names_in_ : standard input metadata.
    """

    def __init__(
        self,
        max_states: int = 4,
        max_ram_nodes: int = 1_000_000,
        upper: float | None = None,
        parent_pruning: bool = True,
        beam: int = 5,
        max_iters: int = 1000,
        seed: int = 0,
        workdir: str | None = None,
        missing_token: str = "?",
    ):
        self.max_states = max_states
        self.max_ram_nodes = max_ram_nodes
        self.upper = upper
        self.parent_pruning = parent_pruning
        self.beam = beam
        self.max_iters = max_iters
        self.seed = seed
        self.workdir = workdir
        self.missing_token = missing_token

    def fit(self, X, y=None):
        names = validation.feature_names_of(X)
        data = validation.check_dataset(
            X, max_states=validation.check_positive_int(self.max_states, "max_states"),
            missing_token=self.missing_token,
        )
        max_ram = validation.check_positive_int(self.max_ram_nodes, "max_ram_nodes")

        def run(workdir):
            return learn(
                data,
                workdir,
                max_size=max_ram,
                upper=self.upper,
                parent_pruning=bool(self.parent_pruning),
                beam=validation.check_positive_int(self.beam, "beam"),
                max_iters=validation.check_positive_int(self.max_iters, "max_iters"),
                seed=int(self.seed),
            )

        if self.workdir is not None:
            os.makedirs(self.workdir, exist_ok=True)
            net, stats = run(self.workdir)
        else:
            with tempfile.TemporaryDirectory(prefix="exactbn-") as tmp:
                net, stats = run(tmp)

        self.n_features_in_ = data.n
        if names is not None:
            self.feature_names_in_ = names
        self.names_ = data.names
        self.arities_ = data.arities
        self.network_ = tuple(tuple(bits(pm)) for pm in net.parents)
        self.score_ = net.score
        self.search_stats_ = stats
        return self

    def parents_of(self, name: str) -> tuple[str, ...]:
        """Parent names of one variable in the learned network."""
        validation.check_is_fitted(self)
        idx = self.names_.index(name)
        return tuple(self.names_[u] for u in self.network_[idx])

    def to_text(self) -> str:
        validation.check_is_fitted(self)
        masks = [sum(1 << u for u in pa) for pa in self.network_]
        return format_network(masks, self.names_, self.score_)

    def to_dot(self) -> str:
        validation.check_is_fitted(self)
        masks = [sum(1 << u for u in pa) for pa in self.network_]
        return format_dot(masks, self.names_)
