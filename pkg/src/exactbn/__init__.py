"""Exact Bayesian network structure learning.

Finds the provably minimum-score network for a discrete dataset by a
frontier breadth-first branch and bound over the subset lattice, with
disk-resident score caches and layer files so memory stays bounded by
roughly two search layers plus reconstruction records.
"""

from .bounds import Network, network_score
from .dataset import Dataset, RawTable, load_csv, preprocess
from .errors import CorruptionError, CycleError, DataError, SearchError
from .estimator import OptimalStructureLearner
from .oracle import OracleResult, dp_optimal, exhaustive_optimal
from .order_graph import SearchStats, learn, reconstruct
from .scorer import ScoreCache, compute_scores, max_parents, mdl_score_direct

__version__ = "0.1.0"

__all__ = [
    "CorruptionError",
    "CycleError",
    "DataError",
    "Dataset",
    "Network",
    "OptimalStructureLearner",
    "OracleResult",
    "RawTable",
    "ScoreCache",
    "SearchError",
    "SearchStats",
    "compute_scores",
    "dp_optimal",
    "exhaustive_optimal",
    "learn",
    "load_csv",
    "max_parents",
    "mdl_score_direct",
    "network_score",
    "preprocess",
    "reconstruct",
    "__version__",
]
