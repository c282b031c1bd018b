"""Input validation helpers for the estimator surface."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset, RawTable, preprocess, table_from_arrays
from .errors import DataError
from .varset import MAX_VARS


def check_table(X, missing_token: str = "?") -> RawTable:
    """Validate a 2-D array-like / DataFrame and adapt it to a RawTable."""
    table = table_from_arrays(X, missing_token=missing_token)
    if table.n > MAX_VARS:
        raise DataError(f"at most {MAX_VARS} variables supported, got {table.n}")
    return table


def check_dataset(X, max_states: int = 4, missing_token: str = "?") -> Dataset:
    """Full input path: adapt, drop incomplete rows, discretize."""
    data = preprocess(check_table(X, missing_token), max_states=max_states)
    if data.num_records < 2:
        raise DataError("need at least 2 complete records")
    return data


def check_positive_int(value, name: str) -> int:
    v = int(value)
    if v < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return v


def check_is_fitted(estimator, attr: str = "network_") -> None:
    if not hasattr(estimator, attr):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit(X) first"
        )


def feature_names_of(X) -> np.ndarray | None:
    if hasattr(X, "columns"):
        return np.asarray([str(c) for c in X.columns], dtype=object)
    return None
