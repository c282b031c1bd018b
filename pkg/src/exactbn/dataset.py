"""Tabular ingestion and discretization to integer-coded columns.

The learner consumes complete-case discrete data: every column holds
codes 0..r-1 where r is the number of observed states.  Continuous
columns and columns with too many states are binarized at the column
mean; low-arity discrete columns are integer-coded by first appearance.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .varset import MAX_VARS


@dataclass
class RawTable:
    """A rectangular table of cell strings, before any typing."""

    headers: list[str]
    rows: list[list[str]]
    missing_token: str = "?"

    @property
    def n(self) -> int:
        return len(self.headers)


@dataclass(frozen=True)
class Dataset:
    """Complete-case discrete data, column major.

    columns has shape (n, num_records); column i holds codes in
    [0, arities[i]).  coding carries per-column provenance (how each
    column was discretized) for the metadata dump.
    """

    columns: np.ndarray
    arities: tuple[int, ...]
    names: tuple[str, ...]
    coding: tuple[dict, ...] = field(default=(), compare=False)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def num_records(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def from_codes(cls, rows, names=None, arities=None, coding=None) -> "Dataset":
        """Build directly from dense integer codes (rows x variables).

        arities may declare states beyond those observed (e.g. a binary
        variable that happens to be constant in this sample); omitted,
        each arity is the largest observed code plus one.
        """
        arr = np.asarray(rows, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError("need a non-empty 2-D table of codes")
        if arr.shape[1] > MAX_VARS:
            raise DataError(f"at most {MAX_VARS} variables supported, got {arr.shape[1]}")
        if arr.min() < 0:
            raise DataError("codes must be non-negative")
        cols = np.ascontiguousarray(arr.T)
        observed = tuple(int(c.max()) + 1 for c in cols)
        if arities is None:
            arities = observed
        else:
            arities = tuple(int(a) for a in arities)
            if len(arities) != len(observed) or any(a < o for a, o in zip(arities, observed)):
                raise DataError("declared arities must cover every observed code")
        if names is None:
            names = tuple(f"X{i + 1}" for i in range(cols.shape[0]))
        return cls(cols, arities, tuple(names), tuple(coding or ()))

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "N": self.num_records,
            "names": list(self.names),
            "arities": list(self.arities),
            "columns": [dict(c) for c in self.coding],
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), indent=2)


def load_csv(path, delimiter: str = ",", missing_token: str = "?", has_header: bool = True) -> RawTable:
    """Read a delimited text file into a RawTable.

    Ragged rows are an error naming the offending (1-based) line; when
    has_header is false, names X1..Xn are synthesized.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f, delimiter=delimiter)
        rows = [[cell.strip() for cell in row] for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")
    if has_header:
        headers = rows[0]
        body = rows[1:]
        first_data_line = 2
    else:
        headers = [f"X{i + 1}" for i in range(len(rows[0]))]
        body = rows
        first_data_line = 1
    width = len(headers)
    if width < 1:
        raise DataError(f"{path}: no columns")
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataError(
                f"{path}: row {first_data_line + i} has {len(row)} cells, expected {width}"
            )
    if width > MAX_VARS:
        raise DataError(f"at most {MAX_VARS} variables supported, got {width}")
    return RawTable(headers, body, missing_token)


def _parse_kind(cells: list[str]) -> str:
    """'int' if every cell is an integer literal, else 'float' if every
    cell parses as a number, else 'text'."""
    kind = "int"
    for c in cells:
        try:
            int(c)
        except ValueError:
            kind = "float"
            try:
                float(c)
            except ValueError:
                return "text"
    return kind


def _binarize(values: np.ndarray) -> tuple[np.ndarray, float]:
    mean = float(values.mean())
    codes = np.where(values < mean, 0, 1).astype(np.int64)
    if codes.min() == codes.max():
        codes[:] = 0
    return codes, mean


def preprocess(table: RawTable, max_states: int = 4) -> Dataset:
    """Drop rows with missing cells, then discretize every column.

    Numeric columns with fractional literals, and any column with more
    than max_states distinct values, are binarized at the column mean
    (strictly below the mean -> 0, else 1; for text columns the mean is
    taken over first-appearance integer codes).  Remaining columns are
    integer-coded by first appearance.  A constant column is kept with
    arity 1.
    """
    rows = [r for r in table.rows if table.missing_token not in r]
    if not rows:
        raise DataError("no complete records after removing missing values")
    n = table.n
    cols: list[np.ndarray] = []
    arities: list[int] = []
    coding: list[dict] = []
    for j in range(n):
        cells = [r[j] for r in rows]
        kind = _parse_kind(cells)
        info: dict = {"name": table.headers[j]}
        if kind == "text":
            seen: dict[str, int] = {}
            raw = np.array([seen.setdefault(c, len(seen)) for c in cells], dtype=np.int64)
            if len(seen) > max_states:
                codes, mean = _binarize(raw.astype(np.float64))
                info.update(kind="binarized_codes", threshold=mean,
                            categories=list(seen))
            else:
                codes = raw
                info.update(kind="coded", categories=list(seen))
        else:
            values = np.array([float(c) for c in cells])
            continuous = kind == "float"
            if continuous or len(np.unique(values)) > max_states:
                codes, mean = _binarize(values)
                info.update(kind="binarized", threshold=mean)
            else:
                seen_v: dict[float, int] = {}
                codes = np.array(
                    [seen_v.setdefault(v, len(seen_v)) for v in values.tolist()],
                    dtype=np.int64,
                )
                info.update(kind="coded", categories=[repr(v) for v in seen_v])
        arity = int(codes.max()) + 1
        info["arity"] = arity
        cols.append(codes)
        arities.append(arity)
        coding.append(info)
    return Dataset(
        np.vstack(cols),
        tuple(arities),
        tuple(table.headers),
        tuple(coding),
    )


def table_from_arrays(X, feature_names=None, missing_token: str = "?") -> RawTable:
    """Adapt a 2-D array-like (or DataFrame) to a RawTable.

    Integer dtypes become integer literals (discrete codes); float
    dtypes keep their repr, so non-integral values read as continuous.
    NaN/None map to the missing token.
    """
    if hasattr(X, "columns") and hasattr(X, "to_numpy"):
        if feature_names is None:
            feature_names = [str(c) for c in X.columns]
        X = X.to_numpy()
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D table, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError("empty table")
    if feature_names is None:
        feature_names = [f"X{i + 1}" for i in range(arr.shape[1])]
    rows = []
    for row in arr:
        out = []
        for v in row:
            if v is None or (isinstance(v, (float, np.floating)) and np.isnan(v)):
                out.append(missing_token)
            elif isinstance(v, (bool, np.bool_)):
                out.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                out.append(repr(float(v)))
            else:
                out.append(str(v).strip())
        rows.append(out)
    return RawTable([str(h) for h in feature_names], rows, missing_token)
