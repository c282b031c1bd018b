"""External-memory primitives shared by both graph searches.

Record streams are fixed-width little-endian structured arrays keyed by
an 8-byte set mask.  Within a layer every stream is sorted by that key,
which is the colex order of the sets.  Duplicate keys are resolved by a
total order over the full record tuple (field order = tie-break order),
so the merged result of any partition of a record multiset into sorted
runs is identical, regardless of run boundaries or merge order.
"""

from __future__ import annotations

import os
from typing import Callable, Iterator

import numpy as np

from .errors import CorruptionError

SCORE_DTYPE = np.dtype([("mask", "<u8"), ("score", "<f8")])
PARENT_DTYPE = np.dtype([("mask", "<u8"), ("score", "<f8"), ("parents", "<u8")])
ORDER_DTYPE = np.dtype([("mask", "<u8"), ("cost", "<f8")])
OPEN_DTYPE = np.dtype(
    [("mask", "<u8"), ("cost", "<f8"), ("leaf", "u1"), ("parents", "<u8")]
)
RECON_DTYPE = np.dtype([("mask", "<u8"), ("leaf", "u1"), ("parents", "<u8")])

DEFAULT_BLOCK = 1 << 16
DEFAULT_FANIN = 64


def write_records(path: str, arr: np.ndarray) -> None:
    """Write a record array atomically (temp file + rename)."""
    tmp = f"{path}.wip"
    np.ascontiguousarray(arr).tofile(tmp)
    os.replace(tmp, path)


def read_records(path: str, dtype: np.dtype) -> np.ndarray:
    size = os.path.getsize(path)
    if size % dtype.itemsize:
        raise CorruptionError(
            f"{path}: {size} bytes is not a multiple of the {dtype.itemsize}-byte record"
        )
    return np.fromfile(path, dtype=dtype)


def iter_blocks(path: str, dtype: np.dtype, block: int = DEFAULT_BLOCK) -> Iterator[np.ndarray]:
    """Yield a file's records in bounded chunks, front to back."""
    size = os.path.getsize(path)
    if size % dtype.itemsize:
        raise CorruptionError(
            f"{path}: {size} bytes is not a multiple of the {dtype.itemsize}-byte record"
        )
    with open(path, "rb") as f:
        while True:
            chunk = np.fromfile(f, dtype=dtype, count=block)
            if chunk.size == 0:
                return
            yield chunk


def reduce_records(arr: np.ndarray, combine: str = "min") -> np.ndarray:
    """Collapse duplicate masks in a record array.

    combine="min" keeps, per mask, the record that is smallest under the
    full field tuple; combine="sum" adds the value field per mask (for
    two-field (mask, value) streams only).
    """
    if arr.size == 0:
        return arr
    fields = list(arr.dtype.names)
    srt = np.sort(arr, order=fields)
    starts = np.empty(len(srt), dtype=bool)
    starts[0] = True
    starts[1:] = srt["mask"][1:] != srt["mask"][:-1]
    if combine == "min":
        return srt[starts]
    if combine == "sum":
        if len(fields) != 2:
            raise ValueError("sum combine needs a (mask, value) record layout")
        idx = np.flatnonzero(starts)
        out = srt[idx].copy()
        out[fields[1]] = np.add.reduceat(srt[fields[1]], idx)
        return out
    raise ValueError(f"unknown combine {combine!r}")


def spill_run(arr: np.ndarray, path: str, combine: str = "min") -> int:
    """Sort and combine an in-memory table, write it as one run file."""
    reduced = reduce_records(arr, combine)
    write_records(path, reduced)
    return len(reduced)


class _RunCursor:
    """Chunked reader over one sorted run, validating key order."""

    def __init__(self, path: str, dtype: np.dtype, block: int):
        self.path = path
        self._blocks = iter_blocks(path, dtype, block)
        self.buf: np.ndarray | None = None
        self._last = -1  # largest key handed out so far
        self.done = False

    def ensure(self) -> None:
        if self.done or (self.buf is not None and self.buf.size):
            return
        chunk = next(self._blocks, None)
        if chunk is None:
            self.buf = None
            self.done = True
            return
        keys = chunk["mask"].astype(np.int64)
        if np.any(np.diff(keys) <= 0) or keys[0] <= self._last:
            raise CorruptionError(f"{self.path}: run keys out of order")
        self._last = int(keys[-1])
        self.buf = chunk

    def take_upto(self, key: int) -> np.ndarray:
        assert self.buf is not None
        cut = int(np.searchsorted(self.buf["mask"], np.uint64(key), side="right"))
        part = self.buf[:cut]
        self.buf = self.buf[cut:] if cut < len(self.buf) else None
        return part


def merge_runs(
    paths: list[str],
    dtype: np.dtype,
    write: Callable[[np.ndarray], None],
    combine: str = "min",
    fanin: int = DEFAULT_FANIN,
    block: int = DEFAULT_BLOCK,
) -> None:
    """Stream-merge sorted runs into key-unique output chunks.

    Memory stays proportional to block * number of open runs.  When the
    fan-in cap is exceeded, groups are first merged into intermediate
    runs (the combiner is associative, so cascading is safe).
    """
    while len(paths) > fanin:
        grouped = []
        for g in range(0, len(paths), fanin):
            group = paths[g : g + fanin]
            if len(group) == 1:
                grouped.append(group[0])
                continue
            inter = f"{group[0]}.m"
            parts: list[np.ndarray] = []

            def _collect(chunk: np.ndarray, _parts=parts) -> None:
                _parts.append(chunk)

            _merge_once(group, dtype, _collect, combine, block)
            write_records(inter, np.concatenate(parts) if parts else np.empty(0, dtype))
            for p in group:
                os.remove(p)
            grouped.append(inter)
        paths = grouped
    _merge_once(paths, dtype, write, combine, block)


def _merge_once(paths, dtype, write, combine, block):
    cursors = [_RunCursor(p, dtype, block) for p in paths]
    while True:
        for c in cursors:
            c.ensure()
        active = [c for c in cursors if c.buf is not None]
        if not active:
            return
        bound = min(int(c.buf["mask"][-1]) for c in active)
        parts = [c.take_upto(bound) for c in active]
        merged = reduce_records(np.concatenate(parts), combine)
        if merged.size:
            write(merged)


class ChunkWriter:
    """Append record chunks to a file, made visible atomically on close."""

    def __init__(self, path: str):
        self.path = path
        self._f = open(f"{path}.wip", "wb")
        self.count = 0

    def __call__(self, arr: np.ndarray) -> None:
        np.ascontiguousarray(arr).tofile(self._f)
        self.count += len(arr)

    def close(self) -> None:
        self._f.close()
        os.replace(f"{self.path}.wip", self.path)


class DedupTable:
    """Bounded in-RAM duplicate table with sorted-run spilling.

    Records are added in batches; whenever the consolidated table holds
    more than max_size unique keys it is written out as a sorted run and
    cleared.  finish() merges the runs (or just writes the table) into
    key-unique sorted output chunks via the supplied writer.  Because
    the combiner is a total-order min (or a sum), the final output is a
    pure function of the added record multiset, independent of batch
    and run boundaries.
    """

    def __init__(
        self,
        dtype: np.dtype,
        max_size: int,
        tmpdir: str,
        tag: str,
        combine: str = "min",
        block: int = DEFAULT_BLOCK,
        fanin: int = DEFAULT_FANIN,
    ):
        if max_size < 1:
            raise ValueError("max_size must be >= 1")
        self.dtype = dtype
        self.max_size = max_size
        self.tmpdir = tmpdir
        self.tag = tag
        self.combine = combine
        self.block = block
        self.fanin = fanin
        self._parts: list[np.ndarray] = []
        self._pending = 0
        self._runs: list[str] = []
        self.total_added = 0

    def add(self, arr: np.ndarray) -> None:
        if arr.size == 0:
            return
        self.total_added += len(arr)
        self._parts.append(arr)
        self._pending += len(arr)
        if self._pending > self.max_size:
            self._consolidate()

    def _consolidate(self) -> None:
        table = reduce_records(np.concatenate(self._parts), self.combine)
        if len(table) > self.max_size:
            path = os.path.join(self.tmpdir, f"{self.tag}.run{len(self._runs)}.bin")
            write_records(path, table)
            self._runs.append(path)
            self._parts = []
            self._pending = 0
        else:
            self._parts = [table]
            self._pending = len(table)

    def finish(self, write: Callable[[np.ndarray], None]) -> tuple[int, int]:
        """Drain into the writer; returns (records added, unique keys out)."""
        unique = 0

        def counting(chunk: np.ndarray) -> None:
            nonlocal unique
            unique += len(chunk)
            write(chunk)

        if self._parts:
            table = reduce_records(np.concatenate(self._parts), self.combine)
        else:
            table = np.empty(0, self.dtype)
        self._parts = []
        self._pending = 0
        if self._runs:
            if table.size:
                path = os.path.join(self.tmpdir, f"{self.tag}.run{len(self._runs)}.bin")
                write_records(path, table)
                self._runs.append(path)
            merge_runs(self._runs, self.dtype, counting, self.combine, self.fanin, self.block)
            for p in self._runs:
                if os.path.exists(p):
                    os.remove(p)
            self._runs = []
        else:
            counting(table)
        return self.total_added, unique
