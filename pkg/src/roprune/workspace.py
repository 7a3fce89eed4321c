"""Read-only input views, workspace metering and the bounded edge stack.

Every algorithm in the package touches its input only through a
:class:`ReadOnlyView`.  Auxiliary memory is accounted in *words* (one
coordinate, one index or one slope each) on a :class:`WorkspaceMeter`.
Jitted kernels cannot call back into Python objects, so both the read
counter and the meter are backed by small int64 arrays that kernels update
directly.
"""

import hashlib
import threading
from contextlib import contextmanager

import numpy as np
from numba import njit

__all__ = [
    "FormatError",
    "CapacityError",
    "ReadOnlyView",
    "WorkspaceMeter",
    "BoundedStack",
    "view_over_buffer",
    "view_over_array",
    "meter_scope",
]


class FormatError(ValueError):
    """Raised for truncated, misaligned or otherwise malformed input buffers."""


class CapacityError(RuntimeError):
    """A bounded workspace structure was asked to grow past its capacity."""


class ReadOnlyView:
    """Indexed, counted access to an immutable sequence of fixed-arity records.

    ``element(i)`` returns record ``i`` as a tuple of floats and counts one
    read.  Kernels receive :attr:`data` (a non-writeable float64 array) and
    report their own read totals through :meth:`add_reads`.
    """

    def __init__(self, data, source=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise FormatError("records must be one- or two-dimensional")
        if arr.flags.writeable:
            arr = arr.view()
            arr.flags.writeable = False
        self._data = arr
        self._source = source if source is not None else arr
        self._reads = 0
        self._write_attempts = 0
        self._lock = threading.Lock()

    def __len__(self):
        return self._data.shape[0]

    def __repr__(self):
        return f"ReadOnlyView(length={len(self)}, arity={self.arity}, reads={self._reads})"

    @property
    def length(self):
        return self._data.shape[0]

    @property
    def arity(self):
        return self._data.shape[1]

    @property
    def data(self):
        return self._data

    @property
    def reads(self):
        return self._reads

    @property
    def write_attempts(self):
        return self._write_attempts

    def element(self, i):
        if not 0 <= i < self._data.shape[0]:
            raise IndexError(f"element {i} outside [0, {self._data.shape[0]})")
        self.add_reads(1)
        row = self._data[i]
        if row.shape[0] == 1:
            return float(row[0])
        return tuple(float(v) for v in row)

    __getitem__ = element

    def __setitem__(self, i, value):
        with self._lock:
            self._write_attempts += 1
        raise TypeError("ReadOnlyView does not support item assignment")

    def add_reads(self, count):
        with self._lock:
            self._reads += int(count)

    def fresh_scan(self):
        """Yield every record in index order; each yielded record is one read."""
        for i in range(self._data.shape[0]):
            yield self.element(i)

    def checksum(self):
        """Digest of the backing bytes; equal before and after any algorithm call."""
        buf = self._source
        if isinstance(buf, np.ndarray):
            buf = np.ascontiguousarray(buf).tobytes()
        return hashlib.sha256(memoryview(buf).cast("B")).hexdigest()


def view_over_buffer(buf, arity, offset=0, count=None):
    """Wrap an immutable byte buffer of little-endian float64 records.

    ``arity`` is the number of reals per element (2 for points, 3 for
    Constraint2 rows, 4 for Constraint3 rows).
    """
    if arity < 1:
        raise FormatError("element arity must be positive")
    size = 8 * arity
    mv = memoryview(buf)
    payload = len(mv) - offset
    if payload < 0 or payload % size != 0:
        raise FormatError(
            f"buffer of {payload} bytes is not a whole number of {size}-byte elements"
        )
    n = payload // size
    if count is not None and count != n:
        raise FormatError(f"header declares {count} elements but buffer holds {n}")
    arr = np.frombuffer(buf, dtype="<f8", count=n * arity, offset=offset).reshape(n, arity)
    return ReadOnlyView(arr, source=buf)


def view_over_array(values, arity=None):
    """Read-only view over a copy of ``values`` (lists, tuples or arrays)."""
    arr = np.array(values, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, arity or 1)
    elif arr.ndim == 1 and arity not in (None, 1):
        arr = arr.reshape(-1, arity)
    arr.flags.writeable = False
    return ReadOnlyView(arr)


# --- metering -------------------------------------------------------------


@njit(cache=True)
def meter_alloc(meter, words):
    meter[0] += words
    if meter[0] > meter[1]:
        meter[1] = meter[0]


@njit(cache=True)
def meter_free(meter, words):
    meter[0] -= words


class WorkspaceMeter:
    """Current and peak auxiliary words of one algorithm invocation."""

    def __init__(self):
        self.cells = np.zeros(2, dtype=np.int64)
        self.exempt = 0

    @property
    def current_words(self):
        return int(self.cells[0])

    @property
    def peak_words(self):
        return int(self.cells[1])

    def alloc(self, words):
        if words < 0:
            raise ValueError("cannot allocate a negative number of words")
        meter_alloc(self.cells, words)

    def release(self, words):
        if words > self.cells[0]:
            raise ValueError("release exceeds current allocation")
        meter_free(self.cells, words)

    def scope(self, words):
        return meter_scope(self, words)

    def __repr__(self):
        return f"WorkspaceMeter(current={self.current_words}, peak={self.peak_words})"


@contextmanager
def meter_scope(meter, words):
    """Register ``words`` on ``meter`` for the duration of the block."""
    meter.alloc(words)
    try:
        yield meter
    finally:
        meter.release(words)


# --- bounded stack --------------------------------------------------------


@njit(cache=True)
def stack_push_arr(items, depth, a, b, c):
    d = depth[0]
    if d >= items.shape[0]:
        raise RuntimeError("bounded stack capacity exceeded")
    items[d, 0] = a
    items[d, 1] = b
    items[d, 2] = c
    depth[0] = d + 1


@njit(cache=True)
def stack_pop_arr(items, depth):
    d = depth[0] - 1
    depth[0] = d
    return items[d, 0], items[d, 1], items[d, 2]


class BoundedStack:
    """LIFO of index records with a hard capacity (in records).

    Records are pairs by default (an edge ``(i, j)``); the sorted hull also
    parks the end of the right sub-range with each edge, so it uses
    ``record_words=3``.
    """

    EMPTY = None

    def __init__(self, capacity, record_words=2, meter=None):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self.record_words = record_words
        self._items = np.zeros((capacity, 3), dtype=np.int64)
        self._depth = np.zeros(1, dtype=np.int64)
        self._meter = meter
        if meter is not None:
            meter.alloc(capacity * record_words + 1)

    def __len__(self):
        return int(self._depth[0])

    def push(self, record):
        if self._depth[0] >= self.capacity:
            raise CapacityError(
                f"stack capacity {self.capacity} exceeded; the space bound is violated"
            )
        vals = tuple(record) + (0,) * (3 - len(record))
        stack_push_arr(self._items, self._depth, vals[0], vals[1], vals[2])

    def pop(self):
        if self._depth[0] == 0:
            return self.EMPTY
        rec = stack_pop_arr(self._items, self._depth)
        return tuple(int(v) for v in rec[: self.record_words])

    def close(self):
        if self._meter is not None:
            self._meter.release(self.capacity * self.record_words + 1)
            self._meter = None


def stack_push(stack, edge):
    stack.push(edge)


def stack_pop(stack):
    return stack.pop()
