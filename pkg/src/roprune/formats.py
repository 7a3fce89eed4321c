"""Instance files: CSV text and the binary ``ROPS`` record format.

CSV holds one record per line (``x,y`` points, ``a,b,beta`` or
``a,b,c,beta`` rows, or a single value); blank lines and ``#`` comments are
skipped.  A ``ROPS`` file is the magic ``b"ROPS"``, a u16 version, a u16
element arity, a u64 element count and then little-endian float64 reals.
Binary inputs are memory-mapped read-only, so the algorithms see the file
bytes themselves.
"""

import math
import mmap
import struct

import numpy as np

from .workspace import FormatError, ReadOnlyView, view_over_buffer

MAGIC = b"ROPS"
VERSION = 1
HEADER = struct.Struct("<4sHHQ")


def read_csv(path, arity):
    """View over the records of a CSV file; errors name the offending line."""
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != arity:
                raise FormatError(
                    f"{path}:{lineno}: expected {arity} comma-separated numbers, got {len(parts)}"
                )
            row = []
            for p in parts:
                try:
                    v = float(p)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: {p!r} is not a number") from None
                if not math.isfinite(v):
                    raise FormatError(f"{path}:{lineno}: {p!r} is not finite")
                row.append(v)
            vals.append(row)
    arr = np.array(vals, dtype=np.float64).reshape(len(vals), arity)
    arr.flags.writeable = False
    return ReadOnlyView(arr)


def write_csv(path, records):
    arr = np.asarray(records, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(fmt_real(v) for v in row) + "\n")


def read_rops(path, arity=None):
    """Memory-mapped view over a ``ROPS`` file."""
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise FormatError(f"{path}: truncated header ({len(head)} of {HEADER.size} bytes)")
        magic, version, ar, count = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if arity is not None and ar != arity:
            raise FormatError(f"{path}: element arity {ar}, expected {arity}")
        if count == 0:
            arr = np.zeros((0, ar))
            arr.flags.writeable = False
            return ReadOnlyView(arr)
        buf = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
    try:
        view = view_over_buffer(buf, ar, offset=HEADER.size, count=count)
    except FormatError as e:
        raise FormatError(f"{path}: {e}") from None
    if not np.all(np.isfinite(view.data)):
        bad = int(np.argmin(np.all(np.isfinite(view.data), axis=1)))
        raise FormatError(f"{path}: element {bad} is not finite")
    return view


def write_rops(path, records, arity):
    arr = np.ascontiguousarray(np.asarray(records, dtype="<f8").reshape(-1, arity))
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, arity, arr.shape[0]))
        fh.write(arr.tobytes())


def read_any(path, arity):
    """``ROPS`` if the file starts with the magic, otherwise CSV."""
    with open(path, "rb") as fh:
        start = fh.read(4)
    if start == MAGIC:
        return read_rops(path, arity)
    return read_csv(path, arity)


def fmt_real(v):
    """Shortest round-trip text; integral values print without a fraction."""
    v = float(v)
    if v == 0:
        return "0"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def json_real(v):
    v = float(v)
    if v == 0:
        return 0
    if v.is_integer() and abs(v) < 2**53:
        return int(v)
    return v
