"""Convex hull of unsorted read-only points in O(sqrt n) words.

Points are ranked in the composite order ``(x, y, index)`` and cut into
``ceil(n / s)`` rank blocks of ``s = ceil(sqrt n)`` points.  Pass one loads
the blocks left to right into ``A``, builds each block's upper chain and
merges it into the hull of the prefix.  Only the chain of the last surviving
block is kept (``B``); for every block ``C`` remembers the first and last of
its vertices still on the prefix hull.  When a merge pops a block's first
vertex, that block is erased and the previous surviving block is reloaded.
Pass two reloads each surviving block and reports the recorded portion.

The lower hull is the upper hull of the points mirrored in y; mirroring is a
sign applied on read, so no copy of the input is made.
"""

import math

import numpy as np
from numba import njit

from .selection import choose_k, key_lt, select_xorder
from .workspace import ReadOnlyView, WorkspaceMeter, meter_alloc, meter_free


class BlockLayout:
    def __init__(self, n):
        self.n = n
        self.block_size = max(1, int(math.ceil(math.sqrt(n))))
        self.blocks = (n + self.block_size - 1) // self.block_size if n else 0

    def ranks(self, i):
        """1-based rank range ``(lo, hi]`` of block ``i``."""
        s = self.block_size
        return i * s, min((i + 1) * s, self.n)


@njit(cache=True)
def _block_keys(P, sg, i, s, k, batch, meter, stats, keys):
    """keys[0:3] = exclusive lower key, keys[3:6] = inclusive upper key."""
    n = P.shape[0]
    hi = min((i + 1) * s, n)
    ok, v, w, p = select_xorder(P, sg, hi, k, batch, meter, stats)
    keys[3] = v
    keys[4] = w
    keys[5] = p
    if i == 0:
        keys[0] = -np.inf
        keys[1] = -np.inf
        keys[2] = -np.inf
    else:
        ok, v, w, p = select_xorder(P, sg, i * s, k, batch, meter, stats)
        keys[0] = v
        keys[1] = w
        keys[2] = p


@njit(cache=True)
def _fill(P, sg, keys, A, meter, stats):
    """Copy the points with lower < key <= upper into ``A``, sorted by key."""
    n = P.shape[0]
    cnt = 0
    for t in range(n):
        stats[0] += 1
        x = P[t, 0]
        y = sg * P[t, 1]
        if key_lt(keys[0], keys[1], keys[2], x, y, t) and not key_lt(keys[3], keys[4], keys[5], x, y, t):
            A[cnt, 0] = x
            A[cnt, 1] = y
            A[cnt, 2] = t
            cnt += 1
    # rows arrive in index order, so two stable sorts give (x, y, index) order
    meter_alloc(meter, 4 * cnt)
    o = np.argsort(A[:cnt, 1], kind="mergesort")
    A[:cnt] = A[:cnt][o]
    o = np.argsort(A[:cnt, 0], kind="mergesort")
    A[:cnt] = A[:cnt][o]
    meter_free(meter, 4 * cnt)
    return cnt


@njit(cache=True)
def _heap_lt(A, i, j):
    return key_lt(A[i, 0], A[i, 1], A[i, 2], A[j, 0], A[j, 1], A[j, 2])


@njit(cache=True)
def _sift_down(A, cnt, i):
    while True:
        c = 2 * i + 1
        if c >= cnt:
            return
        if c + 1 < cnt and _heap_lt(A, c, c + 1):
            c += 1
        if not _heap_lt(A, i, c):
            return
        for q in range(3):
            A[i, q], A[c, q] = A[c, q], A[i, q]
        i = c


@njit(cache=True)
def _collect(P, sg, lo, s, A, meter, stats):
    """Fill ``A`` with the ``s`` smallest keys above ``lo`` in one scan (max-heap)."""
    n = P.shape[0]
    cnt = 0
    for t in range(n):
        stats[0] += 1
        x = P[t, 0]
        y = sg * P[t, 1]
        if not key_lt(lo[0], lo[1], lo[2], x, y, t):
            continue
        if cnt < s:
            A[cnt, 0] = x
            A[cnt, 1] = y
            A[cnt, 2] = t
            i = cnt
            cnt += 1
            while i > 0:
                par = (i - 1) // 2
                if not _heap_lt(A, par, i):
                    break
                for q in range(3):
                    A[i, q], A[par, q] = A[par, q], A[i, q]
                i = par
        elif key_lt(x, y, t, A[0, 0], A[0, 1], A[0, 2]):
            A[0, 0] = x
            A[0, 1] = y
            A[0, 2] = t
            _sift_down(A, cnt, 0)
    meter_alloc(meter, 4 * cnt)
    o = np.argsort(A[:cnt, 1], kind="mergesort")
    A[:cnt] = A[:cnt][o]
    o = np.argsort(A[:cnt, 0], kind="mergesort")
    A[:cnt] = A[:cnt][o]
    # equal (x, y) rows still need index order
    for t in range(1, cnt):
        u = t
        while u > 0 and A[u - 1, 0] == A[u, 0] and A[u - 1, 1] == A[u, 1] and A[u - 1, 2] > A[u, 2]:
            for q in range(3):
                A[u, q], A[u - 1, q] = A[u - 1, q], A[u, q]
            u -= 1
    meter_free(meter, 4 * cnt)
    return cnt


@njit(cache=True)
def _cross(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def chain_of(A, cnt, H):
    """Minimal upper chain of the key-sorted rows ``A[:cnt]`` as indices in ``H``."""
    h = 0
    for t in range(cnt):
        if t + 1 < cnt and A[t + 1, 0] == A[t, 0]:
            continue  # keep only the top point of an x-group
        x = A[t, 0]
        y = A[t, 1]
        while h >= 2:
            # H stores rows of A while building; converted to indices below
            r1 = H[h - 1]
            r2 = H[h - 2]
            if _cross(A[r2, 0], A[r2, 1], A[r1, 0], A[r1, 1], x, y) >= 0:
                h -= 1
            else:
                break
        H[h] = t
        h += 1
    for t in range(h):
        H[t] = int(A[H[t], 2])
    return h


@njit(cache=True)
def _xy(P, sg, i, stats):
    stats[0] += 1
    return P[i, 0], sg * P[i, 1]


@njit(cache=True)
def _portion(H, h, f, l):
    """Positions of ``f`` and ``l`` in chain ``H[:h]`` (-1 if absent)."""
    pf = -1
    pl = -1
    for t in range(h):
        if H[t] == f:
            pf = t
        if H[t] == l:
            pl = t
    return pf, pl


@njit(cache=True)
def _reload(P, sg, j, s, k, batch, meter, stats, A, H, keys, K):
    """Load block ``j`` into ``A`` and its chain into ``H``.

    With a boundary table ``K`` (one key per block edge) a reload is a single
    filtering scan; block ``j``'s first load fills ``K[j + 1]``.  Without it
    (``K`` empty) both boundary keys come from selection.
    """
    if K.shape[0] == 0:
        _block_keys(P, sg, j, s, k, batch, meter, stats, keys)
        cnt = _fill(P, sg, keys, A, meter, stats)
    elif K[j + 1, 2] < 0:
        cnt = _collect(P, sg, K[j], s, A, meter, stats)
        for q in range(3):
            K[j + 1, q] = A[cnt - 1, q]
    else:
        for q in range(3):
            keys[q] = K[j, q]
            keys[3 + q] = K[j + 1, q]
        cnt = _fill(P, sg, keys, A, meter, stats)
    return chain_of(A, cnt, H)


@njit(cache=True)
def pass_one(P, sg, s, nb, k, batch, meter, stats, C, counters, K):
    """Fill the block directory ``C``; counters = [recomputations, erased blocks]."""
    # A, new chain, merge stack, keys and registers; C is registered by the caller
    words = 3 * s + s + 2 * s + 6 + 8
    meter_alloc(meter, words)
    A = np.zeros((s, 3))
    H = np.zeros(s, np.int64)
    S = np.zeros(2 * s, np.int64)
    keys = np.zeros(6)
    for j in range(nb):
        C[j, 0] = -1
        C[j, 1] = -1
    top = 0  # stack S holds the surviving chain of block jcur, then the new chain
    jcur = -1
    for i in range(nb):
        h = _reload(P, sg, i, s, k, batch, meter, stats, A, H, keys, K)
        g = top  # stack entries that belong to block jcur
        for t in range(h):
            u = H[t]
            ux, uy = _xy(P, sg, u, stats)
            while top > 0:
                if top >= 2:
                    ax, ay = _xy(P, sg, S[top - 2], stats)
                    bx, by = _xy(P, sg, S[top - 1], stats)
                    if _cross(ax, ay, bx, by, ux, uy) >= 0:
                        top -= 1
                        if g > top:
                            g = top
                        continue
                    break
                # a single entry: its predecessor lives in an earlier block
                bx, by = _xy(P, sg, S[0], stats)
                pred = -1
                jp = -1
                if g == 1:
                    jp = jcur - 1
                    while jp >= 0 and C[jp, 0] < 0:
                        jp -= 1
                    if jp >= 0:
                        pred = C[jp, 1]
                if pred >= 0:
                    ax, ay = _xy(P, sg, pred, stats)
                    drop = _cross(ax, ay, bx, by, ux, uy) >= 0
                else:
                    drop = bx == ux
                if not drop:
                    break
                top = 0
                if g == 1:
                    # first vertex of block jcur popped: the block is erased
                    C[jcur, 0] = -1
                    C[jcur, 1] = -1
                    counters[1] += 1
                    g = 0
                    if jp >= 0:
                        counters[0] += 1
                        hh = _reload(P, sg, jp, s, k, batch, meter, stats, A, S, keys, K)
                        pf, pl = _portion(S, hh, C[jp, 0], C[jp, 1])
                        if pf < 0 or pl < pf:
                            raise RuntimeError("block directory inconsistent with recomputed chain")
                        for q in range(pf, pl + 1):
                            S[q - pf] = S[q]
                        top = pl - pf + 1
                        g = top
                        jcur = jp
                    else:
                        jcur = -1
            S[top] = u
            top += 1
        if jcur >= 0 and g > 0:
            C[jcur, 1] = S[g - 1]
        elif jcur >= 0:
            C[jcur, 0] = -1
            C[jcur, 1] = -1
            counters[1] += 1
        C[i, 0] = S[g]
        C[i, 1] = S[top - 1]
        for q in range(g, top):
            S[q - g] = S[q]
        top -= g
        jcur = i
    meter_free(meter, words)


@njit(cache=True)
def pass_two(P, sg, s, nb, k, batch, meter, stats, C, out, K):
    """Append the recorded portion of every surviving block to ``out``."""
    words = 3 * s + s + 6 + 4
    meter_alloc(meter, words)
    A = np.zeros((s, 3))
    H = np.zeros(s, np.int64)
    keys = np.zeros(6)
    nout = 0
    for i in range(nb):
        if C[i, 0] < 0:
            continue
        h = _reload(P, sg, i, s, k, batch, meter, stats, A, H, keys, K)
        pf, pl = _portion(H, h, C[i, 0], C[i, 1])
        if pf < 0 or pl < pf:
            raise RuntimeError("block directory inconsistent with recomputed chain")
        for t in range(pf, pl + 1):
            out[nout] = H[t]
            nout += 1
    meter_free(meter, words)
    return nout


# --- Python API ---------------------------------------------------------------


def _params(n, k, batch):
    layout = BlockLayout(n)
    if k is None:
        k = choose_k(max(n, 2))
    if batch is None:
        batch = layout.block_size
    return layout, k, batch


def upper_chain(view, k=None, batch=None, meter=None, lower=False, counters=None, strategy="table"):
    """Upper (or lower) hull vertex indices, left to right.

    ``strategy="table"`` finds each block's upper boundary once, with a
    bounded heap during its first load, and keeps the ``ceil(sqrt n) + 1``
    boundary keys; ``strategy="select"`` recomputes both boundaries of every
    load with two selections and keeps no table.
    """
    n = view.length
    if n == 0:
        return []
    if strategy not in ("table", "select"):
        raise ValueError(f"unknown block loading strategy {strategy!r}")
    layout, k, batch = _params(n, k, batch)
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    sg = -1.0 if lower else 1.0
    s, nb = layout.block_size, layout.blocks
    C = np.zeros((nb, 2), np.int64)
    if strategy == "table":
        K = np.full((nb + 1, 3), -1.0)
        K[0] = -np.inf
    else:
        K = np.zeros((0, 3))
    cnt = np.zeros(2, np.int64) if counters is None else counters
    out = np.zeros(n, np.int64)
    words = C.size + K.size
    meter_alloc(meter.cells, words)
    try:
        pass_one(view.data, sg, s, nb, k, batch, meter.cells, stats, C, cnt, K)
        m = pass_two(view.data, sg, s, nb, k, batch, meter.cells, stats, C, out, K)
    finally:
        meter_free(meter.cells, words)
        view.add_reads(int(stats[0]))
    return [int(v) for v in out[:m]]


def block_directory(view, k=None, batch=None, meter=None, lower=False, counters=None):
    """Pass-one directory: ``(f_j, l_j)`` per block, ``(-1, -1)`` for erased blocks."""
    n = view.length
    if n == 0:
        return []
    layout, k, batch = _params(n, k, batch)
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    C = np.zeros((layout.blocks, 2), np.int64)
    K = np.full((layout.blocks + 1, 3), -1.0)
    K[0] = -np.inf
    cnt = np.zeros(2, np.int64) if counters is None else counters
    meter_alloc(meter.cells, C.size + K.size)
    try:
        pass_one(view.data, -1.0 if lower else 1.0, layout.block_size, layout.blocks,
                 k, batch, meter.cells, stats, C, cnt, K)
    finally:
        meter_free(meter.cells, C.size + K.size)
        view.add_reads(int(stats[0]))
    return [(int(f), int(l)) for f, l in C]


def hull_unsorted(view, sink=None, k=None, batch=None, meter=None, counters=None, strategy="table"):
    """Minimal hull vertex indices clockwise from the leftmost (topmost) vertex."""
    if not isinstance(view, ReadOnlyView):
        view = ReadOnlyView(np.asarray(view, dtype=np.float64))
    if view.length == 0:
        return []
    data = view.data
    upper = upper_chain(view, k, batch, meter, False, counters, strategy)
    lower = upper_chain(view, k, batch, meter, True, None, strategy)[::-1]
    hull = list(upper)
    for v in lower:
        if tuple(data[v]) != tuple(data[hull[-1]]) and tuple(data[v]) != tuple(data[hull[0]]):
            hull.append(v)
    if sink is not None:
        for v in hull:
            sink(v)
    return hull


def load_block(view, i, k=None, batch=None, meter=None, lower=False):
    """Rows ``(x, y, index)`` of rank block ``i`` in composite order."""
    layout, k, batch = _params(view.length, k, batch)
    if not 0 <= i < layout.blocks:
        raise IndexError(f"block {i} outside [0, {layout.blocks})")
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    sg = -1.0 if lower else 1.0
    keys = np.zeros(6)
    A = np.zeros((layout.block_size, 3))
    _block_keys(view.data, sg, i, layout.block_size, k, batch, meter.cells, stats, keys)
    cnt = _fill(view.data, sg, keys, A, meter.cells, stats)
    view.add_reads(int(stats[0]))
    A = A[:cnt].copy()
    A[:, 1] *= sg
    return A


def block_hull(rows):
    """Minimal upper chain (point indices) of rows ``(x, y, index)`` sorted by key."""
    A = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    H = np.zeros(max(len(A), 1), np.int64)
    h = chain_of(A, len(A), H)
    return [int(v) for v in H[:h]]
