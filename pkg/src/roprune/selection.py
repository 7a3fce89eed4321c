"""Order-statistic selection over read-only, rescannable sequences.

This is a hierarchy of procedures A_0 ... A_k.  ``A_0`` walks from one end of
the valid window one successor at a time; ``A_j`` splits its range into
blocks of ``N**(j/(j+1))`` consecutive scan positions, takes each block's
median with ``A_{j-1}``, ranks the medians with full scans and shrinks the
valid window to the two medians closest to the target rank.  Nothing is
stored per element: a window is a pair of keys.

Sequences are scanned through a single callable ``seq(ctx, op, slot)``
returning ``(ok, value, tie, pos)``:

* ``OP_NEXT``   - next element from the working cursor (``ok`` False at end)
* ``OP_REWIND`` - working cursor back to position 0
* ``OP_SAVE``   - copy the working cursor into checkpoint ``slot``
* ``OP_LOAD``   - restore the working cursor from checkpoint ``slot``

Checkpoints let a level resume at the start of its current block instead of
skip-scanning from position 0.  Keys are compared lexicographically as
``(value, tie, pos)``; sequences whose order needs no secondary component
report ``tie = 0`` and use ``key_words = 2``.

With ``batch > 1`` a level buffers that many block medians and ranks them in
one scan, and ``A_0`` advances ``batch`` ranks per scan.  ``batch = 1`` is
the textbook procedure with O(k) words.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .workspace import ReadOnlyView, meter_alloc, meter_free, view_over_array

OP_NEXT = 0
OP_REWIND = 1
OP_SAVE = 2
OP_LOAD = 3

# frame columns
_LEN, _R, _BLK, _NB, _RHO1, _RHO2 = 0, 1, 2, 3, 4, 5
_KEYS = 6

_S_ENTER, _S_BLOCK, _S_LEAF, _S_RESUME, _S_RETURN = 0, 1, 2, 3, 4

_INF = np.inf


@dataclass(frozen=True)
class SelectConfig:
    k: int = 1
    batch: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("recursion depth k must be >= 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


def choose_k(n):
    """Recursion depth ``round(sqrt(log n / log log n))``, at least 1.

    ``log n / log log n`` dips below its asymptotic branch for n < 2**e, so the
    inner logarithm is clamped there to keep the result monotone in n.
    """
    if n < 2:
        return 1
    lg = max(math.log2(n), math.e)
    return max(1, int(round(math.sqrt(lg / math.log2(lg)))))


def k_from_epsilon(eps):
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return max(0, int(round(1.0 / eps - 1.0)))


@njit(cache=True)
def selection_words(k, kw, batch, cw):
    """Words registered by one selector call (frames, buffers, cursors)."""
    # leaf: current key, buffer, count, rank, need, fill, length, start/return tag
    leaf = kw + 6 + batch * kw
    if k == 0:
        return leaf + cw
    frame = _KEYS + 4 * kw + batch * kw + cw
    return k * frame + leaf + (batch + 1) + cw


@njit(cache=True)
def key_lt(v1, w1, p1, v2, w2, p2):
    if v1 < v2:
        return True
    if v1 > v2:
        return False
    if w1 < w2:
        return True
    if w1 > w2:
        return False
    return p1 < p2


@njit(cache=True)
def _block_size(n, level):
    b = int(math.ceil(n ** (level / (level + 1.0)) - 1e-9))
    if b < 1:
        b = 1
    if b > n:
        b = n
    return b


@njit(cache=True)
def _get(F, j, col, kw):
    w = F[j, col + 1] if kw == 3 else 0.0
    return F[j, col], w, F[j, col + kw - 1]


@njit(cache=True)
def _put(F, j, col, kw, v, w, p):
    F[j, col] = v
    if kw == 3:
        F[j, col + 1] = w
    F[j, col + kw - 1] = p


@njit(cache=True)
def _buf_get(B, i, kw):
    w = B[i, 1] if kw == 3 else 0.0
    return B[i, 0], w, B[i, kw - 1]


@njit(cache=True)
def _buf_insert(B, nb, cap, kw, v, w, p, ascending):
    """Insert into a sorted buffer of capacity ``cap``; returns the new size."""
    if nb == cap:
        lv, lw, lp = _buf_get(B, cap - 1, kw)
        if ascending:
            if not key_lt(v, w, p, lv, lw, lp):
                return nb
        else:
            if not key_lt(lv, lw, lp, v, w, p):
                return nb
        i = cap - 1
    else:
        i = nb
        nb += 1
    while i > 0:
        qv, qw, qp = _buf_get(B, i - 1, kw)
        if ascending:
            move = key_lt(v, w, p, qv, qw, qp)
        else:
            move = key_lt(qv, qw, qp, v, w, p)
        if not move:
            break
        for c in range(kw):
            B[i, c] = B[i - 1, c]
        i -= 1
    B[i, 0] = v
    if kw == 3:
        B[i, 1] = w
    B[i, kw - 1] = p
    return nb


def make_select(seq, jit=True):
    """Build a selector ``f(ctx, m, r, k, kw, batch, meter, cw)`` bound to ``seq``.

    The sequence is a closure variable rather than an argument so the
    compiled selector carries no dispatcher object and can be disk cached.
    """

    def select_core(ctx, m, r, k, kw, batch, meter, cw):
        """Return the key ``(value, tie, pos)`` of rank ``r`` (1-based) among ``m``.

        Runs as an explicit frame machine so it can execute both jitted (with a
        jitted ``seq``) and as plain Python (with any callable ``seq``).
        """
        words = selection_words(k, kw, batch, cw)
        meter_alloc(meter, words)
        F = np.zeros((k + 1, _KEYS + 4 * kw))
        MB = np.zeros((k + 1, batch, kw))
        hist = np.zeros(batch + 1, np.int64)
        lbuf = np.zeros((batch, kw))
        WLO = _KEYS
        WHI = _KEYS + kw
        M1 = _KEYS + 2 * kw
        M2 = _KEYS + 3 * kw
        thresh = 2 * (k + 1)

        # level k holds the whole sequence and the full window
        F[k, _LEN] = m
        F[k, _R] = r
        F[k, _RHO2] = m
        _put(F, k, WLO, kw, -_INF, -_INF, -_INF)
        _put(F, k, WHI, kw, _INF, _INF, _INF)

        j = k
        state = _S_LEAF if k == 0 else _S_ENTER
        # leaf parameters: start level, window frame, length, rank, and the level
        # it answers for (-1 for a block median requested by level 1)
        l_start = k
        l_win = k
        l_len = m
        l_r = r
        l_from = k
        ret_ok = False
        rv = 0.0
        rw = 0.0
        rp = 0.0

        while True:
            if state == _S_ENTER:
                n_len = int(F[j, _LEN])
                wlv, wlw, wlp = _get(F, j, WLO, kw)
                whv, whw, whp = _get(F, j, WHI, kw)
                if F[j, _R] < 0:
                    if j == k:
                        seq(ctx, OP_REWIND, 0)
                    else:
                        seq(ctx, OP_LOAD, j)
                    c = 0
                    for _ in range(n_len):
                        ok, v, w, p = seq(ctx, OP_NEXT, 0)
                        if not ok:
                            break
                        if key_lt(wlv, wlw, wlp, v, w, p) and key_lt(v, w, p, whv, whw, whp):
                            c += 1
                    if c == 0:
                        ret_ok = False
                        state = _S_RETURN
                        continue
                    F[j, _R] = (c + 1) // 2
                else:
                    c = int(F[j, _RHO2])
                if c < thresh:
                    l_start = j
                    l_win = j
                    l_len = n_len
                    l_r = int(F[j, _R])
                    l_from = j
                    state = _S_LEAF
                    continue
                F[j, _BLK] = 0
                F[j, _NB] = 0
                F[j, _RHO1] = -1
                F[j, _RHO2] = n_len + 1
                if j == k:
                    seq(ctx, OP_REWIND, 0)
                else:
                    seq(ctx, OP_LOAD, j)
                seq(ctx, OP_SAVE, j - 1)
                state = _S_BLOCK

            elif state == _S_BLOCK:
                n_len = int(F[j, _LEN])
                b = _block_size(n_len, j)
                nblk = (n_len + b - 1) // b
                blk = int(F[j, _BLK])
                nb = int(F[j, _NB])
                if nb == batch or (blk == nblk and nb > 0):
                    # rank the buffered medians with one scan of the range
                    wlv, wlw, wlp = _get(F, j, WLO, kw)
                    whv, whw, whp = _get(F, j, WHI, kw)
                    for u in range(nb + 1):
                        hist[u] = 0
                    if j == k:
                        seq(ctx, OP_REWIND, 0)
                    else:
                        seq(ctx, OP_LOAD, j)
                    for _ in range(n_len):
                        ok, v, w, p = seq(ctx, OP_NEXT, 0)
                        if not ok:
                            break
                        if key_lt(wlv, wlw, wlp, v, w, p) and key_lt(v, w, p, whv, whw, whp):
                            lo = 0
                            hi = nb
                            while lo < hi:
                                mid = (lo + hi) // 2
                                qv, qw, qp = _buf_get(MB[j], mid, kw)
                                if key_lt(v, w, p, qv, qw, qp):
                                    hi = mid
                                else:
                                    lo = mid + 1
                            hist[lo] += 1
                    target = int(F[j, _R]) - 1
                    below = 0
                    found = False
                    for t in range(nb):
                        below += hist[t]
                        qv, qw, qp = _buf_get(MB[j], t, kw)
                        if below == target:
                            found = True
                            rv, rw, rp = qv, qw, qp
                            break
                        if below < target:
                            if below > F[j, _RHO1]:
                                F[j, _RHO1] = below
                                _put(F, j, M1, kw, qv, qw, qp)
                        elif below < F[j, _RHO2]:
                            F[j, _RHO2] = below
                            _put(F, j, M2, kw, qv, qw, qp)
                    F[j, _NB] = 0
                    if found:
                        ret_ok = True
                        state = _S_RETURN
                    continue
                if blk == nblk:
                    # end of one pass over the blocks: shrink the window
                    rho1 = int(F[j, _RHO1])
                    rho2 = int(F[j, _RHO2])
                    if rho2 > n_len:
                        # no median above the target: the window's upper end stays
                        wlv, wlw, wlp = _get(F, j, WLO, kw)
                        whv, whw, whp = _get(F, j, WHI, kw)
                        if j == k:
                            seq(ctx, OP_REWIND, 0)
                        else:
                            seq(ctx, OP_LOAD, j)
                        rho2 = 0
                        for _ in range(n_len):
                            ok, v, w, p = seq(ctx, OP_NEXT, 0)
                            if not ok:
                                break
                            if key_lt(wlv, wlw, wlp, v, w, p) and key_lt(v, w, p, whv, whw, whp):
                                rho2 += 1
                    else:
                        mv, mw, mp = _get(F, j, M2, kw)
                        _put(F, j, WHI, kw, mv, mw, mp)
                    if rho1 >= 0:
                        mv, mw, mp = _get(F, j, M1, kw)
                        _put(F, j, WLO, kw, mv, mw, mp)
                        F[j, _R] -= rho1 + 1
                        c_new = rho2 - rho1 - 1
                    else:
                        c_new = rho2
                    F[j, _RHO2] = c_new
                    state = _S_ENTER
                    continue
                blen = b
                if n_len - blk * b < blen:
                    blen = n_len - blk * b
                if j == 1:
                    l_start = 0
                    l_win = 1
                    l_len = blen
                    l_r = -1
                    l_from = -1
                    state = _S_LEAF
                else:
                    F[j - 1, _LEN] = blen
                    F[j - 1, _R] = -1
                    for c2 in range(2 * kw):
                        F[j - 1, WLO + c2] = F[j, WLO + c2]
                    j -= 1
                    state = _S_ENTER

            elif state == _S_LEAF:
                # A_0: walk successors (or predecessors) ``batch`` ranks per scan
                wlv, wlw, wlp = _get(F, l_win, WLO, kw)
                whv, whw, whp = _get(F, l_win, WHI, kw)
                if l_start == k:
                    seq(ctx, OP_REWIND, 0)
                else:
                    seq(ctx, OP_LOAD, l_start)
                c = 0
                nbuf = 0
                for _ in range(l_len):
                    ok, v, w, p = seq(ctx, OP_NEXT, 0)
                    if not ok:
                        break
                    if key_lt(wlv, wlw, wlp, v, w, p) and key_lt(v, w, p, whv, whw, whp):
                        c += 1
                        nbuf = _buf_insert(lbuf, nbuf, batch, kw, v, w, p, True)
                if c == 0:
                    ret_ok = False
                else:
                    need = l_r if l_r > 0 else (c + 1) // 2
                    if need <= nbuf:
                        rv, rw, rp = _buf_get(lbuf, need - 1, kw)
                    else:
                        ascending = need <= c - need + 1
                        if ascending:
                            cv, cw_, cp = _buf_get(lbuf, nbuf - 1, kw)
                            need -= nbuf
                        else:
                            cv, cw_, cp = whv, whw, whp
                            need = c - need + 1
                        while True:
                            if l_start == k:
                                seq(ctx, OP_REWIND, 0)
                            else:
                                seq(ctx, OP_LOAD, l_start)
                            nbuf = 0
                            for _ in range(l_len):
                                ok, v, w, p = seq(ctx, OP_NEXT, 0)
                                if not ok:
                                    break
                                if ascending:
                                    inside = key_lt(cv, cw_, cp, v, w, p) and key_lt(
                                        v, w, p, whv, whw, whp
                                    )
                                else:
                                    inside = key_lt(wlv, wlw, wlp, v, w, p) and key_lt(
                                        v, w, p, cv, cw_, cp
                                    )
                                if inside:
                                    nbuf = _buf_insert(lbuf, nbuf, batch, kw, v, w, p, ascending)
                            if need <= nbuf:
                                rv, rw, rp = _buf_get(lbuf, need - 1, kw)
                                break
                            cv, cw_, cp = _buf_get(lbuf, nbuf - 1, kw)
                            need -= nbuf
                    ret_ok = True
                if l_from < 0:
                    j = 1
                    state = _S_RESUME
                else:
                    j = l_from
                    state = _S_RETURN

            elif state == _S_RESUME:
                if ret_ok:
                    nb = int(F[j, _NB])
                    nb = _buf_insert(MB[j], nb, batch, kw, rv, rw, rp, True)
                    F[j, _NB] = nb
                n_len = int(F[j, _LEN])
                b = _block_size(n_len, j)
                blk = int(F[j, _BLK])
                blen = b
                if n_len - blk * b < blen:
                    blen = n_len - blk * b
                seq(ctx, OP_LOAD, j - 1)
                for _ in range(blen):
                    seq(ctx, OP_NEXT, 0)
                seq(ctx, OP_SAVE, j - 1)
                F[j, _BLK] = blk + 1
                state = _S_BLOCK

            else:  # _S_RETURN from level j
                if j == k:
                    break
                j += 1
                state = _S_RESUME

        meter_free(meter, words)
        return ret_ok, rv, rw, rp

    if jit:
        return njit(cache=True)(select_core)
    return select_core


def select_core_py(seq, ctx, m, r, k, kw, batch, meter, cw):
    """Plain-Python run of the selector, for arbitrary callables ``seq``."""
    return make_select(seq, jit=False)(ctx, m, r, k, kw, batch, meter, cw)


# --- sequences over arrays ------------------------------------------------


@njit(cache=True)
def array_seq(ctx, op, slot):
    """Column ``col`` of a record array; key ``(value, 0, index)``."""
    data, col, cur, stats = ctx
    if op == OP_NEXT:
        i = cur[0]
        if i >= data.shape[0]:
            return False, 0.0, 0.0, 0.0
        cur[0] = i + 1
        stats[0] += 1
        return True, data[i, col], 0.0, float(i)
    if op == OP_REWIND:
        cur[0] = 0
    elif op == OP_SAVE:
        cur[1 + slot] = cur[0]
    else:
        cur[0] = cur[1 + slot]
    return True, 0.0, 0.0, 0.0


@njit(cache=True)
def xorder_seq(ctx, op, slot):
    """Points in composite ``(x, sign * y, index)`` order."""
    data, sg, cur, stats = ctx
    if op == OP_NEXT:
        i = cur[0]
        if i >= data.shape[0]:
            return False, 0.0, 0.0, 0.0
        cur[0] = i + 1
        stats[0] += 1
        return True, data[i, 0], sg * data[i, 1], float(i)
    if op == OP_REWIND:
        cur[0] = 0
    elif op == OP_SAVE:
        cur[1 + slot] = cur[0]
    else:
        cur[0] = cur[1 + slot]
    return True, 0.0, 0.0, 0.0


_select_array = make_select(array_seq)
_select_xorder = make_select(xorder_seq)


@njit(cache=True)
def select_in_array(data, col, r, k, batch, meter, stats):
    cur = np.zeros(k + 1, np.int64)
    ctx = (data, col, cur, stats)
    return _select_array(ctx, data.shape[0], r, k, 2, batch, meter, 1)


@njit(cache=True)
def select_xorder(data, sg, r, k, batch, meter, stats):
    cur = np.zeros(k + 1, np.int64)
    ctx = (data, sg, cur, stats)
    return _select_xorder(ctx, data.shape[0], r, k, 3, batch, meter, 1)


# --- plain-Python rescannable sequences -----------------------------------


class _ScanCursor:
    """Cursor over an object with ``fresh_scan()``; checkpoints are positions."""

    def __init__(self, seq, slots):
        self.seq = seq
        self.it = iter(seq.fresh_scan())
        self.pos = 0
        self.saved = [0] * (slots + 1)

    def seek(self, pos):
        # skip-scan: a fresh pass discarding the first ``pos`` elements
        self.it = iter(self.seq.fresh_scan())
        self.pos = 0
        for _ in range(pos):
            next(self.it)
            self.pos += 1


def _py_seq(cursor, op, slot):
    if op == OP_NEXT:
        try:
            v = next(cursor.it)
        except StopIteration:
            return False, 0.0, 0.0, 0.0
        p = cursor.pos
        cursor.pos += 1
        return True, float(v), 0.0, float(p)
    if op == OP_REWIND:
        cursor.seek(0)
    elif op == OP_SAVE:
        cursor.saved[slot] = cursor.pos
    else:
        cursor.seek(cursor.saved[slot])
    return True, 0.0, 0.0, 0.0


# --- public API -------------------------------------------------------------


def _as_view(seq):
    if isinstance(seq, ReadOnlyView):
        return seq
    if hasattr(seq, "fresh_scan"):
        return None
    return view_over_array(seq)


def _length(seq):
    if hasattr(seq, "length"):
        return int(seq.length)
    return len(seq)


def select_ak(seq, r, cfg=None, meter=None):
    """Return the ``r``-th smallest value (1-based) of a rescannable sequence.

    Duplicates are ordered by scan position, so every rank is unique.  ``seq``
    may be a :class:`ReadOnlyView` of scalars, any sequence of numbers, or an
    object with ``length`` and ``fresh_scan()``.
    """
    from .workspace import WorkspaceMeter

    cfg = cfg or SelectConfig()
    meter = meter or WorkspaceMeter()
    n = _length(seq)
    if n == 0:
        raise ValueError("selection from an empty sequence")
    if not 1 <= r <= n:
        raise ValueError(f"rank {r} outside [1, {n}]")
    view = _as_view(seq)
    if view is None:
        cursor = _ScanCursor(seq, cfg.k)
        ok, v, _, _ = select_core_py(
            _py_seq, cursor, n, r, cfg.k, 2, cfg.batch, meter.cells, 1
        )
        return v
    stats = np.zeros(1, np.int64)
    ok, v, _, _ = select_in_array(view.data, 0, r, cfg.k, cfg.batch, meter.cells, stats)
    view.add_reads(stats[0])
    return v


def select_a0(seq, r, meter=None):
    """Selection by repeated successor scans; O(1) words."""
    return select_ak(seq, r, SelectConfig(k=0), meter)


def select_index(view, r, cfg=None, meter=None):
    """Like :func:`select_ak` on a view but returns ``(value, index)``."""
    from .workspace import WorkspaceMeter

    cfg = cfg or SelectConfig()
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    ok, v, _, p = select_in_array(view.data, 0, r, cfg.k, cfg.batch, meter.cells, stats)
    view.add_reads(stats[0])
    return v, int(p)
