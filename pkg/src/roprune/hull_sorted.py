"""Upper and lower hull of x-sorted read-only points in O(log n) words.

Bridge-based divide and conquer with two changes for read-only input:

* edges are produced by an in-order traversal driven by a bounded stack, so
  they come out left to right;
* the bridge search keeps no per-point marks.  Round ``t`` records only the
  median pair slope ``M[t]`` (as the exact differences ``dy, dx``) and the
  direction bit ``B[t]``; the valid pairs of any later round are regenerated
  by replaying every recorded level test over the consecutive round-1 pairs,
  parking lone survivors in ``IndexP`` until a partner arrives.

Coordinates are compared through products of coordinate differences, which
are exact in double precision while magnitudes stay below 2**25.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .selection import OP_LOAD, OP_NEXT, OP_REWIND, OP_SAVE, choose_k, make_select
from .workspace import CapacityError, FormatError, ReadOnlyView, WorkspaceMeter, meter_alloc, meter_free

_KEEP, _PRUNE_P, _PRUNE_Q = 0, 1, 2


def log_capacity(n):
    """Rounds a bridge search may log: ceil(log_{4/3} n) plus slack."""
    return int(math.ceil(math.log(max(n, 2)) / math.log(4.0 / 3.0))) + 4


def stack_capacity(n):
    return 2 * int(math.ceil(math.log2(max(n, 2)))) + 4


def default_batch(n):
    return max(1, int(math.ceil(math.log2(max(n, 2)))))


# --- level tests and replay -------------------------------------------------


@njit(cache=True)
def level_test(P, sg, p, q, dym, dxm, bit):
    """Outcome of one recorded round for the pair ``p < q``."""
    xp = P[p, 0]
    xq = P[q, 0]
    if xp == xq:
        # the lower of two points on a vertical is never an upper-hull vertex
        if (sg * P[p, 1]) < (sg * P[q, 1]):
            return _PRUNE_P
        return _PRUNE_Q
    if dxm == 0.0:
        return _KEEP
    dx = xq - xp
    dy = (sg * P[q, 1]) - (sg * P[p, 1])
    if bit == 0:
        # M[t] above the bridge slope: the left end of a steep pair is not a*
        if dy * dxm >= dym * dx:
            return _PRUNE_P
    else:
        if dy * dxm <= dym * dx:
            return _PRUNE_Q
    return _KEEP


@njit(cache=True)
def replay_reset(st, nr):
    st[0] = 0
    for t in range(1, nr + 1):
        st[t] = -1


@njit(cache=True)
def replay_next(P, sg, s, e, nr, LM, LB, st, stats):
    """Advance the replay cursor ``st`` to the next pair valid after ``nr`` rounds.

    ``st[0]`` is the next round-1 pair ordinal and ``st[t]`` the point parked
    at level ``t``.  Returns ``(ok, p, q)`` with ``p < q``.
    """
    npairs = (e - s + 1) // 2
    while st[0] < npairs:
        nu = st[0]
        st[0] = nu + 1
        p = s + 2 * nu
        q = p + 1
        stats[0] += 2
        t = 1
        while True:
            if t > nr:
                return True, p, q
            res = level_test(P, sg, p, q, LM[t, 0], LM[t, 1], LB[t])
            if res == _KEEP:
                t += 1
                continue
            surv = q if res == _PRUNE_P else p
            beta = st[t]
            if beta < 0:
                st[t] = surv
                break
            st[t] = -1
            stats[0] += 1
            if beta < surv:
                p, q = beta, surv
            else:
                p, q = surv, beta
            t += 1
    return False, -1, -1


@njit(cache=True)
def pair_seq(ctx, op, slot):
    """Non-vertical valid pairs keyed ``(slope, left, right)``."""
    P, sg, s, e, nr, LM, LB, cur, stats = ctx
    if op == OP_NEXT:
        while True:
            ok, p, q = replay_next(P, sg, s, e, nr, LM, LB, cur[0], stats)
            if not ok:
                return False, 0.0, 0.0, 0.0
            dx = P[q, 0] - P[p, 0]
            if dx != 0.0:
                return True, ((sg * P[q, 1]) - (sg * P[p, 1])) / dx, float(p), float(q)
    if op == OP_REWIND:
        replay_reset(cur[0], nr)
    elif op == OP_SAVE:
        for t in range(nr + 1):
            cur[1 + slot, t] = cur[0, t]
    else:
        for t in range(nr + 1):
            cur[0, t] = cur[1 + slot, t]
    return True, 0.0, 0.0, 0.0


# --- bridge -----------------------------------------------------------------


_select_pairs = make_select(pair_seq)


@njit(cache=True)
def _better_left(P, sg, u, v, dym, dxm):
    """True if ``u`` beats ``v`` as the left support point (leftmost on ties)."""
    fu = (sg * P[u, 1]) * dxm - dym * P[u, 0]
    fv = (sg * P[v, 1]) * dxm - dym * P[v, 0]
    return fu > fv or (fu == fv and u < v)


@njit(cache=True)
def _better_right(P, sg, u, v, dym, dxm):
    fu = (sg * P[u, 1]) * dxm - dym * P[u, 0]
    fv = (sg * P[v, 1]) * dxm - dym * P[v, 0]
    return fu > fv or (fu == fv and u > v)


@njit(cache=True)
def _consider(P, sg, u, m, dym, dxm, best):
    # best = [a, b]
    if u <= m:
        if best[0] < 0 or _better_left(P, sg, u, best[0], dym, dxm):
            best[0] = u
    else:
        if best[1] < 0 or _better_right(P, sg, u, best[1], dym, dxm):
            best[1] = u


@njit(cache=True)
def _slope_cmp(P, sg, o, u, v):
    """Sign of slope(o, u) - slope(o, v) for u, v strictly right of o (or left)."""
    lhs = ((sg * P[u, 1]) - (sg * P[o, 1])) * (P[v, 0] - P[o, 0])
    rhs = ((sg * P[v, 1]) - (sg * P[o, 1])) * (P[u, 0] - P[o, 0])
    if lhs > rhs:
        return 1
    if lhs < rhs:
        return -1
    return 0


@njit(cache=True)
def _visit_final(P, sg, u, m, a, b, best):
    """Singleton finish: best[1] maximizes slope from a, or best[0] minimizes into b."""
    if a >= 0:
        if u <= m:
            return
        if best[1] < 0:
            best[1] = u
        else:
            c = _slope_cmp(P, sg, a, u, best[1])
            if c > 0 or (c == 0 and u > best[1]):
                best[1] = u
    else:
        if u > m:
            return
        if best[0] < 0:
            best[0] = u
        else:
            # for points left of b, slope(u, b) < slope(v, b) iff slope(b, u) < slope(b, v)
            c = _slope_cmp(P, sg, b, u, best[0])
            if c < 0 or (c == 0 and u < best[0]):
                best[0] = u


@njit(cache=True)
def bruteforce_bridge(P, sg, m, cands, nc):
    """Bridge of a small candidate set: leftmost a, rightmost b on the supporting edge."""
    ba = -1
    bb = -1
    for ia in range(nc):
        a = cands[ia]
        if a > m:
            continue
        for ib in range(nc):
            b = cands[ib]
            if b <= m:
                continue
            dx = P[b, 0] - P[a, 0]
            dy = (sg * P[b, 1]) - (sg * P[a, 1])
            ok = True
            for ic in range(nc):
                c = cands[ic]
                if ((sg * P[c, 1]) - (sg * P[a, 1])) * dx > dy * (P[c, 0] - P[a, 0]):
                    ok = False
                    break
            if not ok:
                continue
            if ba < 0 or P[a, 0] < P[ba, 0] or (P[a, 0] == P[ba, 0] and a < ba):
                ba = a
            if bb < 0 or P[b, 0] > P[bb, 0] or (P[b, 0] == P[bb, 0] and b > bb):
                bb = b
    return ba, bb


@njit(cache=True)
def bridge_kernel(P, sg, s, m, e, LM, LB, cur, k, batch, meter, stats, trace):
    """Bridge over separator ``m`` of ``P[s..e]``; returns ``(a, b, rounds)``.

    ``trace`` rows (exempt instrumentation) receive per round: valid pairs,
    non-vertical pairs, valid points; ``trace[0, 3]`` counts rows written.
    """
    cap = LM.shape[0] - 1
    odd = e if (e - s + 1) % 2 == 1 else -1
    nr = 0
    best = np.full(2, -1, np.int64)
    st = cur[0]
    tracing = trace.shape[0] > 1
    while True:
        # count scan over the pairs valid in round nr + 1
        replay_reset(st, nr)
        pairs = 0
        c = 0
        nleft = 0
        nright = 0
        lastl = -1
        lastr = -1
        while True:
            ok, p, q = replay_next(P, sg, s, e, nr, LM, LB, st, stats)
            if not ok:
                break
            pairs += 1
            if P[p, 0] != P[q, 0]:
                c += 1
            for u in (p, q):
                if u <= m:
                    nleft += 1
                    lastl = u
                else:
                    nright += 1
                    lastr = u
        for t in range(nr + 1):
            u = odd if t == 0 else st[t]
            if u < 0:
                continue
            if u <= m:
                nleft += 1
                lastl = u
            else:
                nright += 1
                lastr = u
        if tracing:
            trace[nr, 0] = pairs
            trace[nr, 1] = c
            trace[nr, 2] = nleft + nright
            trace[0, 3] = nr + 1
        if nleft <= 1 or nright <= 1 or pairs == 0:
            break
        if nr == cap:
            raise RuntimeError("round log capacity exceeded")
        dym = 0.0
        dxm = 0.0
        bit = 0
        if c > 0:
            ok, _, pa, pb = _select_pairs(
                (P, sg, s, e, nr, LM, LB, cur, stats), c, (c + 1) // 2,
                k, 3, batch, meter, 0,
            )
            ia = int(pa)
            ib = int(pb)
            stats[0] += 2
            dym = (sg * P[ib, 1]) - (sg * P[ia, 1])
            dxm = P[ib, 0] - P[ia, 0]
            # supporting points of both sides for slope dym / dxm
            best[0] = -1
            best[1] = -1
            replay_reset(st, nr)
            while True:
                ok, p, q = replay_next(P, sg, s, e, nr, LM, LB, st, stats)
                if not ok:
                    break
                _consider(P, sg, p, m, dym, dxm, best)
                _consider(P, sg, q, m, dym, dxm, best)
            for t in range(nr + 1):
                u = odd if t == 0 else st[t]
                if u >= 0:
                    stats[0] += 1
                    _consider(P, sg, u, m, dym, dxm, best)
            a = best[0]
            b = best[1]
            fa = (sg * P[a, 1]) * dxm - dym * P[a, 0]
            fb = (sg * P[b, 1]) * dxm - dym * P[b, 0]
            if fa == fb:
                return a, b, nr
            bit = 0 if fa > fb else 1
        nr += 1
        LM[nr, 0] = dym
        LM[nr, 1] = dxm
        LB[nr] = bit

    if nleft <= 1 or nright <= 1:
        a = lastl if nleft == 1 else -1
        b = lastr if (a < 0 and nright == 1) else -1
        best[0] = a
        best[1] = b
        replay_reset(st, nr)
        while True:
            ok, p, q = replay_next(P, sg, s, e, nr, LM, LB, st, stats)
            if not ok:
                break
            _visit_final(P, sg, p, m, a, b, best)
            _visit_final(P, sg, q, m, a, b, best)
        for t in range(nr + 1):
            u = odd if t == 0 else st[t]
            if u >= 0:
                stats[0] += 1
                _visit_final(P, sg, u, m, a, b, best)
        return best[0], best[1], nr

    # only parked points remain: at most one per level plus the odd point
    cands = np.empty(nr + 1, np.int64)
    meter_alloc(meter, nr + 1)
    nc = 0
    for t in range(nr + 1):
        u = odd if t == 0 else st[t]
        if u >= 0:
            cands[nc] = u
            nc += 1
    stats[0] += nc
    a, b = bruteforce_bridge(P, sg, m, cands, nc)
    meter_free(meter, nr + 1)
    return a, b, nr


# --- hull traversal -----------------------------------------------------------


@njit(cache=True)
def separator(P, s, e, stats):
    """Last index of the median distinct-x group of ``P[s..e]``; -1 if one group."""
    d = 1
    for i in range(s + 1, e + 1):
        if P[i, 0] != P[i - 1, 0]:
            d += 1
    stats[0] += e - s + 1
    if d < 2:
        return -1
    g = min(d // 2, d - 2)
    seen = 0
    for i in range(s, e):
        stats[0] += 1
        if P[i + 1, 0] != P[i, 0]:
            if seen == g:
                return i
            seen += 1
    return e - 1


@njit(cache=True)
def upper_hull_kernel(P, sg, s, e, k, batch, cap, stack_cap, meter, stats, out, trace):
    """Write upper-hull edges of ``P[s..e]`` left to right into ``out``.

    Returns the number of edges.  ``out`` is the output stream, not workspace.
    """
    # round log, replay cursor, stack and loop registers
    words = 4 * (cap + 1) + 3 * stack_cap + 5 + (k + 1) * (cap + 1)
    meter_alloc(meter, words)
    LM = np.zeros((cap + 1, 2))
    LB = np.zeros(cap + 1, np.int64)
    cur = np.zeros((k + 1, cap + 1), np.int64)
    stack = np.zeros((stack_cap, 3), np.int64)
    depth = 0
    nout = 0
    cs = s
    ce = e
    while True:
        while True:
            m = separator(P, cs, ce, stats)
            if m < 0:
                break
            a, b, _ = bridge_kernel(P, sg, cs, m, ce, LM, LB, cur, k, batch, meter, stats, trace)
            if depth == stack_cap:
                raise RuntimeError("bounded stack capacity exceeded")
            stack[depth, 0] = a
            stack[depth, 1] = b
            stack[depth, 2] = ce
            depth += 1
            ce = a
        if depth == 0:
            break
        depth -= 1
        out[nout, 0] = stack[depth, 0]
        out[nout, 1] = stack[depth, 1]
        nout += 1
        cs = stack[depth, 1]
        ce = stack[depth, 2]
    meter_free(meter, words)
    return nout


# --- Python API ---------------------------------------------------------------


@dataclass
class RoundLog:
    """Per-round median pair differences, direction bits and parked points."""

    capacity: int
    M: np.ndarray = field(init=False)
    B: np.ndarray = field(init=False)
    IndexP: np.ndarray = field(init=False)
    rounds: int = 0

    def __post_init__(self):
        self.M = np.zeros((self.capacity + 1, 2))
        self.B = np.zeros(self.capacity + 1, np.int64)
        self.IndexP = np.full(self.capacity + 1, -1, np.int64)

    def reset(self):
        self.M[:] = 0.0
        self.B[:] = 0
        self.IndexP[:] = -1
        self.rounds = 0

    def medians(self):
        """Median slopes of the logged rounds (nan for all-vertical rounds)."""
        out = []
        for t in range(1, self.rounds + 1):
            dy, dx = self.M[t]
            out.append(dy / dx if dx != 0 else math.nan)
        return out


@dataclass(frozen=True)
class Bridge:
    i: int
    j: int


class SortedPointView(ReadOnlyView):
    """Points with nondecreasing x, checked on construction unless ``validate=False``."""

    def __init__(self, view, validate=True):
        if isinstance(view, ReadOnlyView):
            data, source = view.data, view._source
        else:
            data, source = np.asarray(view, dtype=np.float64), None
        super().__init__(data, source)
        if self.length and self.arity != 2:
            raise FormatError("points must have two coordinates")
        if validate and self.length > 1:
            self.add_reads(self.length)
            if np.any(np.diff(self.data[:, 0]) < 0):
                raise ValueError("points are not sorted by x")
        self.base = view if isinstance(view, ReadOnlyView) else None

    def add_reads(self, count):
        super().add_reads(count)
        if getattr(self, "base", None) is not None:
            self.base.add_reads(count)


def _sorted(view, validate=True):
    if isinstance(view, SortedPointView):
        return view
    return SortedPointView(view, validate)


def _config(n, k, batch):
    if k is None:
        k = choose_k(max(n, 2))
    if batch is None:
        batch = default_batch(n)
    return k, batch


class _Run:
    """Meters and counters of one public call."""

    def __init__(self, view, meter):
        self.view = view
        self.meter = meter or WorkspaceMeter()
        self.stats = np.zeros(1, np.int64)

    def done(self):
        self.view.add_reads(int(self.stats[0]))


def enumerate_valid_pairs(view, start, end, log, upto_level=None, visitor=None):
    """Pairs valid at round ``upto_level`` (default: after every logged round).

    Returns ``(pairs, parked)``; ``parked`` lists points valid but unpaired,
    the odd round-1 point first.  ``visitor`` is called with each pair.
    """
    view = _sorted(view, validate=False)
    nr = log.rounds if upto_level is None else upto_level - 1
    st = np.zeros(log.capacity + 1, np.int64)
    stats = np.zeros(1, np.int64)
    replay_reset(st, nr)
    pairs = []
    while True:
        ok, p, q = replay_next(view.data, 1.0, start, end, nr, log.M, log.B, st, stats)
        if not ok:
            break
        pairs.append((int(p), int(q)))
        if visitor is not None:
            visitor((int(p), int(q)))
    parked = []
    if (end - start + 1) % 2 == 1:
        parked.append(end)
    parked.extend(int(st[t]) for t in range(1, nr + 1) if st[t] >= 0)
    log.IndexP[: nr + 1] = -1
    log.IndexP[1 : nr + 1] = st[1 : nr + 1]
    view.add_reads(int(stats[0]))
    return pairs, parked


def compute_bridge(view, start, m, end, log=None, k=None, batch=None, meter=None, trace=None):
    """Upper-hull edge of ``P[start..end]`` crossing between ``P[m]`` and ``P[m+1]``."""
    view = _sorted(view, validate=False)
    if not start <= m < end:
        raise ValueError("separator must satisfy start <= m < end")
    if view.data[m, 0] >= view.data[m + 1, 0]:
        raise ValueError("separator must split distinct x-coordinates")
    n = end - start + 1
    k, batch = _config(n, k, batch)
    log = log or RoundLog(log_capacity(n))
    log.reset()
    run = _Run(view, meter)
    cur = np.zeros((k + 1, log.capacity + 1), np.int64)
    tr = trace if trace is not None else np.zeros((1, 4), np.int64)
    words = 3 * log.capacity + (log.capacity + 1) + cur.size
    meter_alloc(run.meter.cells, words)
    try:
        a, b, rounds = bridge_kernel(
            view.data, 1.0, start, m, end, log.M, log.B, cur, k, batch, run.meter.cells, run.stats, tr
        )
    except Exception as exc:
        if "capacity" in str(exc):
            raise CapacityError(str(exc)) from None
        raise
    finally:
        meter_free(run.meter.cells, words)
        run.done()
    log.rounds = int(rounds)
    return Bridge(int(a), int(b))


def supporting_points(view, start, m, end, log, slope):
    """Leftmost left and rightmost right maximizers of ``y - slope * x`` among valid points."""
    view = _sorted(view, validate=False)
    pairs, parked = enumerate_valid_pairs(view, start, end, log)
    pts = sorted({u for pq in pairs for u in pq} | set(parked))
    data = view.data
    view.add_reads(len(pts))
    a = b = None
    fa = fb = -math.inf
    for u in pts:
        f = data[u, 1] - slope * data[u, 0]
        if u <= m:
            if f > fa:
                a, fa = u, f
        elif f >= fb:
            b, fb = u, f
    return a, b


def finalize_bridge_bruteforce(view, m, candidates):
    """Bridge of a small candidate set, for separator index ``m``."""
    view = _sorted(view, validate=False)
    cands = np.array(sorted(set(int(c) for c in candidates)), np.int64)
    view.add_reads(len(cands))
    a, b = bruteforce_bridge(view.data, 1.0, m, cands, len(cands))
    if a < 0:
        raise ValueError("candidates do not straddle the separator")
    return Bridge(int(a), int(b))


def upper_hull(view, start=0, end=None, sink=None, k=None, batch=None, meter=None,
               validate=True, trace=None, lower=False):
    """Upper-hull edges ``(i, j)`` of ``P[start..end]`` from left to right.

    With ``lower=True`` the chain is the lower hull (computed as the upper
    hull of the points mirrored in y, without copying them).  Each edge is
    passed to ``sink`` if given; the list is also returned.
    """
    view = _sorted(view, validate)
    end = view.length - 1 if end is None else end
    n = end - start + 1
    k, batch = _config(n, k, batch)
    run = _Run(view, meter)
    out = np.zeros((max(n, 1), 2), np.int64)
    tr = trace if trace is not None else np.zeros((1, 4), np.int64)
    cnt = 0
    try:
        if n >= 2:
            cnt = upper_hull_kernel(
                view.data, -1.0 if lower else 1.0, start, end, k, batch, log_capacity(n), stack_capacity(n),
                run.meter.cells, run.stats, out, tr,
            )
    except Exception as exc:
        if "capacity" in str(exc):
            raise CapacityError(str(exc)) from None
        raise
    finally:
        run.done()
    edges = [(int(i), int(j)) for i, j in out[:cnt]]
    if sink is not None:
        for edge in edges:
            sink(edge)
    return edges


def _chain(edges, fallback):
    if not edges:
        return [fallback]
    return [edges[0][0]] + [j for _, j in edges]


def convex_hull(view, sink=None, k=None, batch=None, meter=None, validate=True):
    """Minimal hull vertex indices clockwise from the leftmost (topmost) vertex.

    Upper chain left to right, then the lower chain (the upper chain of the
    y-mirrored points) right to left.
    """
    view = _sorted(view, validate)
    n = view.length
    if n == 0:
        return []
    data = view.data
    meter = meter or WorkspaceMeter()
    # upper chain
    top_left = _top_of_group(data, 0, 1.0)
    upper = _chain(upper_hull(view, sink=None, k=k, batch=batch, meter=meter, validate=False), top_left)
    low_edges = upper_hull(view, k=k, batch=batch, meter=meter, validate=False, lower=True)
    lower = _chain(low_edges, _top_of_group(data, 0, -1.0))
    lower = lower[::-1]
    hull = list(upper)
    for v in lower:
        if tuple(data[v]) != tuple(data[hull[-1]]) and tuple(data[v]) != tuple(data[hull[0]]):
            hull.append(v)
    if sink is not None:
        for v in hull:
            sink(v)
    return hull


def _top_of_group(data, i, sign):
    x = data[i, 0]
    best = i
    j = i
    while j < data.shape[0] and data[j, 0] == x:
        if sign * data[j, 1] > sign * data[best, 1]:
            best = j
        j += 1
    return best
