"""Two-variable linear programming over read-only rows in O(log n) words.

Rows ``a' x1 + b' x2 >= beta`` are minimised against ``c1 x1 + c2 x2``.  With
``x = x1`` and ``y = c1 x1 + c2 x2`` every row becomes, on the fly, either a
lower line ``y >= a x + b`` (class 1), an upper line ``y <= a x + b``
(class 2) or a vertical bound on ``x``; verticals are folded into the search
interval once, up front.

Prune-and-search then runs on lines of the same class paired up,
and, as for the sorted hull, the pruning history is a replay log: per round
the search interval, the median intersection ``x_m`` and the direction of
the optimum.  Pairs of later rounds are rebuilt from consecutive same-class
rows by replaying the recorded tests, with lone survivors parked per class
and level.  Small remainders are solved by enumerating intersections.

The kernels are built by ``build_kernels(row_fn)`` around a row accessor
``row_fn(ctx, i) -> (a', b', beta)``, so the same solver also runs over
virtual rows derived from other data (the 3D solver's testing lines).
"""

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
from numba import njit

from .selection import OP_NEXT, OP_REWIND, OP_SAVE, choose_k, make_select
from .workspace import ReadOnlyView, WorkspaceMeter, meter_alloc, meter_free

TOL = 1e-9
SMALL = 16

ST_OPTIMAL, ST_INFEASIBLE, ST_UNBOUNDED = 0, 1, 2
STATUS_NAMES = {ST_OPTIMAL: "optimal", ST_INFEASIBLE: "infeasible", ST_UNBOUNDED: "unbounded"}

# reasons attached to an infeasible answer (returned in place of y)
WHY_ZERO_ROW, WHY_BOUNDS, WHY_ENVELOPE = 0, 1, 2

# verdicts of one envelope test
MOVE_LEFT, MOVE_RIGHT, OPTIMAL_HERE, INFEASIBLE_EVERYWHERE = 0, 1, 2, 3

_KEEP, _PRUNE_I, _PRUNE_J = 0, 1, 2
_NO_DECISION = -1


def log_capacity(n):
    return int(math.ceil(math.log(max(n, 2)) / math.log(4.0 / 3.0))) + 4


def default_batch(n):
    return max(1, int(math.ceil(math.log2(max(n, 2)))))


def lines_words(n, k, batch):
    """Words a ``lines_solve`` call registers besides selection."""
    cap = log_capacity(n)
    return 4 * (cap + 2) + (k + 1) * (3 + 2 * cap) + 8 + 12 + max(SMALL, 2 * cap + 4)


# --- row transform ------------------------------------------------------------


def objective_params(c1, c2):
    """Column map ``(ia, ib, sign_b, c1', c2')`` with ``c2' > 0``.

    ``c2 = 0`` swaps the roles of the variables; a negative ``c2`` flips the
    sign of the second variable.
    """
    ia, ib = 0, 1
    if c2 == 0:
        ia, ib = 1, 0
        c1, c2 = c2, c1
    sb = 1.0
    if c2 < 0:
        sb = -1.0
        c2 = -c2
    return np.array([ia, ib, sb, c1, c2], dtype=np.float64)


@njit(cache=True)
def transform(r0, r1, beta, prm):
    """``(cls, a, b)``: cls 1 lower line, 2 upper line, 3 ``x >= b``, 4 ``x <= b``,
    0 a vacuous zero row, -1 an unsatisfiable zero row."""
    ap = r0 if prm[0] == 0 else r1
    bp = prm[2] * (r1 if prm[1] == 1 else r0)
    c1 = prm[3]
    c2 = prm[4]
    if bp == 0.0:
        if ap == 0.0:
            return (-1 if beta > 0 else 0), 0.0, 0.0
        if ap > 0:
            return 3, 0.0, beta / ap
        return 4, 0.0, beta / ap
    a = (bp * c1 - ap * c2) / bp
    b = beta * c2 / bp
    if bp > 0:
        return 1, a, b
    return 2, a, b


def transform_row(row, objective):
    """Transformed form of one raw row: ``("I1"|"I2", a, b)``, ``("x>=", v)``,
    ``("x<=", v)``, ``("vacuous",)`` or ``("infeasible",)``."""
    prm = objective_params(*objective)
    cls, a, b = transform(float(row[0]), float(row[1]), float(row[2]), prm)
    if cls == 1:
        return ("I1", a, b)
    if cls == 2:
        return ("I2", a, b)
    if cls == 3:
        return ("x>=", b)
    if cls == 4:
        return ("x<=", b)
    return ("vacuous",) if cls == 0 else ("infeasible",)


# --- helpers independent of the row source -----------------------------------------


@njit(cache=True)
def _pair_rule(cls, ai, aj, right):
    """Member of a known-side pair that cannot bind: right=True when x* lies right of x_ij."""
    small_i = ai < aj
    if (cls == 1) == right:
        return _PRUNE_I if small_i else _PRUNE_J
    return _PRUNE_J if small_i else _PRUNE_I


@njit(cache=True)
def _near(u, v):
    return abs(u - v) <= TOL * (1.0 + abs(u) + abs(v))


@njit(cache=True)
def decide(g, h, sg, Sg, sh, Sh, has1, has2):
    """Where the optimum lies relative to the probe point."""
    if has1 and has2 and g > h and not _near(g, h):
        if sg > Sh:
            return MOVE_LEFT
        if Sg < sh:
            return MOVE_RIGHT
        return INFEASIBLE_EVERYWHERE
    touching = has1 and has2 and _near(g, h)
    if sg > 0 and (not touching or sg >= Sh):
        return MOVE_LEFT
    if Sg < 0 and (not touching or Sg <= sh):
        return MOVE_RIGHT
    return OPTIMAL_HERE


def step_decision(g, h, s_g, S_g, s_h, S_h):
    """Verdict for envelope values at a probe point (``h = inf`` if class 2 is empty)."""
    return int(decide(g, h, s_g, S_g, s_h, S_h, True, not math.isinf(h)))


@njit(cache=True)
def replay_reset(st, nr):
    st[0] = 0
    st[1] = -1
    st[2] = -1
    for t in range(3, 3 + 2 * nr):
        st[t] = -1


@njit(cache=True)
def parked(st, nr, q):
    """The ``q``-th leftover slot after a full scan (pending rows, then parked)."""
    if q < 2:
        return st[1 + q]
    return st[3 + q - 2]


# --- kernels over a row source ---------------------------------------------------------


def build_kernels(row_fn):
    """Solver kernels reading rows through ``row_fn(ctx, i) -> (a', b', beta)``."""

    @njit(cache=True)
    def row_line(ctx, i, prm):
        r0, r1, beta = row_fn(ctx, i)
        return transform(r0, r1, beta, prm)

    @njit(cache=True)
    def pair_test(ctx, prm, i, j, cls, lo, hi, xm, d):
        """Outcome for the class-``cls`` pair ``i < j`` in a round with interval
        ``[lo, hi]``, median ``xm`` and direction ``d``."""
        _, ai, bi = row_line(ctx, i, prm)
        _, aj, bj = row_line(ctx, j, prm)
        if ai == aj:
            if bi == bj:
                return _PRUNE_J
            keep_i = bi > bj if cls == 1 else bi < bj
            return _PRUNE_J if keep_i else _PRUNE_I
        x = (bi - bj) / (aj - ai)
        if x <= lo:
            return _pair_rule(cls, ai, aj, True)
        if x >= hi:
            return _pair_rule(cls, ai, aj, False)
        if d == MOVE_RIGHT and x <= xm:
            return _pair_rule(cls, ai, aj, True)
        if d == MOVE_LEFT and x >= xm:
            return _pair_rule(cls, ai, aj, False)
        return _KEEP

    @njit(cache=True)
    def pair_x(ctx, prm, i, j):
        _, ai, bi = row_line(ctx, i, prm)
        _, aj, bj = row_line(ctx, j, prm)
        if ai == aj:
            return np.nan
        return (bi - bj) / (aj - ai)

    @njit(cache=True)
    def replay_next(ctx, prm, n, nr, LG, st, stats):
        """Next pair valid after ``nr`` rounds: ``(ok, i, j, cls)``.

        ``st`` = [next row, pending class-1 row, pending class-2 row, parked
        rows of class 1 for levels 1..nr, parked rows of class 2 for levels
        1..nr].  ``LG`` rows hold ``lo, hi, x_m, direction`` per round.
        """
        while st[0] < n:
            r = st[0]
            st[0] = r + 1
            stats[0] += 1
            cls, _, _ = row_line(ctx, r, prm)
            if cls != 1 and cls != 2:
                continue
            if st[cls] < 0:
                st[cls] = r
                continue
            i = st[cls]
            j = r
            st[cls] = -1
            stats[0] += 1
            base = 3 + (cls - 1) * nr - 1
            t = 1
            while True:
                if t > nr:
                    return True, i, j, cls
                res = pair_test(ctx, prm, i, j, cls, LG[t, 0], LG[t, 1], LG[t, 2], int(LG[t, 3]))
                if res == _KEEP:
                    t += 1
                    continue
                surv = j if res == _PRUNE_I else i
                beta = st[base + t]
                if beta < 0:
                    st[base + t] = surv
                    break
                st[base + t] = -1
                stats[0] += 1
                if beta < surv:
                    i, j = beta, surv
                else:
                    i, j = surv, beta
                t += 1
        return False, -1, -1, 0

    @njit(cache=True)
    def eligible_seq(sctx, op, slot):
        """Valid pairs with ``lo < x_ij < hi``, keyed ``(x_ij, i, j)``."""
        ctx, prm, n, nr, LG, lo, hi, cur, stats = sctx
        if op == OP_NEXT:
            while True:
                ok, i, j, cls = replay_next(ctx, prm, n, nr, LG, cur[0], stats)
                if not ok:
                    return False, 0.0, 0.0, 0.0
                x = pair_x(ctx, prm, i, j)
                if x > lo and x < hi:
                    return True, x, float(i), float(j)
        w = 3 + 2 * nr
        if op == OP_REWIND:
            replay_reset(cur[0], nr)
        elif op == OP_SAVE:
            for t in range(w):
                cur[1 + slot, t] = cur[0, t]
        else:
            for t in range(w):
                cur[0, t] = cur[1 + slot, t]
        return True, 0.0, 0.0, 0.0

    select_eligible = make_select(eligible_seq)

    @njit(cache=True)
    def envelope_visit(ctx, prm, i, xm, pass2, env):
        # env = [g, h, s_g, S_g, s_h, S_h, has1, has2]
        cls, a, b = row_line(ctx, i, prm)
        v = a * xm + b
        if not pass2:
            if cls == 1:
                if env[6] == 0 or v > env[0]:
                    env[0] = v
                env[6] = 1
            elif cls == 2:
                if env[7] == 0 or v < env[1]:
                    env[1] = v
                env[7] = 1
            return
        if cls == 1 and _near(v, env[0]):
            env[2] = min(env[2], a)
            env[3] = max(env[3], a)
        elif cls == 2 and _near(v, env[1]):
            env[4] = min(env[4], a)
            env[5] = max(env[5], a)

    @njit(cache=True)
    def envelope_kernel(ctx, prm, n, nr, LG, xm, st, stats, env):
        """Two replay scans: envelope values, then the slope ranges of the ties."""
        env[0] = -np.inf
        env[1] = np.inf
        env[2] = np.inf
        env[3] = -np.inf
        env[4] = np.inf
        env[5] = -np.inf
        env[6] = 0
        env[7] = 0
        for ps in range(2):
            replay_reset(st, nr)
            while True:
                ok, i, j, cls = replay_next(ctx, prm, n, nr, LG, st, stats)
                if not ok:
                    break
                envelope_visit(ctx, prm, i, xm, ps == 1, env)
                envelope_visit(ctx, prm, j, xm, ps == 1, env)
            for q in range(2 + 2 * nr):
                u = parked(st, nr, q)
                if u >= 0:
                    stats[0] += 1
                    envelope_visit(ctx, prm, u, xm, ps == 1, env)

    @njit(cache=True)
    def env_at(ctx, prm, rows, nrows, x):
        g = -np.inf
        h = np.inf
        for q in range(nrows):
            cls, a, b = row_line(ctx, rows[q], prm)
            v = a * x + b
            if cls == 1:
                g = max(g, v)
            elif cls == 2:
                h = min(h, v)
        return g, h

    @njit(cache=True)
    def asymptote(ctx, prm, rows, nrows, cls, pick_min_slope, pick_max_b):
        """Dominant line of a class as x tends to one side: ``(found, slope, intercept)``."""
        found = False
        sa = 0.0
        sb = 0.0
        for q in range(nrows):
            c, a, b = row_line(ctx, rows[q], prm)
            if c != cls:
                continue
            if not found:
                found = True
                sa, sb = a, b
                continue
            better = a < sa if pick_min_slope else a > sa
            if better or (a == sa and (b > sb if pick_max_b else b < sb)):
                sa, sb = a, b
        return found, sa, sb

    @njit(cache=True)
    def solve_small(ctx, prm, rows, nrows, lo, hi):
        """Exact answer over the rows ``rows[:nrows]`` restricted to ``lo <= x <= hi``.

        Returns ``(status, x, y)``.  For an unbounded problem ``(x, y)`` is a
        feasible witness; for an infeasible one ``x`` minimises ``g - h`` and
        ``y`` is the reason code.
        """
        if lo > hi:
            return ST_INFEASIBLE, 0.0, float(WHY_BOUNDS)
        n1 = 0
        for q in range(nrows):
            c, _, _ = row_line(ctx, rows[q], prm)
            if c == 1:
                n1 += 1
        best_x = 0.0
        best_y = np.inf
        feasible = False
        lo_x = np.inf
        hi_x = -np.inf
        gap_x = 0.0
        gap = np.inf
        ncand = nrows * (nrows - 1) // 2 + 3
        for c in range(ncand):
            if c == 0:
                x = lo
            elif c == 1:
                x = hi
            elif c == 2:
                x = min(max(0.0, lo), hi)
            else:
                # decode pair index c - 3 -> (p, q)
                r = c - 3
                p = 0
                while r >= nrows - 1 - p:
                    r -= nrows - 1 - p
                    p += 1
                q = p + 1 + r
                _, ap, bp = row_line(ctx, rows[p], prm)
                _, aq, bq = row_line(ctx, rows[q], prm)
                if ap == aq:
                    continue
                x = (bp - bq) / (aq - ap)
                if x < lo or x > hi:
                    continue
            if not np.isfinite(x):
                continue
            g, h = env_at(ctx, prm, rows, nrows, x)
            if g > h and not _near(g, h):
                if g - h < gap:
                    gap = g - h
                    gap_x = x
                continue
            feasible = True
            lo_x = min(lo_x, x)
            hi_x = max(hi_x, x)
            if n1 > 0 and (g < best_y or (g == best_y and x < best_x)):
                best_x, best_y = x, g
            elif n1 == 0 and best_y == np.inf:
                best_x, best_y = x, (h if np.isfinite(h) else 0.0)
        # unbounded towards -inf / +inf
        for side in range(2):
            if (side == 0 and lo != -np.inf) or (side == 1 and hi != np.inf):
                continue
            left = side == 0
            f1, ga, gb = asymptote(ctx, prm, rows, nrows, 1, left, True)
            f2, ha, hb = asymptote(ctx, prm, rows, nrows, 2, not left, False)
            if f1 and f2:
                if left:
                    ok = ga > ha or (ga == ha and gb <= hb)
                else:
                    ok = ga < ha or (ga == ha and gb <= hb)
                if not ok:
                    continue
            decreasing = (not f1) or (ga > 0 if left else ga < 0)
            if not decreasing:
                continue
            # witness beyond every breakpoint of the survivors
            span = 1.0
            for q in range(nrows):
                _, a, b = row_line(ctx, rows[q], prm)
                span = max(span, abs(b) + abs(a))
            for p in range(nrows):
                for q in range(p + 1, nrows):
                    _, ap, bp = row_line(ctx, rows[p], prm)
                    _, aq, bq = row_line(ctx, rows[q], prm)
                    if ap != aq:
                        span = max(span, abs((bp - bq) / (aq - ap)))
            x = -2.0 * span - 1.0 if left else 2.0 * span + 1.0
            g, h = env_at(ctx, prm, rows, nrows, x)
            y = g if f1 else (h if f2 else 0.0)
            return ST_UNBOUNDED, x, y
        if not feasible:
            return ST_INFEASIBLE, gap_x, float(WHY_ENVELOPE)
        if n1 == 0:
            return ST_UNBOUNDED, best_x, best_y
        return ST_OPTIMAL, best_x, best_y

    @njit(cache=True)
    def lines_solve(ctx, n, prm, k, batch, meter, stats, trace, logout):
        """Solve in transformed coordinates: ``(status, x, y, rounds)``.

        A ``logout`` array with more than one row receives the round log.

        For an infeasible problem ``y`` carries the reason and ``x`` the
        locus (a row index for a zero row, the minimiser of ``g - h`` for
        an envelope conflict).
        """
        cap = int(math.ceil(math.log(max(n, 2)) / math.log(4.0 / 3.0))) + 4
        tracing = trace.shape[0] > 1
        # fold vertical rows into [lo, hi]; count the classes
        lo = -np.inf
        hi = np.inf
        n1 = 0
        for i in range(n):
            stats[0] += 1
            cls, a, b = row_line(ctx, i, prm)
            if cls == -1:
                return ST_INFEASIBLE, float(i), float(WHY_ZERO_ROW), 0
            if cls == 3:
                lo = max(lo, b)
            elif cls == 4:
                hi = min(hi, b)
            elif cls == 1:
                n1 += 1
        if lo > hi:
            return ST_INFEASIBLE, 0.0, float(WHY_BOUNDS), 0
        if n1 == 0:
            x = min(max(0.0, lo), hi)
            h = np.inf
            for i in range(n):
                stats[0] += 1
                cls, a, b = row_line(ctx, i, prm)
                if cls == 2:
                    h = min(h, a * x + b)
            return ST_UNBOUNDED, x, (h if np.isfinite(h) else 0.0), 0
        cw = 3 + 2 * cap
        words = 4 * (cap + 2) + (k + 1) * cw + 8
        meter_alloc(meter, words)
        LG = np.zeros((cap + 2, 4))
        cur = np.zeros((k + 1, cw), np.int64)
        env = np.zeros(8)
        st = cur[0]
        nr = 0
        LG[1, 0] = lo
        LG[1, 1] = hi
        status = -1
        rx = 0.0
        ry = 0.0
        while True:
            replay_reset(st, nr)
            pairs = 0
            c = 0
            valid = 0
            while True:
                ok, i, j, cls = replay_next(ctx, prm, n, nr, LG, st, stats)
                if not ok:
                    break
                pairs += 1
                valid += 2
                x = pair_x(ctx, prm, i, j)
                if x > lo and x < hi:
                    c += 1
            for q in range(2 + 2 * nr):
                if parked(st, nr, q) >= 0:
                    valid += 1
            if tracing and nr < trace.shape[0]:
                trace[nr, 0] = pairs
                trace[nr, 1] = c
                trace[nr, 2] = valid
                trace[0, 3] = nr + 1
            if valid <= SMALL or pairs == 0:
                break
            if nr == cap:
                raise RuntimeError("round log capacity exceeded")
            xm = np.nan
            d = _NO_DECISION
            if c > 0:
                ok, xm, _, _ = select_eligible(
                    (ctx, prm, n, nr, LG, lo, hi, cur, stats), c, (c + 1) // 2,
                    k, 3, batch, meter, 0,
                )
                envelope_kernel(ctx, prm, n, nr, LG, xm, st, stats, env)
                d = decide(env[0], env[1], env[2], env[3], env[4], env[5], env[6] > 0, env[7] > 0)
                if d == OPTIMAL_HERE:
                    status, rx, ry = ST_OPTIMAL, xm, env[0]
                    break
                if d == INFEASIBLE_EVERYWHERE:
                    status, rx, ry = ST_INFEASIBLE, xm, float(WHY_ENVELOPE)
                    break
            nr += 1
            LG[nr, 2] = xm
            LG[nr, 3] = d
            if d == MOVE_RIGHT:
                lo = xm
            elif d == MOVE_LEFT:
                hi = xm
            LG[nr + 1, 0] = lo
            LG[nr + 1, 1] = hi
        if status < 0:
            # remaining rows: every valid row, at most SMALL or one per leftover slot
            size = max(valid, 1)
            meter_alloc(meter, size)
            rows = np.empty(size, np.int64)
            m = 0
            replay_reset(st, nr)
            while True:
                ok, i, j, cls = replay_next(ctx, prm, n, nr, LG, st, stats)
                if not ok:
                    break
                rows[m] = i
                rows[m + 1] = j
                m += 2
            for q in range(2 + 2 * nr):
                u = parked(st, nr, q)
                if u >= 0:
                    rows[m] = u
                    m += 1
            stats[0] += m
            status, rx, ry = solve_small(ctx, prm, rows, m, lo, hi)
            meter_free(meter, size)
        if logout.shape[0] > 1:
            for t in range(min(nr + 2, logout.shape[0])):
                for q in range(4):
                    logout[t, q] = LG[t, q]
        meter_free(meter, words)
        return status, rx, ry, nr

    @njit(cache=True)
    def certificate(ctx, n, prm, x, why, out):
        """At most six rows that are already infeasible together, given the
        locus and reason of an infeasible ``lines_solve`` answer."""
        if why == WHY_ZERO_ROW:
            out[0] = int(x)
            return 1
        lo = -np.inf
        hi = np.inf
        ilo = -1
        ihi = -1
        for i in range(n):
            cls, a, b = row_line(ctx, i, prm)
            if cls == 3 and b > lo:
                lo, ilo = b, i
            elif cls == 4 and b < hi:
                hi, ihi = b, i
        if why == WHY_BOUNDS:
            out[0] = ilo
            out[1] = ihi
            return 2
        g = -np.inf
        h = np.inf
        for i in range(n):
            cls, a, b = row_line(ctx, i, prm)
            if cls == 1:
                g = max(g, a * x + b)
            elif cls == 2:
                h = min(h, a * x + b)
        # rows tight at x with extreme slopes in each class
        ext = np.full(4, -1, np.int64)
        ev = np.zeros(4)
        for i in range(n):
            cls, a, b = row_line(ctx, i, prm)
            if cls == 1 or cls == 2:
                ref = g if cls == 1 else h
                if not _near(a * x + b, ref):
                    continue
                o = 2 * (cls - 1)
                if ext[o] < 0 or a < ev[o]:
                    ext[o] = i
                    ev[o] = a
                if ext[o + 1] < 0 or a > ev[o + 1]:
                    ext[o + 1] = i
                    ev[o + 1] = a
        m = 0
        for q in range(4):
            u = ext[q]
            dup = False
            for p in range(m):
                if out[p] == u:
                    dup = True
            if u >= 0 and not dup:
                out[m] = u
                m += 1
        if ilo >= 0 and _near(x, lo):
            out[m] = ilo
            m += 1
        if ihi >= 0 and _near(x, hi):
            out[m] = ihi
            m += 1
        return m

    @njit(cache=True)
    def median_x(ctx, prm, n, nr, LG, lo, hi, cur, stats, c, k, meter):
        return select_eligible(
            (ctx, prm, n, nr, LG, lo, hi, cur, stats), c, (c + 1) // 2,
            k, 3, 1, meter, cur.shape[1],
        )

    return SimpleNamespace(
        row_line=row_line, pair_test=pair_test, pair_x=pair_x, replay_next=replay_next,
        eligible_seq=eligible_seq, envelope_kernel=envelope_kernel, solve_small=solve_small,
        lines_solve=lines_solve, certificate=certificate, median_x=median_x,
    )


@njit(cache=True)
def raw_row(R, i):
    return R[i, 0], R[i, 1], R[i, 2]


K2 = build_kernels(raw_row)
_k2_lines_solve = K2.lines_solve
_k2_envelope = K2.envelope_kernel
_k2_replay_next = K2.replay_next
_k2_pair_x = K2.pair_x
_k2_median_x = K2.median_x


# Entry points are module-level so the disk cache can find them; closures
# are keyed by their cells, which do not survive a fresh process.


@njit(cache=True)
def lines_solve2(R, n, prm, k, batch, meter, stats, trace, logout):
    return _k2_lines_solve(R, n, prm, k, batch, meter, stats, trace, logout)


@njit(cache=True)
def envelope2(R, prm, n, nr, LG, xm, st, stats, env):
    _k2_envelope(R, prm, n, nr, LG, xm, st, stats, env)


@njit(cache=True)
def replay_next2(R, prm, n, nr, LG, st, stats):
    return _k2_replay_next(R, prm, n, nr, LG, st, stats)


@njit(cache=True)
def pair_x2(R, prm, i, j):
    return _k2_pair_x(R, prm, i, j)


@njit(cache=True)
def median_x2(R, prm, n, nr, LG, lo, hi, cur, stats, c, k, meter):
    return _k2_median_x(R, prm, n, nr, LG, lo, hi, cur, stats, c, k, meter)


# --- Python API -------------------------------------------------------------------


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple = None
    value: float = None

    def as_dict(self):
        out = {"status": self.status}
        if self.status == "optimal":
            out["x"] = [float(v) for v in self.x]
            out["value"] = float(self.value)
        return out


class LpRoundLog:
    """Round records ``(lo, hi, x_m, direction)`` of one solve."""

    def __init__(self, capacity):
        self.capacity = int(capacity)
        self.rows = np.zeros((capacity + 2, 4))
        self.rounds = 0

    def interval(self, t):
        """Search interval at the start of round ``t`` (1-based)."""
        return float(self.rows[t, 0]), float(self.rows[t, 1])


def map_back(prm, x, y):
    """Original ``(x1, x2)`` from transformed ``(x, y)``."""
    ia, ib, sb, c1, c2 = prm
    u = x
    v = (y - c1 * x) / c2 * sb
    return (u, v) if int(ia) == 0 else (v, u)


def as_view(rows, arity):
    if isinstance(rows, ReadOnlyView):
        return rows
    return ReadOnlyView(np.asarray(rows, dtype=np.float64).reshape(-1, arity))


def check_rows(view, arity):
    data = view.data
    if data.size and data.shape[1] != arity:
        raise ValueError("constraint rows need %d numbers" % arity)
    view.add_reads(view.length)
    if not np.all(np.isfinite(data)):
        raise ValueError("constraint rows must be finite")


def solve_lp2(view, objective, k=None, batch=None, meter=None, trace=None, log=None):
    """Minimise ``c1 x1 + c2 x2`` subject to the rows of ``view``."""
    view = as_view(view, 3)
    c1, c2 = (float(v) for v in objective)
    if not (math.isfinite(c1) and math.isfinite(c2)):
        raise ValueError("objective must be finite")
    check_rows(view, 3)
    n = view.length
    feasibility = c1 == 0 and c2 == 0
    prm = objective_params(1.0, 0.0) if feasibility else objective_params(c1, c2)
    if k is None:
        k = choose_k(max(n, 2))
    if batch is None:
        batch = default_batch(n)
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    tr = trace if trace is not None else np.zeros((1, 4), np.int64)
    data = view.data if n else np.zeros((0, 3))
    lg = log.rows if log is not None else np.zeros((1, 4))
    try:
        status, x, y, rounds = lines_solve2(data, n, prm, k, batch, meter.cells, stats, tr, lg)
    finally:
        view.add_reads(int(stats[0]))
    if log is not None:
        log.rounds = int(rounds)
    if status == ST_INFEASIBLE:
        return LPResult("infeasible")
    x1, x2 = map_back(prm, x, y)
    if feasibility:
        return LPResult("optimal", (x1, x2), 0.0)
    if status == ST_UNBOUNDED:
        return LPResult("unbounded")
    return LPResult("optimal", (x1, x2), c1 * x1 + c2 * x2)


def envelope_at(view, objective, log, x_m):
    """``(g, h, s_g, S_g, s_h, S_h)`` over the rows valid after the logged rounds.

    Missing classes give ``g = -inf`` or ``h = inf`` with empty slope ranges.
    """
    view = as_view(view, 3)
    prm = objective_params(*objective)
    st = np.zeros(3 + 2 * log.capacity, np.int64)
    stats = np.zeros(1, np.int64)
    env = np.zeros(8)
    envelope2(view.data, prm, view.length, log.rounds, log.rows, float(x_m), st, stats, env)
    view.add_reads(int(stats[0]))
    return tuple(float(v) for v in env[:6])


def valid_rows(view, objective, log, upto_round=None):
    """``(pairs, leftovers)`` valid at round ``upto_round`` (default: next round)."""
    view = as_view(view, 3)
    prm = objective_params(*objective)
    nr = log.rounds if upto_round is None else upto_round - 1
    st = np.zeros(3 + 2 * log.capacity, np.int64)
    stats = np.zeros(1, np.int64)
    replay_reset(st, nr)
    pairs = []
    while True:
        ok, i, j, cls = replay_next2(view.data, prm, view.length, nr, log.rows, st, stats)
        if not ok:
            break
        pairs.append((int(i), int(j)))
    rest = [int(parked(st, nr, q)) for q in range(2 + 2 * nr) if parked(st, nr, q) >= 0]
    view.add_reads(int(stats[0]))
    return pairs, rest


def median_intersection(view, objective, log, k=1):
    """Median ``x_ij`` of the eligible valid pairs, or ``None`` if there are none."""
    view = as_view(view, 3)
    prm = objective_params(*objective)
    nr = log.rounds
    lo, hi = log.interval(nr + 1) if nr else (-math.inf, math.inf)
    pairs, _ = valid_rows(view, objective, log)
    xs = [pair_x2(view.data, prm, i, j) for i, j in pairs]
    c = sum(1 for x in xs if lo < x < hi)
    if c == 0:
        return None
    cur = np.zeros((k + 1, 3 + 2 * log.capacity), np.int64)
    stats = np.zeros(1, np.int64)
    meter = np.zeros(2, np.int64)
    ok, xm, _, _ = median_x2(view.data, prm, view.length, nr, log.rows, lo, hi, cur, stats, c, k, meter)
    view.add_reads(int(stats[0]))
    return float(xm)
