"""Three-variable linear programming over read-only rows in O(log n) words.

Rows ``a' x1 + b' x2 + c' x3 >= beta`` are minimised against ``d . x``.  With
``z = d . x`` each row becomes ``z >= a x + b y + c`` (class 1),
``z <= a x + b y + c`` (class 2) or ``0 >= a x + b y + c`` (class 3).

Every round pairs rows within a class; each pair with distinct gradients
defines the line ``L_ij`` where both rows agree.  The median line gradient
``mu`` gives a sheared frame ``u = X, w = Y - mu X``; lines below and above
the median are matched into intersecting pairs, the median ``w`` of their
crossings gives a line ``L_H`` and, after testing it, the median ``u`` of the
crossings on the far side gives ``L_V``.  Both tests are 2D problems solved
over virtual rows.  Any ``L_ij`` missing the open quadrant known to hold the
optimum lets one row of its pair go.  That test needs only the round record
``(frame, mu, y_m, x_m, side bits)``, so later rounds rebuild their pairs by
replay exactly as in the 2D solver.
"""

import math

import numpy as np
from numba import njit

from .lp2d import (
    ST_INFEASIBLE, ST_OPTIMAL, ST_UNBOUNDED, TOL, WHY_ENVELOPE, LPResult, as_view,
    build_kernels, check_rows, default_batch, objective_params,
)
from .selection import OP_NEXT, OP_REWIND, OP_SAVE, choose_k, make_select
from .workspace import WorkspaceMeter, meter_alloc, meter_free

SMALL3 = 32

# testing-line verdicts
V_SIDE, V_OPTIMAL, V_UNBOUNDED, V_INFEASIBLE = 0, 1, 2, 3

# adapter modes for the inner 2D solver
MODE_LINE, MODE_CONE, MODE_CAPPED, MODE_SHADOW = 0, 1, 2, 3

_KEEP, _PRUNE_I, _PRUNE_J = 0, 1, 2
_LOG_COLS = 6  # sw, mu, y_m, x_m, side_H, side_V
# lines this close (relative) to the quadrant corner pass through it
CORNER_TOL = 1e-12

PRM_MIN_Z = objective_params(0.0, 1.0)
PRM_MIN_T = objective_params(1.0, 0.0)
PRM_MAX_T = objective_params(-1.0, 0.0)


def log_capacity3(n):
    return int(math.ceil(math.log(max(n, 2)) / math.log(16.0 / 15.0))) + 4


# --- row transform ------------------------------------------------------------


def objective_params3(d1, d2, d3):
    """``(ix, iy, iz, sign, d1', d2', d3')`` with ``d3' > 0``: the column
    playing each of x, y and the eliminated variable, and the permuted
    objective."""
    d = [d1, d2, d3]
    if d3 != 0:
        perm = (0, 1, 2)
    elif d2 != 0:
        perm = (0, 2, 1)
    else:
        perm = (2, 1, 0)
    e = [d[p] for p in perm]
    sgn = 1.0
    if e[2] < 0:
        sgn = -1.0
        e[2] = -e[2]
    return np.array([perm[0], perm[1], perm[2], sgn, e[0], e[1], e[2]], dtype=np.float64)


@njit(cache=True)
def transform3(R, i, prm):
    """``(cls, a, b, c)``: 1 ``z >= ax+by+c``, 2 ``z <= ...``, 3 ``0 >= ...``,
    0 vacuous, -1 an unsatisfiable zero row."""
    ap = R[i, int(prm[0])]
    bp = R[i, int(prm[1])]
    cp = prm[3] * R[i, int(prm[2])]
    beta = R[i, 3]
    if cp == 0.0:
        if ap == 0.0 and bp == 0.0:
            return (-1 if beta > 0 else 0), 0.0, 0.0, 0.0
        return 3, -ap, -bp, beta
    d1 = prm[4]
    d2 = prm[5]
    d3 = prm[6]
    a = (cp * d1 - ap * d3) / cp
    b = (cp * d2 - bp * d3) / cp
    c = beta * d3 / cp
    return (1 if cp > 0 else 2), a, b, c


def transform_row3(row, objective):
    """``("I1"|"I2"|"I3", a, b, c)``, ``("vacuous",)`` or ``("infeasible",)``."""
    prm = objective_params3(*objective)
    cls, a, b, c = transform3(np.asarray(row, dtype=np.float64).reshape(1, 4), 0, prm)
    if cls in (1, 2, 3):
        return ("I%d" % cls, a, b, c)
    return ("vacuous",) if cls == 0 else ("infeasible",)


def map_back3(prm, x, y, z):
    ix, iy, iz, sgn, d1, d2, d3 = prm
    out = [0.0, 0.0, 0.0]
    out[int(ix)] = x
    out[int(iy)] = y
    out[int(iz)] = (z - d1 * x - d2 * y) / d3 * sgn
    return tuple(out)


@njit(cache=True)
def generic_row(cls, a, b, c, out):
    """Row ``A x + B y + C z >= beta`` of a transformed constraint."""
    if cls == 1:
        out[0], out[1], out[2], out[3] = -a, -b, 1.0, c
    elif cls == 2:
        out[0], out[1], out[2], out[3] = a, b, -1.0, -c
    else:
        out[0], out[1], out[2], out[3] = -a, -b, 0.0, c


# --- virtual 2D rows for the inner solver -----------------------------------------


@njit(cache=True)
def _tight(f, ref, scale):
    return abs(f - ref) <= TOL * (1.0 + scale + abs(ref))


@njit(cache=True)
def adapter_row(ctx, i):
    """2D row ``(a', b', beta)`` over ``(t, z)`` derived from 3D row ``i``.

    ``geo`` = [mode, P0x, P0y, Ux, Uy, Nx, Ny, delta, z_ref, n].  Modes:
    the rows restricted to the line ``P0 + t U``; their linearisation at
    ``P0`` when tight at height ``z_ref`` (directions with ``delta`` units
    along ``N``); the restricted rows plus a cap ``z <= z_ref`` as row ``n``;
    class-3 rows alone as rows over ``(x, y)``.
    """
    R, prm, geo = ctx
    mode = int(geo[0])
    if mode == MODE_CAPPED and i == int(geo[9]):
        return 0.0, -1.0, -geo[8]
    cls, a, b, c = transform3(R, i, prm)
    if cls == -1:
        return 0.0, 0.0, 1.0
    if cls == 0:
        return 0.0, 0.0, 0.0
    if mode == MODE_SHADOW:
        if cls != 3:
            return 0.0, 0.0, 0.0
        return -a, -b, c
    gu = a * geo[3] + b * geo[4]
    f0 = a * geo[1] + b * geo[2] + c
    if mode == MODE_CONE:
        scale = abs(a * geo[1]) + abs(b * geo[2]) + abs(c)
        ref = 0.0 if cls == 3 else geo[8]
        if not _tight(f0, ref, scale):
            return 0.0, 0.0, 0.0
        f0 = geo[7] * (a * geo[5] + b * geo[6])
    if cls == 1:
        return -gu, 1.0, f0
    if cls == 2:
        return gu, -1.0, -f0
    return -gu, 0.0, f0


K3 = build_kernels(adapter_row)
_lines_solve3 = K3.lines_solve
_certificate3 = K3.certificate


# --- small problems ---------------------------------------------------------------


@njit(cache=True)
def _solve3(M, p, q, r, big, out):
    """Point where planes ``p, q, r`` of ``M`` meet (``big`` > 0 adds the box
    planes ``+-big`` as indices ``m .. m+5``)."""
    m = M.shape[0]
    A = np.zeros((3, 4))
    idx = (p, q, r)
    for s in range(3):
        u = idx[s]
        if u < m:
            for t in range(4):
                A[s, t] = M[u, t]
        else:
            b = u - m
            A[s, b // 2] = 1.0 if b % 2 == 0 else -1.0
            A[s, 3] = -big
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    nrm = 1.0
    for s in range(3):
        nrm *= abs(A[s, 0]) + abs(A[s, 1]) + abs(A[s, 2])
    if abs(det) <= 1e-12 * nrm:
        return False
    for v in range(3):
        B = A[:, :3].copy()
        for s in range(3):
            B[s, v] = A[s, 3]
        out[v] = (B[0, 0] * (B[1, 1] * B[2, 2] - B[1, 2] * B[2, 1])
                  - B[0, 1] * (B[1, 0] * B[2, 2] - B[1, 2] * B[2, 0])
                  + B[0, 2] * (B[1, 0] * B[2, 1] - B[1, 1] * B[2, 0])) / det
    return True


@njit(cache=True)
def _feasible3(M, x, y, z, homog):
    for s in range(M.shape[0]):
        lhs = M[s, 0] * x + M[s, 1] * y + M[s, 2] * z
        rhs = 0.0 if homog else M[s, 3]
        scale = abs(M[s, 0] * x) + abs(M[s, 1] * y) + abs(M[s, 2] * z) + abs(rhs) + 1.0
        if lhs < rhs - TOL * scale:
            return False
    return True


@njit(cache=True)
def _best_vertex(M, big, homog, res):
    """Minimum-``z`` feasible vertex over triples of rows (and box planes when
    ``big > 0``): fills ``res`` = [x, y, z, max |coordinate|]; False if none."""
    m = M.shape[0]
    tot = m + (6 if big > 0 else 0)
    H = M
    if homog:
        H = M.copy()
        for s in range(m):
            H[s, 3] = 0.0
    pt = np.zeros(3)
    found = False
    for p in range(tot):
        for q in range(p + 1, tot):
            for r in range(q + 1, tot):
                if big > 0 and r < m:
                    # rows-only triples are covered by the box-free pass
                    continue
                if not _solve3(H, p, q, r, big, pt):
                    continue
                if big > 0 and (abs(pt[0]) > big * (1 + TOL) or abs(pt[1]) > big * (1 + TOL)
                                or abs(pt[2]) > big * (1 + TOL)):
                    continue
                if not _feasible3(M, pt[0], pt[1], pt[2], homog):
                    continue
                better = (not found or pt[2] < res[2]
                          or (pt[2] == res[2] and (pt[0] < res[0] or (pt[0] == res[0] and pt[1] < res[1]))))
                if better:
                    res[0], res[1], res[2] = pt[0], pt[1], pt[2]
                found = True
                res[3] = max(res[3], abs(pt[0]), abs(pt[1]), abs(pt[2]))
    return found


@njit(cache=True)
def solve_small3_kernel(M):
    """Minimise ``z`` subject to ``M[:, :3] . (x, y, z) >= M[:, 3]``.

    Returns ``(status, x, y, z)``; an unbounded answer carries a feasible
    witness.
    """
    m = M.shape[0]
    for s in range(m):
        if M[s, 0] == 0 and M[s, 1] == 0 and M[s, 2] == 0 and M[s, 3] > 0:
            return ST_INFEASIBLE, 0.0, 0.0, 0.0
    res = np.zeros(4)
    found = _best_vertex(M, 0.0, False, res)
    span = res[3] if found else 0.0
    for s in range(m):
        nr = abs(M[s, 0]) + abs(M[s, 1]) + abs(M[s, 2])
        if nr > 0:
            span = max(span, abs(M[s, 3]) / nr)
    big = 1e3 * (1.0 + span)
    boxed = np.zeros(4)
    boxed[2] = np.inf
    if _best_vertex(M, big, False, boxed):
        if not found or boxed[2] < res[2] - TOL * (1.0 + abs(res[2])):
            res[0], res[1], res[2] = boxed[0], boxed[1], boxed[2]
        found = True
    if not found:
        return ST_INFEASIBLE, 0.0, 0.0, 0.0
    rec = np.zeros(4)
    if _best_vertex(M, 1.0, True, rec) and rec[2] < -1e-9:
        return ST_UNBOUNDED, res[0], res[1], res[2]
    return ST_OPTIMAL, res[0], res[1], res[2]


# --- replayed pairing -----------------------------------------------------------------


@njit(cache=True)
def line_of(R, prm, i, j, sw):
    """``L_ij`` in frame coordinates ``(X, Y)``: ``(AX, AY, C)`` with
    ``AX X + AY Y + C = 0``, and its gradient (``inf`` when vertical)."""
    _, ai, bi, ci = transform3(R, i, prm)
    _, aj, bj, cj = transform3(R, j, prm)
    A = ai - aj
    B = bi - bj
    C = ci - cj
    if sw:
        A, B = B, A
    g = np.inf if B == 0.0 else -A / B
    return A, B, C, g


@njit(cache=True)
def same_gradient(R, prm, i, j):
    _, ai, bi, _ = transform3(R, i, prm)
    _, aj, bj, _ = transform3(R, j, prm)
    return ai == aj and bi == bj


@njit(cache=True)
def pair_test3(R, prm, i, j, cls, LG, t):
    """Outcome for the class-``cls`` pair ``i < j`` in round ``t``."""
    _, ai, bi, ci = transform3(R, i, prm)
    _, aj, bj, cj = transform3(R, j, prm)
    if ai == aj and bi == bj:
        if ci == cj:
            return _PRUNE_J
        keep_i = ci < cj if cls == 2 else ci > cj
        return _PRUNE_J if keep_i else _PRUNE_I
    sH = LG[t, 4]
    if sH == 0:
        return _KEEP
    sw = LG[t, 0] != 0
    mu = LG[t, 1]
    ym = LG[t, 2]
    xm = LG[t, 3]
    sV = LG[t, 5]
    AX, AY, C, g = line_of(R, prm, i, j, sw)
    if g == mu:
        # parallel to L_H: w = kappa
        kappa = -C / AY
        if sH * (kappa - ym) > CORNER_TOL * (abs(kappa) + abs(ym)):
            return _KEEP
        pos = AY * sH > 0
    else:
        if sV == 0:
            return _KEEP
        Du = AX + mu * AY
        Dw = AY
        Dv = Du * xm + Dw * ym + C
        if abs(Dv) <= CORNER_TOL * (abs(Du * xm) + abs(Dw * ym) + abs(C)):
            Dv = 0.0
        if Dv >= 0 and sV * Du >= 0 and sH * Dw >= 0:
            pos = True
        elif Dv <= 0 and sV * Du <= 0 and sH * Dw <= 0:
            pos = False
        else:
            return _KEEP
    # pos: f_i >= f_j across the optimum's quadrant
    if cls == 2:
        return _PRUNE_I if pos else _PRUNE_J
    return _PRUNE_J if pos else _PRUNE_I


@njit(cache=True)
def replay3_reset(st, nr):
    st[0] = 0
    for t in range(1, 4 + 3 * nr):
        st[t] = -1


@njit(cache=True)
def parked3(st, nr, q):
    """The ``q``-th leftover slot (pending rows of the three classes, then parked)."""
    return st[1 + q]


@njit(cache=True)
def replay3_next(R, prm, n, nr, LG, st, stats):
    """Next pair valid after ``nr`` rounds: ``(ok, i, j, cls)``.

    ``st`` = [next row, pending row per class, parked rows of class 1 for
    levels 1..nr, then class 2, then class 3].
    """
    while st[0] < n:
        r = st[0]
        st[0] = r + 1
        stats[0] += 1
        cls, _, _, _ = transform3(R, r, prm)
        if cls < 1:
            continue
        if st[cls] < 0:
            st[cls] = r
            continue
        i = st[cls]
        j = r
        st[cls] = -1
        stats[0] += 1
        base = 4 + (cls - 1) * nr - 1
        t = 1
        while True:
            if t > nr:
                return True, i, j, cls
            res = pair_test3(R, prm, i, j, cls, LG, t)
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
def _cursor_op(cur, w, op, slot):
    if op == OP_REWIND:
        cur[0, 0] = 0
        for t in range(1, w):
            cur[0, t] = -1
    elif op == OP_SAVE:
        for t in range(w):
            cur[1 + slot, t] = cur[0, t]
    else:
        for t in range(w):
            cur[0, t] = cur[1 + slot, t]


@njit(cache=True)
def lines_seq(ctx, op, slot):
    """Lines ``L_ij`` of the valid distinct-gradient pairs, keyed ``(gradient, i, j)``."""
    R, prm, n, nr, LG, sw, cur, stats = ctx
    if op != OP_NEXT:
        _cursor_op(cur, cur.shape[1], op, slot)
        return True, 0.0, 0.0, 0.0
    while True:
        ok, i, j, cls = replay3_next(R, prm, n, nr, LG, cur[0], stats)
        if not ok:
            return False, 0.0, 0.0, 0.0
        if same_gradient(R, prm, i, j):
            continue
        _, _, _, g = line_of(R, prm, i, j, sw)
        return True, g, float(i), float(j)


@njit(cache=True)
def _key_le(a0, a1, a2, b0, b1, b2):
    if a0 != b0:
        return a0 < b0
    if a1 != b1:
        return a1 < b1
    return a2 <= b2


@njit(cache=True)
def _next_line(R, prm, n, nr, LG, st, stats, sw, key, low):
    while True:
        ok, i, j, cls = replay3_next(R, prm, n, nr, LG, st, stats)
        if not ok:
            return False, -1, -1
        if same_gradient(R, prm, i, j):
            continue
        _, _, _, g = line_of(R, prm, i, j, sw)
        if _key_le(g, float(i), float(j), key[0], key[1], key[2]) == low:
            return True, i, j


@njit(cache=True)
def crossing(R, prm, i, j, p, q, sw, mu):
    """Geometry of the line pair ``(L_ij, L_pq)``: ``(parallel, y, x)`` in the
    sheared frame ``u = X, w = Y - mu X``."""
    A1, B1, C1, g1 = line_of(R, prm, i, j, sw)
    A2, B2, C2, g2 = line_of(R, prm, p, q, sw)
    det = A1 * B2 - A2 * B1
    if (g1 == mu and g2 == mu) or det == 0.0:
        y = 0.0
        if B1 != 0.0 and B2 != 0.0:
            y = 0.5 * (-C1 / B1 - C2 / B2)
        return True, y, np.nan
    X = (-C1 * B2 + C2 * B1) / det
    Y = (-A1 * C2 + A2 * C1) / det
    return False, Y - mu * X, X


@njit(cache=True)
def pairs_seq(ctx, op, slot):
    """Matched line pairs (r-th line at or below the median with the r-th
    above it).  Mode 0 keys every pair by ``(y, i, j)``; mode 1 keys the
    crossing pairs on the far side of ``L_H`` by ``(x, i, j)``."""
    R, prm, n, nr, LG, sw, key, mode, ym, sH, cur, stats = ctx
    w = cur.shape[1] // 2
    if op != OP_NEXT:
        if op == OP_REWIND:
            replay3_reset(cur[0, :w], nr)
            replay3_reset(cur[0, w:], nr)
        else:
            _cursor_op(cur, cur.shape[1], op, slot)
        return True, 0.0, 0.0, 0.0
    mu = key[0]
    while True:
        ok, i, j = _next_line(R, prm, n, nr, LG, cur[0, :w], stats, sw, key, True)
        if not ok:
            return False, 0.0, 0.0, 0.0
        ok, p, q = _next_line(R, prm, n, nr, LG, cur[0, w:], stats, sw, key, False)
        if not ok:
            return False, 0.0, 0.0, 0.0
        par, y, x = crossing(R, prm, i, j, p, q, sw, mu)
        if mode == 0:
            return True, y, float(i), float(j)
        if not par and sH * (y - ym) <= 0:
            return True, x, float(i), float(j)


# --- testing lines ---------------------------------------------------------------------


_select_lines = make_select(lines_seq)
_select_pairs = make_select(pairs_seq)


@njit(cache=True)
def _inner(R, prm, geo, n, oprm, k, batch, meter, stats):
    tr = np.zeros((1, 4), np.int64)
    lg = np.zeros((1, 4))
    return _lines_solve3((R, prm, geo), n, oprm, k, batch, meter, stats, tr, lg)


@njit(cache=True)
def cone_side(R, prm, n, q, zq, U, N, k, batch, meter, stats):
    """Side of the line (``+1`` along ``N``, ``-1`` against, 0 neither) into
    which the objective still decreases from the point ``(q, zq)``."""
    geo = np.array([MODE_CONE, q[0], q[1], U[0], U[1], N[0], N[1], 0.0, zq, n])
    for s in range(2):
        geo[7] = 1.0 if s == 0 else -1.0
        st, t, v, _ = _inner(R, prm, geo, n, PRM_MIN_Z, k, batch, meter, stats)
        if st == ST_UNBOUNDED or (st == ST_OPTIMAL and v < -1e-9):
            return 1 if s == 0 else -1
    return 0


@njit(cache=True)
def testing_line(R, prm, n, P0, U, N, k, batch, meter, stats, out):
    """Classify the optimum against the line ``P0 + t U``.

    Returns a verdict; ``out`` receives ``(side, x, y, z)``: the side (+1
    along ``N``) for ``V_SIDE``, the point for an optimum or an unbounded
    witness.
    """
    geo = np.array([MODE_LINE, P0[0], P0[1], U[0], U[1], N[0], N[1], 0.0, 0.0, n])
    st, t, z, _ = _inner(R, prm, geo, n, PRM_MIN_Z, k, batch, meter, stats)
    if st == ST_UNBOUNDED:
        out[0] = 0
        out[1] = P0[0] + t * U[0]
        out[2] = P0[1] + t * U[1]
        out[3] = z
        return V_UNBOUNDED
    if st == ST_INFEASIBLE:
        meter_alloc(meter, 6 + 6 * 4)
        rows = np.zeros(6, np.int64)
        m = _certificate3((R, prm, geo), n, PRM_MIN_Z, t, int(z), rows)
        M = np.zeros((m, 4))
        for s in range(m):
            cls, a, b, c = transform3(R, rows[s], prm)
            stats[0] += 1
            if cls < 1:
                M[s, 3] = 1.0 if cls == -1 else 0.0
            else:
                generic_row(cls, a, b, c, M[s])
        fs, px, py, pz = solve_small3_kernel(M)
        meter_free(meter, 6 + 6 * 4)
        if fs == ST_INFEASIBLE:
            return V_INFEASIBLE
        # side of the certificate's feasible set
        dx = px - P0[0]
        dy = py - P0[1]
        cr = U[0] * N[1] - U[1] * N[0]
        delta = (U[0] * dy - U[1] * dx) / cr
        out[0] = 1.0 if delta >= 0 else -1.0
        return V_SIDE
    q = np.array([P0[0] + t * U[0], P0[1] + t * U[1]])
    side = cone_side(R, prm, n, q, z, U, N, k, batch, meter, stats)
    if side == 0:
        # optimum set on the line may be a segment: probe an inner point of it
        cap = np.array([MODE_CAPPED, P0[0], P0[1], U[0], U[1], N[0], N[1], 0.0,
                        z + TOL * (1.0 + abs(z)), n])
        s1, _, lo_v, _ = _inner(R, prm, cap, n + 1, PRM_MIN_T, k, batch, meter, stats)
        s2, _, hi_v, _ = _inner(R, prm, cap, n + 1, PRM_MAX_T, k, batch, meter, stats)
        tlo = lo_v if s1 == ST_OPTIMAL else (-np.inf if s1 == ST_UNBOUNDED else t)
        thi = -hi_v if s2 == ST_OPTIMAL else (np.inf if s2 == ST_UNBOUNDED else t)
        if np.isfinite(tlo) and np.isfinite(thi):
            tm = 0.5 * (tlo + thi)
        elif np.isfinite(tlo):
            tm = tlo + 1.0 + abs(tlo)
        elif np.isfinite(thi):
            tm = thi - 1.0 - abs(thi)
        else:
            tm = t
        if tm != t:
            q2 = np.array([P0[0] + tm * U[0], P0[1] + tm * U[1]])
            side = cone_side(R, prm, n, q2, z, U, N, k, batch, meter, stats)
            if side == 0:
                q = q2
    if side != 0:
        out[0] = side
        return V_SIDE
    out[0] = 0
    out[1] = q[0]
    out[2] = q[1]
    out[3] = z
    return V_OPTIMAL


@njit(cache=True)
def frame_line(sw, P0, U, N):
    """Frame coordinates ``(X, Y)`` to ``(x, y)``."""
    if sw:
        for v in (P0, U, N):
            v[0], v[1] = v[1], v[0]


# --- driver -------------------------------------------------------------------------------


@njit(cache=True)
def _grow(LG, rows, meter):
    if rows <= LG.shape[0]:
        return LG
    new = np.zeros((rows, _LOG_COLS))
    meter_alloc(meter, new.size)
    new[: LG.shape[0]] = LG
    meter_free(meter, LG.size)
    return new


@njit(cache=True)
def lp3_kernel(R, prm, k, batch, meter, stats, trace, logout, out):
    """Solve in transformed coordinates; ``out`` = (x, y, z).  Returns
    ``(status, rounds)``."""
    n = R.shape[0]
    tracing = trace.shape[0] > 1
    n1 = 0
    for i in range(n):
        stats[0] += 1
        cls, _, _, _ = transform3(R, i, prm)
        if cls == -1:
            return ST_INFEASIBLE, 0
        if cls == 1:
            n1 += 1
    if n1 == 0:
        # z is free below: feasible iff the class-3 rows are
        geo = np.array([MODE_SHADOW, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, n])
        st, x, y, _ = _inner(R, prm, geo, n, PRM_MIN_T, k, batch, meter, stats)
        if st == ST_INFEASIBLE:
            return ST_INFEASIBLE, 0
        # objective (1, 0) swaps the columns: the first coordinate is y
        px, py = y, x
        z = np.inf
        for i in range(n):
            stats[0] += 1
            cls, a, b, c = transform3(R, i, prm)
            if cls == 2:
                z = min(z, a * px + b * py + c)
        out[0], out[1], out[2] = px, py, (z if np.isfinite(z) else 0.0)
        return ST_UNBOUNDED, 0
    LG = np.zeros((8, _LOG_COLS))
    meter_alloc(meter, LG.size + 16)
    key = np.zeros(3)
    tl = np.zeros(4)
    P0 = np.zeros(2)
    U = np.zeros(2)
    N = np.zeros(2)
    nr = 0
    status = -1
    last = n + 1
    while True:
        w = 4 + 3 * nr
        meter_alloc(meter, w)
        st = np.zeros(w, np.int64)
        replay3_reset(st, nr)
        pairs = 0
        c = 0
        valid = 0
        while True:
            ok, i, j, cls = replay3_next(R, prm, n, nr, LG, st, stats)
            if not ok:
                break
            pairs += 1
            valid += 2
            if not same_gradient(R, prm, i, j):
                c += 1
        for q in range(3 + 3 * nr):
            if parked3(st, nr, q) >= 0:
                valid += 1
        meter_free(meter, w)
        if tracing and nr < trace.shape[0]:
            trace[nr, 0] = pairs
            trace[nr, 1] = c
            trace[nr, 2] = valid
            trace[0, 3] = nr + 1
        if valid < SMALL3 or pairs == 0 or valid >= last:
            # a round that prunes nothing only happens through rounding;
            # the brute-force finish is exact either way
            break
        last = valid
        LG = _grow(LG, nr + 2, meter)
        t = nr + 1
        LG[t, :] = 0.0
        if c == 0:
            nr = t
            continue
        # median gradient, in the swapped frame if it is vertical; cursors
        # live only while their selection runs
        meter_alloc(meter, (k + 1) * w)
        cur = np.zeros((k + 1, w), np.int64)
        sw = 0
        ok, mu, mi, mj = _select_lines(
            (R, prm, n, nr, LG, 0, cur, stats), c, (c + 1) // 2, k, 3, batch, meter, 0
        )
        if mu == np.inf:
            sw = 1
            ok, mu, mi, mj = _select_lines(
                (R, prm, n, nr, LG, 1, cur, stats), c, (c + 1) // 2, k, 3, batch, meter, 0
            )
        meter_free(meter, (k + 1) * w)
        key[0], key[1], key[2] = mu, mi, mj
        nm = c - (c + 1) // 2
        if nm == 0:
            # a single line: test it directly
            A, B, C, g = line_of(R, prm, int(mi), int(mj), sw != 0)
            ym = -C / B
        else:
            meter_alloc(meter, 2 * (k + 1) * w)
            curm = np.zeros((k + 1, 2 * w), np.int64)
            ok, ym, _, _ = _select_pairs(
                (R, prm, n, nr, LG, sw, key, 0, 0.0, 0.0, curm, stats),
                nm, (nm + 1) // 2, k, 3, batch, meter, 0,
            )
            meter_free(meter, 2 * (k + 1) * w)
        P0[0], P0[1] = 0.0, ym
        U[0], U[1] = 1.0, mu
        N[0], N[1] = 0.0, 1.0
        frame_line(sw, P0, U, N)
        v = testing_line(R, prm, n, P0, U, N, k, batch, meter, stats, tl)
        xm = 0.0
        sV = 0.0
        sH = tl[0]
        if v == V_SIDE and nm > 0:
            # crossing pairs on the far side of L_H
            cf = 0
            meter_alloc(meter, 2 * (k + 1) * w)
            curm = np.zeros((k + 1, 2 * w), np.int64)
            ctx = (R, prm, n, nr, LG, sw, key, 1, ym, sH, curm, stats)
            pairs_seq(ctx, OP_REWIND, 0)
            while True:
                ok, _, _, _ = pairs_seq(ctx, OP_NEXT, 0)
                if not ok:
                    break
                cf += 1
            if cf > 0:
                ok, xm, _, _ = _select_pairs(ctx, cf, (cf + 1) // 2, k, 3, batch, meter, 0)
            meter_free(meter, 2 * (k + 1) * w)
            if cf > 0:
                P0[0], P0[1] = xm, 0.0
                U[0], U[1] = 0.0, 1.0
                N[0], N[1] = 1.0, 0.0
                frame_line(sw, P0, U, N)
                v = testing_line(R, prm, n, P0, U, N, k, batch, meter, stats, tl)
                sV = tl[0]
        if v != V_SIDE:
            if v == V_INFEASIBLE:
                status = ST_INFEASIBLE
            else:
                status = ST_OPTIMAL if v == V_OPTIMAL else ST_UNBOUNDED
                out[0], out[1], out[2] = tl[1], tl[2], tl[3]
            break
        LG[t, 0] = sw
        LG[t, 1] = mu
        LG[t, 2] = ym
        LG[t, 3] = xm
        LG[t, 4] = sH
        LG[t, 5] = sV
        nr = t
    if status < 0:
        status = finish(R, prm, n, nr, LG, meter, stats, valid, out)
    if logout.shape[0] > 1:
        for t in range(min(nr + 1, logout.shape[0], LG.shape[0])):
            for q in range(_LOG_COLS):
                logout[t, q] = LG[t, q]
    meter_free(meter, LG.size + 16)
    return status, nr


@njit(cache=True)
def finish(R, prm, n, nr, LG, meter, stats, valid, out):
    """Brute force over the surviving rows, restricted to the quadrants the
    rounds established when the survivors alone allow a better point."""
    w = 4 + 3 * nr
    nreg = 0
    for t in range(1, nr + 1):
        if LG[t, 4] != 0:
            nreg += 1
        if LG[t, 5] != 0:
            nreg += 1
    words = w + 4 * (valid + nreg)
    meter_alloc(meter, words)
    st = np.zeros(w, np.int64)
    M = np.zeros((valid + nreg, 4))
    m = 0
    replay3_reset(st, nr)
    while True:
        ok, i, j, cls = replay3_next(R, prm, n, nr, LG, st, stats)
        if not ok:
            break
        for u in (i, j):
            cl, a, b, c = transform3(R, u, prm)
            generic_row(cl, a, b, c, M[m])
            m += 1
    for q in range(3 + 3 * nr):
        u = parked3(st, nr, q)
        if u >= 0:
            stats[0] += 1
            cl, a, b, c = transform3(R, u, prm)
            generic_row(cl, a, b, c, M[m])
            m += 1
    status, x, y, z = solve_small3_kernel(M[:m])
    inside = True
    for t in range(1, nr + 1):
        sw = LG[t, 0] != 0
        mu = LG[t, 1]
        for s in range(2):
            side = LG[t, 4 + s]
            if side == 0:
                continue
            if s == 0:
                # side * (Y - mu X - y_m) >= 0
                a, b, c = (-side * mu, side, side * LG[t, 2])
            else:
                a, b, c = (side, 0.0, side * LG[t, 3])
            if sw:
                a, b = b, a
            M[m, 0], M[m, 1], M[m, 2], M[m, 3] = a, b, 0.0, c
            if a * x + b * y < c - TOL * (abs(a * x) + abs(b * y) + abs(c) + 1.0):
                inside = False
            m += 1
    if status != ST_OPTIMAL or not inside:
        if status != ST_INFEASIBLE:
            status, x, y, z = solve_small3_kernel(M[:m])
    out[0], out[1], out[2] = x, y, z
    meter_free(meter, words)
    return status


# --- Python API ---------------------------------------------------------------------------


class Lp3RoundLog:
    """Round records ``(frame swap, mu, y_m, x_m, side of L_H, side of L_V)``."""

    def __init__(self, capacity):
        self.capacity = int(capacity)
        self.rows = np.zeros((capacity + 2, _LOG_COLS))
        self.rounds = 0


def _prep(view, objective):
    view = as_view(view, 4)
    d = tuple(float(v) for v in objective)
    if len(d) != 3 or not all(math.isfinite(v) for v in d):
        raise ValueError("objective must be three finite numbers")
    check_rows(view, 4)
    return view, d


def solve_lp3(view, objective, k=None, batch=None, meter=None, trace=None, log=None):
    """Minimise ``d1 x1 + d2 x2 + d3 x3`` subject to the rows of ``view``."""
    view, d = _prep(view, objective)
    n = view.length
    feasibility = d == (0.0, 0.0, 0.0)
    prm = objective_params3(0.0, 0.0, 1.0) if feasibility else objective_params3(*d)
    if k is None:
        k = choose_k(max(n, 2))
    if batch is None:
        batch = default_batch(n)
    meter = meter or WorkspaceMeter()
    stats = np.zeros(1, np.int64)
    tr = trace if trace is not None else np.zeros((1, 4), np.int64)
    lg = log.rows if log is not None else np.zeros((1, _LOG_COLS))
    out = np.zeros(3)
    data = view.data if n else np.zeros((0, 4))
    try:
        status, rounds = lp3_kernel(data, prm, k, batch, meter.cells, stats, tr, lg, out)
    finally:
        view.add_reads(int(stats[0]))
    if log is not None:
        log.rounds = int(rounds)
    if status == ST_INFEASIBLE:
        return LPResult("infeasible")
    x = map_back3(prm, *out)
    if feasibility:
        return LPResult("optimal", x, 0.0)
    if status == ST_UNBOUNDED:
        return LPResult("unbounded")
    return LPResult("optimal", x, sum(di * xi for di, xi in zip(d, x)))


def pair_and_line(view, objective, log, round=None):
    """Valid pairs at ``round`` (default: the next one) with their lines:
    ``(pairs, leftovers)`` where each pair is ``(i, j, cls, (A, B, C) or None)``
    and ``A x + B y + C = 0`` is ``L_ij`` (None for equal gradients)."""
    view = as_view(view, 4)
    prm = objective_params3(*objective)
    nr = log.rounds if round is None else round - 1
    st = np.zeros(4 + 3 * nr, np.int64)
    stats = np.zeros(1, np.int64)
    replay3_reset(st, nr)
    pairs = []
    while True:
        ok, i, j, cls = replay3_next(view.data, prm, view.length, nr, log.rows, st, stats)
        if not ok:
            break
        line = None
        if not same_gradient(view.data, prm, i, j):
            A, B, C, _ = line_of(view.data, prm, i, j, False)
            line = (A, B, C)
        pairs.append((int(i), int(j), int(cls), line))
    rest = [int(st[1 + q]) for q in range(3 + 3 * nr) if st[1 + q] >= 0]
    view.add_reads(int(stats[0]))
    return pairs, rest


def gradient(line):
    """Gradient of ``A x + B y + C = 0`` (``inf`` for vertical lines)."""
    A, B, _ = line
    return math.inf if B == 0 else -A / B


def median_gradient(lines):
    """Median gradient (the ``ceil(c/2)``-th smallest), vertical lines last."""
    from .selection import select_ak, SelectConfig

    g = np.array([gradient(ln) for ln in lines], dtype=np.float64)
    return float(select_ak(g, (len(g) + 1) // 2, SelectConfig(k=1)))


def cross_pair_geometry(line1, line2, mu):
    """``("parallel", y, None)`` or ``("crossing", y, x)`` for two lines in the
    frame sheared by ``mu``: ``x`` is the crossing's abscissa and ``y`` its
    height above ``y = mu x``; for parallel lines ``y`` is the mean offset."""
    A1, B1, C1 = line1
    A2, B2, C2 = line2
    g1, g2 = gradient(line1), gradient(line2)
    det = A1 * B2 - A2 * B1
    if (g1 == mu and g2 == mu) or det == 0:
        return ("parallel", 0.5 * (-C1 / B1 - C2 / B2), None)
    X = (-C1 * B2 + C2 * B1) / det
    Y = (-A1 * C2 + A2 * C1) / det
    return ("crossing", Y - mu * X, X)


def testing_line_verdict(view, objective, point, direction, normal=None, k=1, meter=None):
    """Where the optimum lies relative to the line through ``point`` along
    ``direction`` (transformed ``(x, y)`` coordinates).

    Returns ``("side", +1|-1)`` (+1 along ``normal``, default the direction
    turned left), ``("optimum", (x, y, z))``, ``("unbounded", None)`` or
    ``("infeasible", None)``.
    """
    view, d = _prep(view, objective)
    prm = objective_params3(*d)
    P0 = np.array(point, dtype=np.float64)
    U = np.array(direction, dtype=np.float64)
    N = np.array(normal if normal is not None else (-U[1], U[0]), dtype=np.float64)
    stats = np.zeros(1, np.int64)
    out = np.zeros(4)
    meter = meter or WorkspaceMeter()
    v = testing_line(view.data, prm, view.length, P0, U, N, k, default_batch(view.length),
                     meter.cells, stats, out)
    view.add_reads(int(stats[0]))
    if v == V_SIDE:
        return ("side", int(out[0]))
    if v == V_OPTIMAL:
        return ("optimum", (float(out[1]), float(out[2]), float(out[3])))
    return ("unbounded", None) if v == V_UNBOUNDED else ("infeasible", None)


def solve_small3(rows, objective):
    """Brute-force answer for a handful of raw rows ``(a', b', c', beta)``."""
    R = np.asarray(rows, dtype=np.float64).reshape(-1, 4)
    d = tuple(float(v) for v in objective)
    feasibility = d == (0.0, 0.0, 0.0)
    prm = objective_params3(0.0, 0.0, 1.0) if feasibility else objective_params3(*d)
    M = np.zeros((len(R), 4))
    for i in range(len(R)):
        cls, a, b, c = transform3(R, i, prm)
        if cls == -1:
            return LPResult("infeasible")
        if cls > 0:
            generic_row(cls, a, b, c, M[i])
    status, x, y, z = solve_small3_kernel(M)
    if status == ST_INFEASIBLE:
        return LPResult("infeasible")
    pt = map_back3(prm, x, y, z)
    if feasibility:
        return LPResult("optimal", pt, 0.0)
    if status == ST_UNBOUNDED:
        return LPResult("unbounded")
    return LPResult("optimal", pt, sum(di * xi for di, xi in zip(d, pt)))
