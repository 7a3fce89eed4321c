"""Oracles, instance generators and mark-bit simulators for testing.

Nothing here is metered and nothing here is read-only: oracles sort copies,
keep explicit valid bits and enumerate vertices.  They share no algorithmic
code with the production modules, only the result types.
"""

import hashlib
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .lp2d import LPResult

COEF_LIMIT = 2**26
EPS = 1e-9


# --- instance generation ----------------------------------------------------


@dataclass(frozen=True)
class InstanceSpec:
    kind: str  # "points-sorted", "points", "lp2" or "lp3"
    n: int
    seed: int = 0
    bound: int = 1000
    dup_x: float = 0.0  # fraction of points sharing an x with another point
    collinear: float = 0.0  # fraction of points placed on one common line
    parallel: float = 0.0  # fraction of rows copying another row's normal
    mode: str = "mixed"  # lp kinds: optimal, infeasible, unbounded or mixed

    def __post_init__(self):
        if self.kind not in ("points-sorted", "points", "lp2", "lp3"):
            raise ValueError("unknown instance kind %r" % self.kind)
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 1 <= self.bound < COEF_LIMIT:
            raise ValueError("coefficient bound must lie in [1, 2**26)")
        if self.mode not in ("optimal", "infeasible", "unbounded", "mixed"):
            raise ValueError("unknown lp mode %r" % self.mode)

    def _rng(self):
        key = "%s|%d|%d|%d|%r|%r|%r|%s" % (
            self.kind, self.n, self.seed, self.bound, self.dup_x,
            self.collinear, self.parallel, self.mode,
        )
        digest = hashlib.sha256(key.encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def generate(spec):
    """The instance for ``spec``: points ``(n, 2)``, or LP ``(rows, objective)``."""
    rng = spec._rng()
    if spec.kind in ("points", "points-sorted"):
        return _points(spec, rng)
    return _lp(spec, rng, 2 if spec.kind == "lp2" else 3)


def _points(spec, rng):
    n, b = spec.n, spec.bound
    P = rng.integers(-b, b + 1, (n, 2)).astype(np.float64)
    if n and spec.collinear > 0:
        on = rng.random(n) < spec.collinear
        s = int(rng.integers(-3, 4))
        c = int(rng.integers(-b // 2, b // 2 + 1))
        x = rng.integers(-b // 4, b // 4 + 1, n)
        P[on, 0] = x[on]
        P[on, 1] = s * x[on] + c
    if n > 1 and spec.dup_x > 0:
        dup = rng.random(n) < spec.dup_x
        src = rng.integers(0, n, n)
        P[dup, 0] = P[src[dup], 0]
    if spec.kind == "points-sorted":
        P = P[np.argsort(P[:, 0], kind="stable")]
    return P


def _lp(spec, rng, d):
    n, b = spec.n, spec.bound
    mode = spec.mode
    if mode == "mixed":
        mode = ("optimal", "infeasible", "unbounded")[int(rng.integers(0, 3))]
    # an interior anchor keeps the region nonempty before the mode tweaks
    # |a . anchor| stays below 2**25 so every beta is exact and unclipped
    ab = min(b // 8, (COEF_LIMIT // 2) // (d * b))
    anchor = rng.integers(-ab, ab + 1, d).astype(np.float64)
    if mode == "unbounded":
        # normals within a half-space leave a recession direction r open
        r = _unit_int(rng, d, b)
        A = np.empty((n, d))
        for i in range(n):
            while True:
                a = rng.integers(-b, b + 1, d)
                if a @ r > 0:
                    break
            A[i] = a
        obj = -r + rng.integers(-1, 2, d) * (rng.random() < 0.3)
        if obj @ r >= 0:
            obj = -r
    else:
        A = rng.integers(-b, b + 1, (n, d)).astype(np.float64)
        obj = rng.integers(-b, b + 1, d).astype(np.float64)
        if not obj.any():
            obj[-1] = 1.0
        # enclose the anchor from every side so the optimum is bounded
        for i in range(min(n, 2 * d)):
            A[i] = 0.0
            A[i, i // 2] = 1.0 if i % 2 == 0 else -1.0
    if n > 1 and spec.parallel > 0:
        par = rng.random(n) < spec.parallel
        src = rng.integers(0, n, n)
        A[par] = A[src[par]]
    slack = rng.integers(0, max(2, b // 4), n)
    beta = A @ anchor - slack
    if mode == "infeasible" and n >= 2:
        i, j = rng.choice(n, 2, replace=False)
        A[j] = -A[i]
        beta[j] = -(A[i] @ anchor) + 1 + slack[j]
        beta[i] = A[i] @ anchor + slack[i] if A[i].any() else 1.0
        if not A[i].any():
            A[i, 0] = 1.0
            A[j] = -A[i]
            beta[i] = anchor[0] + 1
            beta[j] = -anchor[0]
    limit = COEF_LIMIT - 1
    beta = np.clip(beta, -limit, limit)
    rows = np.column_stack([A, beta]).astype(np.float64)
    return rows, tuple(float(v) for v in obj)


def _unit_int(rng, d, b):
    while True:
        r = rng.integers(-3, 4, d)
        if r.any():
            return r.astype(np.float64)


# --- sorting and hulls --------------------------------------------------------


def oracle_select(values, r):
    """The ``r``-th smallest (1-based) of ``values`` via a sorted copy."""
    return sorted(values)[r - 1]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def oracle_hull(points):
    """Minimal hull vertices, clockwise from the leftmost (then topmost) point."""
    P = sorted(set((float(p[0]), float(p[1])) for p in points))
    if len(P) <= 2:
        if len(P) == 2:
            # clockwise order starts at the leftmost, topmost point
            return P if P[0][0] < P[1][0] or P[0][1] > P[1][1] else P[::-1]
        return P
    lower, upper = [], []
    for p in P:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(P):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ccw = lower[:-1] + upper[:-1]
    if len(ccw) == 2 and ccw[0] == ccw[1]:
        ccw = ccw[:1]
    cw = ccw[::-1]
    s = min(range(len(cw)), key=lambda i: (cw[i][0], -cw[i][1]))
    return cw[s:] + cw[:s]


def oracle_bridge(points, x_split):
    """Upper-hull edge over the vertical line ``x = x_split`` as two points."""
    left = [p for p in points if p[0] <= x_split]
    right = [p for p in points if p[0] > x_split]
    best = None
    for p in left:
        for q in right:
            ok = all(_cross(p, q, r) <= 0 for r in points)
            if ok:
                key = (p[0], -p[1], -q[0], -q[1])
                if best is None or key < best[0]:
                    best = (key, (tuple(p), tuple(q)))
    return None if best is None else best[1]


# --- linear programs ----------------------------------------------------------


def oracle_lp2(rows, objective, method="auto"):
    """Minimise ``c . x`` over ``a . x >= beta`` in the plane."""
    return _oracle_lp(np.asarray(rows, dtype=np.float64).reshape(-1, 3), objective, 2, method)


def oracle_lp3(rows, objective, method="auto"):
    """Minimise ``d . x`` over ``a . x >= beta`` in space."""
    return _oracle_lp(np.asarray(rows, dtype=np.float64).reshape(-1, 4), objective, 3, method)


def _oracle_lp(R, objective, d, method):
    c = np.asarray(objective, dtype=np.float64)
    n = R.shape[0]
    if method == "auto":
        method = "enumerate" if n <= (300 if d == 2 else 60) else "highs"
    if method == "highs":
        return _highs(R, c, d)
    if method != "enumerate":
        raise ValueError("unknown oracle method %r" % method)
    return _enumerate(R, c, d)


def _enumerate(R, c, d):
    A, beta = R[:, :d], R[:, d]
    zero = np.all(A == 0, axis=1)
    if np.any(beta[zero] > 0):
        return LPResult("infeasible")
    A, beta = A[~zero], beta[~zero]
    # pin the lineality space so a feasible region always has a vertex
    null = _null_space(A, d)
    if null.shape[0]:
        if np.any(np.abs(null @ c) > EPS * max(1.0, np.abs(c).max())) and _feasible_any(A, beta, null, d):
            return LPResult("unbounded")
        A = np.vstack([A, null, -null])
        beta = np.concatenate([beta, np.zeros(2 * null.shape[0])])
    X = _vertices(A, beta, d)
    if X.shape[0] == 0:
        return LPResult("infeasible")
    X = X[_satisfies(X, A, beta)]
    if X.shape[0] == 0:
        return LPResult("infeasible")
    if c.any() and _recedes(A, c, d):
        return LPResult("unbounded")
    vals = X @ c
    i = int(np.argmin(vals))
    return LPResult("optimal", tuple(float(v) for v in X[i]), float(vals[i]))


def _null_space(A, d):
    if A.shape[0] == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * s.max())) if s.size else 0
    return vt[rank:]


def _feasible_any(A, beta, null, d):
    B = np.vstack([A, null, -null])
    b = np.concatenate([beta, np.zeros(2 * null.shape[0])])
    X = _vertices(B, b, d)
    if X.shape[0] == 0:
        return False
    return bool(np.any(_satisfies(X, A, beta)))


def _satisfies(X, A, beta):
    """Rows of ``X`` meeting every ``a . x >= beta`` up to relative rounding."""
    slack = X @ A.T - beta
    # scale by the point's magnitude so cancelling coordinates keep a tolerance
    mag = np.maximum(1.0, np.abs(X).max(axis=1, initial=0.0))
    size = mag[:, None] * np.abs(A).sum(axis=1)[None, :] + np.abs(beta)
    return np.all(slack >= -EPS * size, axis=1)


def _vertices(A, beta, d):
    """All points where ``d`` linearly independent rows are tight."""
    m = A.shape[0]
    if m < d:
        return np.zeros((0, d))
    idx = np.array(list(combinations(range(m), d)), dtype=np.int64)
    out = []
    for chunk in np.array_split(idx, max(1, len(idx) // 20000)):
        M = A[chunk]
        b = beta[chunk]
        det = np.linalg.det(M)
        good = np.abs(det) > 1e-9 * np.prod(np.linalg.norm(M, axis=2), axis=1)
        if np.any(good):
            out.append(np.linalg.solve(M[good], b[good][:, :, None])[:, :, 0])
    return np.vstack(out) if out else np.zeros((0, d))


def _recedes(A, c, d):
    """Whether some ``r`` with ``A r >= 0`` has ``c . r < 0``.

    Minimising ``c . r`` over the cone cut by the box ``|r| <= 1`` reaches
    its minimum at a vertex; those vertices are where ``d`` planes among the
    rows' ``a . r = 0`` and the box faces meet.
    """
    m = A.shape[0]
    faces = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        faces.append((e, 1.0))
        faces.append((e, -1.0))
    planes = [(A[i], 0.0) for i in range(m)] + faces
    # the cone part needs at most d - 1 rows; the rest are box faces
    cand = []
    rows = list(range(m))
    for nrow in range(0, d):
        for rs in combinations(rows, nrow):
            for fs in combinations(range(2 * d), d - nrow):
                if len({f // 2 for f in fs}) < len(fs):
                    continue
                M = np.array([A[i] for i in rs] + [faces[f][0] for f in fs])
                b = np.array([0.0] * nrow + [faces[f][1] for f in fs])
                if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.abs(M).max()) ** d:
                    continue
                cand.append(np.linalg.solve(M, b))
    del planes
    if not cand:
        return False
    Rr = np.array(cand)
    scale = np.abs(A).max() if A.size else 1.0
    inside = np.all(Rr @ A.T >= -1e-9 * scale, axis=1) if m else np.ones(len(Rr), bool)
    return bool(np.any(Rr[inside] @ c < -1e-9 * max(1.0, np.abs(c).max())))


def _highs(R, c, d):
    from scipy.optimize import linprog

    # unit-scaled rows and objective keep the reference solver well conditioned
    A, beta = R[:, :d], R[:, d]
    s = np.abs(A).max(axis=1) if len(A) else np.zeros(0)
    if np.any((s == 0) & (beta > 0)):
        return LPResult("infeasible")
    keep = s > 0
    A, beta, s = A[keep], beta[keep], s[keep]
    cs = c / np.abs(c).max() if c.any() else c
    res = linprog(cs, A_ub=-(A / s[:, None]), b_ub=-(beta / s),
                  bounds=[(None, None)] * d, method="highs")
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    if res.status != 0:
        raise RuntimeError("reference solver failed: %s" % res.message)
    x = np.asarray(res.x, dtype=np.float64)
    return LPResult("optimal", tuple(float(v) for v in x), float(c @ x))


def same_lp(a, b, rel):
    """Statuses agree and optimal values agree to ``rel`` relative."""
    if a.status != b.status:
        return False
    if a.status != "optimal":
        return True
    return abs(a.value - b.value) <= rel * max(1.0, abs(a.value), abs(b.value))


# --- mark-bit simulators --------------------------------------------------------
#
# The production code keeps no per-element state: the pairs valid in a round
# are rebuilt by replaying every earlier round's test.  These simulators keep
# the state explicitly instead (the current pair list, parked survivors and
# valid bits) and apply each round's test exactly once, using the same tie
# rules and the same pairing discipline: a pair survives until one member is
# pruned, and the survivors of a round are paired in the order they appear.


@dataclass
class MarkbitRun:
    rounds: list  # per round: (pairs, leftovers) valid at its start
    log: list  # per round: the decision record it computed or checked
    valid: list  # valid bits after the last round
    answer: object


def simulate_with_markbits(algorithm, instance, log=None):
    """Run ``algorithm`` ("bridge", "lp2" or "lp3") with explicit valid bits.

    ``instance`` is ``(points, start, m, end)`` for a bridge and ``(rows,
    objective)`` for the LPs.  lp3 takes the testing-line sides from the
    production ``log`` (they need an LP solve); its medians are recomputed
    here and must agree with the log.
    """
    if algorithm == "bridge":
        return _sim_bridge(*instance)
    if algorithm == "lp2":
        return _sim_lp2(*instance)
    if algorithm == "lp3":
        if log is None:
            raise ValueError("lp3 simulation needs the production round log")
        return _sim_lp3(instance[0], instance[1], log)
    raise ValueError("unknown algorithm %r" % algorithm)


def _advance(pairs, test, nslots):
    """Apply one round's ``test(p, q, slot) -> keep | survivor`` to the pairs."""
    out = []
    park = {}
    for p, q, c in pairs:
        res = test(p, q, c)
        if res is None:
            out.append((p, q, c))
            continue
        if c in park:
            o = park.pop(c)
            out.append((min(o, res), max(o, res), c))
        else:
            park[c] = res
    return out, list(park.values())


def _snapshot(pairs, rest):
    return [(p, q) for p, q, _ in pairs], sorted(rest)


def _bits(n, pairs, rest):
    v = [False] * n
    for p, q, _ in pairs:
        v[p] = v[q] = True
    for u in rest:
        v[u] = True
    return v


def _sim_bridge(points, start, m, end):
    P = np.asarray(points, dtype=np.float64)
    x, y = P[:, 0].tolist(), P[:, 1].tolist()
    pairs = [(start + 2 * v, start + 2 * v + 1, 0) for v in range((end - start + 1) // 2)]
    rest = [end] if (end - start + 1) % 2 else []
    rounds, log = [], []
    answer = None
    while True:
        rounds.append(_snapshot(pairs, rest))
        valid = [u for p, q, _ in pairs for u in (p, q)] + rest
        left = [u for u in valid if u <= m]
        right = [u for u in valid if u > m]
        if len(left) <= 1 or len(right) <= 1 or not pairs:
            break
        dym = dxm = 0.0
        bit = 0
        steep = sorted(((y[q] - y[p]) / (x[q] - x[p]), p, q) for p, q, _ in pairs if x[p] != x[q])
        if steep:
            _, a0, b0 = steep[(len(steep) + 1) // 2 - 1]
            dym, dxm = y[b0] - y[a0], x[b0] - x[a0]

            def f(u):
                return y[u] * dxm - dym * x[u]

            a = max(left, key=lambda u: (f(u), -u))
            b = max(right, key=lambda u: (f(u), u))
            if f(a) == f(b):
                answer = (a, b)
                break
            bit = 0 if f(a) > f(b) else 1
        log.append((dym, dxm, bit))

        def test(p, q, _c):
            if x[p] == x[q]:
                return q if y[p] < y[q] else p
            if dxm == 0.0:
                return None
            dx, dy = x[q] - x[p], y[q] - y[p]
            if bit == 0 and dy * dxm >= dym * dx:
                return q
            if bit == 1 and dy * dxm <= dym * dx:
                return p
            return None

        pairs, extra = _advance(pairs, test, 1)
        rest = rest + extra
    valid = [u for p, q, _ in pairs for u in (p, q)] + rest
    if answer is None:
        answer = _bridge_of(x, y, sorted(valid), m)
    return MarkbitRun(rounds, log, _bits(len(x), pairs, rest), answer)


def _bridge_of(x, y, cand, m):
    """Leftmost-left, rightmost-right edge with every candidate on or below it."""
    best_a = best_b = None
    for a in cand:
        if a > m:
            continue
        for b in cand:
            if b <= m:
                continue
            dx, dy = x[b] - x[a], y[b] - y[a]
            if all((y[c] - y[a]) * dx <= dy * (x[c] - x[a]) for c in cand):
                if best_a is None or (x[a], a) < (x[best_a], best_a):
                    best_a = a
                if best_b is None or (x[b], b) > (x[best_b], best_b):
                    best_b = b
    return best_a, best_b


# 2D rows become lines of the plane after rotating the objective to (0, 1)


def _lp2_params(c1, c2):
    if c1 == 0 and c2 == 0:
        c1, c2 = 1.0, 0.0
    ia, ib = 0, 1
    if c2 == 0:
        ia, ib, c1, c2 = 1, 0, c2, c1
    sb = 1.0
    if c2 < 0:
        sb, c2 = -1.0, -c2
    return ia, ib, sb, c1, c2


def _lp2_line(row, prm):
    ia, ib, sb, c1, c2 = prm
    ap = row[ia]
    bp = sb * row[ib]
    beta = row[2]
    if bp == 0.0:
        if ap == 0.0:
            return (-1 if beta > 0 else 0), 0.0, 0.0
        return (3 if ap > 0 else 4), 0.0, beta / ap
    return (1 if bp > 0 else 2), (bp * c1 - ap * c2) / bp, beta * c2 / bp


def _close(u, v):
    return abs(u - v) <= 1e-9 * (1.0 + abs(u) + abs(v))


def _lp2_decide(g, h, sg, Sg, sh, Sh, has1, has2):
    # 0 left, 1 right, 2 optimum here, 3 infeasible
    if has1 and has2 and g > h and not _close(g, h):
        if sg > Sh:
            return 0
        if Sg < sh:
            return 1
        return 3
    touching = has1 and has2 and _close(g, h)
    if sg > 0 and (not touching or sg >= Sh):
        return 0
    if Sg < 0 and (not touching or Sg <= sh):
        return 1
    return 2


def _sim_lp2(rows, objective):
    R = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    prm = _lp2_params(*(float(v) for v in objective))
    L = [_lp2_line(R[i].tolist(), prm) for i in range(len(R))]
    rounds, log = [], []
    lo, hi = -math.inf, math.inf
    for cls, _, b in L:
        if cls == 3:
            lo = max(lo, b)
        elif cls == 4:
            hi = min(hi, b)
    pairs, rest, pend = [], [], {}
    for r, (cls, _, _) in enumerate(L):
        if cls in (1, 2):
            if cls in pend:
                pairs.append((pend.pop(cls), r, cls))
            else:
                pend[cls] = r
    rest = list(pend.values())
    degenerate = any(c == -1 for c, _, _ in L) or lo > hi or not any(c == 1 for c, _, _ in L)

    def x_of(i, j):
        (_, ai, bi), (_, aj, bj) = L[i], L[j]
        return math.nan if ai == aj else (bi - bj) / (aj - ai)

    verdict = None
    while not degenerate:
        rounds.append(_snapshot(pairs, rest))
        valid = 2 * len(pairs) + len(rest)
        elig = sorted((x_of(i, j), i, j) for i, j, _ in pairs if lo < x_of(i, j) < hi)
        if valid <= 16 or not pairs:
            break
        xm, d = math.nan, -1
        if elig:
            xm = elig[(len(elig) + 1) // 2 - 1][0]
            members = [u for i, j, _ in pairs for u in (i, j)] + rest
            v1 = [(L[u][1] * xm + L[u][2], L[u][1]) for u in members if L[u][0] == 1]
            v2 = [(L[u][1] * xm + L[u][2], L[u][1]) for u in members if L[u][0] == 2]
            g = max(v for v, _ in v1) if v1 else -math.inf
            h = min(v for v, _ in v2) if v2 else math.inf
            t1 = [a for v, a in v1 if _close(v, g)]
            t2 = [a for v, a in v2 if _close(v, h)]
            d = _lp2_decide(g, h, min(t1, default=math.inf), max(t1, default=-math.inf),
                            min(t2, default=math.inf), max(t2, default=-math.inf),
                            bool(v1), bool(v2))
            if d in (2, 3):
                verdict = ("optimal", xm) if d == 2 else ("infeasible", xm)
                break
        log.append((lo, hi, xm, d))
        rlo, rhi = lo, hi

        def test(i, j, cls):
            (_, ai, bi), (_, aj, bj) = L[i], L[j]
            if ai == aj:
                if bi == bj:
                    return i
                keep_i = bi > bj if cls == 1 else bi < bj
                return i if keep_i else j
            x = (bi - bj) / (aj - ai)
            if x <= rlo:
                right = True
            elif x >= rhi:
                right = False
            elif d == 1 and x <= xm:
                right = True
            elif d == 0 and x >= xm:
                right = False
            else:
                return None
            # the line that is smaller (class 1) or larger (class 2) beyond x cannot bind
            small_i = ai < aj
            if (cls == 1) == right:
                return j if small_i else i
            return i if small_i else j

        pairs, extra = _advance(pairs, test, 2)
        rest = rest + extra
        if d == 1:
            lo = xm
        elif d == 0:
            hi = xm
    # the survivors plus the vertical rows keep the optimum
    keep = _bits(len(R), pairs, rest)
    sub = [R[i] for i in range(len(R)) if keep[i] or L[i][0] in (-1, 3, 4)]
    answer = oracle_lp2(np.array(sub).reshape(-1, 3), objective)
    return MarkbitRun(rounds, log, keep, (verdict, answer))


# 3D rows become planes z >= / <= a x + b y + c after rotating the objective


def _lp3_params(d1, d2, d3):
    d = [d1, d2, d3]
    if d == [0.0, 0.0, 0.0]:
        d = [0.0, 0.0, 1.0]
    if d[2] != 0:
        perm = (0, 1, 2)
    elif d[1] != 0:
        perm = (0, 2, 1)
    else:
        perm = (2, 1, 0)
    e = [d[p] for p in perm]
    sgn = 1.0
    if e[2] < 0:
        sgn, e[2] = -1.0, -e[2]
    return perm, sgn, e


def _lp3_plane(row, prm):
    perm, sgn, (d1, d2, d3) = prm
    ap, bp, cp, beta = row[perm[0]], row[perm[1]], sgn * row[perm[2]], row[3]
    if cp == 0.0:
        if ap == 0.0 and bp == 0.0:
            return (-1 if beta > 0 else 0), 0.0, 0.0, 0.0
        return 3, -ap, -bp, beta
    return (1 if cp > 0 else 2), (cp * d1 - ap * d3) / cp, (cp * d2 - bp * d3) / cp, beta * d3 / cp


def _sim_lp3(rows, objective, lp3_log):
    R = np.asarray(rows, dtype=np.float64).reshape(-1, 4)
    prm = _lp3_params(*(float(v) for v in objective))
    Q = [_lp3_plane(R[i].tolist(), prm) for i in range(len(R))]
    LG = np.asarray(lp3_log.rows)
    nrounds = lp3_log.rounds
    pairs, pend = [], {}
    for r, (cls, _, _, _) in enumerate(Q):
        if cls >= 1:
            if cls in pend:
                pairs.append((pend.pop(cls), r, cls))
            else:
                pend[cls] = r
    rest = list(pend.values())

    def line(i, j, sw):
        A, B, C = Q[i][1] - Q[j][1], Q[i][2] - Q[j][2], Q[i][3] - Q[j][3]
        if sw:
            A, B = B, A
        return A, B, C, (math.inf if B == 0.0 else -A / B)

    def same(i, j):
        return Q[i][1] == Q[j][1] and Q[i][2] == Q[j][2]

    rounds, checked = [], []
    for t in range(1, nrounds + 1):
        rounds.append(_snapshot(pairs, rest))
        sw, mu, ym, xm, sH, sV = (float(v) for v in LG[t])
        lines = [(i, j) for i, j, _ in pairs if not same(i, j)]
        if lines and sH != 0:
            # the medians the round must have used, from the explicit pair list
            swx = 0
            keys = sorted((line(i, j, 0)[3], i, j) for i, j in lines)
            med = keys[(len(keys) + 1) // 2 - 1]
            if med[0] == math.inf:
                swx = 1
                keys = sorted((line(i, j, 1)[3], i, j) for i, j in lines)
                med = keys[(len(keys) + 1) // 2 - 1]
            low = [(i, j) for i, j in lines if (line(i, j, swx)[3], i, j) <= med]
            high = [(i, j) for i, j in lines if (line(i, j, swx)[3], i, j) > med]
            cross = [_crossing(line(*u, swx), line(*v, swx), med[0]) + (u,) for u, v in zip(low, high)]
            if cross:
                ys = sorted((y, u[0], u[1]) for _, y, _, u in cross)
                ym_sim = ys[(len(ys) + 1) // 2 - 1][0]
            else:
                A, B, C, _ = line(med[1], med[2], swx)
                ym_sim = -C / B
            far = sorted((x, u[0], u[1]) for par, y, x, u in cross if not par and sH * (y - ym) <= 0)
            xm_sim = far[(len(far) + 1) // 2 - 1][0] if far and sV != 0 else 0.0
            checked.append((swx, med[0], ym_sim, xm_sim))
        else:
            checked.append(None)

        def test(i, j, cls):
            if same(i, j):
                if Q[i][3] == Q[j][3]:
                    return i
                keep_i = Q[i][3] < Q[j][3] if cls == 2 else Q[i][3] > Q[j][3]
                return i if keep_i else j
            if sH == 0:
                return None
            AX, AY, C, g = line(i, j, sw != 0)
            if g == mu:
                kappa = -C / AY
                if sH * (kappa - ym) > 1e-12 * (abs(kappa) + abs(ym)):
                    return None
                pos = AY * sH > 0
            else:
                if sV == 0:
                    return None
                Du, Dw = AX + mu * AY, AY
                Dv = Du * xm + Dw * ym + C
                if abs(Dv) <= 1e-12 * (abs(Du * xm) + abs(Dw * ym) + abs(C)):
                    Dv = 0.0
                if Dv >= 0 and sV * Du >= 0 and sH * Dw >= 0:
                    pos = True
                elif Dv <= 0 and sV * Du <= 0 and sH * Dw <= 0:
                    pos = False
                else:
                    return None
            # pos: f_i >= f_j over the optimum's quadrant
            if cls == 2:
                return j if pos else i
            return i if pos else j

        pairs, extra = _advance(pairs, test, 3)
        rest = rest + extra
    rounds.append(_snapshot(pairs, rest))
    keep = _bits(len(R), pairs, rest)
    sub = [R[i] for i in range(len(R)) if keep[i] or Q[i][0] < 1]
    sub += _lp3_region(prm, LG, nrounds)
    answer = oracle_lp3(np.array(sub).reshape(-1, 4), objective)
    return MarkbitRun(rounds, checked, keep, answer)


def _crossing(l1, l2, mu):
    A1, B1, C1, g1 = l1
    A2, B2, C2, g2 = l2
    det = A1 * B2 - A2 * B1
    if (g1 == mu and g2 == mu) or det == 0.0:
        y = 0.5 * (-C1 / B1 - C2 / B2) if B1 != 0.0 and B2 != 0.0 else 0.0
        return (True, y, math.nan)
    X = (-C1 * B2 + C2 * B1) / det
    Y = (-A1 * C2 + A2 * C1) / det
    return (False, Y - mu * X, X)


def _lp3_region(prm, LG, nrounds):
    """Half-planes of the quadrants the logged rounds placed the optimum in,
    as raw rows over the original variables."""
    perm = prm[0]
    out = []
    for t in range(1, nrounds + 1):
        sw, mu, ym, xm, sH, sV = (float(v) for v in LG[t])
        # frame coordinates: u = first, w = second - mu * first
        first, second = (perm[1], perm[0]) if sw else (perm[0], perm[1])
        if sH != 0:
            row = [0.0, 0.0, 0.0, sH * ym]
            row[second] += sH
            row[first] -= sH * mu
            out.append(np.array(row))
        if sV != 0:
            row = [0.0, 0.0, 0.0, sV * xm]
            row[first] += sV
            out.append(np.array(row))
    return out
