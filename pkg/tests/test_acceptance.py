"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Set ROPRUNE_FULL_SCALE=1 to fit the lp3 workspace over the full n range
(hours of runtime); by default lp3 is measured over n = 2**10 .. 2**13.
"""

import math
import os
import time

import numpy as np

from roprune import SelectConfig, WorkspaceMeter, select_ak, view_over_array
from roprune.hull_blocks import hull_unsorted
from roprune.hull_sorted import RoundLog, compute_bridge, convex_hull, enumerate_valid_pairs, log_capacity
from roprune.lp2d import LpRoundLog, solve_lp2, valid_rows
from roprune.lp2d import log_capacity as lp2_capacity
from roprune.lp3d import Lp3RoundLog, log_capacity3, pair_and_line, solve_lp3
from roprune.testkit import (
    InstanceSpec,
    generate,
    oracle_hull,
    oracle_lp2,
    oracle_lp3,
    oracle_select,
    same_lp,
    simulate_with_markbits,
)

RESULTS = {}
CONTRACT = {"runs": 0, "bad": []}
SELECT_PEAKS = {}
FULL = os.environ.get("ROPRUNE_FULL_SCALE") == "1"


class Criterion:
    def __init__(self, num, title):
        self.num, self.title, self.detail = num, title, ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, et, ev, tb):
        ok = et is None
        msg = self.detail if ok else ("%s | %s: %s" % (self.detail, et.__name__, ev)).strip(" |")
        line = "%s: %s [%.0fs]" % (self.title, msg, time.perf_counter() - self.t0)
        RESULTS[self.num] = (ok, line)
        print("criterion %d: %s  %s" % (self.num, "PASS" if ok else "FAIL", line))
        return False


def tracked(values, arity=None):
    v = view_over_array(values, arity)
    return v, v.checksum()


def settle(v, before, label):
    CONTRACT["runs"] += 1
    if v.checksum() != before or v.write_attempts != 0:
        CONTRACT["bad"].append(label)


def linear_fit(xs, ys):
    slope, icpt = np.polyfit(xs, ys, 1)
    pred = slope * np.asarray(xs) + icpt
    ss_res = float(np.sum((np.asarray(ys) - pred) ** 2))
    ss_tot = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2


def coords(P, idx):
    return [(float(P[i, 0]), float(P[i, 1])) for i in idx]


# --- instance suites ------------------------------------------------------------------


def selection_suite(k):
    rng = np.random.default_rng(1000 + k)
    for i in range(1000):
        n = int(10 ** rng.uniform(0, 4))
        kind = i % 5
        if kind == 0:
            a = rng.integers(0, 20, n).astype(float)
        elif kind == 1:
            a = rng.normal(size=n)
        elif kind == 2:
            a = np.full(n, float(rng.integers(-5, 5)))
        elif kind == 3:
            a = np.sort(rng.integers(-1000, 1000, n)).astype(float)
        else:
            a = np.sort(rng.random(n))[::-1].copy()
        yield a, int(rng.integers(1, n + 1))


def sorted_hull_suite():
    rng = np.random.default_rng(3)
    specs = []
    for i in range(500):
        n = max(1, int(10 ** rng.uniform(0, 5)))
        knobs = [{}, {"dup_x": 0.3}, {"collinear": 0.3}, {"bound": 50}][i % 4]
        specs.append(InstanceSpec("points-sorted", n, seed=i, **{"bound": 10**6, **knobs}))
    for n in (3, 10, 100, 5000):
        specs.append(InstanceSpec("points-sorted", n, seed=n, collinear=1.0))
        specs.append(InstanceSpec("points-sorted", n, seed=n, dup_x=0.9, bound=20))
    for n in (1, 2, 3):
        for s in range(10):
            specs.append(InstanceSpec("points-sorted", n, seed=s, bound=1 + s % 3))
    return specs


# --- criteria ------------------------------------------------------------------------------


def test_criterion_01_selection_correctness():
    with Criterion(1, "selection = sort-copy oracle, 4 x 1000 instances") as c:
        t0 = time.perf_counter()
        bad = 0
        for k in range(4):
            SELECT_PEAKS[k] = 0
            for a, r in selection_suite(k):
                v, before = tracked(a, 1)
                m = WorkspaceMeter()
                got = select_ak(v, r, SelectConfig(k=k), m)
                settle(v, before, "select")
                SELECT_PEAKS[k] = max(SELECT_PEAKS[k], m.peak_words)
                bad += got != oracle_select(a.tolist(), r)
        elapsed = time.perf_counter() - t0
        c.detail = "mismatches=%d runtime=%.1fs (limit 120s)" % (bad, elapsed)
        assert bad == 0 and elapsed < 120


def test_criterion_02_selection_space():
    with Criterion(2, "selection peak <= 16(k+1), flat in n") as c:
        if not SELECT_PEAKS:
            for k in range(4):
                SELECT_PEAKS[k] = 0
                for a, r in selection_suite(k):
                    m = WorkspaceMeter()
                    select_ak(a, r, SelectConfig(k=k), m)
                    SELECT_PEAKS[k] = max(SELECT_PEAKS[k], m.peak_words)
        rng = np.random.default_rng(2)
        flat = {}
        for k in range(4):
            peaks = []
            for e in (10, 14, 18):
                n = 2**e
                # k = 0 rescans the input once per rank step, so its rank stays small
                r = 64 if k == 0 else n // 2
                v, before = tracked(rng.random(n), 1)
                m = WorkspaceMeter()
                select_ak(v, r, SelectConfig(k=k), m)
                settle(v, before, "select-space")
                peaks.append(m.peak_words)
            flat[k] = peaks
        c.detail = "suite peaks %s; peaks at n=2^10,2^14,2^18 %s" % (SELECT_PEAKS, flat)
        assert all(SELECT_PEAKS[k] <= 16 * (k + 1) for k in range(4))
        assert all(len(set(p)) == 1 and p[0] <= 16 * (k + 1) for k, p in flat.items())


def test_criterion_03_sorted_hull_correctness():
    with Criterion(3, "sorted hull = oracle, random + degenerate suites, k=2") as c:
        t0 = time.perf_counter()
        specs = sorted_hull_suite()
        bad = 0
        for spec in specs:
            P = generate(spec)
            v, before = tracked(P, 2)
            got = coords(P, convex_hull(v, k=2))
            settle(v, before, "hull-sorted")
            bad += got != oracle_hull(P)
        elapsed = time.perf_counter() - t0
        c.detail = "instances=%d mismatches=%d runtime=%.0fs (limit 600s)" % (len(specs), bad, elapsed)
        assert bad == 0 and elapsed < 600


def test_criterion_04_sorted_hull_space():
    with Criterion(4, "sorted hull peak words vs log2 n") as c:
        xs, ys = [], []
        for e in range(10, 21):
            P = generate(InstanceSpec("points-sorted", 2**e, seed=e, bound=10**6))
            v, before = tracked(P, 2)
            m = WorkspaceMeter()
            convex_hull(v, meter=m)
            settle(v, before, "hull-space")
            xs.append(e)
            ys.append(m.peak_words)
        slope, _, r2 = linear_fit(xs, ys)
        c.detail = "slope=%.1f (<=40) R2=%.3f (>=0.9) peak(2^20)=%d (<=1500)" % (slope, r2, ys[-1])
        assert slope <= 40 and r2 >= 0.9 and ys[-1] <= 1500


def test_criterion_05_bridge_progress():
    with Criterion(5, "bridge rounds shrink valid pairs >= 25%, rounds <= ceil(log_4/3 n)") as c:
        bridges = rounds_seen = bad_drop = bad_rounds = 0
        worst_pairs = worst_points = 0.0
        for spec in sorted_hull_suite():
            P = generate(spec)
            xs = np.unique(P[:, 0])
            if len(xs) < 2:
                continue
            n = len(P)
            m = int(np.searchsorted(P[:, 0], xs[(len(xs) - 1) // 2], side="right") - 1)
            limit = math.ceil(math.log(n) / math.log(4 / 3))
            # the lower hull's bridge is the upper bridge of the mirrored set
            for Q in (P, P * np.array([1.0, -1.0])):
                v, before = tracked(Q, 2)
                log = RoundLog(log_capacity(n))
                tr = np.zeros((log.capacity + 2, 4), np.int64)
                compute_bridge(v, 0, m, n - 1, log=log, trace=tr)
                settle(v, before, "bridge")
                bridges += 1
                rounds_seen += log.rounds
                bad_rounds += log.rounds > limit
                for t in range(int(tr[0, 3]) - 1):
                    pairs, nxt = tr[t, 0], tr[t + 1, 0]
                    bad_drop += nxt > 0.75 * pairs
                    worst_pairs = max(worst_pairs, nxt / pairs)
                    worst_points = max(worst_points, tr[t + 1, 2] / tr[t, 2])
        c.detail = (
            "bridges=%d rounds=%d drop violations=%d round-limit violations=%d "
            "worst pair ratio=%.3f (valid points incl. parked: %.3f)"
            % (bridges, rounds_seen, bad_drop, bad_rounds, worst_pairs, worst_points)
        )
        assert bad_drop == 0 and bad_rounds == 0


def _replay_bridge(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 513))
    P = generate(InstanceSpec("points-sorted", n, seed=seed, bound=[8, 100, 10**4][seed % 3], dup_x=0.2 * (seed % 2)))
    xs = np.unique(P[:, 0])
    if len(xs) < 2:
        return True
    m = int(np.searchsorted(P[:, 0], xs[(len(xs) - 1) // 2], side="right") - 1)
    v, before = tracked(P, 2)
    log = RoundLog(log_capacity(n))
    b = compute_bridge(v, 0, m, n - 1, log=log)
    sim = simulate_with_markbits("bridge", (P, 0, m, n - 1))
    ok = len(sim.log) == log.rounds and (b.i, b.j) == tuple(sim.answer)
    for r, (pairs, rest) in enumerate(sim.rounds, 1):
        got, parked = enumerate_valid_pairs(v, 0, n - 1, log, upto_level=r)
        ok = ok and got == pairs and sorted(parked) == rest
    settle(v, before, "replay-bridge")
    return ok


def _replay_lp2(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 513))
    R, cobj = generate(InstanceSpec("lp2", n, seed=seed, bound=[100, 10**4][seed % 2], parallel=0.2 * (seed % 3 == 0)))
    v, before = tracked(R, 3)
    log = LpRoundLog(lp2_capacity(n))
    res = solve_lp2(v, cobj, log=log)
    sim = simulate_with_markbits("lp2", (R, cobj))
    ok = len(sim.log) == log.rounds
    for r, (pairs, rest) in enumerate(sim.rounds, 1):
        got, parked = valid_rows(v, cobj, log, upto_round=r)
        ok = ok and got == pairs and sorted(parked) == rest
    for r, row in enumerate(sim.log, 1):
        ok = ok and np.array_equal(log.rows[r], row, equal_nan=True)
    verdict, survivors = sim.answer
    if verdict is not None:
        ok = ok and verdict[0] == res.status
    elif res.status == "optimal":
        ok = ok and same_lp(survivors, res, 1e-9)
    settle(v, before, "replay-lp2")
    return ok


def _replay_lp3(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 513))
    R, d = generate(InstanceSpec("lp3", n, seed=seed, bound=[100, 10**4][seed % 2], parallel=0.2 * (seed % 3 == 0)))
    v, before = tracked(R, 4)
    log = Lp3RoundLog(log_capacity3(n))
    res = solve_lp3(v, d, log=log)
    sim = simulate_with_markbits("lp3", (R, d), log=log)
    ok = True
    for r, (pairs, rest) in enumerate(sim.rounds, 1):
        got, parked = pair_and_line(v, d, log, round=r)
        ok = ok and [p[:2] for p in got] == pairs and sorted(parked) == rest
    for r, rec in enumerate(sim.log, 1):
        if rec is not None:
            ok = ok and tuple(rec[:4]) == tuple(log.rows[r][:4])
    if res.status == "optimal":
        ok = ok and same_lp(sim.answer, res, 1e-8)
    settle(v, before, "replay-lp3")
    return ok


def test_criterion_06_replay_equivalence():
    with Criterion(6, "round-log replay = mark-bit simulation, 100 seeds each") as c:
        fails = {}
        for name, fn in (("bridge", _replay_bridge), ("lp2", _replay_lp2), ("lp3", _replay_lp3)):
            fails[name] = [s for s in range(100) if not fn(s)]
        c.detail = "failing seeds %s" % fails
        assert not any(fails.values())


def test_criterion_07_unsorted_hull():
    with Criterion(7, "unsorted hull = oracle; peak/sqrt(n) <= 32; recomputations <= erasures") as c:
        rng = np.random.default_rng(7)
        bad = bad_count = 0
        for i in range(300):
            n = max(1, int(10 ** rng.uniform(0, 4)))
            knobs = [{}, {"dup_x": 0.3}, {"collinear": 0.3}, {"bound": 30}][i % 4]
            P = generate(InstanceSpec("points", n, seed=i, **{"bound": 10**6, **knobs}))
            v, before = tracked(P, 2)
            counters = np.zeros(2, np.int64)
            got = coords(P, hull_unsorted(v, counters=counters))
            settle(v, before, "hull-unsorted")
            bad += got != oracle_hull(P)
            bad_count += counters[0] > counters[1]
        ratios = []
        for e in range(4, 11):
            n = 4**e
            v, before = tracked(generate(InstanceSpec("points", n, seed=e, bound=10**6)), 2)
            m = WorkspaceMeter()
            hull_unsorted(v, meter=m)
            settle(v, before, "hull-unsorted-space")
            ratios.append(round(m.peak_words / math.sqrt(n), 2))
        c.detail = "mismatches=%d counter violations=%d peak/sqrt(n)=%s" % (bad, bad_count, ratios)
        assert bad == 0 and bad_count == 0 and max(ratios) <= 32


def test_criterion_08_lp_correctness():
    with Criterion(8, "lp2 x 1000 (1e-9), lp3 x 300 (1e-8) vs oracle") as c:
        t0 = time.perf_counter()
        rng = np.random.default_rng(8)
        modes = ("optimal", "infeasible", "unbounded")
        bad2, bad3, seen = 0, 0, {}
        for i in range(1000):
            n = int(rng.integers(1, 1001))
            spec = InstanceSpec("lp2", n, seed=i, mode=modes[i % 3], bound=[100, 10**4, 10**6][i % 7 % 3],
                                parallel=0.2 * (i % 5 == 0))
            R, cobj = generate(spec)
            v, before = tracked(R, 3)
            got = solve_lp2(v, cobj)
            settle(v, before, "lp2")
            seen[got.status] = seen.get(got.status, 0) + 1
            bad2 += not same_lp(oracle_lp2(R, cobj), got, 1e-9)
        for i in range(300):
            n = int(rng.integers(1, 401))
            spec = InstanceSpec("lp3", n, seed=i, mode=modes[i % 3], bound=[100, 10**4, 10**6][i % 7 % 3],
                                parallel=0.2 * (i % 5 == 0))
            R, d = generate(spec)
            v, before = tracked(R, 4)
            got = solve_lp3(v, d)
            settle(v, before, "lp3")
            bad3 += not same_lp(oracle_lp3(R, d), got, 1e-8)
        elapsed = time.perf_counter() - t0
        c.detail = "lp2 mismatches=%d lp3 mismatches=%d lp2 statuses=%s runtime=%.0fs (limit 600s)" % (
            bad2, bad3, seen, elapsed)
        assert bad2 == 0 and bad3 == 0 and elapsed < 600


def _lp_space(kind, exps):
    xs, ys = [], []
    for e in exps:
        R, obj = generate(InstanceSpec(kind, 2**e, seed=e, mode="optimal", bound=10**6))
        v, before = tracked(R, 3 if kind == "lp2" else 4)
        m = WorkspaceMeter()
        (solve_lp2 if kind == "lp2" else solve_lp3)(v, obj, meter=m)
        settle(v, before, kind + "-space")
        xs.append(e)
        ys.append(m.peak_words)
    return xs, ys


def test_criterion_09_lp_space():
    with Criterion(9, "LP peak words vs log2 n") as c:
        xs, ys = _lp_space("lp2", range(10, 21))
        s2, _, r2 = linear_fit(xs, ys)
        exps3 = range(10, 21) if FULL else range(10, 14)
        xs3, ys3 = _lp_space("lp3", exps3)
        s3, i3, r3 = linear_fit(xs3, ys3)
        at20 = ys3[-1] if FULL else s3 * 20 + i3
        c.detail = (
            "lp2 slope=%.1f (<=40) R2=%.3f peak(2^20)=%d; lp3 over 2^%d..2^%d peaks=%s slope=%.1f (<=60) "
            "R2=%.3f peak(2^20)%s=%d (<=1500)"
            % (s2, r2, ys[-1], xs3[0], xs3[-1], ys3, s3, r3, "" if FULL else " extrapolated", at20)
        )
        assert s2 <= 40 and r2 >= 0.9 and ys[-1] <= 1500
        assert s3 <= 60 and r3 >= 0.9 and at20 <= 1500


def test_criterion_10_read_scaling():
    with Criterion(10, "sorted hull reads / (n^(4/3) log2^5 n) within 4x, k=2") as c:
        ratios = []
        for e in range(14, 18):
            n = 2**e
            v, before = tracked(generate(InstanceSpec("points-sorted", n, seed=e, bound=2**20)), 2)
            convex_hull(v, k=2, batch=1)
            settle(v, before, "hull-reads")
            ratios.append(v.reads / (n ** (4 / 3) * math.log2(n) ** 5))
        spread = max(ratios) / min(ratios)
        c.detail = "ratios=%s spread=%.2f (<4)" % (["%.3g" % r for r in ratios], spread)
        assert spread < 4


def test_criterion_11_read_only_contract():
    with Criterion(11, "input checksums unchanged, zero write attempts") as c:
        c.detail = "checked runs=%d violations=%d" % (CONTRACT["runs"], len(CONTRACT["bad"]))
        assert CONTRACT["runs"] > 0 and not CONTRACT["bad"]
