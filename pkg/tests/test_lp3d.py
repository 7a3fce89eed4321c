import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roprune import WorkspaceMeter, view_over_array
from roprune.lp3d import testing_line_verdict as line_verdict
from roprune.lp3d import (
    Lp3RoundLog,
    cross_pair_geometry,
    gradient,
    log_capacity3,
    median_gradient,
    pair_and_line,
    solve_lp3,
    solve_small3,
)
from roprune.testkit import InstanceSpec, generate, oracle_lp3, same_lp, simulate_with_markbits

PYRAMID = [(-1, 0, 1, 0), (1, 0, 1, 0), (0, -1, 1, 0), (0, 1, 1, 0)]
MIN_Z = (0, 0, 1)


def alive(pairs, rest):
    return sorted({u for p in pairs for u in p[:2]} | set(rest))


def test_pyramid():
    res = solve_lp3(PYRAMID, MIN_Z)
    assert res.status == "optimal" and res.value == 0 and res.x == (0, 0, 0)


def test_infeasible_slab():
    assert solve_lp3([(0, 0, 1, 1), (0, 0, -1, 0)], MIN_Z).status == "infeasible"


def test_unbounded_and_empty():
    assert solve_lp3([(0, 0, -1, 0)], MIN_Z).status == "unbounded"
    assert solve_lp3(np.zeros((0, 4)), (1, 2, 3)).status == "unbounded"


def test_bad_input():
    with pytest.raises(ValueError):
        solve_lp3([(1, 0, math.inf, 0)], MIN_Z)
    with pytest.raises(ValueError):
        solve_lp3(PYRAMID, (0, 1))


def test_degenerate_objectives():
    cube = [(1, 0, 0, -1), (-1, 0, 0, -2), (0, 1, 0, -3), (0, -1, 0, -4), (0, 0, 1, -5), (0, 0, -1, -6)]
    assert solve_lp3(cube, (1, 0, 0)).value == -1
    assert solve_lp3(cube, (0, -1, 0)).value == -4
    res = solve_lp3(cube, (0, 0, 0))
    assert res.status == "optimal"
    assert all(np.dot(r[:3], res.x) >= r[3] for r in cube)


def test_three_hundred_rows_match_oracle():
    for seed in range(3):
        R, d = generate(InstanceSpec("lp3", 300, seed=seed, mode="optimal"))
        o, g = oracle_lp3(R, d), solve_lp3(R, d)
        assert o.status == "optimal" and same_lp(o, g, 1e-8)


def test_equal_gradient_pair_keeps_tighter_row():
    rng = np.random.default_rng(1)
    rows = [(0, 0, 1, -201), (0, 0, 1, -200)]
    for _ in range(60):
        a, b = rng.integers(-9, 10, 2)
        rows.append((a, b, 1, -int(rng.integers(50, 100))))
    rows += [(1, 0, 0, -10), (-1, 0, 0, -10), (0, 1, 0, -10), (0, -1, 0, -10)]
    log = Lp3RoundLog(log_capacity3(len(rows)))
    res = solve_lp3(rows, MIN_Z, log=log)
    assert same_lp(oracle_lp3(rows, MIN_Z), res, 1e-8)
    assert log.rounds >= 1
    pairs, rest = pair_and_line(rows, MIN_Z, log, round=1)
    assert pairs[0][:2] == (0, 1) and pairs[0][3] is None
    after = alive(*pair_and_line(rows, MIN_Z, log, round=2))
    assert 0 not in after


def test_six_rows_three_pairs():
    rows = [(i, -i, 1, -i) for i in range(6)]
    pairs, rest = pair_and_line(rows, MIN_Z, Lp3RoundLog(2), round=1)
    assert [p[:2] for p in pairs] == [(0, 1), (2, 3), (4, 5)] and rest == []


def test_median_gradient():
    assert median_gradient([(1, 1, 0), (0, 1, 0), (-3, 1, 0)]) == 0
    assert median_gradient([(2, -1, 5)] * 4) == 2
    assert gradient((1, 0, 3)) == math.inf


def test_median_gradient_random_vs_sort():
    rng = np.random.default_rng(5)
    lines = [tuple(v) for v in rng.integers(-9, 10, (101, 3)).astype(float) if v[1] != 0]
    g = sorted(-A / B for A, B, _ in lines)
    assert median_gradient(lines) == g[(len(g) + 1) // 2 - 1]


def test_cross_pair_geometry_examples():
    assert cross_pair_geometry((1, -1, 1), (-1, -1, 1), 0.0) == ("crossing", 1.0, 0.0)
    assert cross_pair_geometry((0, 1, -1), (0, 1, -3), 0.0) == ("parallel", 2.0, None)


@settings(max_examples=200)
@given(st.tuples(*[st.integers(-9, 9)] * 6), st.integers(-5, 5))
def test_cross_pair_geometry_vs_linear_solve(c, mu):
    l1, l2 = c[:3], c[3:]
    M = np.array([l1[:2], l2[:2]], dtype=float)
    if l1[1] == 0 or l2[1] == 0 or abs(np.linalg.det(M)) < 1e-9:
        return
    X, Y = np.linalg.solve(M, [-l1[2], -l2[2]])
    kind, y, x = cross_pair_geometry(l1, l2, float(mu))
    assert kind == "crossing"
    assert math.isclose(x, X, abs_tol=1e-9) and math.isclose(y, Y - mu * X, abs_tol=1e-8)


def test_testing_line_examples():
    assert line_verdict(PYRAMID, MIN_Z, (0, 0), (1, 0)) == ("optimum", (0.0, 0.0, 0.0))
    shifted = [(-1, 0, 1, 0), (1, 0, 1, 0), (0, -1, 1, -2), (0, 1, 1, 2)]
    assert line_verdict(shifted, MIN_Z, (0, 0), (1, 0)) == ("side", 1)
    assert line_verdict(shifted, MIN_Z, (0, 0), (-1, 0)) == ("side", -1)
    assert line_verdict([(0, 0, -1, 0)], MIN_Z, (3, 1), (1, 2))[0] == "unbounded"


def test_solve_small3():
    assert solve_small3(PYRAMID, MIN_Z).x == (0, 0, 0)
    assert solve_small3(np.zeros((0, 4)), MIN_Z).status == "unbounded"
    for seed in range(20):
        R, d = generate(InstanceSpec("lp3", 10, seed=seed))
        assert same_lp(oracle_lp3(R, d), solve_small3(R, d), 1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_replay_matches_simulator(seed):
    R, d = generate(InstanceSpec("lp3", 256, seed=seed, bound=100, parallel=0.2 * (seed % 2)))
    log = Lp3RoundLog(log_capacity3(len(R)))
    res = solve_lp3(R, d, log=log)
    sim = simulate_with_markbits("lp3", (R, d), log=log)
    for r, (pairs, rest) in enumerate(sim.rounds, 1):
        got, parked = pair_and_line(R, d, log, round=r)
        assert [p[:2] for p in got] == pairs and sorted(parked) == rest
    for r, rec in enumerate(sim.log, 1):
        if rec is not None:
            assert tuple(rec[:4]) == tuple(log.rows[r][:4])
    if res.status == "optimal":
        assert same_lp(sim.answer, res, 1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_pruning_is_sound(seed):
    R, d = generate(InstanceSpec("lp3", 256, seed=seed, mode="optimal", bound=100, parallel=0.1))
    log = Lp3RoundLog(log_capacity3(len(R)))
    full = solve_lp3(R, d, log=log)
    best = oracle_lp3(R, d)
    assert same_lp(best, full, 1e-8)
    for r in range(2, log.rounds + 2):
        keep = alive(*pair_and_line(R, d, log, round=r))
        assert same_lp(best, oracle_lp3(R[keep], d), 1e-8), r


def test_round_progress():
    for seed in range(6):
        R, d = generate(InstanceSpec("lp3", 2000, seed=seed, bound=10**4))
        tr = np.zeros((200, 4), np.int64)
        solve_lp3(R, d, trace=tr)
        for t in range(tr[0, 3] - 1):
            assert tr[t + 1, 2] <= tr[t, 2] - tr[t, 0] / 8


def test_deterministic_and_read_only():
    R, d = generate(InstanceSpec("lp3", 900, seed=4))
    v = view_over_array(R)
    before = v.checksum()
    logs = [Lp3RoundLog(log_capacity3(900)) for _ in range(2)]
    a, b = (solve_lp3(v, d, log=lg) for lg in logs)
    assert a == b and np.array_equal(logs[0].rows, logs[1].rows, equal_nan=True)
    assert v.checksum() == before and v.write_attempts == 0


def test_meter_returns_to_zero():
    R, d = generate(InstanceSpec("lp3", 3000, seed=2, mode="optimal"))
    m = WorkspaceMeter()
    solve_lp3(R, d, meter=m)
    assert m.current_words == 0 and m.peak_words > 0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(*[st.integers(-6, 6)] * 4), max_size=14), st.tuples(*[st.integers(-3, 3)] * 3))
def test_matches_oracle_property(rows, d):
    R = np.array(rows, dtype=np.float64).reshape(-1, 4)
    assert same_lp(oracle_lp3(R, d, "enumerate"), solve_lp3(R, d), 1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(33, 300), st.sampled_from(["optimal", "infeasible", "unbounded"]))
def test_generated_instances_property(seed, n, mode):
    R, d = generate(InstanceSpec("lp3", n, seed=seed, mode=mode, bound=200, parallel=0.2))
    assert same_lp(oracle_lp3(R, d), solve_lp3(R, d), 1e-8)
