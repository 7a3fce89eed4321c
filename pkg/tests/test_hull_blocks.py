import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roprune import WorkspaceMeter, view_over_array
from roprune.hull_blocks import BlockLayout, block_directory, block_hull, hull_unsorted, load_block, upper_chain
from roprune.testkit import InstanceSpec, generate, oracle_hull


def coords(P, idx):
    return [tuple(float(v) for v in P[i]) for i in idx]


def test_layout():
    lay = BlockLayout(10)
    assert (lay.block_size, lay.blocks) == (4, 3)
    assert lay.ranks(2) == (8, 10)


def test_square_with_center():
    pts = [(0, 0), (0, 2), (2, 2), (2, 0), (1, 1)]
    assert coords(pts, hull_unsorted(view_over_array(pts))) == [(0, 2), (2, 2), (2, 0), (0, 0)]


def test_identical_points():
    pts = [(3, 3)] * 7
    assert coords(pts, hull_unsorted(view_over_array(pts))) == [(3, 3)]


def test_ten_thousand_uniform():
    P = generate(InstanceSpec("points", 10_000, seed=1, bound=10**6))
    assert coords(P, hull_unsorted(view_over_array(P))) == oracle_hull(P)


def test_load_block_rank_ranges():
    rng = np.random.default_rng(0)
    xs = rng.permutation(np.arange(1, 10))
    P = np.column_stack([xs, np.zeros(9)])
    v = view_over_array(P)
    assert load_block(v, 1)[:, 0].tolist() == [4, 5, 6]
    assert load_block(v, 0)[:, 0].tolist() == [1, 2, 3]
    with pytest.raises(IndexError):
        load_block(v, 3)


def test_load_block_composite_order():
    P = np.array([(1, 0), (0, 5), (1, 0), (0, 5), (1, -1), (0, 5), (2, 2), (1, 0), (0, 1)], float)
    v = view_over_array(P)
    order = sorted(range(len(P)), key=lambda i: (P[i, 0], P[i, 1], i))
    got = [int(r[2]) for i in range(3) for r in load_block(v, i)]
    assert got == order


def test_block_hull_examples():
    assert block_hull([(0, 0, 7), (1, 1, 8), (2, 2, 9)]) == [7, 9]
    square = [(0, 0, 0), (0, 1, 1), (1, 0, 2), (1, 1, 3)]
    assert block_hull(square) == [1, 3]


def test_block_hull_random_vs_oracle():
    P = generate(InstanceSpec("points", 40, seed=3, bound=20))
    rows = sorted([(P[i, 0], P[i, 1], i) for i in range(len(P))])
    want = oracle_hull(P)
    upper = want[: [p[0] for p in want].index(max(p[0] for p in want)) + 1]
    assert coords(P, block_hull(rows)) == upper


def test_block_below_hull_gets_sentinel():
    # s = 3: the middle block lies under the segment joining the outer blocks
    P = [(0, 10), (1, 11), (2, 12), (3, 0), (4, 1), (5, 0), (6, 12), (7, 11), (8, 10)]
    C = block_directory(view_over_array(P))
    assert C[1] == (-1, -1)
    assert C[0] == (0, 2) and C[2] == (6, 8)


def test_tent():
    P = [(0, 0), (1, 5), (2, 0), (3, 0), (4, 5), (5, 0)]
    v = view_over_array(P)
    assert block_directory(v) == [(0, 1), (4, 5)]
    assert coords(P, upper_chain(v)) == [(0, 0), (1, 5), (4, 5), (5, 0)]
    assert coords(P, hull_unsorted(v)) == oracle_hull(P)


def test_cascade_of_erasures():
    # every block bulges up a little, then the last block's peak erases them all
    n = 64
    s = 8
    P = [(0, 1000)]
    for i in range(1, n - 1):
        P.append((i, 10 + (i % s) * (s - i % s)))
    P.append((n - 1, 1000))
    v = view_over_array(P)
    counters = np.zeros(2, np.int64)
    C = block_directory(v, counters=counters)
    assert C[0] == (0, 0) and C[-1] == (n - 1, n - 1)
    assert all(c == (-1, -1) for c in C[1:-1])
    assert counters[1] == len(C) - 2
    assert counters[0] <= counters[1]
    assert coords(P, hull_unsorted(v)) == oracle_hull(P)


def test_pass_two_single_block():
    P = [(0, 0), (1, 3), (2, 1)]
    v = view_over_array(P)
    assert BlockLayout(3).blocks == 2
    assert upper_chain(v) == [0, 1, 2]


@pytest.mark.parametrize("strategy", ["table", "select"])
def test_strategies_agree(strategy):
    P = generate(InstanceSpec("points", 3000, seed=9, bound=40, dup_x=0.3))
    v = view_over_array(P)
    before = v.checksum()
    assert coords(P, hull_unsorted(v, strategy=strategy)) == oracle_hull(P)
    assert v.checksum() == before and v.write_attempts == 0


def test_workspace_is_sqrt_n():
    for e in (8, 12, 16):
        n = 2**e
        m = WorkspaceMeter()
        hull_unsorted(view_over_array(generate(InstanceSpec("points", n, seed=e))), meter=m)
        assert m.peak_words <= 32 * math.sqrt(n)
        assert m.current_words == 0


points = st.lists(st.tuples(st.integers(-8, 8), st.integers(-8, 8)), min_size=1, max_size=80)


@settings(max_examples=200, deadline=None)
@given(points, st.sampled_from(["table", "select"]))
def test_matches_oracle_property(pts, strategy):
    counters = np.zeros(2, np.int64)
    got = hull_unsorted(view_over_array(pts), counters=counters, strategy=strategy)
    assert coords(pts, got) == oracle_hull(pts)
    assert counters[0] <= counters[1]


@settings(max_examples=100, deadline=None)
@given(points)
def test_directory_chains_are_convex(pts):
    P = np.array(pts, dtype=np.float64)
    C = block_directory(view_over_array(P))
    live = [c for c in C if c[0] >= 0]
    ends = [u for f, l in live for u in (f, l)]
    xs = [P[u, 0] for u in ends]
    assert xs == sorted(xs)
