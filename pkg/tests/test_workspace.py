import numpy as np
import pytest
from hypothesis import given, strategies as st

from roprune import (
    BoundedStack,
    CapacityError,
    FormatError,
    ReadOnlyView,
    WorkspaceMeter,
    meter_scope,
    view_over_array,
    view_over_buffer,
)
from roprune.workspace import stack_pop, stack_push


def test_view_over_buffer_lengths():
    assert view_over_buffer(bytes(48), 2).length == 3
    assert view_over_buffer(b"", 2).length == 0
    with pytest.raises(FormatError):
        view_over_buffer(bytes(50), 2)


def test_view_starts_with_zero_reads():
    v = view_over_buffer(np.arange(6, dtype="<f8").tobytes(), 2)
    assert v.reads == 0
    assert v.element(1) == (2.0, 3.0)
    assert v.reads == 1


def test_header_count_must_match():
    with pytest.raises(FormatError):
        view_over_buffer(bytes(48), 2, count=4)


def test_element_bounds():
    v = view_over_array([[1, 2], [3, 4]])
    with pytest.raises(IndexError):
        v.element(2)
    with pytest.raises(IndexError):
        v.element(-1)


def test_writes_are_refused_and_counted():
    v = view_over_array([[1, 2], [3, 4]])
    with pytest.raises(TypeError):
        v[0] = (0, 0)
    assert v.write_attempts == 1
    with pytest.raises(ValueError):
        v.data[0, 0] = 5.0
    assert v.element(0) == (1.0, 2.0)


def test_scan_restartable():
    v = view_over_array([3.0, 1.0, 2.0])
    assert list(v.fresh_scan()) == list(v.fresh_scan()) == [3.0, 1.0, 2.0]
    assert v.reads == 6


def test_checksum_covers_buffer():
    buf = bytearray(np.arange(4, dtype="<f8").tobytes())
    v = view_over_buffer(bytes(buf), 1)
    w = view_over_buffer(bytes(buf[:-8] + bytes(8)), 1)
    assert v.checksum() == view_over_buffer(bytes(buf), 1).checksum()
    assert v.checksum() != w.checksum()


def test_meter_examples():
    m = WorkspaceMeter()
    assert m.peak_words == 0
    with meter_scope(m, 3):
        with meter_scope(m, 5):
            assert m.current_words == 8
    assert (m.current_words, m.peak_words) == (0, 8)
    m = WorkspaceMeter()
    with m.scope(5):
        pass
    with m.scope(4):
        pass
    assert m.peak_words == 5


def test_meter_rejects_negative_and_overrelease():
    m = WorkspaceMeter()
    with pytest.raises(ValueError):
        m.alloc(-1)
    with pytest.raises(ValueError):
        m.release(1)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 50)), max_size=60))
def test_meter_peak_is_running_max(ops):
    m = WorkspaceMeter()
    live, cur, peak = [], 0, 0
    for alloc, w in ops:
        if alloc or not live:
            m.alloc(w)
            live.append(w)
            cur += w
        else:
            w = live.pop()
            m.release(w)
            cur -= w
        peak = max(peak, cur)
        assert m.current_words == cur
        assert m.peak_words == peak >= m.current_words


def test_stack_examples():
    s = BoundedStack(4)
    stack_push(s, (2, 4))
    stack_push(s, (0, 2))
    assert stack_pop(s) == (0, 2)
    assert stack_pop(s) == (2, 4)
    assert stack_pop(s) is BoundedStack.EMPTY
    s = BoundedStack(2)
    s.push((0, 1))
    s.push((1, 2))
    with pytest.raises(CapacityError):
        s.push((2, 3))
    assert len(s) == 2


def test_stack_meters_its_capacity():
    m = WorkspaceMeter()
    s = BoundedStack(5, meter=m)
    assert m.current_words == 11
    s.close()
    assert m.current_words == 0 and m.peak_words == 11


@given(st.lists(st.one_of(st.none(), st.tuples(st.integers(0, 99), st.integers(0, 99))), max_size=40))
def test_stack_is_lifo(ops):
    s = BoundedStack(10)
    model = []
    for op in ops:
        if op is None:
            assert s.pop() == (model.pop() if model else None)
        elif len(model) < 10:
            s.push(op)
            model.append(op)
        else:
            with pytest.raises(CapacityError):
                s.push(op)
        assert len(s) == len(model) <= 10


def test_non_writeable_copy():
    a = np.array([[1.0, 2.0]])
    v = ReadOnlyView(a)
    assert not v.data.flags.writeable
    a[0, 0] = 9.0  # the caller still owns its array
    assert a.flags.writeable
