import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roprune import FormatError
from roprune.formats import HEADER, MAGIC, fmt_real, read_any, read_csv, read_rops, write_csv, write_rops

reals = st.integers(-(2**26) + 1, 2**26 - 1).map(float) | st.floats(-1e12, 1e12, allow_nan=False)


@settings(max_examples=50)
@given(st.lists(st.tuples(reals, reals, reals), max_size=30))
def test_csv_and_rops_roundtrip(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("fmt")
    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
    write_csv(d / "a.csv", arr)
    write_rops(d / "a.rops", arr, 3)
    assert np.array_equal(read_csv(d / "a.csv", 3).data, arr)
    assert np.array_equal(read_rops(d / "a.rops", 3).data, arr)
    assert np.array_equal(read_any(d / "a.rops", 3).data, arr)
    assert np.array_equal(read_any(d / "a.csv", 3).data, arr)


def test_csv_comments_and_blank_lines(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("# points\n0,0\n\n1, 2  # trailing\n")
    assert read_csv(p, 2).data.tolist() == [[0, 0], [1, 2]]


@pytest.mark.parametrize(
    "text, where",
    [("0,0\n1\n", ":2:"), ("0,0\n1,x\n", ":2:"), ("1,2\n3,4\n5,inf\n", ":3:")],
)
def test_csv_diagnostics_name_the_line(tmp_path, text, where):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(FormatError, match=where):
        read_csv(p, 2)


def test_rops_is_memory_mapped_read_only(tmp_path):
    p = tmp_path / "a.rops"
    write_rops(p, [[1, 2], [3, 4]], 2)
    v = read_rops(p, 2)
    assert not v.data.flags.writeable
    before = v.checksum()
    with pytest.raises(ValueError):
        v.data[0, 0] = 0
    assert v.checksum() == before


def test_rops_errors(tmp_path):
    p = tmp_path / "a.rops"
    p.write_bytes(b"ROP")
    with pytest.raises(FormatError, match="truncated"):
        read_rops(p, 2)
    p.write_bytes(HEADER.pack(b"XXXX", 1, 2, 0))
    with pytest.raises(FormatError, match="magic"):
        read_rops(p, 2)
    p.write_bytes(HEADER.pack(MAGIC, 9, 2, 0))
    with pytest.raises(FormatError, match="version"):
        read_rops(p, 2)
    p.write_bytes(HEADER.pack(MAGIC, 1, 3, 0))
    with pytest.raises(FormatError, match="arity"):
        read_rops(p, 2)
    p.write_bytes(HEADER.pack(MAGIC, 1, 2, 2) + bytes(24))
    with pytest.raises(FormatError):
        read_rops(p, 2)
    p.write_bytes(HEADER.pack(MAGIC, 1, 2, 2) + bytes(16))
    with pytest.raises(FormatError, match="declares"):
        read_rops(p, 2)


def test_rops_empty(tmp_path):
    p = tmp_path / "e.rops"
    write_rops(p, np.zeros((0, 4)), 4)
    assert read_rops(p, 4).length == 0


def test_fmt_real():
    assert fmt_real(3.0) == "3"
    assert fmt_real(-0.0) == "0"
    assert fmt_real(0.1) == "0.1"
    assert float(fmt_real(1 / 3)) == 1 / 3
