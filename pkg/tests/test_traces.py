import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plcnoise.errors import DegenerateInputError, FormatError, ShapeError
from plcnoise.rng import Rng
from plcnoise.traces import (
    NoiseTrace,
    TraceSet,
    export_traceset_csv,
    load_traceset,
    normalize_maxabs,
    save_traceset,
)

HEADER_BYTES = 21  # magic(4) + version(1) + count(4) + length(4) + rate(8)


def test_round_trip_exact(tmp_path):
    data = Rng(0).gaussian(8 * 16).reshape(8, 16)
    ts = TraceSet(data, 400e3, name="x")
    path = tmp_path / "t.ngts"
    save_traceset(ts, path)
    back = load_traceset(path)
    assert np.array_equal(ts.data, back.data)
    assert back.sample_rate_hz == ts.sample_rate_hz


def test_zero_trace_file_size(tmp_path):
    ts = TraceSet(np.zeros((1, 4)), 400e3)
    path = tmp_path / "z.ngts"
    save_traceset(ts, path)
    assert path.stat().st_size == HEADER_BYTES + 4 * 4
    assert np.array_equal(load_traceset(path).data, ts.data)


def test_header_fields_echo(tmp_path):
    ts = TraceSet(np.ones((2, 3)), 400000.0)
    path = tmp_path / "h.ngts"
    save_traceset(ts, path)
    raw = path.read_bytes()
    magic, version, count, length, rate = struct.unpack_from("<4sBIId", raw, 0)
    assert magic == b"NGTS" and version == 1
    assert (count, length, rate) == (2, 3, 400000.0)


def test_writes_are_byte_identical(tmp_path):
    ts = TraceSet(Rng(1).gaussian(12).reshape(3, 4), 1e3)
    p1, p2 = tmp_path / "a.ngts", tmp_path / "b.ngts"
    save_traceset(ts, p1)
    save_traceset(ts, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ngts"
    path.write_bytes(b"XXXX" + bytes(30))
    with pytest.raises(FormatError, match="magic"):
        load_traceset(path)


def test_truncated_payload_names_counts(tmp_path):
    ts = TraceSet(np.ones((2, 8)), 1e3)
    path = tmp_path / "t.ngts"
    save_traceset(ts, path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatError, match=r"expected 85 bytes, got 80"):
        load_traceset(path)


def test_mismatched_trace_lengths_rejected():
    traces = [NoiseTrace([1.0, 2.0], 1e3), NoiseTrace([1.0, 2.0, 3.0], 1e3)]
    with pytest.raises(ShapeError, match="lengths"):
        TraceSet.from_traces(traces)


def test_nonfinite_rejected():
    with pytest.raises(Exception):
        TraceSet(np.array([[1.0, np.nan]]), 1e3)


def test_normalize_examples():
    ts, scale = normalize_maxabs(TraceSet(np.array([[-2.0, 1.0]]), 1e3))
    assert scale == 2.0
    assert np.allclose(ts.data, [[-1.0, 0.5]])

    with pytest.raises(DegenerateInputError):
        normalize_maxabs(TraceSet(np.zeros((2, 4)), 1e3))

    already = TraceSet(np.array([[1.0, -0.5], [0.25, 0.0]]), 1e3)
    out, scale = normalize_maxabs(already)
    assert scale == 1.0
    assert np.array_equal(out.data, already.data)


def test_normalize_recovers_input():
    data = Rng(2).gaussian(64).reshape(4, 16) * 13.7
    ts = TraceSet(data, 1e3)
    normed, scale = normalize_maxabs(ts)
    rel = np.abs(normed.data64() * scale - ts.data64()) / (np.abs(ts.data64()) + 1e-30)
    assert rel.max() <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=32).filter(
    lambda v: any(x != 0 for x in v)))
def test_normalize_idempotent(values):
    ts = TraceSet(np.array([values]), 1e3)
    once, _ = normalize_maxabs(ts)
    twice, scale2 = normalize_maxabs(once)
    assert scale2 == 1.0
    assert np.array_equal(once.data, twice.data)


def test_csv_export(tmp_path):
    ts = TraceSet(np.array([[1.0, -0.5, 0.25], [0.0, 2.0, -3.0]]), 1e3)
    path = tmp_path / "t.csv"
    export_traceset_csv(ts, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2
    assert [float(v) for v in lines[0].split(",")] == [1.0, -0.5, 0.25]


def test_traceset_immutable():
    ts = TraceSet(np.ones((1, 4)), 1e3)
    with pytest.raises(ValueError):
        ts.data[0, 0] = 5.0
