"""Trace data model, dataset file I/O, and amplitude normalization.

Binary trace file layout (little-endian throughout, 21-byte header):

    offset  size  field
    0       4     magic, ASCII "NGTS"
    4       1     format version, u8, currently 1
    5       4     trace count, u32
    9       4     trace length (samples per trace), u32
    13      8     sample rate in Hz, f64
    21      ...   count * length samples, f32, row-major (trace 0 first)

Samples are held as 32-bit floats in memory and on disk (oscilloscope-class
dynamic range, half the file size), so save -> load is bit-exact; metric
code upcasts to 64-bit where the arithmetic demands it. The writer is
deterministic: identical TraceSets produce byte-identical files. CSV export
writes one trace per row as decimal text.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, FormatError, InvalidParamError, ShapeError

__all__ = [
    "NoiseTrace",
    "TraceSet",
    "save_traceset",
    "load_traceset",
    "export_traceset_csv",
    "normalize_maxabs",
]

_MAGIC = b"NGTS"
_VERSION = 1
_HEADER = struct.Struct("<4sBIId")


@dataclass(frozen=True)
class NoiseTrace:
    """A fixed-length real-valued sampled waveform (volts)."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1 or samples.size == 0:
            raise ShapeError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise InvalidParamError("samples must all be finite")
        if not self.sample_rate_hz > 0:
            raise InvalidParamError("sample_rate_hz must be positive")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def samples64(self) -> np.ndarray:
        """Samples upcast to float64 for metric arithmetic."""
        return self.samples.astype(np.float64)


@dataclass(frozen=True)
class TraceSet:
    """Immutable collection of equal-length traces sharing one sample rate.

    Stored as one (count, length) float32 matrix; safe to share across
    threads.
    """

    data: np.ndarray
    sample_rate_hz: float
    name: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ShapeError("data must be a (count >= 1, length >= 1) matrix")
        if not np.all(np.isfinite(data)):
            raise InvalidParamError("samples must all be finite")
        if not self.sample_rate_hz > 0:
            raise InvalidParamError("sample_rate_hz must be positive")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @classmethod
    def from_traces(cls, traces: list[NoiseTrace], name: str = "") -> "TraceSet":
        if len(traces) < 1:
            raise ShapeError("need at least one trace")
        lengths = {len(t) for t in traces}
        if len(lengths) != 1:
            raise ShapeError(f"traces have mismatched lengths: {sorted(lengths)}")
        rates = {t.sample_rate_hz for t in traces}
        if len(rates) != 1:
            raise ShapeError(f"traces have mismatched sample rates: {sorted(rates)}")
        data = np.stack([t.samples for t in traces])
        return cls(data, rates.pop(), name=name)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def trace_len(self) -> int:
        return self.data.shape[1]

    def trace(self, i: int) -> NoiseTrace:
        return NoiseTrace(self.data[i], self.sample_rate_hz)

    def __iter__(self):
        for row in self.data:
            yield NoiseTrace(row, self.sample_rate_hz)

    def data64(self) -> np.ndarray:
        """Sample matrix upcast to float64 for metric arithmetic."""
        return self.data.astype(np.float64)


def save_traceset(ts: TraceSet, path) -> None:
    """Write ``ts`` to ``path`` in the NGTS binary format (see module doc)."""
    count, length = ts.data.shape
    header = _HEADER.pack(_MAGIC, _VERSION, count, length, ts.sample_rate_hz)
    payload = np.ascontiguousarray(ts.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_traceset(path, name: str = "") -> TraceSet:
    """Read an NGTS binary file; raises FormatError on any layout violation."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"file too short for header: {len(raw)} < {_HEADER.size} bytes")
    magic, version, count, length, rate = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported format version {version}")
    expected = _HEADER.size + 4 * count * length
    if len(raw) != expected:
        raise FormatError(
            f"truncated or oversized payload: expected {expected} bytes, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, length)
    return TraceSet(data, rate, name=name)


def export_traceset_csv(ts: TraceSet, path) -> None:
    """CSV export: one trace per row, decimal text."""
    np.savetxt(path, ts.data, delimiter=",", fmt="%.9g")


def normalize_maxabs(ts: TraceSet) -> tuple[TraceSet, float]:
    """Scale the whole set into [-1, 1] by one global max-|sample| factor.

    A single scale for the set (not per trace) preserves relative amplitudes
    across traces, which the amplitude-sensitive feature comparisons need.
    Returns (normalized set, scale); multiplying back by scale recovers the
    input. Raises DegenerateInputError when every sample is zero.
    """
    scale = float(np.max(np.abs(ts.data64())))
    if scale == 0.0:
        raise DegenerateInputError("all samples are zero; nothing to normalize")
    return TraceSet(ts.data64() / scale, ts.sample_rate_hz, name=ts.name), scale
