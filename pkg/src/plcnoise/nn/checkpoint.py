"""Versioned binary checkpoint files of named array/bytes blobs.

Byte layout (little-endian):

    offset  size  field
    0       4     magic, ASCII "NGCK"
    4       1     format version, u8, currently 1
    5       4     blob count, u32
    then per blob:
            2     name length, u16
            ...   name, UTF-8
            1     dtype code, u8: 0 = f32, 1 = f64, 2 = i64, 3 = raw bytes
            1     ndim, u8 (0 for scalars and raw bytes)
            4*n   dims, u32 each
            8     payload byte count, u64
            ...   payload, little-endian array data or raw bytes

Round-trips are exact: dtypes, shapes, and bytes are preserved.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError

__all__ = ["save_blobs", "load_blobs"]

_MAGIC = b"NGCK"
_VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODES = {v: k for k, v in _DTYPES.items()}


def save_blobs(path, blobs: dict[str, np.ndarray | bytes]) -> None:
    parts = [_MAGIC, struct.pack("<BI", _VERSION, len(blobs))]
    for name, value in blobs.items():
        enc = name.encode("utf-8")
        parts.append(struct.pack("<H", len(enc)))
        parts.append(enc)
        if isinstance(value, bytes):
            parts.append(struct.pack("<BB", 3, 0))
            parts.append(struct.pack("<Q", len(value)))
            parts.append(value)
            continue
        arr = np.asarray(value)
        dt = arr.dtype.newbyteorder("<")
        if dt not in _CODES:
            raise FormatError(f"unsupported dtype {arr.dtype} for blob {name!r}")
        payload = np.ascontiguousarray(arr, dtype=dt).tobytes()
        parts.append(struct.pack("<BB", _CODES[dt], arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(struct.pack("<Q", len(payload)))
        parts.append(payload)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_blobs(path) -> dict[str, np.ndarray | bytes]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 9 or raw[:4] != _MAGIC:
        raise FormatError("not a checkpoint file (bad magic)")
    version, count = struct.unpack_from("<BI", raw, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    pos = 9
    blobs: dict[str, np.ndarray | bytes] = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", raw, pos)
            pos += 2
            name = raw[pos : pos + nlen].decode("utf-8")
            pos += nlen
            code, ndim = struct.unpack_from("<BB", raw, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}I", raw, pos)
            pos += 4 * ndim
            (nbytes,) = struct.unpack_from("<Q", raw, pos)
            pos += 8
            payload = raw[pos : pos + nbytes]
            if len(payload) != nbytes:
                raise FormatError(f"truncated blob {name!r}")
            pos += nbytes
            if code == 3:
                blobs[name] = payload
            elif code in _DTYPES:
                blobs[name] = np.frombuffer(payload, dtype=_DTYPES[code]).reshape(shape).copy()
            else:
                raise FormatError(f"unknown dtype code {code} in blob {name!r}")
    except struct.error as exc:
        raise FormatError(f"truncated checkpoint: {exc}") from exc
    if pos != len(raw):
        raise FormatError(f"{len(raw) - pos} trailing bytes after last blob")
    return blobs
