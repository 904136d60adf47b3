"""Binary codec for map sets (PMAP1 format).

Layout, all little-endian:

    offset 0   5 bytes   magic "PMAP1"
    offset 5   u8        kind: 0 = confidence, 1 = regression
    offset 6   u32       K, number of joint channels
    offset 10  u32       H, rows
    offset 14  u32       W, columns
    offset 18  payload   float32 values, C order [joint][row][col] for
                         confidence and [joint][row][col][component] for
                         regression, components ordered (x, y)

Encoding a decoded file reproduces it byte for byte.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import MapFormatError
from .maps import ConfidenceMapSet, RegressionMapSet

MAGIC = b"PMAP1"
KIND_CONFIDENCE = 0
KIND_REGRESSION = 1
_HEADER = struct.Struct("<5sBIII")
HEADER_SIZE = _HEADER.size  # 18 bytes


def encode_map_set(maps: ConfidenceMapSet | RegressionMapSet) -> bytes:
    """Serialize one map set to PMAP1 bytes."""
    if isinstance(maps, ConfidenceMapSet):
        kind = KIND_CONFIDENCE
    elif isinstance(maps, RegressionMapSet):
        kind = KIND_REGRESSION
    else:
        raise MapFormatError("cannot encode %r as a map set" % type(maps).__name__)
    k, h, w = maps.num_joints, maps.height, maps.width
    header = _HEADER.pack(MAGIC, kind, k, h, w)
    payload = np.ascontiguousarray(maps.values, dtype="<f4").tobytes()
    return header + payload


def decode_map_set(data: bytes) -> ConfidenceMapSet | RegressionMapSet:
    """Parse PMAP1 bytes, raising MapFormatError with the failing offset."""
    if len(data) < HEADER_SIZE:
        raise MapFormatError(
            "file is %d bytes, shorter than the %d byte header (offset %d)"
            % (len(data), HEADER_SIZE, len(data))
        )
    magic, kind, k, h, w = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MapFormatError("bad magic %r at offset 0, expected %r" % (magic, MAGIC))
    if kind not in (KIND_CONFIDENCE, KIND_REGRESSION):
        raise MapFormatError("unknown map kind %d at offset 5" % kind)
    if k < 1 or h < 1 or w < 1:
        raise MapFormatError("degenerate dimensions K=%d H=%d W=%d in header" % (k, h, w))
    per_cell = 1 if kind == KIND_CONFIDENCE else 2
    expected = k * h * w * per_cell * 4
    actual = len(data) - HEADER_SIZE
    if actual != expected:
        raise MapFormatError(
            "payload is %d bytes, expected %d for K=%d H=%d W=%d (offset %d)"
            % (actual, expected, k, h, w, len(data))
        )
    flat = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE)
    if kind == KIND_CONFIDENCE:
        return ConfidenceMapSet(flat.reshape(k, h, w))
    return RegressionMapSet(flat.reshape(k, h, w, 2))


def write_map_set(maps: ConfidenceMapSet | RegressionMapSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_map_set(maps))


def read_map_set(path) -> ConfidenceMapSet | RegressionMapSet:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return decode_map_set(data)
    except MapFormatError as exc:
        raise MapFormatError("%s: %s" % (path, exc)) from exc


def read_confidence(path) -> ConfidenceMapSet:
    maps = read_map_set(path)
    if not isinstance(maps, ConfidenceMapSet):
        raise MapFormatError("%s holds regression maps, expected confidence maps" % path)
    return maps


def read_regression(path) -> RegressionMapSet:
    maps = read_map_set(path)
    if not isinstance(maps, RegressionMapSet):
        raise MapFormatError("%s holds confidence maps, expected regression maps" % path)
    return maps
