"""Binary wire format for depth and IR frames.

Layout: 4-byte magic (SMHD depth, SMHI infrared), u32 width, u32 height,
u64 timestamp in microseconds, then width*height u16 samples row-major.
All integers little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch

DEPTH_MAGIC = b"SMHD"
IR_MAGIC = b"SMHI"
_HEADER = struct.Struct("<4sIIQ")


@dataclass
class DepthFrame:
    """Depth samples in mm, u16, zero meaning no reading."""

    data: np.ndarray
    timestamp_us: int = 0

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.uint16)
        if d.ndim != 2:
            raise DimMismatch("depth data must be 2D")
        self.data = d


@dataclass
class IRFrame:
    """Infrared intensity samples, u16."""

    data: np.ndarray
    timestamp_us: int = 0

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.uint16)
        if d.ndim != 2:
            raise DimMismatch("ir data must be 2D")
        self.data = d


def _encode(magic: bytes, data: np.ndarray, timestamp_us: int) -> bytes:
    h, w = data.shape
    header = _HEADER.pack(magic, w, h, timestamp_us)
    return header + np.ascontiguousarray(data, dtype="<u2").tobytes()


def _decode(magic: bytes, buf: bytes):
    if len(buf) < _HEADER.size:
        raise DimMismatch("frame buffer shorter than its header")
    got, w, h, ts = _HEADER.unpack_from(buf)
    if got != magic:
        raise DimMismatch(f"bad magic {got!r}, expected {magic!r}")
    need = _HEADER.size + 2 * w * h
    if len(buf) != need:
        raise DimMismatch(f"frame buffer is {len(buf)} bytes, expected {need}")
    data = np.frombuffer(buf, dtype="<u2", offset=_HEADER.size).reshape(h, w)
    return data.astype(np.uint16), ts


def encode_depth_frame(frame: DepthFrame) -> bytes:
    return _encode(DEPTH_MAGIC, frame.data, frame.timestamp_us)


def decode_depth_frame(buf: bytes) -> DepthFrame:
    data, ts = _decode(DEPTH_MAGIC, buf)
    return DepthFrame(data, ts)


def encode_ir_frame(frame: IRFrame) -> bytes:
    return _encode(IR_MAGIC, frame.data, frame.timestamp_us)


def decode_ir_frame(buf: bytes) -> IRFrame:
    data, ts = _decode(IR_MAGIC, buf)
    return IRFrame(data, ts)
