"""Binary walk files: a fixed little-endian header followed by 2-bit step codes."""

from __future__ import annotations

import struct

import numpy as np

from .sim import Walk

MAGIC = b"FRWK"
VERSION = 1
# magic, version u16, scale_index u16, start x i32, start y i32, step_count u64
HEADER = struct.Struct("<4sHHiiQ")
HEADER_SIZE = HEADER.size


class WalkFileError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def encode_walk(walk: Walk) -> bytes:
    n = len(walk)
    if n >= 2**64:
        raise ValueError("step count does not fit in 64 bits")
    head = HEADER.pack(MAGIC, VERSION, walk.scale_index, walk.start[0], walk.start[1], n)
    codes = np.zeros(-(-n // 4) * 4, dtype=np.uint8)
    codes[:n] = walk.steps
    q = codes.reshape(-1, 4)
    # step i occupies bits 2*(i % 4) .. 2*(i % 4) + 1 of byte i // 4
    packed = q[:, 0] | (q[:, 1] << 2) | (q[:, 2] << 4) | (q[:, 3] << 6)
    return head + packed.astype(np.uint8).tobytes()


def decode_walk(data: bytes) -> Walk:
    if len(data) < 4:
        raise WalkFileError("truncated magic", len(data))
    if data[:4] != MAGIC:
        raise WalkFileError("bad magic", 0)
    if len(data) < HEADER_SIZE:
        raise WalkFileError("truncated header", len(data))
    _, version, scale, x, y, n = HEADER.unpack_from(data)
    if version != VERSION:
        raise WalkFileError(f"unsupported version {version}", 4)
    need = HEADER_SIZE + -(-n // 4)
    if len(data) < need:
        raise WalkFileError(f"truncated step data: expected {need} bytes, got {len(data)}", len(data))
    if len(data) > need:
        raise WalkFileError("trailing bytes after step data", need)
    b = np.frombuffer(data, dtype=np.uint8, offset=HEADER_SIZE, count=need - HEADER_SIZE)
    codes = np.stack([b & 3, (b >> 2) & 3, (b >> 4) & 3, b >> 6], axis=1).reshape(-1)[:n]
    if n % 4 and b[-1] >> (2 * (n % 4)):
        raise WalkFileError("nonzero padding bits", need - 1)
    return Walk((x, y), codes, scale)


def write_walk(path, walk: Walk) -> None:
    with open(path, "wb") as f:
        f.write(encode_walk(walk))


def read_walk(path) -> Walk:
    with open(path, "rb") as f:
        return decode_walk(f.read())
