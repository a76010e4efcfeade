"""Binary model-file primitives: magic, header ints, strings, f64 blocks.

All integers and floats are little-endian.  See docs/FORMATS.md for the
per-model layouts built on these helpers.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import MalformedHeader

MODEL_VERSION = 1


def write_header(fh: BinaryIO, magic: bytes, dims: list[int]) -> None:
    assert len(magic) == 4
    fh.write(magic)
    fh.write(struct.pack("<H", MODEL_VERSION))
    fh.write(struct.pack("<H", len(dims)))
    fh.write(struct.pack(f"<{len(dims)}I", *dims))


def read_header(fh: BinaryIO, magic: bytes, path) -> list[int]:
    got = fh.read(4)
    if got != magic:
        raise MalformedHeader(f"{path}: expected magic {magic!r}, got {got!r}")
    (version,) = struct.unpack("<H", fh.read(2))
    if version != MODEL_VERSION:
        raise MalformedHeader(f"{path}: unsupported version {version}")
    (n_dims,) = struct.unpack("<H", fh.read(2))
    return list(struct.unpack(f"<{n_dims}I", fh.read(4 * n_dims)))


def write_f64(fh: BinaryIO, *values: float) -> None:
    fh.write(struct.pack(f"<{len(values)}d", *values))


def read_f64(fh: BinaryIO, n: int = 1) -> list[float]:
    return list(struct.unpack(f"<{n}d", fh.read(8 * n)))


def write_str(fh: BinaryIO, s: str) -> None:
    raw = s.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)


def read_str(fh: BinaryIO) -> str:
    (n,) = struct.unpack("<H", fh.read(2))
    return fh.read(n).decode("utf-8")


def write_block(fh: BinaryIO, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_block(fh: BinaryIO, shape: tuple[int, ...]) -> np.ndarray:
    n = int(np.prod(shape))
    raw = fh.read(8 * n)
    if len(raw) != 8 * n:
        raise MalformedHeader("truncated weight block")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def open_model(path: str | Path, mode: str) -> BinaryIO:
    return open(path, mode + "b")
