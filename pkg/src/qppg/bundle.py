"""Portable weight bundle (QPRW) serialization.

Layout, little-endian throughout:

    "QPRW" | u32 version=1 | u32 array count
    per array: u16 name length | name UTF-8 | u8 dtype (0 = float32)
               | u8 rank | rank x u32 dims | payload row-major

Values are stored as float32; loading returns float64 arrays (every stored
value is exactly representable), so save(load(x)) is byte-identical.
"""

from __future__ import annotations

import struct

import numpy as np

from .cnn import WeightBundle
from .imgio import BadMagic, TruncatedFile, UnsupportedVersion  # shared container errors
from .ioutil import atomic_write_bytes

QPRW_MAGIC = b"QPRW"
QPRW_VERSION = 1
DTYPE_F32 = 0
_MAX_RANK = 8


class ShapeHeaderMismatch(ValueError):
    """Array header is self-inconsistent (bad dtype/rank/dims or stray bytes)."""


def save_weights(bundle: WeightBundle, path: str) -> None:
    parts = [QPRW_MAGIC, struct.pack("<II", QPRW_VERSION, len(bundle.arrays))]
    for name in bundle.names():
        arr = bundle[name]
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BB", DTYPE_F32, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_weights(path: str) -> WeightBundle:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise TruncatedFile(f"{path}: header incomplete")
    if data[:4] != QPRW_MAGIC:
        raise BadMagic(f"{path}: expected {QPRW_MAGIC!r}, found {data[:4]!r}")
    version, count = struct.unpack("<II", data[4:12])
    if version != QPRW_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    offset = 12
    arrays = {}
    for index in range(count):
        if offset + 2 > len(data):
            raise TruncatedFile(f"{path}: array {index}: name length missing")
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + name_len + 2 > len(data):
            raise TruncatedFile(f"{path}: array {index}: header missing")
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        dtype, rank = struct.unpack_from("<BB", data, offset)
        offset += 2
        if dtype != DTYPE_F32:
            raise ShapeHeaderMismatch(f"{path}: {name}: unknown dtype code {dtype}")
        if rank < 1 or rank > _MAX_RANK:
            raise ShapeHeaderMismatch(f"{path}: {name}: rank {rank} out of range")
        if offset + 4 * rank > len(data):
            raise TruncatedFile(f"{path}: {name}: dims missing")
        dims = struct.unpack_from(f"<{rank}I", data, offset)
        offset += 4 * rank
        if any(d == 0 for d in dims):
            raise ShapeHeaderMismatch(f"{path}: {name}: zero dimension {dims}")
        need = 4 * int(np.prod(dims))
        if offset + need > len(data):
            raise TruncatedFile(f"{path}: {name}: payload needs {need} bytes, "
                                f"{len(data) - offset} left")
        flat = np.frombuffer(data[offset : offset + need], dtype="<f4")
        arrays[name] = flat.reshape(dims).astype(np.float64)
        offset += need
    if offset != len(data):
        raise ShapeHeaderMismatch(f"{path}: {len(data) - offset} stray trailing bytes")
    return WeightBundle(arrays)
