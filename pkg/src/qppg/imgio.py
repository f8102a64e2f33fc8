"""Raw image container (QPRI), PGM sidecar, and per-segment metadata.

QPRI layout, little-endian throughout:

    "QPRI" | u32 version=1 | u32 rows | u32 cols | rows*cols float32, row-major

The float file is what classifiers consume; the PGM is a human-inspection
artifact quantized through :func:`qppg.qpr.to_grayscale`.
"""

from __future__ import annotations

import struct

import numpy as np

from .ioutil import atomic_write_bytes, atomic_write_json
from .qpr import to_grayscale

QPRI_MAGIC = b"QPRI"
QPRI_VERSION = 1


class BadMagic(ValueError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(ValueError):
    """Container version not understood by this reader."""


class TruncatedFile(ValueError):
    """File ended before the declared payload was complete."""


def save_qpri(path: str, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("QPRI stores 2-D matrices")
    rows, cols = pixels.shape
    header = QPRI_MAGIC + struct.pack("<III", QPRI_VERSION, rows, cols)
    payload = np.ascontiguousarray(pixels, dtype="<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def load_qpri(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise TruncatedFile(f"{path}: header incomplete")
    if data[:4] != QPRI_MAGIC:
        raise BadMagic(f"{path}: expected {QPRI_MAGIC!r}, found {data[:4]!r}")
    version, rows, cols = struct.unpack("<III", data[4:16])
    if version != QPRI_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    need = rows * cols * 4
    if len(data) - 16 < need:
        raise TruncatedFile(f"{path}: payload has {len(data) - 16} bytes, needs {need}")
    flat = np.frombuffer(data[16 : 16 + need], dtype="<f4")
    return flat.reshape(rows, cols).astype(np.float64)


def save_pgm(path: str, pixels: np.ndarray) -> None:
    """Binary P5 grayscale sidecar (maxval 255) of a [0,1] matrix."""
    gray = to_grayscale(pixels)
    rows, cols = gray.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + gray.tobytes())


def save_segment_metadata(path: str, *, segment_id: str, h_selected: float,
                          recon_error: float, omega_min: float, omega_max: float,
                          n_points: int, n_h: int) -> None:
    atomic_write_json(path, {
        "segment_id": segment_id,
        "h_selected": h_selected,
        "recon_error": recon_error,
        "omega_min": omega_min,
        "omega_max": omega_max,
        "n_points": n_points,
        "N_h": n_h,
    })
