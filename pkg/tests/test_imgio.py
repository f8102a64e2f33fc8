import struct

import numpy as np
import pytest

from qppg.imgio import (
    BadMagic,
    TruncatedFile,
    UnsupportedVersion,
    load_qpri,
    save_pgm,
    save_qpri,
    save_segment_metadata,
)


def test_qpri_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    pixels = rng.uniform(0, 1, size=(20, 500)).astype(np.float32).astype(np.float64)
    path = str(tmp_path / "img.qpri")
    save_qpri(path, pixels)
    back = load_qpri(path)
    assert back.shape == (20, 500)
    assert np.array_equal(back, pixels)  # float32-representable values survive exactly


def test_qpri_header_layout(tmp_path):
    path = str(tmp_path / "img.qpri")
    save_qpri(path, np.zeros((2, 3)))
    raw = open(path, "rb").read()
    assert raw[:4] == b"QPRI"
    version, rows, cols = struct.unpack("<III", raw[4:16])
    assert (version, rows, cols) == (1, 2, 3)
    assert len(raw) == 16 + 2 * 3 * 4


def test_qpri_bad_magic(tmp_path):
    path = str(tmp_path / "x.qpri")
    with open(path, "wb") as fh:
        fh.write(b"NOPE" + b"\x00" * 12)
    with pytest.raises(BadMagic):
        load_qpri(path)


def test_qpri_unsupported_version(tmp_path):
    path = str(tmp_path / "x.qpri")
    with open(path, "wb") as fh:
        fh.write(b"QPRI" + struct.pack("<III", 9, 1, 1) + b"\x00" * 4)
    with pytest.raises(UnsupportedVersion):
        load_qpri(path)


def test_qpri_truncation_detected(tmp_path):
    path = str(tmp_path / "full.qpri")
    save_qpri(path, np.ones((4, 4)))
    raw = open(path, "rb").read()
    cut = str(tmp_path / "cut.qpri")
    with open(cut, "wb") as fh:
        fh.write(raw[:-7])
    with pytest.raises(TruncatedFile):
        load_qpri(cut)
    tiny = str(tmp_path / "tiny.qpri")
    with open(tiny, "wb") as fh:
        fh.write(raw[:10])
    with pytest.raises(TruncatedFile):
        load_qpri(tiny)


def test_pgm_sidecar_format(tmp_path):
    pixels = np.array([[0.0, 1.0], [0.5, 0.25]])
    path = str(tmp_path / "img.pgm")
    save_pgm(path, pixels)
    raw = open(path, "rb").read()
    assert raw.startswith(b"P5\n2 2\n255\n")
    assert raw[len(b"P5\n2 2\n255\n"):] == bytes([0, 255, 128, 64])


def test_metadata_json(tmp_path):
    import json

    path = str(tmp_path / "meta.json")
    save_segment_metadata(path, segment_id="s1", h_selected=0.02, recon_error=1.5,
                          omega_min=0.5, omega_max=12.0, n_points=10, n_h=20)
    doc = json.load(open(path))
    assert doc == {"segment_id": "s1", "h_selected": 0.02, "recon_error": 1.5,
                   "omega_min": 0.5, "omega_max": 12.0, "n_points": 10, "N_h": 20}
