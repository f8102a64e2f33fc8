"""Quantum pattern recognition: sweep h, stack components, emit the image.

The sweep walks an equispaced grid Omega_1..Omega_K (K = floor(N_h/2)),
maps each to h = 1/Omega^2, and keeps the candidate whose N_h-component
reconstruction has the smallest Euclidean residual. The winning component
stack, divided by its largest absolute entry, is the N_h x L image. An STFT
magnitude image is provided for the comparison experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scsa import InsufficientSpectrum, Signal, scsa_reconstruction


class LengthMismatch(ValueError):
    """Residual norm needs equal-length vectors."""


class NoValidCandidate(RuntimeError):
    """No h in the sweep produced N_h bound states; segment is unclassifiable."""

    def __init__(self, segment_id: str = ""):
        self.segment_id = segment_id
        msg = "no sweep candidate yielded the requested decomposition depth"
        if segment_id:
            msg += f" (segment {segment_id})"
        super().__init__(msg)


class WindowTooLong(ValueError):
    """STFT window exceeds the signal length."""


class OutOfRange(ValueError):
    """Grayscale conversion requires entries in [0, 1]."""


@dataclass(frozen=True)
class SweepConfig:
    """Sweep bounds and decomposition depth.

    n_points defaults to floor(n_h / 2) when not given.
    """

    omega_min: float = 0.5
    omega_max: float = 12.0
    n_h: int = 20
    n_points: int = 0

    def __post_init__(self):
        if self.n_points == 0:
            object.__setattr__(self, "n_points", self.n_h // 2)
        if not (0 < self.omega_min < self.omega_max):
            raise ValueError("need 0 < omega_min < omega_max")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.n_h < 1:
            raise ValueError("n_h must be >= 1")


@dataclass(frozen=True)
class QprImage:
    """N_h x L image in [0, 1] plus the h that produced it."""

    pixels: np.ndarray
    h_selected: float
    recon_error: float
    segment_id: str = ""


def reconstruction_error(y: np.ndarray, y_h: np.ndarray) -> float:
    """Euclidean (L2) norm of the residual y - y_h."""
    y = np.asarray(y, dtype=np.float64)
    y_h = np.asarray(y_h, dtype=np.float64)
    if y.shape != y_h.shape:
        raise LengthMismatch(f"shapes {y.shape} and {y_h.shape} differ")
    return float(np.linalg.norm(y - y_h))


def sweep_omegas(cfg: SweepConfig) -> np.ndarray:
    return np.linspace(cfg.omega_min, cfg.omega_max, cfg.n_points)


def sweep_candidates(signal: Signal, cfg: SweepConfig):
    """Valid sweep candidates as (omega index, h, residual norm) triples.

    A candidate is valid if its reconstruction exists (>= n_h bound states)
    and is not identically zero.
    """
    candidates = []
    for i, omega in enumerate(sweep_omegas(cfg)):
        h = 1.0 / (omega * omega)
        try:
            stack = scsa_reconstruction(h, signal, cfg.n_h)
        except InsufficientSpectrum:
            continue
        y_h = stack.reconstruction
        if not np.any(y_h != 0.0):
            continue
        candidates.append((i, h, reconstruction_error(signal.samples, y_h)))
    return candidates


def quantum_pattern_recognition(signal: Signal, cfg: SweepConfig, segment_id: str = "") -> QprImage:
    """Select the minimum-residual h over the sweep and emit the image.

    Argmin ties keep the lowest Omega index. The component stack is
    recomputed at the selected h and normalized by its maximum absolute
    entry, so the brightest pixel is exactly 1. Deterministic: identical
    input bits give identical output bits.
    """
    candidates = sweep_candidates(signal, cfg)
    if not candidates:
        raise NoValidCandidate(segment_id)
    _, h_best, _ = min(candidates, key=lambda c: c[2])
    stack = scsa_reconstruction(h_best, signal, cfg.n_h)
    err = reconstruction_error(signal.samples, stack.reconstruction)
    pixels = stack.components / np.max(np.abs(stack.components))
    return QprImage(pixels=pixels, h_selected=h_best, recon_error=err, segment_id=segment_id)


def stft_image(signal: Signal, window_len: int = 64, hop: int = 8) -> np.ndarray:
    """Max-normalized magnitude spectrogram (Hann window, rfft bins as rows).

    FFT length is the next power of two >= window_len. The all-zero signal
    maps to an all-zero matrix (normalization skipped when the max is 0).
    """
    y = signal.samples
    if window_len > y.shape[0]:
        raise WindowTooLong(f"window {window_len} > signal length {y.shape[0]}")
    if window_len < 2:
        raise ValueError("window_len must be >= 2")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    n_fft = 1
    while n_fft < window_len:
        n_fft *= 2
    window = np.hanning(window_len)
    starts = range(0, y.shape[0] - window_len + 1, hop)
    frames = [np.abs(np.fft.rfft(y[s : s + window_len] * window, n=n_fft)) for s in starts]
    mag = np.stack(frames, axis=1)
    peak = mag.max()
    if peak > 0:
        mag /= peak
    return mag


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Map [0, 1] reals to 8-bit levels, rounding half away from zero."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
        raise OutOfRange("pixel values must lie in [0, 1]")
    # for non-negative v, floor(v*255 + 0.5) is round-half-away-from-zero
    return np.minimum(np.floor(pixels * 255.0 + 0.5), 255.0).astype(np.uint8)
