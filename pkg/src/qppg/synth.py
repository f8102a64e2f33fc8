"""Synthetic pulse-wave generator with label-known quality defects.

Good segments are periodic double-Gaussian beats (systolic lobe plus a
smaller dicrotic bump) on a positive baseline with at most 2% additive
noise. Bad segments take a good segment and apply exactly one artifact:
large baseline wander, a high-amplitude noise burst, a flatline dropout of
at least one second, or amplitude saturation. Every segment is a pure
function of (config, index), so datasets are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ingest import WINDOW, Label, SegmentRecord

# beat template constants (phase units of one period); widths keep the
# fundamental dominant over its harmonics even with half-bin FFT straddle
SYSTOLIC_CENTER = 0.22
SYSTOLIC_WIDTH = 0.13
DICROTIC_CENTER = 0.55
DICROTIC_WIDTH = 0.16


class ArtifactKind(str, Enum):
    WANDER = "wander"
    BURST = "burst"
    DROPOUT = "dropout"
    SATURATION = "saturation"


DEFAULT_MIX = {
    ArtifactKind.WANDER.value: 0.25,
    ArtifactKind.BURST.value: 0.25,
    ArtifactKind.DROPOUT.value: 0.25,
    ArtifactKind.SATURATION.value: 0.25,
}


@dataclass(frozen=True)
class SynthConfig:
    n_good: int = 0
    n_bad: int = 0
    fs: float = 100.0
    seed: int = 0
    bpm_range: tuple = (55.0, 100.0)
    artifact_mix: dict = field(default_factory=lambda: dict(DEFAULT_MIX))

    def __post_init__(self):
        lo, hi = self.bpm_range
        if not (40.0 <= lo <= hi <= 180.0):
            raise ValueError("bpm range must lie within [40, 180]")
        if self.n_good < 0 or self.n_bad < 0:
            raise ValueError("counts must be non-negative")
        if not (self.fs > 0):
            raise ValueError("fs must be > 0")
        total = sum(self.artifact_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"artifact mix must sum to 1, got {total}")
        unknown = set(self.artifact_mix) - {k.value for k in ArtifactKind}
        if unknown:
            raise ValueError(f"unknown artifact kinds: {sorted(unknown)}")


def _rng(cfg: SynthConfig, stream: int, k: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream, k])


def _clean_pulse(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    lo, hi = cfg.bpm_range
    bpm = rng.uniform(lo, hi)
    gain = rng.uniform(0.8, 1.2)
    baseline = rng.uniform(0.2, 0.4)
    phase0 = rng.uniform(0.0, 1.0)
    dicrotic = rng.uniform(0.25, 0.38)
    noise = rng.uniform(0.005, 0.02) * gain

    t = np.arange(WINDOW) / cfg.fs
    phase = (t * bpm / 60.0 + phase0) % 1.0
    beat = np.exp(-0.5 * ((phase - SYSTOLIC_CENTER) / SYSTOLIC_WIDTH) ** 2)
    beat += dicrotic * np.exp(-0.5 * ((phase - DICROTIC_CENTER) / DICROTIC_WIDTH) ** 2)
    return baseline + gain * beat + rng.normal(0.0, noise, WINDOW)


def gen_good(cfg: SynthConfig, k: int) -> np.ndarray:
    """k-th good segment; deterministic per (cfg.seed, k)."""
    return _clean_pulse(cfg, _rng(cfg, 0, k))


def gen_bad_detail(cfg: SynthConfig, k: int):
    """(clean source, corrupted segment, artifact kind) for the k-th bad segment."""
    rng = _rng(cfg, 1, k)
    clean = _clean_pulse(cfg, rng)
    kinds = [ArtifactKind(name) for name in DEFAULT_MIX if name in cfg.artifact_mix]
    probs = np.array([cfg.artifact_mix[kind.value] for kind in kinds])
    kind = kinds[int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))]

    y = clean.copy()
    if kind is ArtifactKind.WANDER:
        amp = rng.uniform(1.8, 3.2)
        freq = rng.uniform(0.1, 0.35)
        t = np.arange(WINDOW) / cfg.fs
        y += amp * np.sin(2.0 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    elif kind is ArtifactKind.BURST:
        length = int(rng.integers(160, 320))
        start = int(rng.integers(0, WINDOW - length + 1))
        sigma = rng.uniform(3.2, 4.5) * clean.std()
        y[start : start + length] += rng.normal(0.0, sigma, length)
    elif kind is ArtifactKind.DROPOUT:
        length = int(rng.integers(150, 280))
        start = int(rng.integers(0, WINDOW - length + 1))
        y[start : start + length] = y[start]
    else:  # saturation
        level = float(np.quantile(y, rng.uniform(0.55, 0.72)))
        y = np.minimum(y, level)
    return clean, y, kind


def gen_bad(cfg: SynthConfig, k: int) -> np.ndarray:
    """k-th bad segment; deterministic per (cfg.seed, k)."""
    _, corrupted, _ = gen_bad_detail(cfg, k)
    return corrupted


def gen_dataset(cfg: SynthConfig):
    """All segments of the config as labeled records, good block first."""
    subject = f"synth{cfg.seed}"
    records = []
    for k in range(cfg.n_good):
        records.append(SegmentRecord(
            segment_id=f"{subject}_{k:05d}", subject=subject,
            start_index=k * WINDOW, samples=gen_good(cfg, k),
            fs=cfg.fs, label=Label.GOOD))
    for k in range(cfg.n_bad):
        idx = cfg.n_good + k
        records.append(SegmentRecord(
            segment_id=f"{subject}_{idx:05d}", subject=subject,
            start_index=idx * WINDOW, samples=gen_bad(cfg, k),
            fs=cfg.fs, label=Label.BAD))
    return records
