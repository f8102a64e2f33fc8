"""Segment ingestion: windowing, normalization, CSV formats, label merging.

File formats owned here:

* segment CSV -- header ``segment_id,subject,start_index,label,fs,s0,...,s499``
  (505 columns); floats serialized with 17 significant digits so round-trips
  are lossless.
* annotation CSV -- header ``segment_id,label,annotator,timestamp`` with
  ISO-8601 UTC timestamps.
* manifest JSON -- entry list plus per-label counts.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ioutil import atomic_write_json, atomic_write_text
from .scsa import Signal

WINDOW = 500


class Label(str, Enum):
    GOOD = "good"
    BAD = "bad"
    UNCATEGORIZED = "uncategorized"
    NO_REF_BP = "no_ref_bp"
    UNLABELED = "unlabeled"


# labels an annotator can assign (absence of a label is UNLABELED)
ANNOTATION_LABELS = (Label.GOOD, Label.BAD, Label.UNCATEGORIZED, Label.NO_REF_BP)
# labels admitted to train/test pools
POOL_LABELS = (Label.GOOD, Label.BAD)


class ConstantSegment(ValueError):
    """max == min; the window cannot be amplitude-normalized."""


class NonFiniteSample(ValueError):
    pass


class MalformedRow(ValueError):
    def __init__(self, line: int, detail: str):
        self.line = line
        super().__init__(f"line {line}: {detail}")


class UnknownLabel(ValueError):
    pass


class DuplicateSegmentId(ValueError):
    pass


class UnknownSegmentId(ValueError):
    pass


class ConflictingLabel(ValueError):
    """Same segment annotated with different labels; nobody wins."""

    def __init__(self, conflicts: dict):
        self.conflicts = conflicts
        parts = [f"{sid}: {sorted(labels)}" for sid, labels in sorted(conflicts.items())]
        super().__init__("conflicting annotations -- " + "; ".join(parts))


@dataclass
class SegmentRecord:
    segment_id: str
    subject: str
    start_index: int
    samples: np.ndarray
    fs: float
    label: Label = Label.UNLABELED

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass(frozen=True)
class ManifestEntry:
    segment_id: str
    source: str
    start_index: int
    label: Label
    data_path: str


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)

    @property
    def counts(self) -> dict:
        out = {label.value: 0 for label in Label}
        for entry in self.entries:
            out[entry.label.value] += 1
        return out

    def pool(self) -> list:
        """Entries admitted to training/inference/metrics (good or bad only)."""
        return [e for e in self.entries if e.label in POOL_LABELS]


def window_signal(raw, window: int = WINDOW):
    """Non-overlapping windows of fixed sample length; trailing remainder dropped."""
    if window < 2:
        raise ValueError("window must be >= 2 samples")
    raw = np.asarray(raw, dtype=np.float64)
    n = raw.shape[0] // window
    return [(i * window, raw[i * window : (i + 1) * window].copy()) for i in range(n)]


def normalize_amplitude(window, fs: float = 100.0) -> Signal:
    """Min-max map onto [0, 1]; constant windows are rejected.

    Min-max (rather than z-scoring) keeps the samples non-negative, which the
    Schrodinger decomposition requires of its potential.
    """
    w = np.asarray(window, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise NonFiniteSample("window contains NaN or infinity")
    lo, hi = w.min(), w.max()
    if hi == lo:
        raise ConstantSegment(f"constant window (value {lo})")
    return Signal(samples=(w - lo) / (hi - lo), fs=fs)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_segments_csv(records, path: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_id", "subject", "start_index", "label", "fs"]
                    + [f"s{i}" for i in range(WINDOW)])
    for rec in records:
        if rec.samples.shape[0] != WINDOW:
            raise ValueError(f"{rec.segment_id}: expected {WINDOW} samples, got {rec.samples.shape[0]}")
        writer.writerow([rec.segment_id, rec.subject, str(rec.start_index),
                         rec.label.value, _fmt(rec.fs)] + [_fmt(v) for v in rec.samples])
    atomic_write_text(path, buf.getvalue())


def load_segments_csv(path: str):
    records = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                continue  # header
            if len(row) != 5 + WINDOW:
                raise MalformedRow(lineno, f"expected {5 + WINDOW} columns, got {len(row)}")
            segment_id, subject, start_index, label_str, fs = row[:5]
            if segment_id in seen:
                raise DuplicateSegmentId(segment_id)
            seen.add(segment_id)
            try:
                label = Label(label_str)
            except ValueError:
                raise UnknownLabel(f"line {lineno}: {label_str!r}") from None
            try:
                records.append(SegmentRecord(
                    segment_id=segment_id,
                    subject=subject,
                    start_index=int(start_index),
                    samples=np.array([float(v) for v in row[5:]]),
                    fs=float(fs),
                    label=label,
                ))
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
    return records


def read_raw_csv(path: str, column: str):
    """Single channel from a generic recording CSV, selected by column name."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise KeyError(f"column {column!r} not found in {path}")
        values = [float(row[column]) for row in reader if row[column] != ""]
    return np.asarray(values, dtype=np.float64)


def load_annotations(path: str):
    """Rows of the annotation CSV as (segment_id, Label, annotator, timestamp)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                continue
            if len(row) != 4:
                raise MalformedRow(lineno, f"expected 4 columns, got {len(row)}")
            segment_id, label_str, annotator, timestamp = row
            try:
                label = Label(label_str)
            except ValueError:
                raise UnknownLabel(f"line {lineno}: {label_str!r}") from None
            if label not in ANNOTATION_LABELS:
                raise UnknownLabel(f"line {lineno}: {label_str!r} is not an annotation label")
            rows.append((segment_id, label, annotator, timestamp))
    return rows


def merge_annotations(manifest: DatasetManifest, annotation_csv: str) -> DatasetManifest:
    """Attach annotation labels to manifest entries by segment id.

    Re-annotating with the same label is idempotent; differing labels for one
    segment raise ConflictingLabel listing every contender (no last-writer
    precedence). Uncategorized / no-reference-BP segments stay in the
    manifest but are excluded from pool().
    """
    by_id = {entry.segment_id: entry for entry in manifest.entries}
    labels: dict = {}
    conflicts: dict = {}
    for segment_id, label, _annotator, _ts in load_annotations(annotation_csv):
        if segment_id not in by_id:
            raise UnknownSegmentId(segment_id)
        if segment_id in labels and labels[segment_id] != label:
            conflicts.setdefault(segment_id, {labels[segment_id].value}).add(label.value)
            continue
        labels[segment_id] = label
    if conflicts:
        raise ConflictingLabel(conflicts)
    merged = []
    for entry in manifest.entries:
        label = labels.get(entry.segment_id, entry.label)
        merged.append(ManifestEntry(entry.segment_id, entry.source, entry.start_index,
                                    label, entry.data_path))
    return DatasetManifest(entries=merged)


def manifest_from_records(records, source: str, data_path: str) -> DatasetManifest:
    entries = [ManifestEntry(r.segment_id, source, r.start_index, r.label, data_path)
               for r in records]
    return DatasetManifest(entries=entries)


def save_manifest(manifest: DatasetManifest, path: str) -> None:
    atomic_write_json(path, {
        "entries": [{
            "segment_id": e.segment_id,
            "source": e.source,
            "start_index": e.start_index,
            "label": e.label.value,
            "data_path": e.data_path,
        } for e in manifest.entries],
        "counts": manifest.counts,
    })


def load_manifest(path: str) -> DatasetManifest:
    with open(path) as fh:
        doc = json.load(fh)
    entries = [ManifestEntry(d["segment_id"], d["source"], int(d["start_index"]),
                             Label(d["label"]), d["data_path"])
               for d in doc["entries"]]
    return DatasetManifest(entries=entries)


def split_records(records, seed: int, fraction: float = 0.8, by_subject: bool = False):
    """Seeded random train/test split; optionally grouped by subject."""
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    records = list(records)
    if by_subject:
        subjects = sorted({r.subject for r in records})
        rng.shuffle(subjects)
        target = fraction * len(records)
        train_subjects = set()
        count = 0
        for subject in subjects:
            if count >= target:
                break
            train_subjects.add(subject)
            count += sum(1 for r in records if r.subject == subject)
        train = [r for r in records if r.subject in train_subjects]
        test = [r for r in records if r.subject not in train_subjects]
        return train, test
    order = rng.permutation(len(records))
    cut = int(round(fraction * len(records)))
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    return train, test
