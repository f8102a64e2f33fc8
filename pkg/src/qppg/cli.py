"""Command-line pipeline: segment -> qpr/stft -> sqi/infer -> eval, plus synth/split.

Every subcommand echoes its resolved configuration into the metadata it
writes (manifest JSON, metrics JSON, or a ``<out>.meta.json`` sidecar for
CSV-only outputs), writes files atomically, exits 0 on success and 1 on
validation errors with one machine-readable JSON line per error on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import bundle as bundle_io
from . import imgio
from .cnn import forward
from .ingest import (
    ConstantSegment,
    DatasetManifest,
    Label,
    ManifestEntry,
    SegmentRecord,
    UnknownSegmentId,
    load_manifest,
    load_segments_csv,
    manifest_from_records,
    merge_annotations,
    normalize_amplitude,
    read_raw_csv,
    save_manifest,
    save_segments_csv,
    split_records,
    window_signal,
)
from .ioutil import atomic_write_json, atomic_write_text
from .metrics import confusion, roc_auc, save_metrics_json, save_roc_csv, summary
from .qpr import NoValidCandidate, SweepConfig, quantum_pattern_recognition, stft_image
from .report import save_confusion_figure, save_roc_figure, save_segment_panel
from .scsa import Signal, scsa_reconstruction
from .sqi import (
    load_features_csv,
    load_model_json,
    predict_linear,
    save_features_csv,
    save_model_json,
    sqi_features,
    train_linear_baseline,
)
from .synth import SynthConfig, gen_dataset


def _error_line(kind: str, **detail) -> None:
    sys.stderr.write(json.dumps({"error": kind, **detail}, sort_keys=True) + "\n")


def _config_echo(args, keys) -> dict:
    echo = {"subcommand": args.command}
    for key in keys:
        echo[key] = getattr(args, key.replace("-", "_"))
    return echo


def _sidecar(path: str, echo: dict, **extra) -> None:
    atomic_write_json(path + ".meta.json", {"config": echo, **extra})


def _save_manifest_with_config(manifest: DatasetManifest, path: str, echo: dict) -> None:
    doc = {
        "entries": [{
            "segment_id": e.segment_id, "source": e.source,
            "start_index": e.start_index, "label": e.label.value,
            "data_path": e.data_path,
        } for e in manifest.entries],
        "counts": manifest.counts,
        "config": echo,
    }
    atomic_write_json(path, doc)


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_good=args.n_good, n_bad=args.n_bad, fs=args.fs,
                      seed=args.seed, bpm_range=(args.bpm_min, args.bpm_max))
    records = gen_dataset(cfg)
    save_segments_csv(records, args.out)
    manifest = manifest_from_records(records, source=f"synth(seed={args.seed})",
                                     data_path=os.path.basename(args.out))
    echo = _config_echo(args, ["n_good", "n_bad", "seed", "fs", "bpm_min", "bpm_max", "out"])
    _save_manifest_with_config(manifest, args.manifest or args.out + ".manifest.json", echo)
    print(f"wrote {len(records)} segments to {args.out}")
    return 0


def cmd_segment(args) -> int:
    raw = read_raw_csv(args.raw, args.column)
    subject = args.subject or os.path.splitext(os.path.basename(args.raw))[0]
    records = []
    for start, window in window_signal(raw, args.window):
        records.append(SegmentRecord(
            segment_id=f"{subject}_{start // args.window:05d}", subject=subject,
            start_index=start, samples=window, fs=args.fs))
    save_segments_csv(records, args.out)
    manifest = manifest_from_records(records, source=args.raw,
                                     data_path=os.path.basename(args.out))
    if args.annotations:
        manifest = merge_annotations(manifest, args.annotations)
        relabeled = {e.segment_id: e.label for e in manifest.entries}
        for rec in records:
            rec.label = relabeled[rec.segment_id]
        save_segments_csv(records, args.out)
    echo = _config_echo(args, ["raw", "column", "fs", "subject", "window", "out", "annotations"])
    _save_manifest_with_config(manifest, args.manifest or args.out + ".manifest.json", echo)
    print(f"wrote {len(records)} segments to {args.out}")
    return 0


def _qpr_one(task):
    """(record fields) -> (segment_id, payload dict | error name)."""
    segment_id, samples, fs, cfg_tuple = task
    cfg = SweepConfig(*cfg_tuple)
    try:
        signal = normalize_amplitude(samples, fs)
    except ConstantSegment:
        # constant windows are unclassifiable, same surface as a failed sweep
        return segment_id, None
    try:
        img = quantum_pattern_recognition(signal, cfg, segment_id)
    except NoValidCandidate:
        return segment_id, None
    return segment_id, {"pixels": img.pixels, "h": img.h_selected, "err": img.recon_error,
                        "samples": signal.samples, "fs": fs}


def cmd_qpr(args) -> int:
    records = load_segments_csv(args.segments)
    records.sort(key=lambda r: r.segment_id)
    os.makedirs(args.out_dir, exist_ok=True)
    n_points = args.n_points or args.nh // 2
    cfg_tuple = (args.omega_min, args.omega_max, args.nh, n_points)
    tasks = [(r.segment_id, r.samples, r.fs, cfg_tuple) for r in records]
    if args.jobs > 1:
        import multiprocessing

        with multiprocessing.get_context("fork").Pool(args.jobs) as pool:
            results = list(pool.imap(_qpr_one, tasks, chunksize=1))
    else:
        results = [_qpr_one(task) for task in tasks]

    labels = {r.segment_id: r.label for r in records}
    entries = []
    failures = 0
    for segment_id, payload in results:
        if payload is None:
            failures += 1
            _error_line("NoValidCandidate", segment_id=segment_id)
            continue
        stem = os.path.join(args.out_dir, segment_id)
        imgio.save_qpri(stem + ".qpri", payload["pixels"])
        imgio.save_pgm(stem + ".pgm", payload["pixels"])
        imgio.save_segment_metadata(stem + ".meta.json", segment_id=segment_id,
                                    h_selected=payload["h"], recon_error=payload["err"],
                                    omega_min=args.omega_min, omega_max=args.omega_max,
                                    n_points=n_points, n_h=args.nh)
        if args.figures:
            recon = scsa_reconstruction(payload["h"],
                                        Signal(payload["samples"], payload["fs"]),
                                        args.nh).reconstruction
            save_segment_panel(payload["samples"], payload["fs"], payload["pixels"],
                               stem + ".png", reconstruction=recon, segment_id=segment_id)
        entries.append(ManifestEntry(segment_id, args.segments, 0,
                                     labels[segment_id], segment_id + ".qpri"))
    echo = _config_echo(args, ["segments", "out_dir", "nh", "omega_min", "omega_max", "jobs"])
    echo["n_points"] = n_points
    _save_manifest_with_config(DatasetManifest(entries=entries),
                               os.path.join(args.out_dir, "manifest.json"), echo)
    print(f"imaged {len(entries)} segments, {failures} failures")
    return 1 if failures else 0


def cmd_stft(args) -> int:
    records = load_segments_csv(args.segments)
    records.sort(key=lambda r: r.segment_id)
    os.makedirs(args.out_dir, exist_ok=True)
    entries = []
    failures = 0
    for rec in records:
        try:
            signal = normalize_amplitude(rec.samples, rec.fs)
        except ConstantSegment:
            failures += 1
            _error_line("ConstantSegment", segment_id=rec.segment_id)
            continue
        mag = stft_image(signal, window_len=args.window_len, hop=args.hop)
        stem = os.path.join(args.out_dir, rec.segment_id)
        imgio.save_qpri(stem + ".qpri", mag)
        imgio.save_pgm(stem + ".pgm", mag)
        entries.append(ManifestEntry(rec.segment_id, args.segments, rec.start_index,
                                     rec.label, rec.segment_id + ".qpri"))
    echo = _config_echo(args, ["segments", "out_dir", "window_len", "hop"])
    _save_manifest_with_config(DatasetManifest(entries=entries),
                               os.path.join(args.out_dir, "manifest.json"), echo)
    print(f"imaged {len(entries)} segments, {failures} failures")
    return 1 if failures else 0


def cmd_sqi(args) -> int:
    records = load_segments_csv(args.segments)
    records.sort(key=lambda r: r.segment_id)
    rows = [(sqi_features(Signal(r.samples, r.fs), r.segment_id), r.label) for r in records]
    save_features_csv(rows, args.out)
    _sidecar(args.out, _config_echo(args, ["segments", "out"]), n_segments=len(rows))
    print(f"wrote {len(rows)} feature rows to {args.out}")
    return 0


def cmd_train_baseline(args) -> int:
    rows = load_features_csv(args.features)
    rows = [(f, l) for f, l in rows if l in (Label.GOOD, Label.BAD)]
    model = train_linear_baseline([f for f, _ in rows], [l for _, l in rows],
                                  epochs=args.epochs, lr=args.lr, seed=args.seed)
    echo = _config_echo(args, ["features", "epochs", "lr", "seed", "out"])
    save_model_json(model, args.out, extra={"config": echo})
    print(f"trained baseline on {len(rows)} samples, final loss {model.final_loss:.6f}")
    return 0


def _write_predictions(path: str, rows, threshold: float) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_id", "probability", "label_pred"])
    for segment_id, prob in rows:
        label = Label.GOOD if prob >= threshold else Label.BAD
        writer.writerow([segment_id, format(prob, ".17g"), label.value])
    atomic_write_text(path, buf.getvalue())


def load_predictions_csv(path: str):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((row["segment_id"], float(row["probability"]),
                         Label(row["label_pred"])))
    return rows


def cmd_infer(args) -> int:
    weights = bundle_io.load_weights(args.bundle)
    manifest = load_manifest(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))
    rows = []
    for entry in sorted(manifest.entries, key=lambda e: e.segment_id):
        path = entry.data_path
        if not os.path.isabs(path):
            path = os.path.join(base, path)
        pixels = imgio.load_qpri(path)
        rows.append((entry.segment_id, forward(pixels, weights)))
    _write_predictions(args.out, rows, args.threshold)
    _sidecar(args.out, _config_echo(args, ["bundle", "manifest", "threshold", "out"]),
             n_predictions=len(rows))
    print(f"scored {len(rows)} images to {args.out}")
    return 0


def cmd_eval(args) -> int:
    preds = load_predictions_csv(args.pred)
    truth_records = load_segments_csv(args.truth)
    truth = {r.segment_id: r.label for r in truth_records}
    pairs = []  # (probability, predicted label, true label)
    for segment_id, prob, _ in sorted(preds):
        if segment_id not in truth:
            raise UnknownSegmentId(segment_id)
        true_label = truth[segment_id]
        if true_label not in (Label.GOOD, Label.BAD):
            continue  # never let unpooled labels reach metrics
        predicted = Label.GOOD if prob >= args.threshold else Label.BAD
        pairs.append((prob, predicted, true_label))
    os.makedirs(args.out_dir, exist_ok=True)
    c = confusion([p for _, p, _ in pairs], [t for _, _, t in pairs])
    stats = summary(c)
    curve = roc_auc([p for p, _, _ in pairs], [t for _, _, t in pairs])
    echo = _config_echo(args, ["pred", "truth", "threshold", "out_dir"])
    save_metrics_json({
        "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        "summary": stats,
        "auc": curve.auc,
        "n_evaluated": len(pairs),
        "config": echo,
    }, os.path.join(args.out_dir, "metrics.json"))
    save_roc_csv(curve, os.path.join(args.out_dir, "roc.csv"))
    save_roc_figure(curve, os.path.join(args.out_dir, "roc.png"))
    save_confusion_figure(c, os.path.join(args.out_dir, "confusion.png"))
    print(f"acc {stats['acc']:.4f} se {stats['se']:.4f} sp {stats['sp']:.4f} "
          f"f1 {stats['f1']:.4f} auc {curve.auc:.4f} over {len(pairs)} segments")
    return 0


def cmd_split(args) -> int:
    records = load_segments_csv(args.segments)
    pool = [r for r in records if r.label in (Label.GOOD, Label.BAD)]
    train, test = split_records(pool, seed=args.seed, fraction=args.fraction,
                                by_subject=args.by_subject)
    train.sort(key=lambda r: r.segment_id)
    test.sort(key=lambda r: r.segment_id)
    save_segments_csv(train, args.train_out)
    save_segments_csv(test, args.test_out)
    echo = _config_echo(args, ["segments", "seed", "fraction", "by_subject",
                               "train_out", "test_out"])
    _sidecar(args.train_out, echo, n_train=len(train), n_test=len(test),
             n_excluded=len(records) - len(pool))
    print(f"split {len(pool)} pooled segments into {len(train)} train / {len(test)} test")
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="qppg",
        description="PPG quality toolkit: Schrodinger-spectrum imaging and classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate labeled synthetic segments", formatter_class=fmt)
    p.add_argument("--n-good", type=int, required=True, help="good segments to generate")
    p.add_argument("--n-bad", type=int, required=True, help="bad segments to generate")
    p.add_argument("--seed", type=int, required=True, help="generator seed")
    p.add_argument("--fs", type=float, default=100.0, help="sampling rate in Hz")
    p.add_argument("--bpm-min", type=float, default=55.0, help="slowest beat rate")
    p.add_argument("--bpm-max", type=float, default=100.0, help="fastest beat rate")
    p.add_argument("--out", default="segments.csv", help="segment CSV path")
    p.add_argument("--manifest", default=None, help="manifest path (default <out>.manifest.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", help="window a raw recording into segments", formatter_class=fmt)
    p.add_argument("--raw", required=True, help="recording CSV")
    p.add_argument("--column", default="ppg", help="signal column name")
    p.add_argument("--fs", type=float, default=100.0, help="sampling rate in Hz")
    p.add_argument("--subject", default=None, help="subject id (default: raw file stem)")
    p.add_argument("--window", type=int, default=500, help="segment length in samples")
    p.add_argument("--out", default="segments.csv", help="segment CSV path")
    p.add_argument("--annotations", default=None, help="annotation CSV to merge")
    p.add_argument("--manifest", default=None, help="manifest path (default <out>.manifest.json)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("qpr", help="render segments to Schrodinger-component images",
                       formatter_class=fmt)
    p.add_argument("--segments", required=True, help="segment CSV")
    p.add_argument("--out-dir", required=True, help="image output directory")
    p.add_argument("--nh", type=int, default=20, help="decomposition depth")
    p.add_argument("--omega-min", type=float, default=0.5, help="sweep lower bound")
    p.add_argument("--omega-max", type=float, default=12.0, help="sweep upper bound")
    p.add_argument("--n-points", type=int, default=0, help="sweep points (0 = floor(nh/2))")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--figures", action="store_true", help="render per-segment panels")
    p.set_defaults(func=cmd_qpr)

    p = sub.add_parser("stft", help="render segments to spectrogram images", formatter_class=fmt)
    p.add_argument("--segments", required=True, help="segment CSV")
    p.add_argument("--out-dir", required=True, help="image output directory")
    p.add_argument("--window-len", type=int, default=64, help="analysis window in samples")
    p.add_argument("--hop", type=int, default=8, help="frame hop in samples")
    p.set_defaults(func=cmd_stft)

    p = sub.add_parser("sqi", help="compute signal-quality indices", formatter_class=fmt)
    p.add_argument("--segments", required=True, help="segment CSV")
    p.add_argument("--out", default="features.csv", help="feature CSV path")
    p.set_defaults(func=cmd_sqi)

    p = sub.add_parser("train-baseline", help="fit the logistic SQI baseline",
                       formatter_class=fmt)
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--epochs", type=int, default=1500, help="gradient-descent epochs")
    p.add_argument("--lr", type=float, default=0.2, help="learning rate")
    p.add_argument("--seed", type=int, required=True, help="training seed")
    p.add_argument("--out", default="baseline.json", help="model JSON path")
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("infer", help="score images with a weight bundle", formatter_class=fmt)
    p.add_argument("--bundle", required=True, help="QPRW weight file")
    p.add_argument("--manifest", required=True, help="image manifest JSON")
    p.add_argument("--threshold", type=float, default=0.5, help="good-class decision threshold")
    p.add_argument("--out", default="predictions.csv", help="prediction CSV path")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="evaluate predictions against truth labels",
                       formatter_class=fmt)
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--truth", required=True, help="segment CSV with labels")
    p.add_argument("--threshold", type=float, default=0.5, help="good-class decision threshold")
    p.add_argument("--out-dir", required=True, help="report output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="seeded train/test split of the labeled pool",
                       formatter_class=fmt)
    p.add_argument("--segments", required=True, help="segment CSV")
    p.add_argument("--seed", type=int, required=True, help="split seed")
    p.add_argument("--fraction", type=float, default=0.8, help="training fraction")
    p.add_argument("--by-subject", action="store_true", help="keep subjects whole")
    p.add_argument("--train-out", default="train.csv", help="training CSV path")
    p.add_argument("--test-out", default="test.csv", help="test CSV path")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        detail = {}
        for attr in ("segment_id", "found", "requested", "line", "statistic"):
            if hasattr(exc, attr):
                detail[attr] = getattr(exc, attr)
        _error_line(type(exc).__name__, message=str(exc), **detail)
        return 1


if __name__ == "__main__":
    sys.exit(main())
