"""Classifier evaluation: confusion counts, summary statistics, ROC/AUC.

Good is the positive class throughout. ROC points are produced by a
threshold sweep over the unique scores (ties grouped), and the trapezoidal
AUC is exactly the Mann-Whitney statistic with half-credit for ties.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .ingest import Label
from .ioutil import atomic_write_json, atomic_write_text


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class SingleClassInput(ValueError):
    """ROC needs at least one positive and one negative."""


class UndefinedStatistic(ValueError):
    def __init__(self, name: str, denominator: str):
        self.statistic = name
        super().__init__(f"{name} undefined: {denominator} is zero")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points sorted by threshold descending, from (0,0) to (1,1)."""

    points: tuple
    thresholds: tuple
    auc: float


def _is_positive(label) -> bool:
    if isinstance(label, Label):
        return label == Label.GOOD
    if isinstance(label, (bool, np.bool_)):
        return bool(label)
    raise ValueError(f"labels must be Label or bool, got {type(label).__name__}")


def confusion(preds, truth) -> Confusion:
    preds = list(preds)
    truth = list(truth)
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truth)} truths")
    if not preds:
        raise EmptyInput("no samples")
    tp = fp = tn = fn = 0
    for p, t in zip(preds, truth):
        p_pos = _is_positive(p)
        t_pos = _is_positive(t)
        if p_pos and t_pos:
            tp += 1
        elif p_pos and not t_pos:
            fp += 1
        elif not p_pos and not t_pos:
            tn += 1
        else:
            fn += 1
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn)


def summary(c: Confusion) -> dict:
    """se, sp, acc, f1, ppv, npv; raises UndefinedStatistic on a zero denominator."""
    if c.tp + c.fn == 0:
        raise UndefinedStatistic("se", "tp+fn")
    if c.tn + c.fp == 0:
        raise UndefinedStatistic("sp", "tn+fp")
    if c.total == 0:
        raise UndefinedStatistic("acc", "total")
    if c.tp + c.fp == 0:
        raise UndefinedStatistic("ppv", "tp+fp")
    if c.tn + c.fn == 0:
        raise UndefinedStatistic("npv", "tn+fn")
    se = c.tp / (c.tp + c.fn)
    sp = c.tn / (c.tn + c.fp)
    ppv = c.tp / (c.tp + c.fp)
    npv = c.tn / (c.tn + c.fn)
    if ppv + se == 0:
        raise UndefinedStatistic("f1", "ppv+se")
    return {
        "se": se,
        "sp": sp,
        "acc": (c.tp + c.tn) / c.total,
        "f1": 2.0 * ppv * se / (ppv + se),
        "ppv": ppv,
        "npv": npv,
    }


def roc_auc(scores, truth) -> RocCurve:
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.array([_is_positive(t) for t in truth])
    if scores.shape[0] != positives.shape[0]:
        raise LengthMismatch(f"{scores.shape[0]} scores vs {positives.shape[0]} truths")
    n_pos = int(positives.sum())
    n_neg = int(positives.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput(f"{n_pos} positives, {n_neg} negatives")
    unique_desc = np.unique(scores)[::-1]
    points = [(0.0, 0.0)]
    thresholds = [float("inf")]
    tp = fp = 0
    auc = 0.0
    for threshold in unique_desc:
        at = scores == threshold
        tp += int(np.sum(at & positives))
        fp += int(np.sum(at & ~positives))
        fpr, tpr = fp / n_neg, tp / n_pos
        prev_fpr, prev_tpr = points[-1]
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append((fpr, tpr))
        thresholds.append(float(threshold))
    return RocCurve(points=tuple(points), thresholds=tuple(thresholds), auc=auc)


def save_metrics_json(doc: dict, path: str) -> None:
    atomic_write_json(path, doc)


def save_roc_csv(curve: RocCurve, path: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "fpr", "tpr"])
    for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
        writer.writerow([format(threshold, ".17g"), format(fpr, ".17g"), format(tpr, ".17g")])
    atomic_write_text(path, buf.getvalue())
