"""Rule-based signal quality indices and a trainable logistic baseline.

Three classical indices are computed per segment: skewness, kurtosis and
the perfusion index. All three use population central moments (kurtosis is
non-excess; a normal signal scores about 3). Perfusion must be computed on
the raw, pre-normalization window -- min-max normalization would pin its
numerator to 1.

The baseline classifier is a logistic regression fit by full-batch gradient
descent on standardized features, standing in for heavier kernel methods.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .ingest import Label
from .ioutil import atomic_write_text
from .scsa import Signal

FEATURE_NAMES = ("skewness", "kurtosis", "perfusion")


class ZeroVariance(ValueError):
    """Moment ratios are undefined for a constant window."""


class ZeroMean(ValueError):
    """Perfusion is undefined when the window mean is zero."""


class SingleClassData(ValueError):
    """Training needs at least one sample per class."""


class NonFiniteFeature(ValueError):
    pass


@dataclass(frozen=True)
class SqiFeatures:
    segment_id: str
    skewness: float
    kurtosis: float
    perfusion: float

    def vector(self) -> np.ndarray:
        return np.array([self.skewness, self.kurtosis, self.perfusion])


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    final_loss: float = float("nan")

    def __post_init__(self):
        if np.any(self.feature_stds <= 0):
            raise ValueError("feature stds must be > 0")


def sqi_features(signal: Signal, segment_id: str = "") -> SqiFeatures:
    """Skewness, kurtosis and perfusion of a raw (pre-normalization) window.

    skewness = m3 / m2^1.5 and kurtosis = m4 / m2^2 with population central
    moments; perfusion = 100 * (max - min) / mean.
    """
    x = signal.samples
    mean = float(x.mean())
    centered = x - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise ZeroVariance("constant window has no defined skewness/kurtosis")
    skewness = float(np.mean(centered**3)) / m2**1.5
    kurtosis = float(np.mean(centered**4)) / m2**2
    if mean == 0.0:
        raise ZeroMean("zero-mean window has no defined perfusion")
    perfusion = 100.0 * float(x.max() - x.min()) / mean
    return SqiFeatures(segment_id=segment_id, skewness=skewness,
                       kurtosis=kurtosis, perfusion=perfusion)


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy and its analytic gradient.

    Uses the softplus form log(1+e^z) - y*z, stable for large |z|.
    """
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = _sigmoid(z)
    grad_w = X.T @ (p - y) / X.shape[0]
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def train_linear_baseline(features, labels, epochs: int = 1500, lr: float = 0.2,
                          seed: int = 0) -> LinearModel:
    """Fit the logistic baseline on standardized SQI features.

    Good is the positive class. Samples are canonically sorted before any
    accumulation, so the fit is bit-identical under input shuffling (the
    convex full-batch objective is order-free; the sort makes the float
    summation order-free too). Weights start at zero; ``seed`` is accepted
    for interface stability and recorded by the CLI config echo.
    """
    del seed
    X = np.asarray([f.vector() for f in features], dtype=np.float64)
    y = np.asarray([1.0 if l == Label.GOOD else 0.0 for l in labels])
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("feature matrix contains NaN or infinity")
    if y.min() == y.max():
        raise SingleClassData("need at least one good and one bad sample")
    order = np.lexsort((y,) + tuple(X[:, j] for j in reversed(range(X.shape[1]))))
    X = X[order]
    y = y[order]
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0  # constant feature carries no gradient
    Xs = (X - means) / stds
    w = np.zeros(X.shape[1])
    b = 0.0
    loss = float("nan")
    for _ in range(epochs):
        loss, grad_w, grad_b = logistic_loss_grad(w, b, Xs, y)
        w -= lr * grad_w
        b -= lr * grad_b
    return LinearModel(weights=w, bias=b, feature_means=means,
                       feature_stds=stds, final_loss=loss)


def predict_linear(model: LinearModel, features: SqiFeatures) -> float:
    """Probability that the segment is good."""
    x = (features.vector() - model.feature_means) / model.feature_stds
    return float(_sigmoid(np.array([x @ model.weights + model.bias]))[0])


def save_features_csv(rows, path: str) -> None:
    """rows: iterable of (SqiFeatures, Label)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_id", "skewness", "kurtosis", "perfusion", "label"])
    for feats, label in rows:
        writer.writerow([feats.segment_id, format(feats.skewness, ".17g"),
                         format(feats.kurtosis, ".17g"),
                         format(feats.perfusion, ".17g"), label.value])
    atomic_write_text(path, buf.getvalue())


def load_features_csv(path: str):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            feats = SqiFeatures(segment_id=row["segment_id"],
                                skewness=float(row["skewness"]),
                                kurtosis=float(row["kurtosis"]),
                                perfusion=float(row["perfusion"]))
            rows.append((feats, Label(row["label"])))
    return rows


def save_model_json(model: LinearModel, path: str, extra: dict | None = None) -> None:
    doc = {
        "features": list(FEATURE_NAMES),
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "feature_means": [float(v) for v in model.feature_means],
        "feature_stds": [float(v) for v in model.feature_stds],
        "final_loss": model.final_loss,
    }
    if extra:
        doc.update(extra)
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model_json(path: str) -> LinearModel:
    with open(path) as fh:
        doc = json.load(fh)
    return LinearModel(weights=np.array(doc["weights"], dtype=np.float64),
                       bias=float(doc["bias"]),
                       feature_means=np.array(doc["feature_means"], dtype=np.float64),
                       feature_stds=np.array(doc["feature_stds"], dtype=np.float64),
                       final_loss=float(doc["final_loss"]))
