import numpy as np
import pytest

from qppg.ingest import Label
from qppg.scsa import Signal
from qppg.sqi import (
    LinearModel,
    NonFiniteFeature,
    SingleClassData,
    SqiFeatures,
    ZeroMean,
    ZeroVariance,
    load_features_csv,
    load_model_json,
    logistic_loss_grad,
    predict_linear,
    save_features_csv,
    save_model_json,
    sqi_features,
    train_linear_baseline,
)


def sig(x, fs=100.0):
    return Signal(samples=np.asarray(x, dtype=np.float64), fs=fs)


def test_sine_period_has_zero_skewness():
    t = np.arange(500)
    y = np.sin(2 * np.pi * t / 500) + 2.0
    feats = sqi_features(sig(y))
    assert abs(feats.skewness) <= 1e-9


def test_perfusion_direct_formula():
    feats = sqi_features(sig(np.array([1.0, 3.0] * 250)))
    assert feats.perfusion == pytest.approx(100.0, abs=1e-12)


def test_kurtosis_of_normal_samples():
    rng = np.random.default_rng(12)
    feats = sqi_features(sig(rng.standard_normal(100_000) + 10.0))
    assert abs(feats.kurtosis - 3.0) <= 0.1


def test_moments_match_direct_sums():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.5, 2.0, 500)
    feats = sqi_features(sig(x))
    n = len(x)
    mu = sum(x) / n
    m2 = sum((v - mu) ** 2 for v in x) / n
    m3 = sum((v - mu) ** 3 for v in x) / n
    m4 = sum((v - mu) ** 4 for v in x) / n
    assert feats.skewness == pytest.approx(m3 / m2**1.5, rel=1e-12)
    assert feats.kurtosis == pytest.approx(m4 / m2**2, rel=1e-12)
    assert feats.perfusion == pytest.approx(100 * (max(x) - min(x)) / mu, rel=1e-12)


def test_degenerate_windows_rejected():
    with pytest.raises(ZeroVariance):
        sqi_features(sig(np.full(10, 3.0)))
    with pytest.raises(ZeroMean):
        sqi_features(sig(np.array([-1.0, 1.0] * 5)))


def test_perfusion_scale_invariance():
    rng = np.random.default_rng(8)
    x = rng.uniform(0.2, 1.5, 500)
    p1 = sqi_features(sig(x)).perfusion
    p2 = sqi_features(sig(7.3 * x)).perfusion
    assert abs(p1 - p2) <= 1e-9 * abs(p1)


def test_moment_affine_invariance():
    rng = np.random.default_rng(9)
    x = rng.uniform(0.2, 1.5, 500)
    f1 = sqi_features(sig(x))
    f2 = sqi_features(sig(2.5 * x + 4.0))
    assert abs(f1.skewness - f2.skewness) <= 1e-9
    assert abs(f1.kurtosis - f2.kurtosis) <= 1e-9


def fake_features(X):
    return [SqiFeatures(segment_id=str(i), skewness=row[0], kurtosis=row[1], perfusion=row[2])
            for i, row in enumerate(X)]


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    y = (rng.random(40) > 0.5).astype(np.float64)
    w = rng.normal(size=3) * 0.5
    b = 0.3
    _, grad_w, grad_b = logistic_loss_grad(w, b, X, y)
    eps = 1e-5
    for j in range(3):
        wp, wm = w.copy(), w.copy()
        wp[j] += eps
        wm[j] -= eps
        num = (logistic_loss_grad(wp, b, X, y)[0] - logistic_loss_grad(wm, b, X, y)[0]) / (2 * eps)
        assert abs(num - grad_w[j]) <= 1e-6
    num_b = (logistic_loss_grad(w, b + eps, X, y)[0] - logistic_loss_grad(w, b - eps, X, y)[0]) / (2 * eps)
    assert abs(num_b - grad_b) <= 1e-6


def test_separable_data_trains_to_perfect_accuracy():
    X = np.array([[x, 0.0, 0.0] for x in (-3.0, -2.0, -1.5, 1.5, 2.0, 3.0)])
    labels = [Label.BAD] * 3 + [Label.GOOD] * 3
    model = train_linear_baseline(fake_features(X), labels, epochs=3000, lr=0.5)
    preds = [predict_linear(model, f) >= 0.5 for f in fake_features(X)]
    assert preds == [False] * 3 + [True] * 3


def test_training_invariant_to_sample_order():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(30, 3))
    labels = [Label.GOOD if rng.random() > 0.5 else Label.BAD for _ in range(30)]
    if all(l == labels[0] for l in labels):
        labels[0] = Label.BAD if labels[0] == Label.GOOD else Label.GOOD
    feats = fake_features(X)
    m1 = train_linear_baseline(feats, labels, epochs=200, lr=0.1)
    perm = rng.permutation(30)
    m2 = train_linear_baseline([feats[i] for i in perm], [labels[i] for i in perm],
                               epochs=200, lr=0.1)
    assert np.array_equal(m1.weights, m2.weights)
    assert m1.bias == m2.bias
    assert m1.final_loss == m2.final_loss


def test_loss_non_increasing_small_lr():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    y = (X @ np.array([1.0, -2.0, 0.5]) + 0.2 * rng.standard_normal(60) > 0)
    labels = [Label.GOOD if v else Label.BAD for v in y]
    feats = fake_features(X)
    losses = []
    for epochs in range(1, 40):
        model = train_linear_baseline(feats, labels, epochs=epochs, lr=0.01)
        losses.append(model.final_loss)
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_training_input_validation():
    X = np.ones((4, 3))
    with pytest.raises(SingleClassData):
        train_linear_baseline(fake_features(X), [Label.GOOD] * 4)
    X2 = X.copy()
    X2[1, 2] = np.nan
    with pytest.raises(NonFiniteFeature):
        train_linear_baseline(fake_features(X2), [Label.GOOD, Label.BAD, Label.GOOD, Label.BAD])


def test_predict_zero_model_gives_half():
    model = LinearModel(weights=np.zeros(3), bias=0.0,
                        feature_means=np.zeros(3), feature_stds=np.ones(3))
    f = SqiFeatures("x", 1.0, 2.0, 3.0)
    assert predict_linear(model, f) == 0.5


def test_predict_saturates_with_large_bias():
    model = LinearModel(weights=np.zeros(3), bias=50.0,
                        feature_means=np.zeros(3), feature_stds=np.ones(3))
    f = SqiFeatures("x", 0.0, 0.0, 0.0)
    assert predict_linear(model, f) > 1.0 - 1e-12


def test_predict_matches_hand_computed_sigmoid():
    model = LinearModel(weights=np.array([0.5, -1.0, 2.0]), bias=0.25,
                        feature_means=np.array([1.0, 2.0, 3.0]),
                        feature_stds=np.array([2.0, 4.0, 5.0]))
    f = SqiFeatures("x", 2.0, 1.0, 4.5)
    z = 0.5 * (2.0 - 1.0) / 2.0 + (-1.0) * (1.0 - 2.0) / 4.0 + 2.0 * (4.5 - 3.0) / 5.0 + 0.25
    expect = 1.0 / (1.0 + np.exp(-z))
    assert abs(predict_linear(model, f) - expect) <= 1e-12


def test_model_stds_must_be_positive():
    with pytest.raises(ValueError):
        LinearModel(weights=np.zeros(3), bias=0.0,
                    feature_means=np.zeros(3), feature_stds=np.array([1.0, 0.0, 1.0]))


def test_feature_csv_roundtrip(tmp_path):
    rows = [(SqiFeatures("a", 0.1, 2.9, 140.0), Label.GOOD),
            (SqiFeatures("b", -0.4, 5.5, 900.0), Label.BAD)]
    path = str(tmp_path / "features.csv")
    save_features_csv(rows, path)
    back = load_features_csv(path)
    assert back == rows
    header = open(path).readline().strip()
    assert header == "segment_id,skewness,kurtosis,perfusion,label"


def test_model_json_roundtrip(tmp_path):
    model = LinearModel(weights=np.array([0.5, -1.0, 2.0]), bias=0.25,
                        feature_means=np.array([1.0, 2.0, 3.0]),
                        feature_stds=np.array([2.0, 4.0, 5.0]), final_loss=0.31)
    path = str(tmp_path / "model.json")
    save_model_json(model, path)
    back = load_model_json(path)
    assert np.array_equal(back.weights, model.weights)
    assert back.bias == model.bias
    assert np.array_equal(back.feature_means, model.feature_means)
    assert np.array_equal(back.feature_stds, model.feature_stds)
    assert back.final_loss == model.final_loss
