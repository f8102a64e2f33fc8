import numpy as np
import pytest


def pulse_train(n=500, fs=100.0, bpm=72.0, seed=0):
    """Unit-normalized periodic double-bump waveform, PPG-like."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    period = 60.0 / bpm
    phase = (t % period) / period
    y = np.exp(-0.5 * ((phase - 0.25) / 0.09) ** 2)
    y += 0.35 * np.exp(-0.5 * ((phase - 0.60) / 0.14) ** 2)
    y += 0.01 * rng.standard_normal(n)
    y -= y.min()
    y /= y.max()
    return y


@pytest.fixture(scope="session")
def ppg_like():
    return pulse_train()


def make_random_bundle(seed=42, zero_weights=False):
    """Full architecture bundle; values are float32-representable."""
    from qppg.cnn import WeightBundle, expected_shapes

    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in expected_shapes().items():
        if zero_weights:
            arr = np.zeros(shape, dtype=np.float32)
        else:
            arr = (rng.standard_normal(shape) * 0.25).astype(np.float32)
        if name.endswith(".bn.var"):
            arr = np.abs(arr) + np.float32(0.5)
        arrays[name] = arr.astype(np.float64)
    return WeightBundle(arrays)
