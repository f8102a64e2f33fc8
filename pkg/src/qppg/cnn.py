"""Forward-pass engine for the slim convolutional quality classifier.

Tensors are float64 numpy arrays laid out (channels, height, width),
C-contiguous, so channel-major then row-major with width varying fastest.

Fixed architecture (input 1x20x500):

    Conv 7x7/16 (stride 1, pad 3) + BN + ReLU
    MaxPool 2x2/2                      -> 16x10x250
    Slim1 (squeeze 16, expand 24)      -> 48x10x250
    MaxPool                            -> 48x5x125
    Slim2 (squeeze 24, expand 36)      -> 72x5x125
    MaxPool                            -> 72x2x62
    Slim3 (squeeze 36, expand 48)      -> 96x2x62
    GAP -> Dense 64 + ReLU -> Dropout(0.5, identity at inference)
    Dense 1 -> sigmoid

A slim module squeezes with a 1x1 conv, then runs two branches on the
squeezed map -- branch A a 1x1 conv, branch B a depthwise 3x3 followed by a
pointwise 1x1 -- concatenates them to 2*expand channels, adds a projected
skip (1x1 conv + BN, no activation) of the module input, and applies a
final ReLU. Every conv here is conv+BN+ReLU unless stated otherwise.

Inference has no training concerns: BN uses stored running statistics and
dropout is the identity.
"""

from __future__ import annotations

import numpy as np

BN_EPS = 1e-5

INPUT_SHAPE = (1, 20, 500)
STEM_CHANNELS = 16
# (input channels, squeeze channels, expand channels) per slim module
SLIM_SPECS = ((16, 16, 24), (48, 24, 36), (72, 36, 48))
GAP_CHANNELS = 96
HIDDEN_UNITS = 64

# stage name -> output shape for a spec-shaped input
STAGE_SHAPES = (
    ("input", (1, 20, 500)),
    ("stem", (16, 20, 500)),
    ("pool1", (16, 10, 250)),
    ("slim1", (48, 10, 250)),
    ("pool2", (48, 5, 125)),
    ("slim2", (72, 5, 125)),
    ("pool3", (72, 2, 62)),
    ("slim3", (96, 2, 62)),
    ("gap", (96,)),
    ("fc1", (64,)),
    ("fc2", (1,)),
)


class ShapeMismatch(ValueError):
    pass


class NonPositiveVar(ValueError):
    """Batch-norm running variance must be strictly positive."""


class BundleShapeError(ValueError):
    """Weight bundle does not satisfy the architecture; lists every offender."""

    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__("bad weight bundle: " + "; ".join(self.offenders))


class WeightBundle:
    """Named parameter arrays keyed by dotted stage names."""

    def __init__(self, arrays: dict):
        self.arrays = {name: np.asarray(a, dtype=np.float64) for name, a in arrays.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self.arrays

    def names(self):
        return sorted(self.arrays)

    def parameter_count(self) -> int:
        return sum(a.size for a in self.arrays.values())


def _bn_names(prefix: str, channels: int) -> dict:
    return {f"{prefix}.bn.{stat}": (channels,) for stat in ("gamma", "beta", "mean", "var")}


def expected_shapes() -> dict:
    """name -> exact shape required of a full bundle."""
    shapes = {
        "stem.conv.w": (STEM_CHANNELS, 1, 7, 7),
        "stem.conv.b": (STEM_CHANNELS,),
    }
    shapes.update(_bn_names("stem", STEM_CHANNELS))
    for k, (c_in, squeeze, expand) in enumerate(SLIM_SPECS, start=1):
        p = f"slim{k}"
        shapes[f"{p}.squeeze.conv.w"] = (squeeze, c_in, 1, 1)
        shapes[f"{p}.squeeze.conv.b"] = (squeeze,)
        shapes.update(_bn_names(f"{p}.squeeze", squeeze))
        shapes[f"{p}.brA.conv.w"] = (expand, squeeze, 1, 1)
        shapes[f"{p}.brA.conv.b"] = (expand,)
        shapes.update(_bn_names(f"{p}.brA", expand))
        shapes[f"{p}.brB.dw.conv.w"] = (squeeze, 1, 3, 3)
        shapes[f"{p}.brB.dw.conv.b"] = (squeeze,)
        shapes.update(_bn_names(f"{p}.brB.dw", squeeze))
        shapes[f"{p}.brB.pw.conv.w"] = (expand, squeeze, 1, 1)
        shapes[f"{p}.brB.pw.conv.b"] = (expand,)
        shapes.update(_bn_names(f"{p}.brB.pw", expand))
        shapes[f"{p}.skip.conv.w"] = (2 * expand, c_in, 1, 1)
        shapes[f"{p}.skip.conv.b"] = (2 * expand,)
        shapes.update(_bn_names(f"{p}.skip", 2 * expand))
    shapes["head.fc1.w"] = (HIDDEN_UNITS, GAP_CHANNELS)
    shapes["head.fc1.b"] = (HIDDEN_UNITS,)
    shapes["head.fc2.w"] = (1, HIDDEN_UNITS)
    shapes["head.fc2.b"] = (1,)
    return shapes


def validate_bundle(bundle: WeightBundle) -> None:
    """Raise BundleShapeError listing every missing/misshapen/extra array."""
    offenders = []
    expected = expected_shapes()
    for name, shape in sorted(expected.items()):
        if name not in bundle:
            offenders.append(f"{name}: missing")
        elif bundle[name].shape != shape:
            offenders.append(f"{name}: shape {bundle[name].shape}, expected {shape}")
        elif name.endswith(".bn.var") and np.any(bundle[name] <= 0):
            offenders.append(f"{name}: non-positive variance")
    for name in bundle.names():
        if name not in expected:
            offenders.append(f"{name}: unexpected array")
    if offenders:
        raise BundleShapeError(offenders)


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Direct cross-correlation with zero padding (im2col matmul)."""
    if x.ndim != 3 or w.ndim != 4:
        raise ShapeMismatch(f"x ndim {x.ndim}, w ndim {w.ndim}")
    c_in, h, wd = x.shape
    c_out, c_in_w, kh, kw = w.shape
    if c_in_w != c_in:
        raise ShapeMismatch(f"input has {c_in} channels, kernel expects {c_in_w}")
    if b.shape != (c_out,):
        raise ShapeMismatch(f"bias shape {b.shape}, expected {(c_out,)}")
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeMismatch("kernel larger than padded input")
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::stride, ::stride]  # (c_in, oh, ow, kh, kw)
    cols = win.transpose(1, 2, 0, 3, 4).reshape(oh * ow, c_in * kh * kw)
    out = cols @ w.reshape(c_out, -1).T + b
    return np.ascontiguousarray(out.T.reshape(c_out, oh, ow))


def depthwise_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int = 0) -> np.ndarray:
    """Per-channel convolution, no cross-channel mixing; one kxk kernel per channel."""
    if x.ndim != 3 or w.ndim != 4:
        raise ShapeMismatch(f"x ndim {x.ndim}, w ndim {w.ndim}")
    c, h, wd = x.shape
    if w.shape[0] != c or w.shape[1] != 1:
        raise ShapeMismatch(f"kernel shape {w.shape}, expected ({c}, 1, k, k)")
    if b.shape != (c,):
        raise ShapeMismatch(f"bias shape {b.shape}, expected {(c,)}")
    kh, kw = w.shape[2], w.shape[3]
    if h + 2 * pad < kh or wd + 2 * pad < kw:
        raise ShapeMismatch("kernel larger than padded input")
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return np.einsum("cijuv,cuv->cij", win, w[:, 0], optimize=True) + b[:, None, None]


def batchnorm_infer(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                    mean: np.ndarray, var: np.ndarray, eps: float = BN_EPS) -> np.ndarray:
    """y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel."""
    c = x.shape[0]
    for name, arr in (("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)):
        if arr.shape != (c,):
            raise ShapeMismatch(f"{name} shape {arr.shape}, expected {(c,)}")
    if np.any(var <= 0):
        raise NonPositiveVar("running variance must be > 0")
    scale = gamma / np.sqrt(var + eps)
    shift = beta - mean * scale
    return x * scale[:, None, None] + shift[:, None, None]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 max pooling with stride 2; trailing odd row/column dropped."""
    c, h, w = x.shape
    oh, ow = h // 2, w // 2
    if oh < 1 or ow < 1:
        raise ShapeMismatch(f"input {h}x{w} too small for 2x2 pooling")
    trimmed = x[:, : 2 * oh, : 2 * ow]
    return trimmed.reshape(c, oh, 2, ow, 2).max(axis=(2, 4))


def gap(x: np.ndarray) -> np.ndarray:
    """Global average pooling: per-channel spatial mean."""
    return x.reshape(x.shape[0], -1).mean(axis=1)


def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if w.shape[1] != x.shape[0] or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"dense shapes x{x.shape} w{w.shape} b{b.shape}")
    return w @ x + b


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                   np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return out if out.ndim else float(out)


def _conv_bn_relu(x, bundle, prefix, stride=1, pad=0):
    x = conv2d(x, bundle[f"{prefix}.conv.w"], bundle[f"{prefix}.conv.b"], stride=stride, pad=pad)
    x = batchnorm_infer(x, bundle[f"{prefix}.bn.gamma"], bundle[f"{prefix}.bn.beta"],
                        bundle[f"{prefix}.bn.mean"], bundle[f"{prefix}.bn.var"])
    return relu(x)


def slim_module(x: np.ndarray, bundle: WeightBundle, index: int) -> np.ndarray:
    """Squeeze, dual branch (1x1 | depthwise 3x3 + pointwise), projected skip."""
    p = f"slim{index}"
    squeezed = _conv_bn_relu(x, bundle, f"{p}.squeeze")
    branch_a = _conv_bn_relu(squeezed, bundle, f"{p}.brA")
    branch_b = depthwise_conv2d(squeezed, bundle[f"{p}.brB.dw.conv.w"],
                                bundle[f"{p}.brB.dw.conv.b"], pad=1)
    branch_b = relu(batchnorm_infer(branch_b, bundle[f"{p}.brB.dw.bn.gamma"],
                                    bundle[f"{p}.brB.dw.bn.beta"],
                                    bundle[f"{p}.brB.dw.bn.mean"],
                                    bundle[f"{p}.brB.dw.bn.var"]))
    branch_b = _conv_bn_relu(branch_b, bundle, f"{p}.brB.pw")
    merged = np.concatenate([branch_a, branch_b], axis=0)
    skip = conv2d(x, bundle[f"{p}.skip.conv.w"], bundle[f"{p}.skip.conv.b"])
    skip = batchnorm_infer(skip, bundle[f"{p}.skip.bn.gamma"], bundle[f"{p}.skip.bn.beta"],
                           bundle[f"{p}.skip.bn.mean"], bundle[f"{p}.skip.bn.var"])
    return relu(merged + skip)


def forward(pixels: np.ndarray, bundle: WeightBundle, trace: list | None = None) -> float:
    """Probability that a 20x500 image shows a good segment.

    ``trace``, when given, collects (stage, shape) pairs for the shape ledger.
    """
    validate_bundle(bundle)
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape != INPUT_SHAPE[1:]:
        raise ShapeMismatch(f"input shape {pixels.shape}, expected {INPUT_SHAPE[1:]}")
    x = pixels[None, :, :]

    def note(stage, arr):
        if trace is not None:
            trace.append((stage, arr.shape))

    note("input", x)
    x = _conv_bn_relu(x, bundle, "stem", pad=3)
    note("stem", x)
    x = maxpool2(x)
    note("pool1", x)
    for k in range(1, len(SLIM_SPECS) + 1):
        x = slim_module(x, bundle, k)
        note(f"slim{k}", x)
        if k < len(SLIM_SPECS):
            x = maxpool2(x)
            note(f"pool{k + 1}", x)
    v = gap(x)
    note("gap", v)
    v = relu(dense(v, bundle["head.fc1.w"], bundle["head.fc1.b"]))
    note("fc1", v)
    # dropout(0.5) is identity at inference (trainer uses inverted dropout)
    z = dense(v, bundle["head.fc2.w"], bundle["head.fc2.b"])
    note("fc2", z)
    return float(sigmoid(z[0]))
