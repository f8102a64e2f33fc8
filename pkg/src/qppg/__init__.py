"""PPG signal-quality toolkit.

Converts 1-D pulse waveforms into 2-D images through the discrete spectrum
of a Schrodinger operator, scores them with a slim convolutional network,
and evaluates against classical signal-quality-index baselines.
"""

from .cnn import WeightBundle, forward
from .ingest import Label, SegmentRecord, normalize_amplitude, window_signal
from .metrics import confusion, roc_auc, summary
from .qpr import QprImage, SweepConfig, quantum_pattern_recognition, stft_image, to_grayscale
from .scsa import (
    ComponentStack,
    SchrodingerSpectrum,
    Signal,
    build_operator,
    scsa_reconstruction,
    solve_negative_spectrum,
)
from .sqi import predict_linear, sqi_features, train_linear_baseline
from .synth import SynthConfig, gen_bad, gen_dataset, gen_good

__version__ = "0.1.0"

__all__ = [
    "ComponentStack",
    "Label",
    "QprImage",
    "SchrodingerSpectrum",
    "SegmentRecord",
    "Signal",
    "SweepConfig",
    "SynthConfig",
    "WeightBundle",
    "build_operator",
    "confusion",
    "forward",
    "gen_bad",
    "gen_dataset",
    "gen_good",
    "normalize_amplitude",
    "predict_linear",
    "quantum_pattern_recognition",
    "roc_auc",
    "scsa_reconstruction",
    "solve_negative_spectrum",
    "sqi_features",
    "stft_image",
    "summary",
    "to_grayscale",
    "train_linear_baseline",
    "window_signal",
    "__version__",
]
