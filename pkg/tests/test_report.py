import numpy as np

from qppg.ingest import Label
from qppg.metrics import Confusion, roc_auc
from qppg.report import save_confusion_figure, save_roc_figure, save_segment_panel

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def is_png(path):
    with open(path, "rb") as fh:
        return fh.read(8) == PNG_MAGIC


def test_roc_figure(tmp_path):
    curve = roc_auc([0.9, 0.7, 0.4, 0.2], [Label.GOOD, Label.GOOD, Label.BAD, Label.BAD])
    path = str(tmp_path / "roc.png")
    save_roc_figure(curve, path)
    assert is_png(path)


def test_confusion_figure(tmp_path):
    path = str(tmp_path / "confusion.png")
    save_confusion_figure(Confusion(tp=50, fp=3, tn=40, fn=7), path)
    assert is_png(path)


def test_segment_panel(tmp_path):
    rng = np.random.default_rng(0)
    samples = rng.uniform(0, 1, 500)
    pixels = rng.uniform(0, 1, (20, 500))
    path = str(tmp_path / "panel.png")
    save_segment_panel(samples, 100.0, pixels, path,
                       reconstruction=samples * 0.9, segment_id="seg-1")
    assert is_png(path)
