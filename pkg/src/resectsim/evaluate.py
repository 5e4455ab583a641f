"""Segmentation evaluation utilities: Dice score, probability thresholding,
and median/IQR aggregation (linear-interpolation quantiles)."""

from dataclasses import dataclass

import numpy as np

from resectsim.volume import BinaryMask, ScalarVolume, grids_match

__all__ = ["ScoreSummary", "dice", "threshold_mask", "median_iqr"]


@dataclass(frozen=True)
class ScoreSummary:
    """Median and interquartile range of a set of scores."""

    median: float
    iqr: float
    n: int

    def __str__(self):
        return f"median (IQR): {self.median:.3f} ({self.iqr:.3f}), n={self.n}"


def dice(pred: BinaryMask, gt: BinaryMask) -> float:
    """Dice overlap 2|A.B| / (|A|+|B|); defined as 1.0 when both are empty."""
    grids_match(pred, gt, "prediction and ground truth")
    a = pred.as_bool()
    b = gt.as_bool()
    denominator = int(a.sum()) + int(b.sum())
    if denominator == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / denominator


def threshold_mask(prob: ScalarVolume, t: float = 0.5) -> BinaryMask:
    """Binarize a probability map: 1 exactly where ``prob >= t``."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return BinaryMask(prob.grid, (prob.data >= t).astype(np.uint8))


def median_iqr(scores) -> ScoreSummary:
    """Median and Q3 - Q1 with linear interpolation between closest ranks."""
    values = np.asarray(list(scores), dtype=np.float64)
    if values.size == 0:
        raise ValueError("median_iqr requires at least one score")
    q1, q2, q3 = np.percentile(values, [25.0, 50.0, 75.0], method="linear")
    return ScoreSummary(float(q2), float(q3 - q1), int(values.size))
