from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    mae: float
    mse: float
    r2: float


def metrics(pred, truth) -> Metrics:
    """MAE, MSE and coefficient of determination.

    ``r2`` is NaN when ``truth`` has zero variance (it is undefined there); spread
    below ``1e-12`` of the mean square counts as zero, to absorb rounding noise.
    """
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty and of equal length")
    err = truth - pred
    ss_res = float(np.sum(err * err))
    dev = truth - truth.mean()
    ss_tot = float(np.sum(dev * dev))
    scale = float(np.sum(truth * truth))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 1e-12 * scale and ss_tot > 0 else math.nan
    return Metrics(float(np.mean(np.abs(err))), ss_res / pred.size, r2)
