"""Classification and regression scores used to compare the cascade with and
without the knowledge filter.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UndefinedMetric


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class RegressionMetrics:
    cc: float
    rmse: float
    aem: float
    si: float

    def to_dict(self):
        return {"cc": self.cc, "rmse": self.rmse, "aem": self.aem, "si": self.si}


def confusion_counts(y_true, y_pred):
    """Counts with Class 1 as the positive class."""
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    if t.shape != p.shape:
        raise DimensionMismatch("label vectors differ in length")
    return ConfusionCounts(tp=int((t & p).sum()), fp=int((~t & p).sum()),
                           tn=int((~t & ~p).sum()), fn=int((t & ~p).sum()))


def g_metric_means(c):
    """Geometric mean of sensitivity and specificity."""
    if c.tp + c.fn == 0:
        raise UndefinedMetric("g_metric_means", "no positive patterns")
    if c.tn + c.fp == 0:
        raise UndefinedMetric("g_metric_means", "no negative patterns")
    sensitivity = c.tp / (c.tp + c.fn)
    specificity = c.tn / (c.tn + c.fp)
    return math.sqrt(sensitivity * specificity)


def regression_metrics(predicted, observed):
    """CC (Pearson), RMSE, AEM (mean absolute error) and SI (RMSE / mean observed)."""
    p = np.asarray(predicted, dtype=float)
    o = np.asarray(observed, dtype=float)
    if p.shape != o.shape or p.ndim != 1:
        raise DimensionMismatch("predicted and observed must be 1-D and equally long")
    if p.size == 0:
        raise UndefinedMetric("all", "empty input")
    err = p - o
    rmse = math.sqrt(float(np.mean(err ** 2)))
    aem = float(np.mean(np.abs(err)))
    mean_obs = float(o.mean())
    if mean_obs == 0:
        raise UndefinedMetric("si", "observed mean is zero", {"rmse": rmse, "aem": aem})
    si = rmse / mean_obs
    dp, do = p - p.mean(), o - mean_obs
    sp, so = math.sqrt(float(dp @ dp)), math.sqrt(float(do @ do))
    partial = {"rmse": rmse, "aem": aem, "si": si}
    if sp == 0:
        raise UndefinedMetric("cc", "predicted values are constant", partial)
    if so == 0:
        raise UndefinedMetric("cc", "observed values are constant", partial)
    cc = float(dp @ do) / (sp * so)
    return RegressionMetrics(cc=max(-1.0, min(1.0, cc)), rmse=rmse, aem=aem, si=si)
