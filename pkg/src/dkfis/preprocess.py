"""Z-score scaling of the predictor logs and min-max scaling of the target.

Both scalers are fitted on the training split only and are plain affine maps,
so out-of-range test values pass through unclamped.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import PREDICTORS
from .errors import DegenerateColumn, InvalidSpec


@dataclass(frozen=True)
class ZScoreScaler:
    mean: tuple
    standard_deviation: tuple
    names: tuple = PREDICTORS

    def __post_init__(self):
        if any(not sd > 0 for sd in self.standard_deviation):
            raise InvalidSpec("standard_deviation must be > 0 for every predictor")

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        return (X - np.asarray(self.mean)) / np.asarray(self.standard_deviation)

    def to_dict(self):
        return {"mean": list(self.mean), "standard_deviation": list(self.standard_deviation),
                "names": list(self.names)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["mean"]), tuple(d["standard_deviation"]), tuple(d["names"]))


def fit_zscore(train, names=PREDICTORS):
    """Fit per-column mean and sample (n-1) standard deviation.

    ``train`` may be a Dataset or an (n, k) array.
    """
    X = train.predictors() if hasattr(train, "predictors") else np.asarray(train, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DegenerateColumn(names[0] if names else "0")
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    for j, s in enumerate(sd):
        if not s > 0:
            raise DegenerateColumn(names[j] if j < len(names) else str(j))
    return ZScoreScaler(tuple(float(m) for m in mean), tuple(float(s) for s in sd),
                        tuple(names[: X.shape[1]]))


def apply_zscore(scaler, predictors):
    return scaler.transform(predictors)


@dataclass(frozen=True)
class MinMaxScaler:
    min_x: float
    max_x: float
    new_min_x: float = 0.0
    new_max_x: float = 1.0

    def __post_init__(self):
        if not self.max_x > self.min_x:
            raise InvalidSpec("max_x must exceed min_x")
        if not self.new_max_x > self.new_min_x:
            raise InvalidSpec("new_max_x must exceed new_min_x")

    def to_dict(self):
        return {"min_x": self.min_x, "max_x": self.max_x,
                "new_min_x": self.new_min_x, "new_max_x": self.new_max_x}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def fit_minmax(targets, new_min_x=0.0, new_max_x=1.0):
    y = np.asarray(targets, dtype=float)
    if y.size == 0 or not y.max() > y.min():
        raise DegenerateColumn("target")
    return MinMaxScaler(float(y.min()), float(y.max()), float(new_min_x), float(new_max_x))


def apply_minmax(scaler, val):
    s = scaler
    return (np.asarray(val, dtype=float) - s.min_x) / (s.max_x - s.min_x) \
        * (s.new_max_x - s.new_min_x) + s.new_min_x


def invert_minmax(scaler, normalized_val):
    s = scaler
    return (np.asarray(normalized_val, dtype=float) - s.new_min_x) / (s.new_max_x - s.new_min_x) \
        * (s.max_x - s.min_x) + s.min_x
