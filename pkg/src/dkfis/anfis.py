"""First-order Takagi-Sugeno ANFIS with grid-partitioned generalized-bell
premises, trained by the hybrid rule: consequents by (ridge) least squares,
premises by batch gradient descent with back-propagated error.

Shapes used throughout:

    X           (n_samples, n_inputs)
    premises    (n_inputs, n_mf, 3)        columns a (half-width), b (slope), c (center)
    combos      (n_rules, n_inputs)        MF index of each input in each rule
    consequents (n_rules, n_inputs + 1)    linear coefficients, constant last
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, InvalidSpec, NumericalFailure, TooFewPatterns

MIN_PARAM = 1e-6
TINY_FIRING = 1e-300


@dataclass(frozen=True)
class GBellParams:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidSpec("gbell requires a > 0 and b > 0")


def gbell(x, p):
    """Generalized bell 1 / (1 + |(x - c) / a|^(2b)); ``p`` is GBellParams or (a, b, c)."""
    a, b, c = (p.a, p.b, p.c) if isinstance(p, GBellParams) else p
    return 1.0 / (1.0 + np.abs((np.asarray(x, dtype=float) - c) / a) ** (2.0 * b))


@dataclass(frozen=True)
class AnfisConfig:
    mfs_per_input: int = 2
    epochs: int = 100
    initial_step: float = 0.01
    step_increase: float = 1.1
    step_decrease: float = 0.9
    ridge_lambda: float = 1e-8

    def __post_init__(self):
        if self.mfs_per_input < 2:
            raise InvalidSpec("mfs_per_input must be >= 2")
        if self.epochs < 1:
            raise InvalidSpec("epochs must be positive")
        if not 0 < self.step_decrease < 1 < self.step_increase:
            raise InvalidSpec("need 0 < step_decrease < 1 < step_increase")
        if not self.initial_step > 0 or self.ridge_lambda < 0:
            raise InvalidSpec("initial_step must be > 0 and ridge_lambda >= 0")


def rule_grid(n_inputs, n_mf):
    return np.array(list(itertools.product(range(n_mf), repeat=n_inputs)), dtype=int)


@dataclass
class AnfisModel:
    premises: np.ndarray
    consequents: np.ndarray
    training_history: list = field(default_factory=list)

    def __post_init__(self):
        self.premises = np.asarray(self.premises, dtype=float)
        self.consequents = np.asarray(self.consequents, dtype=float)
        n_in, n_mf, _ = self.premises.shape
        self.combos = rule_grid(n_in, n_mf)
        if self.consequents.shape != (len(self.combos), n_in + 1):
            raise InvalidSpec(
                f"consequents must have shape {(len(self.combos), n_in + 1)}, "
                f"got {self.consequents.shape}")

    @property
    def n_inputs(self):
        return self.premises.shape[0]

    @property
    def n_rules(self):
        return len(self.combos)

    def copy(self):
        return AnfisModel(self.premises.copy(), self.consequents.copy(),
                          list(self.training_history))

    def to_dict(self):
        return {"premises": self.premises.tolist(), "consequents": self.consequents.tolist(),
                "training_history": list(self.training_history)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["premises"]), np.array(d["consequents"]),
                   list(d["training_history"]))


def _check_inputs(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise DimensionMismatch(f"expected {model.n_inputs} inputs, got {X.shape[1]}")
    return X


def memberships(premises, X):
    """Grades of every MF at every input, shape (n_samples, n_inputs, n_mf)."""
    a, b, c = premises[..., 0], premises[..., 1], premises[..., 2]
    z = (X[:, :, None] - c[None]) / a[None]
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.abs(z) ** (2.0 * b[None]))


def _selected_grades(model, M):
    # G[n, r, i] = grade of the MF that rule r uses on input i
    idx = np.arange(model.n_inputs)
    return M[:, idx[None, :], model.combos]


def _layers(model, X):
    M = memberships(model.premises, X)
    G = _selected_grades(model, M)
    w = G.prod(axis=2)
    total = w.sum(axis=1)
    ok = total >= TINY_FIRING
    wn = np.zeros_like(w)
    wn[ok] = w[ok] / total[ok, None]
    rule_out = X @ model.consequents[:, :-1].T + model.consequents[:, -1]
    out = (wn * rule_out).sum(axis=1)
    out[~ok] = model.consequents[:, -1].mean()
    return M, G, w, total, ok, wn, rule_out, out


def forward(model, x):
    """Output and raw firing strengths for a single pattern ``x``."""
    X = _check_inputs(model, x)
    if X.shape[0] != 1:
        raise DimensionMismatch("forward() takes a single pattern; use predict() for batches")
    layers = _layers(model, X)
    return float(layers[-1][0]), layers[2][0]


def predict(model, X):
    """Outputs for a batch (n, n_inputs) or a single pattern (returns float)."""
    single = np.ndim(X) == 1
    X = _check_inputs(model, X)
    out = _layers(model, X)[-1]
    return float(out[0]) if single else out


def regressor_matrix(model, X):
    """Rows: for each pattern, concat over rules of normalized weight * [x, 1]."""
    X = _check_inputs(model, X)
    wn = _layers(model, X)[5]
    X1 = np.hstack([X, np.ones((X.shape[0], 1))])
    return (wn[:, :, None] * X1[:, None, :]).reshape(X.shape[0], -1)


def lse_consequents(model, X, y, ridge_lambda=1e-8):
    """Ridge least-squares consequents for the model's current premises.

    The target mean is an unpenalized offset: normalized weights sum to one,
    so adding it to every rule constant shifts the output by exactly that
    amount. Ridge then only shrinks deviations from the mean, and a constant
    target is reproduced without shrinkage bias.
    """
    A = regressor_matrix(model, X)
    y = np.asarray(y, dtype=float)
    if A.shape[0] < 1 or A.shape[0] != len(y):
        raise DimensionMismatch("need at least one pattern and one target per pattern")
    p = A.shape[1]
    if ridge_lambda == 0 and np.linalg.matrix_rank(A) < p:
        raise NumericalFailure("rank-deficient regressor matrix with ridge_lambda = 0")
    offset = float(y.mean())
    normal = A.T @ A + ridge_lambda * np.eye(p)
    try:
        theta = linalg.cho_solve(linalg.cho_factor(normal), A.T @ (y - offset))
    except linalg.LinAlgError as exc:
        raise NumericalFailure(f"normal equations could not be solved: {exc}") from exc
    if not np.all(np.isfinite(theta)):
        raise NumericalFailure("non-finite consequent parameters")
    theta = theta.reshape(model.n_rules, model.n_inputs + 1)
    theta[:, -1] += offset
    return theta


def premise_gradient(model, X, y):
    """Gradient of the sum of squared errors w.r.t. every premise (a, b, c).

    Returned with the shape of ``model.premises``.
    """
    X = _check_inputs(model, X)
    y = np.asarray(y, dtype=float)
    M, G, w, total, ok, wn, rule_out, out = _layers(model, X)
    err = np.where(ok, out - y, 0.0)
    safe_total = np.where(ok, total, 1.0)
    # dSSE/dw_r for every pattern and rule
    dw = (2.0 * err / safe_total)[:, None] * (rule_out - out[:, None])

    # leave-one-out products over inputs: prod_{k != i} G[n, r, k]
    n_in = model.n_inputs
    ones = np.ones_like(G[:, :, :1])
    prefix = np.cumprod(np.concatenate([ones, G[:, :, :-1]], axis=2), axis=2)
    suffix = np.cumprod(np.concatenate([ones, G[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
    loo = prefix * suffix

    n_mf = model.premises.shape[1]
    dmu = np.zeros_like(M)  # dSSE/dmu[n, i, j]
    contrib = dw[:, :, None] * loo  # (n, r, i)
    for i in range(n_in):
        for j in range(n_mf):
            sel = model.combos[:, i] == j
            dmu[:, i, j] = contrib[:, sel, i].sum(axis=1)

    a, b, c = (model.premises[..., k][None] for k in range(3))
    diff = X[:, :, None] - c
    z = diff / a
    absz = np.abs(z)
    nonzero = absz > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = absz ** (2.0 * b)
        # mu * (1 - mu), computed without cancellation
        slope = np.where(np.isfinite(u), M * M * u, 0.0)
        d_a = 2.0 * b * slope / a
        d_b = np.where(nonzero, -2.0 * slope * np.log(np.where(nonzero, absz, 1.0)), 0.0)
        d_c = np.where(nonzero, 2.0 * b * slope / np.where(nonzero, diff, 1.0), 0.0)
    grad = np.stack([(dmu * d_a).sum(axis=0), (dmu * d_b).sum(axis=0),
                     (dmu * d_c).sum(axis=0)], axis=-1)
    return grad


def init_premises(X, n_mf):
    """Centers equally spaced over each input's range, a = spacing / 2 ... range / 2, b = 2."""
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    premises = np.empty((X.shape[1], n_mf, 3))
    for i in range(X.shape[1]):
        premises[i, :, 0] = span[i] / (2.0 * (n_mf - 1))
        premises[i, :, 1] = 2.0
        premises[i, :, 2] = np.linspace(lo[i], lo[i] + span[i], n_mf)
    return premises


def _rmse(model, X, y):
    return float(np.sqrt(np.mean((predict(model, X) - y) ** 2)))


def _adapt_step(step, errors, last_adjust, config):
    """Classic ANFIS step-size heuristic over the errors since the last change."""
    recent = errors[max(last_adjust, len(errors) - 5):]
    if len(recent) < 5:
        return step, last_adjust
    d = np.sign(np.diff(recent))
    if np.all(d < 0):
        return step * config.step_increase, len(errors) - 1
    if (d[0] > 0 > d[1] and d[2] > 0 > d[3]) or (d[0] < 0 < d[1] and d[2] < 0 < d[3]):
        return step * config.step_decrease, len(errors) - 1
    return step, last_adjust


def train_anfis(X, y, config=None):
    """Hybrid-learning ANFIS; returns the epoch with the lowest training RMSE."""
    config = config or AnfisConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise TooFewPatterns(f"need at least 2 training patterns, got {X.shape[0]}")
    if X.shape[0] != len(y):
        raise DimensionMismatch(f"{X.shape[0]} patterns but {len(y)} targets")

    n_in = X.shape[1]
    n_rules = config.mfs_per_input ** n_in
    model = AnfisModel(init_premises(X, config.mfs_per_input), np.zeros((n_rules, n_in + 1)))
    step = config.initial_step
    history = []
    best, best_rmse = None, np.inf
    last_adjust = 0
    for _ in range(config.epochs):
        model.consequents = lse_consequents(model, X, y, config.ridge_lambda)
        rmse = _rmse(model, X, y)
        history.append(rmse)
        if rmse < best_rmse:
            best, best_rmse = model.copy(), rmse
        step, last_adjust = _adapt_step(step, history, last_adjust, config)
        grad = premise_gradient(model, X, y)
        norm = np.linalg.norm(grad)
        if norm > 0 and np.isfinite(norm):
            model.premises = model.premises - step * grad / norm
            model.premises[..., :2] = np.maximum(model.premises[..., :2], MIN_PARAM)
    best.training_history = history
    return best


def format_history(history):
    lines = ["epoch\trmse"] + [f"{i + 1}\t{r:.6g}" for i, r in enumerate(history)]
    return "\n".join(lines) + "\n"
