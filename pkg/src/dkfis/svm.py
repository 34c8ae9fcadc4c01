"""Binary soft-margin SVM trained by Platt's Sequential Minimal Optimization.

Decision function: f(x) = sum_i coef_i * K(sv_i, x) + bias, with
coef_i = alpha_i * y_i and labels y in {-1, +1} (Class 0 -> -1, Class 1 -> +1).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DkfisError, InvalidSpec, NonConvergence, SingleClassInput

KERNELS = ("rbf", "linear", "mlp")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    rbf_width: float = 1.0
    mlp_scale: float = 1.0
    mlp_offset: float = -1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise InvalidSpec(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if not self.rbf_width > 0:
            raise InvalidSpec("rbf_width must be > 0")


@dataclass(frozen=True)
class SvmTrainConfig:
    c: float = 1.0
    kkt_tolerance: float = 1e-3
    numeric_epsilon: float = 1e-12
    max_passes: int = 10
    max_iterations: int = 100_000
    class_weighting: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidSpec("c must be > 0")
        if not self.kkt_tolerance > 0:
            raise InvalidSpec("kkt_tolerance must be > 0")
        if self.max_passes < 1 or self.max_iterations < 1:
            raise InvalidSpec("max_passes and max_iterations must be positive")


def kernel_eval(spec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    if spec.kind == "rbf":
        d = x - y
        return float(np.exp(-np.dot(d, d) / (2.0 * spec.rbf_width ** 2)))
    if spec.kind == "linear":
        return float(np.dot(x, y))
    return float(np.tanh(spec.mlp_scale * np.dot(x, y) + spec.mlp_offset))


def kernel_matrix(spec, X, Y):
    """Gram matrix K[i, j] = K(X[i], Y[j])."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"feature counts differ: {X.shape[1]} vs {Y.shape[1]}")
    G = X @ Y.T
    if spec.kind == "linear":
        return G
    if spec.kind == "mlp":
        return np.tanh(spec.mlp_scale * G + spec.mlp_offset)
    sq = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * G
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * spec.rbf_width ** 2))


@dataclass
class SvmModel:
    kernel: KernelSpec
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)
    # full multiplier vector over the training set; not serialized
    alpha: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_features(self):
        return self.support_vectors.shape[1]

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        if len(self.dual_coefficients) == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(self.kernel, X, self.support_vectors) @ self.dual_coefficients + self.bias

    def to_dict(self):
        return {
            "kernel": vars(self.kernel),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefficients": self.dual_coefficients.tolist(),
            "bias": self.bias,
            "training_meta": self.training_meta,
        }

    @classmethod
    def from_dict(cls, d):
        sv = np.array(d["support_vectors"], dtype=float)
        return cls(KernelSpec(**d["kernel"]), sv.reshape(len(sv), -1),
                   np.array(d["dual_coefficients"], dtype=float), float(d["bias"]),
                   dict(d["training_meta"]))


def classify(model, X):
    """Return (labels in {0, 1}, decision values); a decision of exactly 0 is Class 0."""
    f = model.decision_function(X)
    return (f > 0).astype(int), f


def box_constraints(y, config):
    """Per-sample upper bound on alpha; class-balanced when weighting is on."""
    y = np.asarray(y)
    n = len(y)
    if not config.class_weighting:
        return np.full(n, float(config.c))
    n_pos = int((y > 0).sum())
    n_neg = n - n_pos
    c_pos = config.c * n / (2.0 * n_pos)
    c_neg = config.c * n / (2.0 * n_neg)
    return np.where(y > 0, c_pos, c_neg)


def dual_objective(alpha, y, K):
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def kkt_violations(alpha, y, C, K, bias, eps=1e-12):
    """Per-point KKT violation of the soft-margin conditions."""
    u = y * (K @ (alpha * y) + bias)
    at_zero = alpha <= eps
    at_box = alpha >= C - eps
    viol = np.abs(u - 1.0)
    viol = np.where(at_zero, np.maximum(0.0, 1.0 - u), viol)
    viol = np.where(at_box & ~at_zero, np.maximum(0.0, u - 1.0), viol)
    return viol


class _Smo:
    """Platt's SMO over a precomputed Gram matrix, with a full error cache."""

    def __init__(self, K, y, C, config):
        self.K = K
        self.y = y
        self.C = C
        self.tol = config.kkt_tolerance
        self.eps = config.numeric_epsilon
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.E = -y.astype(float)  # f = 0 initially
        self.rng = np.random.default_rng(config.seed)
        self.steps = 0

    def take_step(self, i1, i2):
        if i1 == i2:
            return False
        K, y, C, alpha = self.K, self.y, self.C, self.alpha
        a1_old, a2_old = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = self.E[i1], self.E[i2]
        C1, C2 = C[i1], C[i2]
        s = y1 * y2
        if s < 0:
            lo, hi = max(0.0, a2_old - a1_old), min(C2, C1 + a2_old - a1_old)
        else:
            lo, hi = max(0.0, a1_old + a2_old - C1), min(C2, a1_old + a2_old)
        if hi - lo <= self.eps:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            a2 = min(max(a2, lo), hi)
        else:
            # Non-positive curvature (mlp kernel): pick the better endpoint.
            f1 = y1 * (E1 - self.b) - a1_old * k11 - s * a2_old * k12
            f2 = y2 * (E2 - self.b) - s * a1_old * k12 - a2_old * k22
            l1 = a1_old + s * (a2_old - lo)
            h1 = a1_old + s * (a2_old - hi)
            l_obj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12
            h_obj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12
            if l_obj < h_obj - self.eps:
                a2 = lo
            elif l_obj > h_obj + self.eps:
                a2 = hi
            else:
                a2 = a2_old
        if abs(a2 - a2_old) < self.eps * (a2 + a2_old + self.eps):
            return False
        a1 = a1_old + s * (a2_old - a2)
        a1, a2 = self._snap(a1, C1), self._snap(a2, C2)

        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < C1:
            b_new = b1
        elif 0.0 < a2 < C2:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.E += d1 * K[i1] + d2 * K[i2] + (b_new - self.b)
        self.b = b_new
        alpha[i1], alpha[i2] = a1, a2
        self.steps += 1
        return True

    def _snap(self, a, c):
        # round-off must not leave a multiplier a few ulps inside its box,
        # where it would still count as free
        if a <= self.eps * c:
            return 0.0
        if a >= c - self.eps * c:
            return c
        return a

    def _violates(self, i):
        r = self.E[i] * self.y[i]
        a = self.alpha[i]
        return (r < -self.tol and a < self.C[i]) or (r > self.tol and a > 0)

    def examine(self, i2):
        if not self._violates(i2):
            return False
        alpha, C = self.alpha, self.C
        free = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(free) > 1:
            i1 = int(free[np.argmax(np.abs(self.E[free] - self.E[i2]))])
            if self.take_step(i1, i2):
                return True
        if len(free):
            start = int(self.rng.integers(len(free)))
            for i1 in np.roll(free, -start):
                if self.take_step(int(i1), i2):
                    return True
        start = int(self.rng.integers(self.n))
        for i1 in np.roll(np.arange(self.n), -start):
            if self.take_step(int(i1), i2):
                return True
        return False

    def violating_pair(self):
        """Maximal violating pair (i_low, i_up) and its gap, in terms of
        F_i = E_i - b, which does not depend on the threshold estimate."""
        y, a, C = self.y, self.alpha, self.C
        F = self.E - self.b
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        i_up = int(np.flatnonzero(up)[np.argmin(F[up])])
        i_low = int(np.flatnonzero(low)[np.argmax(F[low])])
        return i_low, i_up, F[i_low] - F[i_up], F

    def settle_bias(self, F, i_low, i_up):
        b_new = -0.5 * (F[i_low] + F[i_up])
        self.E += b_new - self.b
        self.b = b_new

    def run(self, max_passes, max_iterations):
        examine_all = True
        idle_full_passes = 0
        while self.steps < max_iterations:
            changed = 0
            if examine_all:
                candidates = range(self.n)
            else:
                candidates = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C)).tolist()
            for i in candidates:
                changed += self.examine(i)
                if self.steps >= max_iterations:
                    break
            if examine_all:
                if changed == 0:
                    # Platt's single threshold can be stale; judge optimality
                    # by the two-threshold gap and re-centre b.
                    i_low, i_up, gap, F = self.violating_pair()
                    if gap <= 2.0 * self.tol:
                        self.settle_bias(F, i_low, i_up)
                        return True
                    if self.take_step(i_low, i_up):
                        idle_full_passes = 0
                        continue
                    idle_full_passes += 1
                    if idle_full_passes >= max_passes:
                        return False
                else:
                    idle_full_passes = 0
                examine_all = False
            elif changed == 0:
                examine_all = True
        return False


def train_svm(X, y, kernel=None, config=None):
    """Train on normalized inputs ``X`` (n, d) with labels in {-1, +1}."""
    kernel = kernel or KernelSpec()
    config = config or SvmTrainConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != len(y):
        raise DimensionMismatch(f"{X.shape[0]} inputs but {len(y)} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidSpec("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise SingleClassInput("training labels contain a single class")

    K = kernel_matrix(kernel, X, X)
    C = box_constraints(y, config)
    smo = _Smo(K, y, C, config)
    converged = smo.run(config.max_passes, config.max_iterations)
    if not converged:
        warnings.warn(NonConvergence(smo.steps), stacklevel=2)

    keep = smo.alpha > config.numeric_epsilon
    meta = {
        "iterations": smo.steps,
        "dual_objective": dual_objective(smo.alpha, y, K),
        "converged": bool(converged),
        "n_train": int(len(y)),
        "box_positive": float(C[y > 0][0]),
        "box_negative": float(C[y < 0][0]),
    }
    return SvmModel(kernel, X[keep].copy(), (smo.alpha * y)[keep], float(smo.b), meta,
                    alpha=smo.alpha)


def sweep_rbf_width(X_train, y_train, X_test, y_test, widths, config=None):
    """Train one rbf model per width and score g-metric means on the test set.

    ``y_*`` are 0/1 class labels. Failures are recorded as ``None``.
    """
    from .metrics import confusion_counts, g_metric_means

    widths = list(widths)
    if not widths or any(not w > 0 for w in widths):
        raise InvalidSpec("widths must be a non-empty list of positive reals")
    y_train = np.asarray(y_train)
    signed = np.where(y_train > 0, 1.0, -1.0)
    rows = []
    for w in widths:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonConvergence)
                model = train_svm(X_train, signed, KernelSpec("rbf", rbf_width=w), config)
            pred, _ = classify(model, X_test)
            rows.append((w, g_metric_means(confusion_counts(y_test, pred))))
        except DkfisError:
            rows.append((w, None))
    return rows


def format_sweep(rows):
    lines = ["width\tg_metric_means"]
    for w, g in rows:
        lines.append(f"{w:g}\t{'NA' if g is None else f'{g:.4f}'}")
    return "\n".join(lines) + "\n"
