"""Expert-rule fuzzy filter applied after both stages of the cascade.

The rules speak in linguistic terms (gamma ray "high", resistivity "medium",
...). Each term is a Gaussian on the raw log value. A rule's activation is the
min of its four antecedent grades. Rules concluding "low" saturation can demote
a Class 1 pattern to Class 0 and pull a predicted saturation toward the
Non-Zero-Small (NZS) category; rules concluding "high" do the opposite toward
Non-Zero-Big (NZB).
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .dataset import PREDICTORS, ZERO_THRESHOLD
from .errors import DegenerateColumn, InvalidSpec

LEVELS = ("low", "medium", "high")
SATURATION_LEVELS = ("low", "high")
PASS_THROUGH = "pass-through"


def gaussian_mf(x, center, sigma):
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - center) ** 2) / (2.0 * sigma * sigma))


@dataclass(frozen=True)
class LinguisticPartition:
    """terms[predictor][level] = (center, sigma) in raw log units."""

    terms: dict

    def __post_init__(self):
        for name, levels in self.terms.items():
            if set(levels) != set(LEVELS):
                raise InvalidSpec(f"{name}: partition needs exactly the levels {LEVELS}")
            centers = [levels[lv][0] for lv in LEVELS]
            if not centers[0] < centers[1] < centers[2]:
                raise InvalidSpec(f"{name}: centers must satisfy low < medium < high")
            if any(not levels[lv][1] > 0 for lv in LEVELS):
                raise InvalidSpec(f"{name}: sigmas must be > 0")

    def grade(self, predictor, level, x):
        c, s = self.terms[predictor][level]
        return gaussian_mf(x, c, s)

    def to_dict(self):
        return {p: {lv: list(cs) for lv, cs in levels.items()} for p, levels in self.terms.items()}

    @classmethod
    def from_dict(cls, d):
        return cls({p: {lv: tuple(cs) for lv, cs in levels.items()} for p, levels in d.items()})


@dataclass(frozen=True)
class ExpertRule:
    name: str
    antecedent: dict
    consequent: str

    def __post_init__(self):
        if set(self.antecedent) != set(PREDICTORS):
            raise InvalidSpec(f"rule {self.name}: antecedent must name each of {PREDICTORS} once")
        if any(lv not in LEVELS for lv in self.antecedent.values()):
            raise InvalidSpec(f"rule {self.name}: levels must be among {LEVELS}")
        if self.consequent not in SATURATION_LEVELS:
            raise InvalidSpec(f"rule {self.name}: consequent must be 'low' or 'high'")

    def to_dict(self):
        return {"name": self.name, "if": dict(self.antecedent), "then": self.consequent}


@dataclass(frozen=True)
class KnowledgeBase:
    rules: tuple
    partition: LinguisticPartition | None = None
    activation_threshold: float = 0.5
    allow_promotion: bool = True
    partition_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise InvalidSpec("knowledge base needs at least one rule")
        if not 0.0 < self.activation_threshold <= 1.0:
            raise InvalidSpec("activation_threshold must be in (0, 1]")

    def with_partition(self, partition):
        return KnowledgeBase(self.rules, partition, self.activation_threshold,
                             self.allow_promotion, self.partition_overrides)

    def to_dict(self):
        return {
            "activation_threshold": self.activation_threshold,
            "allow_promotion": self.allow_promotion,
            "rules": [r.to_dict() for r in self.rules],
            "partition": self.partition.to_dict() if self.partition else {},
            "overrides": {p: {lv: list(cs) for lv, cs in t.items()}
                          for p, t in self.partition_overrides.items()},
        }

    @classmethod
    def from_dict(cls, d):
        rules = [ExpertRule(r["name"], dict(r["if"]), r["then"]) for r in d["rules"]]
        fitted = d.get("partition")
        overrides = {p: {lv: tuple(cs) for lv, cs in t.items()}
                     for p, t in d.get("overrides", {}).items()}
        return cls(rules, LinguisticPartition.from_dict(fitted) if fitted else None,
                   float(d.get("activation_threshold", 0.5)),
                   bool(d.get("allow_promotion", True)), overrides)


def load_knowledge_base(path=None):
    """Read a rule file; ``None`` gives the shipped three-rule default."""
    if path is None:
        text = resources.files("dkfis").joinpath("data/expert_rules.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return KnowledgeBase.from_dict(json.loads(text))


def default_knowledge_base():
    return load_knowledge_base(None)


def fit_partition(train, overrides=None):
    """Gaussian low/medium/high terms at the 10th/50th/90th percentiles.

    Each sigma is half the distance from its center to the nearest
    neighbouring center. ``overrides[predictor][level] = (center, sigma)``
    replaces individual terms.
    """
    X = train.predictors() if hasattr(train, "predictors") else np.asarray(train, dtype=float)
    overrides = overrides or {}
    terms = {}
    for j, name in enumerate(PREDICTORS):
        lo, mid, hi = (float(v) for v in np.percentile(X[:, j], [10, 50, 90]))
        if not lo < mid < hi:
            raise DegenerateColumn(name)
        half_lo, half_hi = (mid - lo) / 2.0, (hi - mid) / 2.0
        t = {"low": (lo, half_lo), "medium": (mid, min(half_lo, half_hi)), "high": (hi, half_hi)}
        t.update({lv: tuple(cs) for lv, cs in overrides.get(name, {}).items()})
        terms[name] = t
    return LinguisticPartition(terms)


def rule_activation(kb, raw):
    """Min-t-norm activation of every rule; ``raw`` is (4,) or (n, 4).

    Returns shape (n_rules,) or (n, n_rules).
    """
    X = np.asarray(raw, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    acts = np.empty((X.shape[0], len(kb.rules)))
    for r, rule in enumerate(kb.rules):
        grades = [kb.partition.grade(p, rule.antecedent[p], X[:, j])
                  for j, p in enumerate(PREDICTORS)]
        acts[:, r] = np.minimum.reduce(grades)
    return acts[0] if single else acts


def _group_max(kb, acts, level):
    """Max activation over rules with the given consequent, and the argmax rule name."""
    idx = [i for i, r in enumerate(kb.rules) if r.consequent == level]
    if not idx:
        return np.zeros(acts.shape[0]), np.array([""] * acts.shape[0], dtype=object)
    sub = acts[:, idx]
    best = np.argmax(sub, axis=1)
    names = np.array([kb.rules[idx[k]].name for k in best], dtype=object)
    return sub[np.arange(len(sub)), best], names


def refine_classes(kb, raw, labels):
    """Vectorized class refinement; returns (labels, reasons)."""
    acts = np.atleast_2d(rule_activation(kb, raw))
    labels = np.asarray(labels, dtype=int)
    act_low, low_rule = _group_max(kb, acts, "low")
    act_high, high_rule = _group_max(kb, acts, "high")
    tau = kb.activation_threshold
    demote = (labels == 1) & (act_low > tau) & (act_low > act_high)
    promote = (labels == 0) & (act_high > tau) & (act_high > act_low)
    if not kb.allow_promotion:
        promote[:] = False
    out = labels.copy()
    out[demote] = 0
    out[promote] = 1
    reasons = np.full(len(labels), PASS_THROUGH, dtype=object)
    reasons[demote] = low_rule[demote]
    reasons[promote] = high_rule[promote]
    return out, reasons


def refine_class(kb, raw, svm_label):
    """Refine one stage-1 label; returns (label, audit reason)."""
    out, reasons = refine_classes(kb, np.atleast_2d(raw), [svm_label])
    if reasons[0] == PASS_THROUGH:
        return svm_label, PASS_THROUGH
    return int(out[0]), str(reasons[0])


@dataclass(frozen=True)
class OutputMemberships:
    c_nzs: float
    s_nzs: float
    c_nzb: float
    s_nzb: float

    def __post_init__(self):
        if not 0.0 < self.c_nzs < self.c_nzb <= 1.0:
            raise InvalidSpec("need 0 < c_nzs < c_nzb <= 1")
        if not (self.s_nzs > 0 and self.s_nzb > 0):
            raise InvalidSpec("sigmas must be > 0")

    def grades(self, s):
        return gaussian_mf(s, self.c_nzs, self.s_nzs), gaussian_mf(s, self.c_nzb, self.s_nzb)

    def to_dict(self):
        return {"c_nzs": self.c_nzs, "s_nzs": self.s_nzs, "c_nzb": self.c_nzb, "s_nzb": self.s_nzb}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def fit_output_memberships(nonzero_saturations, overrides=None):
    """NZS/NZB centers at the 25th/75th percentiles (nearest-rank), equal sigmas
    of half the center gap.
    """
    s = np.asarray(nonzero_saturations, dtype=float)
    if len(np.unique(s)) < 2:
        raise DegenerateColumn("oil_saturation")
    c_nzs, c_nzb = (float(v) for v in np.percentile(s, [25, 75], method="nearest"))
    if not c_nzb > c_nzs:
        raise DegenerateColumn("oil_saturation")
    sigma = (c_nzb - c_nzs) / 2.0
    params = {"c_nzs": c_nzs, "s_nzs": sigma, "c_nzb": c_nzb, "s_nzb": sigma}
    params.update(overrides or {})
    return OutputMemberships(**params)


def categorize_nzs_nzb(om, saturation):
    """('NZS' or 'NZB', nzs grade, nzb grade); ties go to NZS."""
    g_s, g_b = (float(g) for g in om.grades(saturation))
    return ("NZS" if g_s >= g_b else "NZB"), g_s, g_b


def refine_predictions(kb, om, raw, predicted, zero_threshold=ZERO_THRESHOLD):
    """Vectorized prediction refinement; returns (values, reasons).

    Patterns where no rule exceeds the threshold keep their exact input value.
    With a threshold above zero a firing rule always leaves one grade at or
    above the threshold, so the degenerate-grades guard is a safety net only.
    """
    pred = np.asarray(predicted, dtype=float)
    acts = np.atleast_2d(rule_activation(kb, raw))
    act_low, low_rule = _group_max(kb, acts, "low")
    act_high, high_rule = _group_max(kb, acts, "high")
    tau = kb.activation_threshold
    fire_low = act_low > tau
    fire_high = act_high > tau
    g_s, g_b = om.grades(pred)
    # "low" rules veto: NZS rises to the activation and NZB is capped at its
    # complement. "high" rules only lift NZB, leaving the NZS evidence intact.
    g_s = np.where(fire_low, np.maximum(g_s, act_low), g_s)
    g_b = np.where(fire_low, np.minimum(g_b, 1.0 - act_low), g_b)
    g_b = np.where(fire_high, np.maximum(g_b, act_high), g_b)
    denom = g_s + g_b
    fired = fire_low | fire_high
    degenerate = fired & (denom < 1e-12)
    use = fired & ~degenerate
    out = pred.copy()
    with np.errstate(invalid="ignore", divide="ignore"):
        defuzz = (g_s * om.c_nzs + g_b * om.c_nzb) / denom
    out[use] = np.clip(defuzz[use], zero_threshold, 1.0)
    reasons = np.full(len(pred), PASS_THROUGH, dtype=object)
    for i in np.flatnonzero(fired):
        names = ([low_rule[i]] if fire_low[i] else []) + ([high_rule[i]] if fire_high[i] else [])
        reasons[i] = "+".join(names) + (" (degenerate grades)" if degenerate[i] else "")
    return out, reasons


def refine_prediction(kb, om, raw, predicted, zero_threshold=ZERO_THRESHOLD):
    """Refine one denormalized stage-2 prediction; returns (value, audit reason)."""
    out, reasons = refine_predictions(kb, om, np.atleast_2d(raw), [predicted], zero_threshold)
    if reasons[0] == PASS_THROUGH:
        return predicted, PASS_THROUGH
    return float(out[0]), str(reasons[0])

