"""The two-stage cascade: SVM zero/non-zero classifier, ANFIS regressor on the
Class 1 patterns, and the expert-rule filter after each stage.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import anfis as anfis_mod
from .anfis import AnfisConfig, AnfisModel, train_anfis
from .dataset import PREDICTORS, ZERO_THRESHOLD, SplitSpec
from .errors import (
    DimensionMismatch,
    DkfisError,
    InvalidSpec,
    SingleClassInput,
    StageError,
    TooFewPatterns,
    VersionMismatch,
)
from .knowledge import (
    PASS_THROUGH,
    KnowledgeBase,
    OutputMemberships,
    fit_output_memberships,
    fit_partition,
    load_knowledge_base,
    refine_classes,
    refine_predictions,
)
from .metrics import confusion_counts, g_metric_means, regression_metrics
from .preprocess import MinMaxScaler, ZScoreScaler, apply_minmax, fit_minmax, fit_zscore, invert_minmax
from .svm import KernelSpec, SvmModel, SvmTrainConfig, classify, train_svm

FORMAT_VERSION = 1
BUNDLE_KIND = "dkfis-model-bundle"


@dataclass(frozen=True)
class KnowledgeConfig:
    file: str | None = None
    activation_threshold: float | None = None
    allow_promotion: bool | None = None
    refine_classes: bool = True
    refine_predictions: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    split: SplitSpec = field(default_factory=SplitSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    svm: SvmTrainConfig = field(default_factory=SvmTrainConfig)
    anfis: AnfisConfig = field(default_factory=AnfisConfig)
    knowledge: KnowledgeConfig = field(default_factory=KnowledgeConfig)
    zero_threshold: float = ZERO_THRESHOLD

    def __post_init__(self):
        if not 0 <= self.zero_threshold < 1:
            raise InvalidSpec("zero_threshold must be in [0, 1)")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        sections = {"split": SplitSpec, "kernel": KernelSpec, "svm": SvmTrainConfig,
                    "anfis": AnfisConfig, "knowledge": KnowledgeConfig}
        unknown = set(d) - set(sections) - {"zero_threshold"}
        if unknown:
            raise InvalidSpec(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, typ in sections.items():
            try:
                kwargs[name] = typ(**d.get(name, {}))
            except TypeError as exc:
                raise InvalidSpec(f"config section {name!r}: {exc}") from None
        if "zero_threshold" in d:
            kwargs["zero_threshold"] = float(d["zero_threshold"])
        return cls(**kwargs)


def load_config(path):
    """``None`` or ``"default"`` gives the built-in defaults."""
    if path in (None, "default"):
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        return PipelineConfig.from_dict(json.load(fh))


def resolve_knowledge_base(cfg):
    kb = load_knowledge_base(cfg.file)
    return KnowledgeBase(
        kb.rules, kb.partition,
        kb.activation_threshold if cfg.activation_threshold is None else cfg.activation_threshold,
        kb.allow_promotion if cfg.allow_promotion is None else cfg.allow_promotion,
        kb.partition_overrides)


@dataclass
class ModelBundle:
    zscore: ZScoreScaler
    minmax: MinMaxScaler
    svm: SvmModel
    anfis: AnfisModel
    knowledge: KnowledgeBase
    output_memberships: OutputMemberships
    config: PipelineConfig
    format_version: int = FORMAT_VERSION

    def to_dict(self):
        return {
            "kind": BUNDLE_KIND,
            "format_version": self.format_version,
            "predictors": list(PREDICTORS),
            "config": self.config.to_dict(),
            "zscore": self.zscore.to_dict(),
            "minmax": self.minmax.to_dict(),
            "svm": self.svm.to_dict(),
            "anfis": self.anfis.to_dict(),
            "knowledge": self.knowledge.to_dict(),
            "output_memberships": self.output_memberships.to_dict(),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") != BUNDLE_KIND:
            raise VersionMismatch("not a model bundle")
        if d.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(
                f"bundle format version {d.get('format_version')!r} is not supported "
                f"(expected {FORMAT_VERSION})")
        if tuple(d.get("predictors", ())) != PREDICTORS:
            raise VersionMismatch("bundle was trained on a different predictor schema")
        return cls(
            zscore=ZScoreScaler.from_dict(d["zscore"]),
            minmax=MinMaxScaler.from_dict(d["minmax"]),
            svm=SvmModel.from_dict(d["svm"]),
            anfis=AnfisModel.from_dict(d["anfis"]),
            knowledge=KnowledgeBase.from_dict(d["knowledge"]),
            output_memberships=OutputMemberships.from_dict(d["output_memberships"]),
            config=PipelineConfig.from_dict(d["config"]),
        )

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise VersionMismatch(f"{path}: not a readable bundle ({exc})") from None
        return cls.from_dict(d)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except DkfisError as exc:
        raise StageError(name, exc) from exc


def train_pipeline(train, config=None):
    """Fit scalers, SVM, knowledge partition, output memberships and ANFIS on ``train``."""
    config = config or PipelineConfig()
    zt = config.zero_threshold
    labels = train.labels(zt)
    if labels.min() == labels.max():
        raise StageError("svm", SingleClassInput("training data contains a single class"))
    raw = train.predictors()
    sat = train.saturation()

    zscore = _stage("preprocess", fit_zscore, train)
    Xn = zscore.transform(raw)
    svm = _stage("svm", train_svm, Xn, np.where(labels == 1, 1.0, -1.0),
                 config.kernel, config.svm)

    kb = _stage("knowledge", resolve_knowledge_base, config.knowledge)
    kb = kb.with_partition(_stage("knowledge", fit_partition, train, kb.partition_overrides))
    om = _stage("knowledge", fit_output_memberships, sat[sat > zt])

    stage1, _ = classify(svm, Xn)
    if config.knowledge.refine_classes:
        stage1, _ = refine_classes(kb, raw, stage1)
    subset = np.flatnonzero(stage1 == 1)
    if len(subset) < 2:
        raise StageError("anfis", TooFewPatterns(
            f"only {len(subset)} training patterns are Class 1 after stage 1"))
    minmax = _stage("preprocess", fit_minmax, sat[subset])
    anfis = _stage("anfis", train_anfis, Xn[subset], apply_minmax(minmax, sat[subset]),
                   config.anfis)
    return ModelBundle(zscore, minmax, svm, anfis, kb, om, config)


@dataclass
class PredictionResult:
    svm_label: np.ndarray
    svm_decision: np.ndarray
    refined_label: np.ndarray
    raw_prediction: np.ndarray
    refined_prediction: np.ndarray
    fired_rule: list

    def __len__(self):
        return len(self.svm_label)


def _patterns(patterns):
    if hasattr(patterns, "predictors"):
        return patterns.predictors()
    X = np.atleast_2d(np.asarray(patterns, dtype=float))
    if X.shape[1] != len(PREDICTORS):
        raise StageError("predict", DimensionMismatch(
            f"patterns need {len(PREDICTORS)} predictors, got {X.shape[1]}"))
    return X


def predict_pipeline(bundle, patterns, refine_classes_=None, refine_predictions_=None):
    """Run the cascade on raw predictor patterns (a Dataset or an (n, 4) array).

    The knowledge flags default to the bundle's config; switching both off
    gives the plain SVM -> ANFIS composition.
    """
    kcfg = bundle.config.knowledge
    use_cls = kcfg.refine_classes if refine_classes_ is None else refine_classes_
    use_pred = kcfg.refine_predictions if refine_predictions_ is None else refine_predictions_
    raw = _patterns(patterns)
    Xn = bundle.zscore.transform(raw)
    svm_label, decision = _stage("svm", classify, bundle.svm, Xn)

    audit = [[] for _ in range(len(raw))]
    refined_label = svm_label
    if use_cls:
        refined_label, reasons = refine_classes(bundle.knowledge, raw, svm_label)
        for i in np.flatnonzero(refined_label != svm_label):
            audit[i].append(f"class:{reasons[i]}")

    raw_pred = np.zeros(len(raw))
    positive = np.flatnonzero(refined_label == 1)
    if len(positive):
        normalized = anfis_mod.predict(bundle.anfis, Xn[positive])
        raw_pred[positive] = invert_minmax(bundle.minmax, normalized)
    final = raw_pred.copy()
    if use_pred and len(positive):
        refined, reasons = refine_predictions(bundle.knowledge, bundle.output_memberships,
                                              raw[positive], raw_pred[positive],
                                              bundle.config.zero_threshold)
        # saturations outside [0, 1] are physically infeasible
        final[positive] = np.clip(refined, 0.0, 1.0)
        for k, i in enumerate(positive):
            if reasons[k] != PASS_THROUGH:
                audit[i].append(f"saturation:{reasons[k]}")
    fired = [";".join(a) if a else PASS_THROUGH for a in audit]
    return PredictionResult(svm_label, decision, refined_label, raw_pred, final, fired)


@dataclass
class EvaluationReport:
    kernel: str
    n_patterns: int
    n_true_class1: int
    classification: dict
    prediction: dict
    audit: list
    notes: dict

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def evaluate(bundle, test):
    """Four-way evaluation: classification / prediction x with / without knowledge."""
    zt = bundle.config.zero_threshold
    truth = test.labels(zt)
    sat = test.saturation()
    if truth.min() == truth.max():
        raise StageError("evaluate", SingleClassInput("test data must contain both classes"))
    plain = predict_pipeline(bundle, test, refine_classes_=False, refine_predictions_=False)
    full = predict_pipeline(bundle, test, refine_classes_=True, refine_predictions_=True)

    classification = {}
    for arm, labels in (("without", plain.refined_label), ("with", full.refined_label)):
        cc = confusion_counts(truth, labels)
        classification[arm] = {"confusion": cc.to_dict(),
                               "g_metric_means": _stage("evaluate", g_metric_means, cc)}
    pos = truth == 1
    prediction = {}
    for arm, res in (("without", plain), ("with", full)):
        m = _stage("evaluate", regression_metrics, res.refined_prediction[pos], sat[pos])
        prediction[arm] = m.to_dict()
    audit = [{"index": int(i), "well_id": test.records[i].well_id,
              "svm_label": int(full.svm_label[i]), "refined_label": int(full.refined_label[i]),
              "raw_prediction": float(full.raw_prediction[i]),
              "refined_prediction": float(full.refined_prediction[i]),
              "fired_rule": full.fired_rule[i]}
             for i in range(len(test)) if full.fired_rule[i] != PASS_THROUGH]
    notes = {
        "prediction_patterns": "test patterns whose true label is Class 1",
        "saturation_scale": "raw (denormalized) oil saturation",
        "scatter_index": "RMSE / mean(observed)",
    }
    return EvaluationReport(bundle.svm.kernel.kind, len(test), int(pos.sum()),
                            classification, prediction, audit, notes)


def render_report(report):
    """Plain-text tables laid out like the classification and prediction tables."""
    r = report if isinstance(report, EvaluationReport) else EvaluationReport.from_dict(report)
    lines = [
        "CLASSIFICATION PERFORMANCE OF SVM WITH THE TESTING PATTERNS",
        f"{'Expert Knowledge':<18}{'Kernel Function':<17}{'G-metric means':>14}",
        f"{'Not Included':<18}{r.kernel:<17}{r.classification['without']['g_metric_means']:>14.4f}",
        f"{'Included':<18}{r.kernel:<17}{r.classification['with']['g_metric_means']:>14.4f}",
        "",
        "STATISTICS OF TESTING PERFORMANCE IN PREDICTION",
        f"{'Performance Indicators':<24}{'Excluding Expert Knowledge':>28}"
        f"{'Including Expert Knowledge':>28}",
    ]
    for key in ("cc", "rmse", "aem", "si"):
        lines.append(f"{key.upper():<24}{r.prediction['without'][key]:>28.4f}"
                     f"{r.prediction['with'][key]:>28.4f}")
    lines += ["",
              f"patterns: {r.n_patterns}; true Class 1: {r.n_true_class1}; "
              f"knowledge-filter actions: {len(r.audit)}",
              f"prediction metrics over {r.notes['prediction_patterns']}, "
              f"on {r.notes['saturation_scale']}; SI = {r.notes['scatter_index']}"]
    return "\n".join(lines) + "\n"
