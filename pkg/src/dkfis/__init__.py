"""Two-stage oil-saturation predictor: SVM zero/non-zero classifier, ANFIS
regressor, and an expert-rule fuzzy filter after each stage.
"""

from .dataset import Dataset, SplitSpec, SyntheticSpec, WellLogRecord, generate_synthetic, load_csv, split
from .pipeline import ModelBundle, PipelineConfig, evaluate, predict_pipeline, render_report, train_pipeline

__all__ = [
    "Dataset", "SplitSpec", "SyntheticSpec", "WellLogRecord", "generate_synthetic", "load_csv",
    "split", "ModelBundle", "PipelineConfig", "evaluate", "predict_pipeline", "render_report",
    "train_pipeline",
]
__version__ = "0.1.0"
