"""silrad: online incremental learning over Sysmon event streams.

Classifies a continuous stream of Sysmon security events as benign or
ransomware, adapting to concept drift without retraining from scratch.
Ships the full pipeline (subword field embeddings, streaming
correlation-based field selection, adaptive-window drift detection,
incremental classifiers) plus the evaluation harness, stream builders,
batch baselines, and a CLI.
"""

from .drift import AdwinDetector, check_cut_naive, epsilon_cut, harmonic_m
from .embedding import EmbeddingModel, SkipgramConfig, ngrams, train_skipgram
from .events import SysmonEvent, parse_event_ndjson, parse_event_xml, read_stream
from .feature_select import FieldCorrelationTracker, PccAccumulator, rank_fields
from .learners import (
    AdaptiveRandomForest,
    HoeffdingTree,
    LeveragingBagging,
    OnlineGaussianNB,
    build_classifier,
)
from .metrics import ConfusionCounts, accuracy, f1, mcc, precision, recall
from .pipeline import DetectionPipeline
from .evaluation import prequential_run

__version__ = "0.1.0"

__all__ = [
    "AdaptiveRandomForest",
    "AdwinDetector",
    "ConfusionCounts",
    "DetectionPipeline",
    "EmbeddingModel",
    "FieldCorrelationTracker",
    "HoeffdingTree",
    "LeveragingBagging",
    "OnlineGaussianNB",
    "PccAccumulator",
    "SkipgramConfig",
    "SysmonEvent",
    "accuracy",
    "build_classifier",
    "check_cut_naive",
    "epsilon_cut",
    "f1",
    "harmonic_m",
    "mcc",
    "ngrams",
    "parse_event_ndjson",
    "parse_event_xml",
    "precision",
    "prequential_run",
    "rank_fields",
    "read_stream",
    "train_skipgram",
    "__version__",
]
