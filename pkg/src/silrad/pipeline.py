"""End-to-end detection pipeline: per-field embeddings, intermittent
correlation-based field selection, an incremental classifier, and a
stream-level drift detector on the prediction-error indicator.

The classifier input is the concatenation of the active fields'
embeddings in ranking order; absent fields contribute zero vectors.
When a ranking refresh changes the active set, the classifier is rebuilt
(input layout changed) while the pipeline-level detector is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drift import AdwinDetector
from .embedding import EmbeddingModel
from .errors import DataError
from .events import LabeledInstance, SysmonEvent
from .feature_select import FieldCorrelationTracker, FieldRanking
from .learners import OnlineClassifier, Prediction


@dataclass
class InstanceOutcome:
    index: int
    y: int
    prediction: Prediction
    drift_events: list[dict] = field(default_factory=list)
    active_set_changed: bool = False


class DetectionPipeline:
    def __init__(
        self,
        embedder: EmbeddingModel,
        classifier_factory,
        *,
        k: int = 5,
        refresh_period: int = 1000,
        stream_delta: float = 0.002,
        reset_on_drift: bool = False,
    ):
        self.embedder = embedder
        self.classifier_factory = classifier_factory
        self.k = k
        self.refresh_period = refresh_period
        self.reset_on_drift = reset_on_drift
        self.classifier: OnlineClassifier = classifier_factory()
        self.tracker = FieldCorrelationTracker(embedder.dim)
        self.stream_detector = AdwinDetector(stream_delta)
        self.active_set: list[str] = []
        self.instances_seen = 0
        self.refresh_count = 0
        self.last_ranking: FieldRanking | None = None

    # -- featurization -------------------------------------------------------

    def _embed_fields(self, event: SysmonEvent) -> dict[str, np.ndarray]:
        return {name: self.embedder.embed_text(value) for name, value in event.fields.items()}

    def _concat(self, field_vectors: dict[str, np.ndarray]) -> np.ndarray:
        dim = self.embedder.dim
        out = np.zeros(len(self.active_set) * dim, dtype=np.float64)
        for i, name in enumerate(self.active_set):
            vec = field_vectors.get(name)
            if vec is not None:
                out[i * dim : (i + 1) * dim] = vec
        return out

    def featurize(self, event: SysmonEvent) -> LabeledInstance:
        if not self.active_set:
            self._bootstrap_active_set(event)
        x = self._concat(self._embed_fields(event))
        return LabeledInstance(x=x, y=event.label if event.label is not None else 0, origin=event)

    def _bootstrap_active_set(self, event: SysmonEvent) -> None:
        # provisional layout until the first ranking refresh
        self.active_set = sorted(event.fields)[: self.k]

    # -- the per-instance loop --------------------------------------------------

    def process_labeled(self, event: SysmonEvent) -> InstanceOutcome:
        """Predict-then-train on one labelled event."""
        if event.label is None:
            raise DataError(f"unlabelled event at instance {self.instances_seen} in training stream")
        y = event.label
        if not self.active_set:
            self._bootstrap_active_set(event)
        field_vectors = self._embed_fields(event)
        x = self._concat(field_vectors)

        if getattr(self.classifier, "wants_true_label", False):
            self.classifier.provide_label(y)
        prediction = self.classifier.predict_learn_one(x, y)

        drift_events = [
            {"detector_id": f"classifier.{e['detector_id']}", **{k: v for k, v in e.items() if k != "detector_id"}}
            for e in self.classifier.drain_drift_events()
        ]

        # selection consumes only labelled instances (this is the training stream)
        self.tracker.update(field_vectors, float(y))
        self.instances_seen += 1
        changed = self._maybe_refresh()

        err = 0.0 if prediction.label == y else 1.0
        stream_update = self.stream_detector.update(err)
        if stream_update.drift:
            drift_events.append(
                {
                    "detector_id": "pipeline",
                    "width_before": stream_update.width_before,
                    "width_after": stream_update.width_after,
                    "estimate": stream_update.estimate,
                }
            )
            if self.reset_on_drift:
                self.classifier = self.classifier_factory()

        return InstanceOutcome(
            index=self.instances_seen - 1,
            y=y,
            prediction=prediction,
            drift_events=drift_events,
            active_set_changed=changed,
        )

    def _maybe_refresh(self) -> bool:
        if self.instances_seen == 0 or self.instances_seen % self.refresh_period != 0:
            return False
        ranking = self.tracker.ranking(self.k, self.refresh_period)
        self.last_ranking = ranking
        self.refresh_count += 1
        if ranking.active_set != self.active_set:
            # input layout changed: online models cannot re-shape, so rebuild
            self.active_set = ranking.active_set
            self.classifier = self.classifier_factory()
            return True
        return False

    def memory_estimate_bytes(self) -> int:
        return self.classifier.estimate_memory_bytes()
