"""Degenerate classifiers used as plumbing smoke tests."""

from __future__ import annotations

import numpy as np

from .base import BENIGN, OnlineClassifier, uniform_proba


class OracleClassifier(OnlineClassifier):
    """Answers with the true label supplied by the runner before predict.

    Exists to verify the evaluation plumbing (a perfect classifier must
    score MCC 1.0); the label arrives via provide_label, not learn_one.
    """

    wants_true_label = True

    def __init__(self):
        super().__init__()
        self._next_label: int | None = None

    def provide_label(self, y: int) -> None:
        self._next_label = y

    def predict_proba_one(self, x) -> np.ndarray:
        if self._next_label is None:
            return uniform_proba()
        return np.array([1.0, 0.0]) if self._next_label == BENIGN else np.array([0.0, 1.0])

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        self._next_label = None

    def estimate_memory_bytes(self) -> int:
        return 64


class MajorityClassClassifier(OnlineClassifier):
    """Predicts the majority class seen so far (ties resolve to benign)."""

    def __init__(self):
        super().__init__()
        self.class_weight = np.zeros(2)

    def predict_proba_one(self, x) -> np.ndarray:
        total = self.class_weight.sum()
        if total == 0.0:
            return uniform_proba()
        return self.class_weight / total

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        self._check_learn_input(x, y, weight)
        self.class_weight[y] += weight

    def estimate_memory_bytes(self) -> int:
        return 64 + 16
