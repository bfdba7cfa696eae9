"""Learn-one/predict-one contract shared by every incremental classifier.

All models are anytime: prediction works after any prefix of learn calls,
and an untrained model answers benign with score 0.5. predict_one never
mutates state; predict-then-train pairs go through predict_learn_one,
which ensembles override to avoid recomputing member votes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput

BENIGN = 0
RANSOMWARE = 1


@dataclass
class Prediction:
    label: int
    score: float  # P(ransomware)


class OnlineClassifier:
    n_classes = 2

    def __init__(self):
        self.input_dim: int | None = None

    # -- subclass surface ---------------------------------------------------

    def predict_proba_one(self, x: np.ndarray) -> np.ndarray:
        """[P(benign), P(ransomware)]; uniform when untrained."""
        raise NotImplementedError

    def learn_one(self, x: np.ndarray, y: int, weight: float = 1.0) -> None:
        raise NotImplementedError

    def estimate_memory_bytes(self) -> int:
        raise NotImplementedError

    # -- shared behaviour ---------------------------------------------------

    def predict_one(self, x: np.ndarray) -> Prediction:
        proba = self.predict_proba_one(x)
        # ties resolve to benign
        label = RANSOMWARE if proba[RANSOMWARE] > proba[BENIGN] else BENIGN
        return Prediction(label=label, score=float(proba[RANSOMWARE]))

    def predict_learn_one(self, x: np.ndarray, y: int) -> Prediction:
        """Prediction from the pre-learn state, then one learning step."""
        pred = self.predict_one(x)
        self.learn_one(x, y)
        return pred

    def drain_drift_events(self) -> list[dict]:
        """Detector firings accumulated since the last drain (ensembles only)."""
        return []

    # -- input validation helpers ----------------------------------------------

    def _check_learn_input(self, x: np.ndarray, y: int, weight: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)) or not np.isfinite(weight):
            raise NonFiniteInput("learn_one fed non-finite values")
        if y not in (0, 1):
            raise ValueError(f"binary label expected, got {y!r}")
        if self.input_dim is None:
            self.input_dim = x.shape[0]
        elif x.shape[0] != self.input_dim:
            raise DimensionMismatch(
                f"instance has {x.shape[0]} dims, model expects {self.input_dim}"
            )
        return x

    def _check_predict_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.input_dim is not None and x.shape[0] != self.input_dim:
            raise DimensionMismatch(
                f"instance has {x.shape[0]} dims, model expects {self.input_dim}"
            )
        return x


def uniform_proba() -> np.ndarray:
    return np.array([0.5, 0.5])
