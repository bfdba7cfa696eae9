"""Online Gaussian naive Bayes with Welford-style per-class statistics."""

from __future__ import annotations

import numpy as np

from .base import OnlineClassifier, uniform_proba

VAR_FLOOR = 1e-9
NB_BASE_BYTES = 256


class OnlineGaussianNB(OnlineClassifier):
    def __init__(self):
        super().__init__()
        self.class_weight = np.zeros(2)
        self._mean: np.ndarray | None = None  # (2, d)
        self._m2: np.ndarray | None = None

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        x = self._check_learn_input(x, y, weight)
        if self._mean is None:
            d = x.shape[0]
            self._mean = np.zeros((2, d))
            self._m2 = np.zeros((2, d))
        old_w = self.class_weight[y]
        new_w = old_w + weight
        delta = x - self._mean[y]
        self._mean[y] += (weight / new_w) * delta
        self._m2[y] += weight * delta * (x - self._mean[y])
        self.class_weight[y] = new_w

    def _log_joint(self, x: np.ndarray) -> np.ndarray:
        total = self.class_weight.sum()
        out = np.full(2, -np.inf)
        for c in (0, 1):
            w = self.class_weight[c]
            if w <= 0.0:
                continue
            var = self._m2[c] / w + VAR_FLOOR
            out[c] = np.log(w / total) - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + (x - self._mean[c]) ** 2 / var
            )
        return out

    def predict_proba_one(self, x) -> np.ndarray:
        if self.class_weight.sum() == 0.0:
            return uniform_proba()
        x = self._check_predict_input(x)
        log_joint = self._log_joint(x)
        shifted = log_joint - log_joint.max()
        proba = np.exp(shifted)
        return proba / proba.sum()

    def estimate_memory_bytes(self) -> int:
        if self._mean is None:
            return NB_BASE_BYTES
        d = self._mean.shape[1]
        return NB_BASE_BYTES + 2 * d * 2 * 8 + 2 * 8
