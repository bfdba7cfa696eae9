"""Leveraging bagging: Poisson(6)-weighted online bagging of Hoeffding
trees over the full feature vector, one ADWIN per member.

When any member's detector fires, the member with the highest detector
error estimate is replaced by a fresh base tree and its detector reset.
Prediction is a majority vote.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..drift import AdwinDetector
from .base import BENIGN, OnlineClassifier, Prediction, RANSOMWARE, uniform_proba
from .forest import ENSEMBLE_BASE_BYTES, MEMBER_BASE_BYTES, detector_memory_bytes
from .hoeffding_tree import HoeffdingTree


@dataclass
class LeveragingBaggingConfig:
    n_members: int = 10
    poisson_lambda: float = 6.0
    drift_delta: float = 0.002
    grace_period: int = 50
    split_confidence: float = 1e-5
    leaf_prediction: str = "naive_bayes"
    seed: int = 42


class LeveragingBagging(OnlineClassifier):
    def __init__(self, config: LeveragingBaggingConfig | None = None, **overrides):
        super().__init__()
        base = config or LeveragingBaggingConfig()
        if overrides:
            import dataclasses

            base = dataclasses.replace(base, **overrides)
        self.config = base
        self._trees: list[HoeffdingTree] = []
        self._detectors: list[AdwinDetector] = []
        self._rngs: list[np.random.Generator] = []
        self._drift_events: list[dict] = []

    @property
    def n_members(self) -> int:
        return len(self._trees)

    def _new_tree(self) -> HoeffdingTree:
        cfg = self.config
        return HoeffdingTree(
            grace_period=cfg.grace_period,
            split_confidence=cfg.split_confidence,
            leaf_prediction=cfg.leaf_prediction,
        )

    def _init_members(self) -> None:
        cfg = self.config
        for seq in np.random.SeedSequence(cfg.seed).spawn(cfg.n_members):
            self._trees.append(self._new_tree())
            self._detectors.append(AdwinDetector(cfg.drift_delta))
            self._rngs.append(np.random.default_rng(seq))

    # -- prediction ----------------------------------------------------------

    def _member_votes(self, x: np.ndarray) -> list[int]:
        votes = []
        for tree in self._trees:
            proba = tree.predict_proba_one(x)
            votes.append(RANSOMWARE if proba[1] > proba[0] else BENIGN)
        return votes

    def _vote_proba(self, votes: list[int]) -> np.ndarray:
        if not votes:
            return uniform_proba()
        frac = sum(votes) / len(votes)
        return np.array([1.0 - frac, frac])

    def predict_proba_one(self, x) -> np.ndarray:
        if not self._trees:
            return uniform_proba()
        x = self._check_predict_input(x)
        return self._vote_proba(self._member_votes(x))

    # -- learning --------------------------------------------------------------

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        x = self._check_learn_input(x, y, weight)
        if not self._trees:
            self._init_members()
        self._learn_with_votes(x, y, self._member_votes(x))

    def predict_learn_one(self, x, y) -> Prediction:
        x = self._check_learn_input(x, y, 1.0)
        fresh = not self._trees
        if fresh:
            # prediction must reflect the pre-learn (memberless) state
            self._init_members()
        votes = self._member_votes(x)
        proba = uniform_proba() if fresh else self._vote_proba(votes)
        label = RANSOMWARE if proba[RANSOMWARE] > proba[BENIGN] else BENIGN
        self._learn_with_votes(x, y, votes)
        return Prediction(label=label, score=float(proba[RANSOMWARE]))

    def _learn_with_votes(self, x, y, votes) -> None:
        cfg = self.config
        any_drift = False
        for vote, det in zip(votes, self._detectors):
            res = det.update(1.0 if vote != y else 0.0)
            any_drift = any_drift or res.drift
        if any_drift:
            worst = max(range(len(self._trees)), key=lambda i: self._detectors[i].estimate)
            self._drift_events.append(
                {
                    "detector_id": f"member{worst}.drift",
                    "width_before": self._detectors[worst].width,
                    "width_after": 0,
                    "estimate": self._detectors[worst].estimate,
                }
            )
            self._trees[worst] = self._new_tree()
            self._detectors[worst] = AdwinDetector(cfg.drift_delta)
        for tree, rng in zip(self._trees, self._rngs):
            w = int(rng.poisson(cfg.poisson_lambda)) if cfg.poisson_lambda > 0.0 else 1
            if w > 0:
                tree.learn_one(x, y, float(w))

    def drain_drift_events(self) -> list[dict]:
        events, self._drift_events = self._drift_events, []
        return events

    def estimate_memory_bytes(self) -> int:
        total = ENSEMBLE_BASE_BYTES
        for tree, det in zip(self._trees, self._detectors):
            total += MEMBER_BASE_BYTES + tree.estimate_memory_bytes() + detector_memory_bytes(det)
        return total
