"""Adaptive random forest: Poisson-bagged Hoeffding trees on fixed random
feature subspaces, with per-member warning/drift detectors.

Each member owns its RNG, its subspace, and two ADWIN detectors fed that
member's own 0/1 error (computed before learning). A warning spawns a
background tree trained on the same weighted stream; a drift replaces
the member tree with its background (or a fresh tree) and resets both
detectors. Ensemble prediction averages member class probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..drift import AdwinDetector
from .base import BENIGN, OnlineClassifier, Prediction, RANSOMWARE, uniform_proba
from .hoeffding_tree import HoeffdingTree

ADWIN_BASE_BYTES = 256
ADWIN_BUCKET_BYTES = 48
MEMBER_BASE_BYTES = 128
ENSEMBLE_BASE_BYTES = 128


def detector_memory_bytes(det: AdwinDetector) -> int:
    return ADWIN_BASE_BYTES + ADWIN_BUCKET_BYTES * det.bucket_count


@dataclass
class ArfConfig:
    n_members: int = 10
    poisson_lambda: float = 6.0
    subspace: str | int = "sqrt"  # "sqrt", "all", or an explicit size
    drift_delta: float = 0.002
    warning_delta: float = 0.01
    grace_period: int = 200
    split_confidence: float = 1e-7
    tie_threshold: float = 0.05
    leaf_prediction: str = "naive_bayes"
    disable_drift_detection: bool = False
    seed: int = 42


class _Member:
    __slots__ = ("tree", "subspace", "warning", "drift", "background", "rng")

    def __init__(self, tree, subspace, warning, drift, rng):
        self.tree = tree
        self.subspace = subspace
        self.warning = warning
        self.drift = drift
        self.background = None
        self.rng = rng


class AdaptiveRandomForest(OnlineClassifier):
    def __init__(self, config: ArfConfig | None = None, **overrides):
        super().__init__()
        base = config or ArfConfig()
        if overrides:
            base = dataclass_replace(base, **overrides)
        self.config = base
        self.members: list[_Member] = []
        self._drift_events: list[dict] = []

    # -- member management -------------------------------------------------

    def _new_tree(self) -> HoeffdingTree:
        cfg = self.config
        return HoeffdingTree(
            grace_period=cfg.grace_period,
            split_confidence=cfg.split_confidence,
            tie_threshold=cfg.tie_threshold,
            leaf_prediction=cfg.leaf_prediction,
        )

    def _new_detector(self, delta: float) -> AdwinDetector:
        return AdwinDetector(delta)

    def _subspace_size(self, d: int) -> int:
        spec = self.config.subspace
        if spec == "sqrt":
            return min(d, math.ceil(math.sqrt(d)))
        if spec == "all":
            return d
        return max(1, min(d, int(spec)))

    def _init_members(self, d: int) -> None:
        cfg = self.config
        size = self._subspace_size(d)
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_members)
        for seq in seeds:
            rng = np.random.default_rng(seq)
            subspace = np.sort(rng.choice(d, size=size, replace=False))
            self.members.append(
                _Member(
                    tree=self._new_tree(),
                    subspace=subspace,
                    warning=self._new_detector(cfg.warning_delta),
                    drift=self._new_detector(cfg.drift_delta),
                    rng=rng,
                )
            )

    # -- prediction ------------------------------------------------------------

    def _member_probas(self, x: np.ndarray) -> list[np.ndarray]:
        return [m.tree.predict_proba_one(x[m.subspace]) for m in self.members]

    def _ensemble_proba(self, probas: list[np.ndarray]) -> np.ndarray:
        if not probas:
            return uniform_proba()
        return np.mean(probas, axis=0)

    def predict_proba_one(self, x) -> np.ndarray:
        if not self.members:
            return uniform_proba()
        x = self._check_predict_input(x)
        return self._ensemble_proba(self._member_probas(x))

    # -- learning ------------------------------------------------------------------

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        x = self._check_learn_input(x, y, weight)
        if not self.members:
            self._init_members(x.shape[0])
        self._learn_with_probas(x, y, self._member_probas(x))

    def predict_learn_one(self, x, y) -> Prediction:
        x = self._check_learn_input(x, y, 1.0)
        fresh = not self.members
        if fresh:
            # prediction must reflect the pre-learn (memberless) state
            self._init_members(x.shape[0])
        probas = self._member_probas(x)
        proba = uniform_proba() if fresh else self._ensemble_proba(probas)
        label = RANSOMWARE if proba[RANSOMWARE] > proba[BENIGN] else BENIGN
        self._learn_with_probas(x, y, probas)
        return Prediction(label=label, score=float(proba[RANSOMWARE]))

    def _learn_with_probas(self, x, y, probas) -> None:
        cfg = self.config
        for i, (member, proba) in enumerate(zip(self.members, probas)):
            x_sub = x[member.subspace]
            err = 1.0 if (RANSOMWARE if proba[1] > proba[0] else BENIGN) != y else 0.0
            if not cfg.disable_drift_detection:
                warn = member.warning.update(err)
                drift = member.drift.update(err)
                if warn.drift and member.background is None:
                    member.background = self._new_tree()
                    member.warning = self._new_detector(cfg.warning_delta)
                    self._drift_events.append(
                        {
                            "detector_id": f"member{i}.warning",
                            "width_before": warn.width_before,
                            "width_after": warn.width_after,
                            "estimate": warn.estimate,
                        }
                    )
                if drift.drift:
                    member.tree = member.background or self._new_tree()
                    member.background = None
                    member.warning = self._new_detector(cfg.warning_delta)
                    member.drift = self._new_detector(cfg.drift_delta)
                    self._drift_events.append(
                        {
                            "detector_id": f"member{i}.drift",
                            "width_before": drift.width_before,
                            "width_after": drift.width_after,
                            "estimate": drift.estimate,
                        }
                    )
            if cfg.poisson_lambda > 0.0:
                w = int(member.rng.poisson(cfg.poisson_lambda))
            else:
                w = 1
            if w > 0:
                member.tree.learn_one(x_sub, y, float(w))
                if member.background is not None:
                    member.background.learn_one(x_sub, y, float(w))

    def drain_drift_events(self) -> list[dict]:
        events, self._drift_events = self._drift_events, []
        return events

    # -- accounting --------------------------------------------------------------------

    def estimate_memory_bytes(self) -> int:
        total = ENSEMBLE_BASE_BYTES
        for member in self.members:
            total += MEMBER_BASE_BYTES
            total += member.tree.estimate_memory_bytes()
            if member.background is not None:
                total += member.background.estimate_memory_bytes()
            total += detector_memory_bytes(member.warning)
            total += detector_memory_bytes(member.drift)
        return total


def dataclass_replace(config, **overrides):
    import dataclasses

    return dataclasses.replace(config, **overrides)
