"""Incremental classifiers behind one learn-one/predict-one contract."""

from __future__ import annotations

from .bagging import LeveragingBagging, LeveragingBaggingConfig
from .base import BENIGN, OnlineClassifier, Prediction, RANSOMWARE
from .checkpoint import load_checkpoint, save_checkpoint
from .forest import AdaptiveRandomForest, ArfConfig
from .hoeffding_tree import HoeffdingTree, hoeffding_bound
from .naive_bayes import OnlineGaussianNB
from .trivial import MajorityClassClassifier, OracleClassifier

# SILRAD's classification engine: ARF with naive-Bayes leaves, seed 42,
# drift delta 0.002 (warning 0.01), ten members, Poisson(6) bagging.
SILRAD_ARF_CONFIG = ArfConfig()

_INCREMENTAL = ("silrad", "arf", "ht", "nb", "lb", "oracle", "majority")


def build_classifier(name: str, seed: int = 42, **params) -> OnlineClassifier:
    """Construct an incremental classifier by its CLI name."""
    name = name.lower()
    if name in ("silrad", "arf"):
        return AdaptiveRandomForest(ArfConfig(seed=seed), **params)
    if name == "ht":
        return HoeffdingTree(**params)
    if name == "nb":
        return OnlineGaussianNB(**params)
    if name == "lb":
        return LeveragingBagging(LeveragingBaggingConfig(seed=seed), **params)
    if name == "oracle":
        return OracleClassifier()
    if name == "majority":
        return MajorityClassClassifier()
    raise ValueError(f"unknown incremental classifier {name!r}; expected one of {_INCREMENTAL}")


__all__ = [
    "AdaptiveRandomForest",
    "ArfConfig",
    "BENIGN",
    "HoeffdingTree",
    "LeveragingBagging",
    "LeveragingBaggingConfig",
    "MajorityClassClassifier",
    "OnlineClassifier",
    "OnlineGaussianNB",
    "OracleClassifier",
    "Prediction",
    "RANSOMWARE",
    "SILRAD_ARF_CONFIG",
    "build_classifier",
    "hoeffding_bound",
    "load_checkpoint",
    "save_checkpoint",
]
