"""Confusion-matrix bookkeeping and the classification metrics built on it.

The positive class is ransomware (label 1). Counters are plain Python
integers so that metric values are exact functions of the counts; every
zero-denominator case returns 0.0 by project-wide convention.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass


@dataclass
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def update(self, y_true: int, y_pred: int) -> None:
        if y_true == 1:
            if y_pred == 1:
                self.tp += 1
            else:
                self.fn += 1
        else:
            if y_pred == 1:
                self.fp += 1
            else:
                self.tn += 1

    def remove(self, y_true: int, y_pred: int) -> None:
        """Reverse one update; used by rolling windows when an outcome expires."""
        if y_true == 1:
            if y_pred == 1:
                self.tp -= 1
            else:
                self.fn -= 1
        else:
            if y_pred == 1:
                self.fp -= 1
            else:
                self.tn -= 1


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation coefficient; 0.0 when any marginal is empty."""
    f1_ = c.tp + c.fp
    f2_ = c.tp + c.fn
    f3_ = c.tn + c.fp
    f4_ = c.tn + c.fn
    if f1_ == 0 or f2_ == 0 or f3_ == 0 or f4_ == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(f1_ * f2_ * f3_ * f4_)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        return 0.0
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        return 0.0
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        return 0.0
    return c.tp / (c.tp + c.fn)


def f1(c: ConfusionCounts) -> float:
    p = precision(c)
    r = recall(c)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def all_metrics(c: ConfusionCounts) -> dict[str, float]:
    return {
        "accuracy": accuracy(c),
        "precision": precision(c),
        "recall": recall(c),
        "f1": f1(c),
        "mcc": mcc(c),
    }


class RollingConfusion:
    """Confusion counts restricted to the trailing `window` outcomes.

    Fewer than `window` outcomes seen means all of them are used.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._outcomes: deque[tuple[int, int]] = deque()
        self.counts = ConfusionCounts()

    def update(self, y_true: int, y_pred: int) -> None:
        self._outcomes.append((y_true, y_pred))
        self.counts.update(y_true, y_pred)
        if len(self._outcomes) > self.window:
            old_true, old_pred = self._outcomes.popleft()
            self.counts.remove(old_true, old_pred)

    def mcc(self) -> float:
        return mcc(self.counts)

    def __len__(self) -> int:
        return len(self._outcomes)
