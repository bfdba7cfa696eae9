"""Streaming Pearson-correlation ranking of event fields.

Each field's embedding dimensions are correlated against the class label
with running sufficient statistics; a field's relevance is the mean
absolute correlation over its dimensions. The top-k fields by relevance
form the classifier input layout, recomputed intermittently.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteInput

log = logging.getLogger(__name__)


@dataclass
class PccAccumulator:
    """Sufficient statistics for the correlation of one (x, y) pair stream."""

    n: int = 0
    sum_x: float = 0.0
    sum_y: float = 0.0
    sum_xy: float = 0.0
    sum_xx: float = 0.0
    sum_yy: float = 0.0

    def update(self, x: float, y: float) -> "PccAccumulator":
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NonFiniteInput(f"accumulator fed non-finite pair ({x!r}, {y!r})")
        self.n += 1
        self.sum_x += x
        self.sum_y += y
        self.sum_xy += x * y
        self.sum_xx += x * x
        self.sum_yy += y * y
        return self

    def value(self) -> float:
        """Correlation from the running sums; 0 for n < 2 or a constant variable."""
        if self.n < 2:
            return 0.0
        var_x = self.n * self.sum_xx - self.sum_x * self.sum_x
        var_y = self.n * self.sum_yy - self.sum_y * self.sum_y
        if var_x <= 0.0 or var_y <= 0.0:
            return 0.0
        r = (self.n * self.sum_xy - self.sum_x * self.sum_y) / math.sqrt(var_x * var_y)
        return min(1.0, max(-1.0, r))


def pcc_update(acc: PccAccumulator, x: float, y: float) -> PccAccumulator:
    return acc.update(x, y)


def pcc_value(acc: PccAccumulator) -> float:
    return acc.value()


@dataclass
class FieldRanking:
    scores: dict[str, float]
    active_set: list[str]
    k: int
    refresh_period: int


def rank_fields(
    accumulators: dict[str, list[PccAccumulator]],
    k: int = 5,
    refresh_period: int = 1000,
) -> FieldRanking:
    """Rank fields by mean |PCC| over their dimensions, ties broken by name."""
    scores = {
        name: float(np.mean([abs(a.value()) for a in accs])) if accs else 0.0
        for name, accs in accumulators.items()
    }
    ordered = sorted(scores, key=lambda f: (-scores[f], f))
    return FieldRanking(
        scores=scores,
        active_set=ordered[: min(k, len(ordered))],
        k=k,
        refresh_period=refresh_period,
    )


def select_top_k(ranking: FieldRanking, k: int) -> list[str]:
    """First k fields of the ranking; k larger than available clamps with a warning."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ordered = sorted(ranking.scores, key=lambda f: (-ranking.scores[f], f))
    if k > len(ordered):
        log.warning("k=%d exceeds the %d ranked fields; clamping", k, len(ordered))
        k = len(ordered)
    return ordered[:k]


def refresh_policy(instances_seen: int, period: int) -> bool:
    if period < 1:
        raise ValueError(f"refresh period must be >= 1, got {period}")
    return instances_seen > 0 and instances_seen % period == 0


class FieldCorrelationTracker:
    """Vector-valued accumulator bank: one PCC per embedding dimension per field.

    Fields absent from an instance contribute the zero vector, so every
    field's statistics cover the same label stream; a field first seen
    mid-stream starts with exactly the state that a zero-valued history
    would have produced (all x-sums zero).
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.n = 0
        self.sum_y = 0.0
        self.sum_yy = 0.0
        self._sum_x: dict[str, np.ndarray] = {}
        self._sum_xx: dict[str, np.ndarray] = {}
        self._sum_xy: dict[str, np.ndarray] = {}

    @property
    def fields(self) -> list[str]:
        return list(self._sum_x)

    def _register(self, name: str) -> None:
        self._sum_x[name] = np.zeros(self.dim)
        self._sum_xx[name] = np.zeros(self.dim)
        self._sum_xy[name] = np.zeros(self.dim)

    def update(self, field_vectors: dict[str, np.ndarray], y: float) -> None:
        self.n += 1
        self.sum_y += y
        self.sum_yy += y * y
        for name, vec in field_vectors.items():
            if name not in self._sum_x:
                self._register(name)
            v = vec.astype(np.float64) if vec.dtype != np.float64 else vec
            self._sum_x[name] += v
            self._sum_xx[name] += v * v
            if y == 1.0:
                self._sum_xy[name] += v
            elif y != 0.0:
                self._sum_xy[name] += v * y

    def pcc_vector(self, name: str) -> np.ndarray:
        """Per-dimension correlations for one field, degenerate dims as 0."""
        n = self.n
        out = np.zeros(self.dim)
        if n < 2 or name not in self._sum_x:
            return out
        sx = self._sum_x[name]
        var_x = n * self._sum_xx[name] - sx * sx
        var_y = n * self.sum_yy - self.sum_y * self.sum_y
        if var_y <= 0.0:
            return out
        ok = var_x > 0.0
        num = n * self._sum_xy[name] - sx * self.sum_y
        out[ok] = num[ok] / np.sqrt(var_x[ok] * var_y)
        return np.clip(out, -1.0, 1.0)

    def field_scores(self) -> dict[str, float]:
        return {name: float(np.mean(np.abs(self.pcc_vector(name)))) for name in self._sum_x}

    def ranking(self, k: int, refresh_period: int) -> FieldRanking:
        scores = self.field_scores()
        ordered = sorted(scores, key=lambda f: (-scores[f], f))
        return FieldRanking(
            scores=scores,
            active_set=ordered[: min(k, len(ordered))],
            k=k,
            refresh_period=refresh_period,
        )

    def accumulators_for(self, name: str) -> list[PccAccumulator]:
        """Scalar-accumulator view of one field's state (parity with pcc_update)."""
        out = []
        for d in range(self.dim):
            out.append(
                PccAccumulator(
                    n=self.n,
                    sum_x=float(self._sum_x[name][d]),
                    sum_y=self.sum_y,
                    sum_xy=float(self._sum_xy[name][d]),
                    sum_xx=float(self._sum_xx[name][d]),
                    sum_yy=self.sum_yy,
                )
            )
        return out


def ranking_to_json(
    ranking: FieldRanking, refresh_index: int, instances_seen: int
) -> str:
    ordered = sorted(ranking.scores, key=lambda f: (-ranking.scores[f], f))
    payload = {
        "ranking": [
            {"field": name, "score": ranking.scores[name], "rank": i + 1}
            for i, name in enumerate(ordered)
        ],
        "active_set": ranking.active_set,
        "k": ranking.k,
        "refresh_period": ranking.refresh_period,
        "refresh_index": refresh_index,
        "instances_seen": instances_seen,
    }
    return json.dumps(payload, indent=2)
