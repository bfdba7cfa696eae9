"""Non-incremental baselines and the 20-block hold-out degradation protocol.

A frozen model is fit once on the first two blocks of the stream and then
evaluated on each later block, ten times per block on 80% resamples, to
expose how batch models decay when new ransomware families appear.
"""

from __future__ import annotations

import hashlib
import pickle
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrainSet, StreamTooShort
from .metrics import ConfusionCounts, all_metrics


class KnnClassifier:
    """Exact brute-force Euclidean k-nearest-neighbour vote; ties go benign."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self._train_x: np.ndarray | None = None
        self._train_y: np.ndarray | None = None

    def fit(self, X, y) -> "KnnClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] == 0:
            raise EmptyTrainSet("kNN needs at least one training instance")
        self._train_x = X
        self._train_y = y
        self._train_sq = (X * X).sum(axis=1)
        return self

    def predict(self, x) -> int:
        return int(self.predict_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def predict_many(self, X) -> np.ndarray:
        if self._train_x is None:
            raise EmptyTrainSet("kNN model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        k = min(self.k, self._train_x.shape[0])
        out = np.empty(X.shape[0], dtype=np.int64)
        # block the query side so the distance matrix stays small
        step = max(1, int(4_000_000 / max(1, self._train_x.shape[0])))
        for lo in range(0, X.shape[0], step):
            q = X[lo : lo + step]
            d2 = (q * q).sum(axis=1)[:, None] - 2.0 * (q @ self._train_x.T) + self._train_sq[None, :]
            nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
            votes = self._train_y[nearest].sum(axis=1)
            out[lo : lo + step] = (votes * 2 > k).astype(np.int64)
        return out


class BatchGaussianNB:
    """One-pass Gaussian naive Bayes; serves as the online model's oracle."""

    VAR_FLOOR = 1e-9

    def __init__(self):
        self._prior: np.ndarray | None = None
        self._mean: np.ndarray | None = None
        self._var: np.ndarray | None = None

    def fit(self, X, y) -> "BatchGaussianNB":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] == 0:
            raise EmptyTrainSet("NB needs at least one training instance")
        d = X.shape[1]
        self._prior = np.zeros(2)
        self._mean = np.zeros((2, d))
        self._var = np.zeros((2, d))
        for c in (0, 1):
            rows = X[y == c]
            self._prior[c] = rows.shape[0] / X.shape[0]
            if rows.shape[0]:
                self._mean[c] = rows.mean(axis=0)
                self._var[c] = rows.var(axis=0)  # population variance
        return self

    def _log_joint(self, X: np.ndarray) -> np.ndarray:
        out = np.full((X.shape[0], 2), -np.inf)
        for c in (0, 1):
            if self._prior[c] <= 0.0:
                continue
            var = self._var[c] + self.VAR_FLOOR
            out[:, c] = np.log(self._prior[c]) - 0.5 * (
                np.log(2.0 * np.pi * var) + (X - self._mean[c]) ** 2 / var
            ).sum(axis=1)
        return out

    def predict(self, x) -> int:
        return int(self.predict_many(np.asarray(x, dtype=np.float64)[None, :])[0])

    def predict_many(self, X) -> np.ndarray:
        if self._prior is None:
            raise EmptyTrainSet("NB model is not fitted")
        lj = self._log_joint(np.asarray(X, dtype=np.float64))
        return (lj[:, 1] > lj[:, 0]).astype(np.int64)  # tie resolves benign


class SubsampledKnn(KnnClassifier):
    """kNN fitted on a stratified subsample of the training set.

    Experiment-level helper: caps the reference set so large hold-out runs
    stay tractable; the distance computation itself remains exact.
    """

    def __init__(self, k: int = 5, train_cap: int = 2000, seed: int = 0):
        super().__init__(k=k)
        self.train_cap = train_cap
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X)
        y = np.asarray(y)
        n = X.shape[0]
        if 0 < self.train_cap < n:
            rng = np.random.default_rng(self.seed)
            keep: list[np.ndarray] = []
            for c in np.unique(y):
                idx = np.flatnonzero(y == c)
                quota = max(1, int(round(self.train_cap * idx.size / n)))
                keep.append(rng.choice(idx, size=min(quota, idx.size), replace=False))
            picked = np.sort(np.concatenate(keep))
            X, y = X[picked], y[picked]
        return super().fit(X, y)


@dataclass
class HoldoutPlan:
    block_count: int = 20
    train_blocks: int = 2
    repeats_per_block: int = 10
    resample_fraction: float = 0.8
    seed: int = 0
    family_schedule: dict[int, list[str]] = field(default_factory=dict)


@dataclass
class HoldoutResult:
    rows: list[dict]
    block_means: dict[int, dict[str, float]]
    model_digest_before: str
    model_digest_after: str


def _digest(model) -> str:
    return hashlib.sha256(pickle.dumps(model)).hexdigest()


def block_slices(n: int, block_count: int) -> list[tuple[int, int]]:
    """Equal contiguous blocks; the last block absorbs the remainder."""
    size = n // block_count
    slices = [(i * size, (i + 1) * size) for i in range(block_count - 1)]
    slices.append(((block_count - 1) * size, n))
    return slices


def run_holdout(model_factory, X, y, plan: HoldoutPlan) -> HoldoutResult:
    """Fit once on the leading train blocks, then score each later block
    repeats_per_block times on resampled subsets of the frozen model's
    predictions, reporting per-repeat and mean metrics."""
    X = np.asarray(X)
    y = np.asarray(y)
    n = X.shape[0]
    if n < plan.block_count:
        raise StreamTooShort(f"{n} instances cannot fill {plan.block_count} blocks")
    slices = block_slices(n, plan.block_count)
    train_end = slices[plan.train_blocks - 1][1]

    model = model_factory()
    model.fit(X[:train_end], y[:train_end])
    digest_before = _digest(model)

    rng = np.random.default_rng(plan.seed)
    rows: list[dict] = []
    block_means: dict[int, dict[str, float]] = {}
    for block_idx in range(plan.train_blocks, plan.block_count):
        lo, hi = slices[block_idx]
        preds = model.predict_many(X[lo:hi])  # frozen model: one pass per block
        truth = y[lo:hi]
        sums: dict[str, float] = {}
        take = max(1, int(round(plan.resample_fraction * (hi - lo))))
        for repeat in range(plan.repeats_per_block):
            pick = rng.choice(hi - lo, size=take, replace=False)
            counts = ConfusionCounts()
            for t, p in zip(truth[pick], preds[pick]):
                counts.update(int(t), int(p))
            metricset = all_metrics(counts)
            rows.append({"block": block_idx + 1, "repeat": repeat + 1, **metricset})
            for key, value in metricset.items():
                sums[key] = sums.get(key, 0.0) + value
        block_means[block_idx + 1] = {
            key: value / plan.repeats_per_block for key, value in sums.items()
        }
    return HoldoutResult(
        rows=rows,
        block_means=block_means,
        model_digest_before=digest_before,
        model_digest_after=_digest(model),
    )
