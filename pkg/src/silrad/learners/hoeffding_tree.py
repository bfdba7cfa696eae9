"""Incremental decision tree with Hoeffding-bound split decisions.

Leaves keep per-class Gaussian summaries (weighted Welford) per input
dimension plus observed min/max. Every ``grace_period`` units of weight
at a leaf, candidate splits are scored by information gain over 10
equally spaced thresholds per dimension; the leaf splits when the
Hoeffding bound eps = sqrt(R^2 ln(1/delta) / (2n)) certifies the best
attribute over the second best, or when eps falls below the tie
threshold. Leaf prediction is majority-class or per-leaf naive Bayes.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from .base import OnlineClassifier, uniform_proba

VAR_FLOOR = 1e-9
_MIN_GAIN = 1e-12

# structural memory accounting, bytes
TREE_BASE_BYTES = 128
LEAF_BASE_BYTES = 512
INTERNAL_NODE_BYTES = 96
STATS_BYTES_PER_DIM = 48  # mean + m2 for 2 classes + min/max, 8-byte floats


def hoeffding_bound(value_range: float, delta: float, n: float) -> float:
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def _entropy(masses: np.ndarray) -> float:
    total = masses.sum()
    if total <= 0.0:
        return 0.0
    p = masses[masses > 0.0] / total
    return float(-(p * np.log2(p)).sum())


class _Leaf:
    __slots__ = (
        "class_weight", "stat_weight", "mean", "m2", "vmin", "vmax", "weight_since_attempt",
    )

    def __init__(self, dim: int, inherited: np.ndarray | None = None):
        self.class_weight = inherited.copy() if inherited is not None else np.zeros(2)
        self.stat_weight = np.zeros(2)
        self.mean = np.zeros((2, dim))
        self.m2 = np.zeros((2, dim))
        self.vmin = np.full(dim, np.inf)
        self.vmax = np.full(dim, -np.inf)
        self.weight_since_attempt = 0.0

    def learn(self, x: np.ndarray, y: int, weight: float) -> None:
        self.class_weight[y] += weight
        new_w = self.stat_weight[y] + weight
        delta = x - self.mean[y]
        self.mean[y] += (weight / new_w) * delta
        self.m2[y] += weight * delta * (x - self.mean[y])
        self.stat_weight[y] = new_w
        np.minimum(self.vmin, x, out=self.vmin)
        np.maximum(self.vmax, x, out=self.vmax)
        self.weight_since_attempt += weight

    def class_masses_around(self, dim: int, threshold: float) -> tuple[np.ndarray, np.ndarray]:
        """Estimated (left, right) class masses if split at threshold."""
        left = np.zeros(2)
        for c in (0, 1):
            w = self.stat_weight[c]
            if w <= 0.0:
                continue
            var = self.m2[c, dim] / w + VAR_FLOOR
            left[c] = w * float(ndtr((threshold - self.mean[c, dim]) / math.sqrt(var)))
        right = self.stat_weight - left
        return left, right


class _SplitNode:
    __slots__ = ("dim", "threshold", "left", "right")

    def __init__(self, dim: int, threshold: float, left, right):
        self.dim = dim
        self.threshold = threshold
        self.left = left
        self.right = right


class HoeffdingTree(OnlineClassifier):
    def __init__(
        self,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        tie_threshold: float = 0.05,
        leaf_prediction: str = "naive_bayes",
        n_candidates: int = 10,
    ):
        super().__init__()
        if leaf_prediction not in ("naive_bayes", "majority"):
            raise ValueError(f"unknown leaf prediction mode {leaf_prediction!r}")
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.leaf_prediction = leaf_prediction
        self.n_candidates = n_candidates
        self._root: _Leaf | _SplitNode | None = None
        self.n_splits = 0
        self.weight_seen = 0.0

    # -- structure ------------------------------------------------------------

    def _route(self, x: np.ndarray) -> _Leaf:
        node = self._root
        while isinstance(node, _SplitNode):
            node = node.left if x[node.dim] <= node.threshold else node.right
        return node

    @property
    def leaf_count(self) -> int:
        return self.n_splits + 1

    @property
    def node_count(self) -> int:
        return 2 * self.n_splits + 1

    def iter_split_dims(self):
        stack = [self._root]
        while stack:
            node = stack.pop()
            if isinstance(node, _SplitNode):
                yield node.dim
                stack.append(node.left)
                stack.append(node.right)

    # -- learning ---------------------------------------------------------------

    def learn_one(self, x, y, weight: float = 1.0) -> None:
        x = self._check_learn_input(x, y, weight)
        if self._root is None:
            self._root = _Leaf(x.shape[0])
        self.weight_seen += weight
        parent = None
        went_left = False
        node = self._root
        while isinstance(node, _SplitNode):
            parent = node
            went_left = x[node.dim] <= node.threshold
            node = node.left if went_left else node.right
        node.learn(x, y, weight)
        if node.weight_since_attempt >= self.grace_period:
            node.weight_since_attempt = 0.0
            split = self._attempt_split(node)
            if split is not None:
                if parent is None:
                    self._root = split
                elif went_left:
                    parent.left = split
                else:
                    parent.right = split
                self.n_splits += 1

    def _attempt_split(self, leaf: _Leaf) -> _SplitNode | None:
        masses = leaf.stat_weight
        n = masses.sum()
        if n <= 0.0 or (masses > 0.0).sum() < 2:
            return None  # pure leaf, nothing to separate
        span = leaf.vmax - leaf.vmin
        usable = span > 0.0
        if not usable.any():
            return None
        d = leaf.mean.shape[1]
        steps = (np.arange(1, self.n_candidates + 1) / (self.n_candidates + 1))[None, :]
        cand = leaf.vmin[:, None] + span[:, None] * steps  # (d, C)

        # Gaussian-estimated left mass per class/dim/candidate
        var = leaf.m2 / np.maximum(leaf.stat_weight[:, None], 1e-300) + VAR_FLOOR
        sigma = np.sqrt(var)  # (2, d)
        z = (cand[None, :, :] - leaf.mean[:, :, None]) / sigma[:, :, None]
        left = masses[:, None, None] * ndtr(z)  # (2, d, C)
        right = masses[:, None, None] - left

        nl = left.sum(axis=0)
        nr = right.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            def side_entropy(side, count):
                p = side / count[None, :, :]
                p = np.where(side > 0.0, p, 1.0)
                return -(p * np.log2(p)).sum(axis=0)

            h_left = np.where(nl > 0.0, side_entropy(left, nl), 0.0)
            h_right = np.where(nr > 0.0, side_entropy(right, nr), 0.0)
        gain = _entropy(masses) - (nl * h_left + nr * h_right) / n
        gain[~usable, :] = -np.inf

        best_per_dim = gain.max(axis=1)
        order = np.argsort(-best_per_dim)
        best_dim = int(order[0])
        best_gain = float(best_per_dim[best_dim])
        second_gain = float(best_per_dim[order[1]]) if d > 1 else 0.0
        second_gain = max(second_gain, 0.0)  # the null split competes too
        if best_gain <= _MIN_GAIN:
            return None
        eps = hoeffding_bound(math.log2(2), self.split_confidence, n)
        if not (best_gain - second_gain > eps or eps <= self.tie_threshold):
            return None

        threshold = float(cand[best_dim, int(np.argmax(gain[best_dim]))])
        left_mass, right_mass = leaf.class_masses_around(best_dim, threshold)
        return _SplitNode(
            best_dim,
            threshold,
            _Leaf(d, inherited=left_mass),
            _Leaf(d, inherited=right_mass),
        )

    # -- prediction ----------------------------------------------------------------

    def _leaf_proba(self, leaf: _Leaf, x: np.ndarray) -> np.ndarray:
        priors = leaf.class_weight
        total = priors.sum()
        if total <= 0.0:
            return uniform_proba()
        if self.leaf_prediction == "majority":
            return priors / total
        log_joint = np.full(2, -np.inf)
        for c in (0, 1):
            if priors[c] <= 0.0:
                continue
            log_joint[c] = math.log(priors[c] / total)
            if leaf.stat_weight[c] > 0.0:
                var = leaf.m2[c] / leaf.stat_weight[c] + VAR_FLOOR
                log_joint[c] -= 0.5 * float(
                    np.sum(np.log(2.0 * np.pi * var) + (x - leaf.mean[c]) ** 2 / var)
                )
        shifted = log_joint - log_joint.max()
        proba = np.exp(shifted)
        return proba / proba.sum()

    def predict_proba_one(self, x) -> np.ndarray:
        if self._root is None:
            return uniform_proba()
        x = self._check_predict_input(x)
        return self._leaf_proba(self._route(x), x)

    # -- accounting -------------------------------------------------------------------

    def estimate_memory_bytes(self) -> int:
        """Deterministic structural cost: documented per-node constants plus
        STATS_BYTES_PER_DIM per input dimension at each leaf."""
        if self._root is None or self.input_dim is None:
            return TREE_BASE_BYTES + LEAF_BASE_BYTES
        per_leaf = LEAF_BASE_BYTES + STATS_BYTES_PER_DIM * self.input_dim
        return (
            TREE_BASE_BYTES
            + self.leaf_count * per_leaf
            + self.n_splits * INTERNAL_NODE_BYTES
        )
