"""Adaptive-window (ADWIN) change detection over a univariate stream.

The window W grows while the stream looks stationary and is cut from the
old end whenever two sub-windows W0 (older) and W1 (newer) have means
that differ by at least the error bound

    eps_cut = sqrt( ln(4/delta) / (2m) ),   m = harmonic mean of n0, n1.

Two window representations share that cut rule:

* ``naive`` keeps every value and checks every split index — O(n) memory,
  used for worked examples and as the oracle for the compressed form;
* ``histogram`` keeps an exponential histogram (rows of buckets whose
  capacities are powers of two, at most ``max_buckets`` per row), so
  memory grows logarithmically with the window width and splits are
  checked at bucket boundaries only.

With ``confidence_correction="window"`` the per-test confidence is
Bonferroni-adjusted to delta / (width * split_candidates), which keeps
the family-wise false-alarm rate near the configured delta over long
stationary streams. ``"none"`` applies the bound verbatim per test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import BadSplit, InvalidDelta, NonFiniteInput, ZeroLength


def harmonic_m(n0: int, n1: int) -> float:
    """Harmonic mean of the two sub-window lengths."""
    if n0 < 1 or n1 < 1:
        raise ZeroLength(f"sub-window lengths must be >= 1, got n0={n0}, n1={n1}")
    return 2.0 / (1.0 / n0 + 1.0 / n1)


def epsilon_cut(m: float, delta: float) -> float:
    """Error bound for the two-window mean comparison."""
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must be in (0, 1), got {delta}")
    if m <= 0.0:
        raise ZeroLength(f"harmonic mean must be positive, got {m}")
    return math.sqrt(math.log(4.0 / delta) / (2.0 * m))


@dataclass
class CutDecision:
    cut: bool
    mean0: float
    mean1: float
    eps: float


def check_cut_naive(w: Sequence[float], split: int, delta: float) -> CutDecision:
    """Evaluate the two-window test at one split point of an explicit window.

    ``split`` is the length of the older sub-window W0; the cut fires when
    |mean(W0) - mean(W1)| >= eps_cut.
    """
    n = len(w)
    if not (1 <= split <= n - 1):
        raise BadSplit(f"split must be in [1, {n - 1}], got {split}")
    n0, n1 = split, n - split
    mean0 = sum(w[:split]) / n0
    mean1 = sum(w[split:]) / n1
    eps = epsilon_cut(harmonic_m(n0, n1), delta)
    return CutDecision(cut=abs(mean0 - mean1) >= eps, mean0=mean0, mean1=mean1, eps=eps)


@dataclass
class AdwinUpdate:
    drift: bool
    width_before: int
    width_after: int
    estimate: float


class AdwinDetector:
    """Stateful adaptive window fed one value per update.

    Defaults follow the production configuration: delta 0.002, exponential
    histogram with 5 buckets per row, cut checks every 32 insertions once
    10 values have been seen, sub-windows of at least 5 values, and the
    window-adjusted confidence. The naive mode with ``clock=1``,
    ``grace_period=0``, ``min_sublength=1`` and ``confidence_correction=
    "none"`` reproduces the textbook two-window behaviour exactly.
    """

    def __init__(
        self,
        delta: float = 0.002,
        *,
        mode: str = "histogram",
        max_buckets: int = 5,
        clock: int = 32,
        grace_period: int = 10,
        min_sublength: int = 5,
        confidence_correction: str = "window",
    ):
        if not (0.0 < delta < 1.0):
            raise InvalidDelta(f"delta must be in (0, 1), got {delta}")
        if mode not in ("histogram", "naive"):
            raise ValueError(f"unknown mode {mode!r}")
        if confidence_correction not in ("window", "none"):
            raise ValueError(f"unknown confidence_correction {confidence_correction!r}")
        self.delta = delta
        self.mode = mode
        self.max_buckets = max_buckets
        self.clock = max(1, clock)
        self.grace_period = max(0, grace_period)
        self.min_sublength = max(1, min_sublength)
        self.confidence_correction = confidence_correction
        self.width = 0
        self.total = 0.0
        self.n_detections = 0
        self._since_check = 0
        # rows[i] holds buckets of capacity 2^i as [count, sum], ordered
        # oldest -> newest within the row; row i is newer than row i+1.
        self._rows: list[list[list[float]]] = [[]]
        self._values: list[float] = []  # naive mode only

    @property
    def estimate(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def bucket_count(self) -> int:
        if self.mode == "naive":
            return self.width
        return sum(len(row) for row in self._rows)

    def update(self, value: float) -> AdwinUpdate:
        if not math.isfinite(value):
            raise NonFiniteInput(f"detector fed non-finite value {value!r}")
        self._insert(value)
        width_before = self.width
        self._since_check += 1
        drift = False
        if self.width >= self.grace_period and self._since_check >= self.clock:
            self._since_check = 0
            while self._cut_once():
                drift = True
        if drift:
            self.n_detections += 1
        return AdwinUpdate(
            drift=drift,
            width_before=width_before,
            width_after=self.width,
            estimate=self.estimate,
        )

    # -- window maintenance ------------------------------------------------

    def _insert(self, value: float) -> None:
        self.width += 1
        self.total += value
        if self.mode == "naive":
            self._values.append(value)
            return
        rows = self._rows
        rows[0].append([1.0, value])
        i = 0
        while len(rows[i]) > self.max_buckets:
            if i + 1 == len(rows):
                rows.append([])
            c0, s0 = rows[i][0]
            c1, s1 = rows[i][1]
            del rows[i][:2]
            rows[i + 1].append([c0 + c1, s0 + s1])
            i += 1

    def _drop_oldest(self) -> None:
        if self.mode == "naive":
            v = self._values.pop(0)
            self.width -= 1
            self.total -= v
            return
        for row in reversed(self._rows):
            if row:
                c, s = row.pop(0)
                self.width -= int(c)
                self.total -= s
                return

    def _buckets_oldest_first(self) -> list[list[float]]:
        if self.mode == "naive":
            return [[1.0, v] for v in self._values]
        out: list[list[float]] = []
        for row in reversed(self._rows):
            out.extend(row)
        return out

    # -- cut rule ------------------------------------------------------------

    def _effective_delta(self, n_candidates: int) -> float:
        if self.confidence_correction == "window":
            return self.delta / max(1, self.width * n_candidates)
        return self.delta

    def _cut_once(self) -> bool:
        """Drop the oldest bucket if any admissible split violates the bound."""
        if self.width < 2 * self.min_sublength:
            return False
        buckets = self._buckets_oldest_first()
        n_candidates = len(buckets) - 1
        if n_candidates < 1:
            return False
        delta_eff = self._effective_delta(n_candidates)
        log_term = math.log(4.0 / delta_eff)
        n0 = 0.0
        s0 = 0.0
        for c, s in buckets[:-1]:
            n0 += c
            s0 += s
            n1 = self.width - n0
            if n0 < self.min_sublength or n1 < self.min_sublength:
                continue
            m = 2.0 / (1.0 / n0 + 1.0 / n1)
            eps = math.sqrt(log_term / (2.0 * m))
            if abs(s0 / n0 - (self.total - s0) / n1) >= eps:
                self._drop_oldest()
                return True
        return False

    # -- introspection --------------------------------------------------------

    def check_conservation(self) -> None:
        """Assert width/total match the exact count and sum of retained values."""
        buckets = self._buckets_oldest_first()
        count = int(sum(c for c, _ in buckets))
        total = sum(s for _, s in buckets)
        if count != self.width or not math.isclose(total, self.total, rel_tol=0.0, abs_tol=1e-6):
            raise AssertionError(
                f"conservation violated: width {self.width} vs {count}, "
                f"total {self.total} vs {total}"
            )

    def bucket_bound(self) -> int:
        """Upper bound on bucket count: M*(floor(log2 width)+1) + M."""
        if self.width == 0:
            return self.max_buckets
        return self.max_buckets * (int(math.log2(self.width)) + 1) + self.max_buckets
