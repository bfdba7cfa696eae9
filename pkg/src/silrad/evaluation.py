"""Prequential (test-then-train) evaluation with streaming metrics and
resource accounting.

Every instance is scored with the model state from before learning on
it. Checkpoint records carry cumulative and rolling metrics plus a
deterministic structural memory estimate; wall-clock latency is tracked
separately because it is the one nondeterministic quantity (it is kept
out of metrics.csv so reruns are byte-identical).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Iterable

from .events import SysmonEvent
from .metrics import ConfusionCounts, RollingConfusion, all_metrics, mcc
from .pipeline import DetectionPipeline

CSV_COLUMNS = [
    "instance_index",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "mcc",
    "rolling_mcc",
    "mem_bytes_estimate",
    "drift_events",
]


@dataclass
class MetricSeries:
    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> None:
        if self.records and record["instance_index"] <= self.records[-1]["instance_index"]:
            raise ValueError("checkpoint instance_index must be strictly increasing")
        self.records.append(record)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in self.records:
                writer.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c] for c in CSV_COLUMNS])

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")


@dataclass
class PrequentialResult:
    series: MetricSeries
    counts: ConfusionCounts
    drift_events: list[dict]
    summary: dict
    ns_per_instance_mean: float


def prequential_run(
    stream: Iterable[SysmonEvent],
    pipeline: DetectionPipeline,
    *,
    checkpoint_every: int = 1000,
    rolling_window: int = 2000,
    classifier_name: str = "",
) -> PrequentialResult:
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    counts = ConfusionCounts()
    rolling = RollingConfusion(rolling_window)
    series = MetricSeries()
    drift_log: list[dict] = []
    n = 0
    interval_start_ns = time.perf_counter_ns()
    interval_instances = 0
    total_ns = 0
    last_interval_ns_per_instance = 0.0

    def checkpoint(index: int, ns_per_instance: float) -> None:
        record = {
            "instance_index": index,
            **all_metrics(counts),
            "rolling_mcc": rolling.mcc(),
            "mem_bytes_estimate": pipeline.memory_estimate_bytes(),
            "drift_events": len(drift_log),
            "ns_per_instance": ns_per_instance,
        }
        series.append(record)

    for event in stream:
        outcome = pipeline.process_labeled(event)
        counts.update(outcome.y, outcome.prediction.label)
        rolling.update(outcome.y, outcome.prediction.label)
        for item in outcome.drift_events:
            drift_log.append({"instance_index": outcome.index, **item})
        n += 1
        interval_instances += 1
        if n % checkpoint_every == 0:
            now = time.perf_counter_ns()
            elapsed = now - interval_start_ns
            total_ns += elapsed
            last_interval_ns_per_instance = elapsed / interval_instances
            checkpoint(n, last_interval_ns_per_instance)
            interval_start_ns = now
            interval_instances = 0

    if interval_instances:
        now = time.perf_counter_ns()
        elapsed = now - interval_start_ns
        total_ns += elapsed
        last_interval_ns_per_instance = elapsed / interval_instances
        checkpoint(n, last_interval_ns_per_instance)

    summary = {
        "classifier": classifier_name,
        **all_metrics(counts),
        "instances": n,
        "drift_events": len(drift_log),
        "mem_bytes_estimate": pipeline.memory_estimate_bytes(),
        "ns_per_instance_mean": total_ns / n if n else 0.0,
    }
    return PrequentialResult(
        series=series,
        counts=counts,
        drift_events=drift_log,
        summary=summary,
        ns_per_instance_mean=summary["ns_per_instance_mean"],
    )


def rolling_mcc_series(result: PrequentialResult) -> list[tuple[int, float]]:
    return [(r["instance_index"], r["rolling_mcc"]) for r in result.series.records]


def resource_report(classifier, ns_per_instance_mean: float | None = None) -> dict:
    """Structural memory estimate plus (when measured) mean per-instance latency.

    The memory figure is deterministic accounting over the model structure
    (documented per model type), not allocator introspection, so runs are
    comparable across platforms.
    """
    return {
        "mem_bytes_estimate": classifier.estimate_memory_bytes(),
        "ns_per_instance_mean": ns_per_instance_mean,
    }


def write_drift_events(events: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in events:
            fh.write(json.dumps(item) + "\n")
