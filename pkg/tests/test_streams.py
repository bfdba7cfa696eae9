import io
import json

import numpy as np
import pytest

from silrad.errors import BadConfig, BadParameter, EmptySegment, MissingSegment
from silrad.events import SysmonEvent, parse_event_ndjson, event_to_ndjson
from silrad.feature_select import FieldCorrelationTracker
from silrad.embedding import EmbeddingModel
from silrad.streams import (
    SIGNAL_FIELDS,
    BernoulliDriftConfig,
    GroundTruth,
    StitchEntry,
    StitchSchedule,
    SysmonLikeConfig,
    stitch,
    synth_bernoulli_drift,
    synth_sysmon_like,
)
from datetime import datetime, timezone


def make_segment(tag, n):
    base = datetime(2020, 5, 5, tzinfo=timezone.utc)
    return [
        SysmonEvent(1, base, fields={"Image": f"{tag}-{i}.exe"}, source_host="orig")
        for i in range(n)
    ]


class TestStitch:
    def test_two_segments_prevalence(self):
        store = {"A": make_segment("A", 100), "B": make_segment("B", 10)}
        schedule = StitchSchedule(
            segments=[StitchEntry("A", 0), StitchEntry("B", 1, family="Lockbit")]
        )
        out = list(stitch(store, schedule))
        assert len(out) == 110
        assert sum(e.label for e in out) == 10
        assert schedule.declared_prevalence(store) == pytest.approx(10 / 110)
        assert out[5].source_host == "A"
        assert out[105].family == "Lockbit"

    def test_reference_proportions(self):
        store = {"good": [None] * 176_130, "bad": [None] * 20_710}
        schedule = StitchSchedule(segments=[StitchEntry("good", 0), StitchEntry("bad", 1)])
        benign, ransom = schedule.declared_counts(store)
        assert benign + ransom == 196_840
        assert ransom / (benign + ransom) == pytest.approx(0.1052, abs=1e-4)

    def test_monotonic_10ms_timeline(self):
        store = {"A": make_segment("A", 5)}
        out = list(stitch(store, StitchSchedule(segments=[StitchEntry("A", 0)])))
        gaps = [
            (b.timestamp - a.timestamp).total_seconds() for a, b in zip(out, out[1:])
        ]
        assert gaps == [0.01] * 4

    def test_round_trip_through_parser(self):
        store = {"A": make_segment("A", 3), "B": make_segment("B", 2)}
        schedule = StitchSchedule(
            segments=[StitchEntry("A", 0), StitchEntry("B", 1, family="Hive")]
        )
        out = list(stitch(store, schedule))
        reparsed = [parse_event_ndjson(event_to_ndjson(e)) for e in out]
        assert reparsed == out

    def test_missing_and_empty_segments(self):
        with pytest.raises(MissingSegment):
            list(stitch({}, StitchSchedule(segments=[StitchEntry("X", 0)])))
        with pytest.raises(EmptySegment):
            list(stitch({"X": []}, StitchSchedule(segments=[StitchEntry("X", 0)])))

    def test_slicing(self):
        store = {"A": make_segment("A", 10)}
        schedule = StitchSchedule(segments=[StitchEntry("A", 0, start=2, length=3)])
        out = list(stitch(store, schedule))
        assert [e.fields["Image"] for e in out] == ["A-2.exe", "A-3.exe", "A-4.exe"]


class TestBernoulliDrift:
    def test_acceptance_stream_shape(self):
        values, cps = synth_bernoulli_drift(
            BernoulliDriftConfig(regimes=[(0.1, 500), (0.9, 500)], seed=1)
        )
        assert values.size == 1000 and cps == [500]
        assert values[:500].mean() < 0.2 and values[500:].mean() > 0.8

    def test_single_regime_no_changepoints(self):
        _, cps = synth_bernoulli_drift(BernoulliDriftConfig(regimes=[(0.4, 100)], seed=2))
        assert cps == []

    def test_seeded_regeneration_bitwise_identical(self):
        cfg = BernoulliDriftConfig(regimes=[(0.2, 300), (0.7, 300)], seed=9)
        a, _ = synth_bernoulli_drift(cfg)
        b, _ = synth_bernoulli_drift(cfg)
        np.testing.assert_array_equal(a, b)

    def test_bad_parameter(self):
        with pytest.raises(BadParameter):
            synth_bernoulli_drift(BernoulliDriftConfig(regimes=[(1.5, 10)]))


def small_cfg(**overrides):
    n = overrides.get("n_events", 4000)
    defaults = dict(
        n_events=n,
        prevalence=0.105,
        initial_family="quicklock",
        changepoints=(n // 4, n // 2, 3 * n // 4),
        introduced_families=("vaultworm", "cryptmoth", "hexviper"),
        seed=42,
    )
    defaults.update(overrides)
    return SysmonLikeConfig(**defaults)


class TestSysmonLike:
    def test_ground_truth_changepoints(self):
        _, truth = synth_sysmon_like(small_cfg())
        assert truth.changepoints == [1000, 2000, 3000]
        assert len(truth.family_segments) == 4
        assert truth.family_segments[1]["family"] == "vaultworm"

    def test_prevalence_within_tolerance(self):
        stream, truth = synth_sysmon_like(small_cfg(n_events=20_000))
        assert abs(truth.prevalence_realized - 0.105) <= 0.001
        labels = [e.label for e in stream]
        assert sum(labels) / len(labels) == pytest.approx(truth.prevalence_realized)

    def test_zero_prevalence_all_benign(self):
        stream, truth = synth_sysmon_like(small_cfg(prevalence=0.0))
        assert truth.prevalence_realized == 0.0
        assert all(e.label == 0 for e in stream)

    def test_deterministic_given_seed(self):
        a_stream, a_truth = synth_sysmon_like(small_cfg(n_events=500))
        b_stream, b_truth = synth_sysmon_like(small_cfg(n_events=500))
        a_lines = [event_to_ndjson(e) for e in a_stream]
        b_lines = [event_to_ndjson(e) for e in b_stream]
        assert a_lines == b_lines
        assert a_truth.to_json() == b_truth.to_json()

    def test_sidecar_consistent_with_emitted_stream(self):
        stream, truth = synth_sysmon_like(small_cfg(n_events=2000))
        events = list(stream)
        assert [e.label for e in events] == truth.labels
        for seg in truth.family_segments:
            for e in events[seg["start"] : seg["stop"]]:
                if e.label == 1:
                    assert e.family == seg["family"]

    def test_signal_fields_planted(self):
        stream, _ = synth_sysmon_like(small_cfg(n_events=1500))
        for event in stream:
            if event.label == 1:
                assert event.family in event.fields["TargetObject"] or any(
                    event.family in event.fields[f] for f in SIGNAL_FIELDS[:4]
                )

    def test_planted_fields_outscore_noise_in_pcc(self):
        stream, _ = synth_sysmon_like(small_cfg(n_events=3000))
        embedder = EmbeddingModel(dim=32, seed=0)
        tracker = FieldCorrelationTracker(dim=32)
        for event in stream:
            tracker.update(
                {n: embedder.embed_text(v) for n, v in event.fields.items()}, float(event.label)
            )
        scores = tracker.field_scores()
        noise_best = max(scores[f] for f in ("User", "DestinationPort", "Protocol", "Image"))
        for name in ("TargetObject", "Task", "CallTrace", "ParentImage"):
            assert scores[name] > noise_best

    def test_family_switch_changes_tokens(self):
        stream, truth = synth_sysmon_like(small_cfg(n_events=3000, changepoints=(1500,), introduced_families=("vaultworm",)))
        events = list(stream)
        early = [e for e in events[:1500] if e.label == 1]
        late = [e for e in events[1500:] if e.label == 1]
        assert all("quicklock" in e.fields["ParentImage"] for e in early)
        assert all("vaultworm" in e.fields["ParentImage"] for e in late)

    def test_config_validation(self):
        with pytest.raises(BadConfig):
            synth_sysmon_like(small_cfg(prevalence=1.5))
        with pytest.raises(BadConfig):
            synth_sysmon_like(small_cfg(changepoints=(100,)))  # unpaired
        with pytest.raises(BadConfig):
            synth_sysmon_like(small_cfg(changepoints=(3000, 2000, 3500)))

    def test_ground_truth_json_round_trip(self):
        _, truth = synth_sysmon_like(small_cfg(n_events=300))
        again = GroundTruth.from_json(truth.to_json())
        assert again == truth
