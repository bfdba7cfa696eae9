import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silrad.errors import NonFiniteInput
from silrad.feature_select import (
    FieldCorrelationTracker,
    PccAccumulator,
    pcc_update,
    pcc_value,
    rank_fields,
    ranking_to_json,
    refresh_policy,
    select_top_k,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def two_pass_pcc(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 2:
        return 0.0
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = np.sqrt((dx * dx).sum())
    sy = np.sqrt((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(np.clip((dx * dy).sum() / (sx * sy), -1.0, 1.0))


def accumulate(pairs):
    acc = PccAccumulator()
    for x, y in pairs:
        pcc_update(acc, x, y)
    return acc


class TestPccAccumulator:
    def test_single_update_sums(self):
        acc = accumulate([(1.0, 1.0)])
        assert acc.n == 1 and acc.sum_xy == 1.0 and acc.sum_x == 1.0

    def test_perfect_positive(self):
        assert pcc_value(accumulate([(1, 1), (2, 2), (3, 3)])) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pcc_value(accumulate([(1, 3), (2, 2), (3, 1)])) == pytest.approx(-1.0)

    def test_hand_computed_binary_label(self):
        acc = accumulate([(0, 0), (1, 0), (2, 1), (3, 1)])
        assert pcc_value(acc) == pytest.approx(2 / np.sqrt(5), abs=1e-9)
        assert pcc_value(acc) == pytest.approx(0.894427, abs=1e-6)

    def test_constant_x_is_zero(self):
        assert pcc_value(accumulate([(5, 0), (5, 1), (5, 0)])) == 0.0

    def test_n_below_two_is_zero(self):
        assert pcc_value(PccAccumulator()) == 0.0
        assert pcc_value(accumulate([(1, 1)])) == 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteInput):
            pcc_update(PccAccumulator(), float("inf"), 1.0)

    def test_streaming_matches_two_pass_on_random_streams(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 200))
            xs = rng.normal(scale=rng.uniform(0.1, 100), size=n)
            ys = rng.normal(scale=rng.uniform(0.1, 100), size=n)
            acc = accumulate(zip(xs, ys))
            assert pcc_value(acc) == pytest.approx(two_pass_pcc(xs, ys), abs=1e-9)

    @given(st.lists(st.tuples(finite, finite), min_size=2, max_size=50), st.floats(0.1, 50), finite)
    @settings(max_examples=40)
    def test_positive_affine_invariance(self, pairs, a, b):
        base = pcc_value(accumulate(pairs))
        scaled = pcc_value(accumulate([(a * x + b, y) for x, y in pairs]))
        assert scaled == pytest.approx(base, abs=1e-6)

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=50))
    def test_symmetry_and_negation(self, pairs):
        r = pcc_value(accumulate(pairs))
        assert pcc_value(accumulate([(y, x) for x, y in pairs])) == pytest.approx(r, abs=1e-9)
        assert pcc_value(accumulate([(-x, y) for x, y in pairs])) == pytest.approx(-r, abs=1e-9)


class TestRanking:
    def test_perfect_field_outranks_constant(self):
        perfect = [accumulate([(0, 0), (1, 1), (0, 0), (1, 1)]) for _ in range(3)]
        constant = [accumulate([(2, 0), (2, 1), (2, 0), (2, 1)]) for _ in range(3)]
        ranking = rank_fields({"signal": perfect, "flat": constant}, k=2)
        assert ranking.scores["signal"] == pytest.approx(1.0)
        assert ranking.scores["flat"] == 0.0
        assert ranking.active_set == ["signal", "flat"]

    def test_tie_breaks_lexicographically(self):
        same = lambda: [accumulate([(0, 0), (1, 1)])]
        ranking = rank_fields({"zeta": same(), "alpha": same(), "mid": same()}, k=3)
        assert ranking.active_set == ["alpha", "mid", "zeta"]

    def test_planted_signal_outranks_noise(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            tracker = FieldCorrelationTracker(dim=8)
            for _ in range(300):
                y = float(rng.random() < 0.3)
                signal = rng.normal(loc=2.0 * y, scale=1.0, size=8)
                noise = rng.normal(size=8)
                tracker.update({"sig": signal, "nse": noise}, y)
            ranking = tracker.ranking(k=1, refresh_period=1000)
            wins += ranking.active_set == ["sig"]
        assert wins >= 99

    def test_select_top_k_clamps(self, caplog):
        ranking = rank_fields({"a": [accumulate([(0, 0), (1, 1)])]}, k=1)
        with caplog.at_level("WARNING"):
            picked = select_top_k(ranking, 5)
        assert picked == ["a"]
        assert any("clamp" in rec.message for rec in caplog.records)

    def test_select_identity_when_k_is_field_count(self):
        accs = {name: [accumulate([(i, 0), (i + 1, 1)])] for i, name in enumerate("abc")}
        ranking = rank_fields(accs, k=3)
        assert select_top_k(ranking, 3) == ranking.active_set


class TestRefreshPolicy:
    def test_exact_period(self):
        assert refresh_policy(1000, 1000)
        assert not refresh_policy(999, 1000)
        assert not refresh_policy(0, 1000)

    def test_refresh_count_over_stream(self):
        count = sum(refresh_policy(i, 1000) for i in range(1, 10_001))
        assert count == 10


class TestTracker:
    def test_matches_scalar_accumulators(self, rng):
        tracker = FieldCorrelationTracker(dim=4)
        scalar = [PccAccumulator() for _ in range(4)]
        for _ in range(100):
            y = float(rng.integers(2))
            vec = rng.normal(size=4)
            tracker.update({"f": vec}, y)
            for d in range(4):
                scalar[d].update(float(vec[d]), y)
        view = tracker.accumulators_for("f")
        for d in range(4):
            assert view[d].value() == pytest.approx(scalar[d].value(), abs=1e-9)
        np.testing.assert_allclose(
            tracker.pcc_vector("f"), [a.value() for a in scalar], atol=1e-9
        )

    def test_late_field_equals_zero_backfill(self, rng):
        tracker = FieldCorrelationTracker(dim=2)
        reference = FieldCorrelationTracker(dim=2)
        for i in range(50):
            y = float(i % 2)
            vec = rng.normal(size=2)
            late = {"late": vec} if i >= 25 else {}
            tracker.update({"always": vec, **late}, y)
            reference.update({"always": vec, "late": vec if i >= 25 else np.zeros(2)}, y)
        np.testing.assert_allclose(
            tracker.pcc_vector("late"), reference.pcc_vector("late"), atol=1e-12
        )

    def test_ranking_json_schema(self):
        tracker = FieldCorrelationTracker(dim=2)
        tracker.update({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 0.0])}, 1.0)
        tracker.update({"a": np.array([0.0, 1.0]), "b": np.array([0.0, 0.0])}, 0.0)
        ranking = tracker.ranking(k=1, refresh_period=500)
        import json

        doc = json.loads(ranking_to_json(ranking, refresh_index=2, instances_seen=1000))
        assert doc["refresh_index"] == 2 and doc["instances_seen"] == 1000
        assert [row["rank"] for row in doc["ranking"]] == [1, 2]
        assert {row["field"] for row in doc["ranking"]} == {"a", "b"}
        assert doc["active_set"] == [doc["ranking"][0]["field"]]
