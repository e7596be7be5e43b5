"""Label selection, confidence scoring, and selection-success aggregation."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocalnav.backends import LABELS
from vocalnav.decision import (
    EvaluationRecord,
    confidence_score,
    decide,
    pssr,
    select_action,
)
from vocalnav.prompting import TokenDistribution


def dist_of(*values) -> TokenDistribution:
    total = sum(values)
    return TokenDistribution(probs={l: v / total for l, v in zip(LABELS, values)})


class TestSelectAction:
    def test_argmax(self):
        assert select_action(dist_of(0.1, 0.6, 0.1, 0.1, 0.1)) == "B"

    def test_uniform_tie_goes_to_a(self):
        assert select_action(dist_of(1, 1, 1, 1, 1)) == "A"

    def test_last_label(self):
        assert select_action(dist_of(0.05, 0.05, 0.05, 0.05, 0.8)) == "E"

    @given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=5, max_size=5))
    @settings(max_examples=200, deadline=None)
    def test_scaling_invariance(self, values):
        base = dist_of(*values)
        scaled = dist_of(*[v * 7.3 for v in values])
        assert select_action(base) == select_action(scaled)


class TestConfidence:
    def test_uniform_value(self):
        # 1 / ln 5, computed directly
        expected = 1.0 / math.log(5.0)
        assert confidence_score(dist_of(1, 1, 1, 1, 1), "C") == pytest.approx(expected, abs=1e-9)

    def test_point_six(self):
        dist = dist_of(0.6, 0.1, 0.1, 0.1, 0.1)
        assert confidence_score(dist, "A") == pytest.approx(1.0 / (-math.log(0.6)), abs=1e-9)
        assert confidence_score(dist, "A") == pytest.approx(1.9576, abs=1e-4)

    def test_near_certain_capped(self):
        dist = TokenDistribution(
            probs={"A": 1.0 - 4e-12, "B": 1e-12, "C": 1e-12, "D": 1e-12, "E": 1e-12}
        )
        value = confidence_score(dist, "A")
        assert value == pytest.approx(1.0 / (-math.log(1.0 - 1e-9)))
        assert value < 1.1e9

    def test_strictly_increasing_in_true_probability(self):
        import random

        rng = random.Random(5)
        points = []
        for _ in range(300):
            values = [rng.random() + 1e-3 for _ in range(5)]
            dist = dist_of(*values)
            points.append((dist.probs["C"], confidence_score(dist, "C")))
        points.sort()
        for (p1, c1), (p2, c2) in zip(points[:-1], points[1:]):
            if p2 > p1:
                assert c2 > c1


def record(clip_id, category, truth, chosen_probs):
    dist = dist_of(*chosen_probs)
    return EvaluationRecord(
        clip_id=clip_id, category=category, truth=truth, decision=decide(clip_id, dist)
    )


class TestPssr:
    def test_counting(self):
        records = [
            record("c1", "LU", "A", (0.9, 0.025, 0.025, 0.025, 0.025)),
            record("c2", "LU", "B", (0.1, 0.6, 0.1, 0.1, 0.1)),
            record("c3", "VU", "E", (0.8, 0.05, 0.05, 0.05, 0.05)),  # wrong
            record("c4", "VU", "E", (0.05, 0.05, 0.05, 0.05, 0.8)),
        ]
        summary = pssr(records)
        assert summary.overall.pssr == pytest.approx(0.75)
        assert summary.by_category["LU"].pssr == 1.0
        assert summary.by_category["VU"].pssr == 0.5

    def test_all_correct(self):
        records = [record(f"c{i}", "LU", "A", (0.9, 0.025, 0.025, 0.025, 0.025)) for i in range(5)]
        assert pssr(records).overall.pssr == 1.0

    def test_category_weighting_identity(self):
        records = [
            record(f"l{i}", "LU", "A", (0.9, 0.025, 0.025, 0.025, 0.025)) for i in range(3)
        ] + [record(f"v{i}", "VU", "B", (0.6, 0.1, 0.1, 0.1, 0.1)) for i in range(2)]
        summary = pssr(records)
        lu, vu = summary.by_category["LU"], summary.by_category["VU"]
        weighted = (lu.count * lu.pssr + vu.count * vu.pssr) / (lu.count + vu.count)
        assert summary.overall.pssr == pytest.approx(weighted, abs=1e-12)

    def test_category_counts_preserved(self):
        records = [
            record(f"l{i}", "LU", "A", (0.9, 0.025, 0.025, 0.025, 0.025)) for i in range(285)
        ] + [record(f"v{i}", "VU", "A", (0.9, 0.025, 0.025, 0.025, 0.025)) for i in range(215)]
        summary = pssr(records)
        assert summary.by_category["LU"].count == 285
        assert summary.by_category["VU"].count == 215
        assert summary.overall.count == 500

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pssr([])
