import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralph import (
    PersistenceDiagram,
    PersistenceFeature,
    apply_threshold,
    hole_detection_score,
    score_diagram,
    widest_gap_score,
)


def _diag(pairs, dim=1):
    feats = tuple(PersistenceFeature(dim, b, d) for b, d in pairs)
    return PersistenceDiagram(feats, max_dim=2, threshold=math.inf)


def _diag_from_persistences(pers, dim=1, birth=1.0):
    return _diag([(birth, birth + p) for p in pers], dim=dim)


def test_score_basic_gap():
    diag = _diag_from_persistences([5.0, 1.0, 0.5])
    assert hole_detection_score(diag, 1, 1) == pytest.approx(0.8)


def test_score_exactly_m_features_is_one():
    diag = _diag_from_persistences([3.0, 2.0])
    assert hole_detection_score(diag, 1, 2) == pytest.approx(1.0)


def test_score_fewer_than_m_is_zero():
    diag = _diag_from_persistences([3.0])
    assert hole_detection_score(diag, 1, 2) == 0.0
    empty = _diag([])
    assert hole_detection_score(empty, 1, 1) == 0.0


def test_score_requires_positive_m():
    with pytest.raises(ValueError):
        hole_detection_score(_diag([]), 1, 0)


def test_score_uses_requested_dimension_only():
    feats = (
        PersistenceFeature(1, 1.0, 6.0),
        PersistenceFeature(2, 1.0, 1.5),
    )
    diag = PersistenceDiagram(feats, 2, math.inf)
    assert hole_detection_score(diag, 1, 1) == pytest.approx(1.0)
    assert hole_detection_score(diag, 2, 1) == pytest.approx(1.0)


def test_threshold_gate_cases():
    assert apply_threshold(_diag([(1.0, 1.1)]), 1) is True
    assert apply_threshold(_diag([(1.0, 1.1), (2.0, 3.0)]), 1) is False
    assert apply_threshold(_diag([]), 1) is True
    # birth 0 counts as infinite ratio: never gated
    assert apply_threshold(_diag([(0.0, 0.2)]), 1) is False


def test_threshold_boundary_ratio():
    just_below = _diag([(1.0, 1.25 - 1e-9)])
    at = _diag([(1.0, 1.25)])
    assert apply_threshold(just_below, 1) is True
    assert apply_threshold(at, 1) is False


def test_widest_gap_examples():
    assert widest_gap_score(_diag_from_persistences([5.0, 1.0, 0.5]), 1, 1) == 1
    assert widest_gap_score(_diag_from_persistences([5.0, 4.5, 1.0]), 1, 2) == 1
    assert widest_gap_score(_diag([]), 1, 1) == 0


def test_widest_gap_tie_goes_to_smallest_rank():
    # gaps: 2-1 = 1 and 1-0 = 1: tie resolved at rank 1
    diag = _diag_from_persistences([2.0, 1.0])
    assert widest_gap_score(diag, 1, 1) == 1
    assert widest_gap_score(diag, 1, 2) == 0


def test_score_report_bundle_and_gating():
    diag = _diag([(1.0, 1.2), (1.0, 1.1)])  # every ratio < 1.25
    rep = score_diagram(diag, 1, 1, use_threshold=True)
    assert rep.thresholded and rep.s_m == 0.0
    rep2 = score_diagram(diag, 1, 1, use_threshold=False)
    assert not rep2.thresholded and rep2.s_m > 0.0


def test_score_report_validates_invariants():
    from spectralph.scoring import ScoreReport

    with pytest.raises(ValueError):
        ScoreReport(s_m=1.2, m=1, dim=1, thresholded=False, widest_gap_correct=0)
    with pytest.raises(ValueError):
        ScoreReport(s_m=0.3, m=1, dim=1, thresholded=True, widest_gap_correct=0)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-3, max_value=100.0), min_size=1, max_size=8),
    st.floats(min_value=1e-3, max_value=50.0),
    st.integers(min_value=1, max_value=4),
)
def test_scale_invariance(pers, scale, m):
    base = _diag([(1.0, 1.0 + p) for p in pers])
    scaled = _diag([(scale, scale * (1.0 + p)) for p in pers])
    assert hole_detection_score(base, 1, m) == pytest.approx(
        hole_detection_score(scaled, 1, m), rel=1e-9
    )
    assert widest_gap_score(base, 1, m) == widest_gap_score(scaled, 1, m)
    assert apply_threshold(base, 1) == apply_threshold(scaled, 1)


def test_continuity_under_perturbation():
    # diagrams with > m features and well-separated persistences: the score
    # moves at most linearly in the perturbation size
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 4))
        count = m + int(rng.integers(1, 4))
        pers = np.sort(rng.uniform(0.5, 10.0, size=count))[::-1]
        # enforce clear gaps so the ranking cannot flip
        pers = pers + np.arange(count, 0, -1) * 2.0
        births = rng.uniform(0.0, 5.0, size=count)
        delta = float(rng.uniform(1e-6, min(0.3, np.min(-np.diff(pers)) / 10 if count > 1 else 0.3)))
        diag = _diag([(b, b + p) for b, p in zip(births, pers)])
        moved = _diag(
            [
                (b + rng.uniform(-delta, delta), b + p + rng.uniform(-delta, delta))
                for b, p in zip(births, pers)
            ]
        )
        s0 = hole_detection_score(diag, 1, m)
        s1 = hole_detection_score(moved, 1, m)
        assert abs(s1 - s0) <= 10.0 * delta / pers[m - 1]


def test_infinite_persistence_handling():
    diag = _diag([(1.0, math.inf), (1.0, 2.0)])
    assert hole_detection_score(diag, 1, 1) == 1.0
