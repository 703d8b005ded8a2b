import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobdecomp.geometry import (
    GeometryError,
    Interval,
    ScaleFunction,
    cantor_complement,
    f_components,
    g_measure,
    normalize_intervals,
    open_set_from_spec,
    scale_eval,
)


def test_interval_requires_lo_below_hi():
    with pytest.raises(GeometryError):
        Interval(1.0, 1.0)


def test_normalize_keeps_normalized_input(single_gap):
    assert [iv.as_tuple() for iv in single_gap.intervals] == [(-4, 0), (1, 4)]
    assert [c.as_tuple() for c in single_gap.f_components] == [(0, 1)]


def test_normalize_merges_overlap():
    G = normalize_intervals([(0, 1), (0.5, 2)], (0, 3))
    assert [iv.as_tuple() for iv in G.intervals] == [(0, 2)]
    assert [c.as_tuple() for c in G.f_components] == [(2, 3)]


def test_normalize_merges_touching_and_clips():
    G = normalize_intervals([(2, 5), (-1, 1), (1, 2)], (0, 4))
    assert [iv.as_tuple() for iv in G.intervals] == [(0, 4)]
    assert G.f_components == ()
    assert not G.is_proper


def test_normalize_rejects_empty_intersection():
    with pytest.raises(GeometryError, match="zero measure"):
        normalize_intervals([(5, 6)], (0, 1))


def test_cantor_depth_one():
    G = cantor_complement((0, 1), 1, 1 / 3, (0, 1))
    assert len(G.intervals) == 1
    assert G.intervals[0].lo == pytest.approx(1 / 3)
    assert G.intervals[0].hi == pytest.approx(2 / 3)
    assert G.f_measure == pytest.approx(2 / 3)


def test_cantor_depth_zero():
    G = cantor_complement((0, 1), 0, 1 / 3, (0, 1))
    assert G.intervals == ()
    assert [c.as_tuple() for c in G.f_components] == [(0, 1)]
    G = cantor_complement((0, 1), 0, 1 / 3, (-1, 2))
    assert [iv.as_tuple() for iv in G.intervals] == [(-1, 0), (1, 2)]


def test_cantor_depth_three_measure():
    G = cantor_complement((0, 1), 3, 1 / 3, (0, 1))
    assert G.f_measure == pytest.approx(8 / 27, abs=1e-15)


@pytest.mark.parametrize("depth", range(0, 8))
@pytest.mark.parametrize("ratio", [0.2, 1 / 3, 0.5])
def test_cantor_counts(depth, ratio):
    G = cantor_complement((0, 2), depth, ratio, (-1, 3))
    assert len(G.f_components) == 2 ** depth
    assert G.f_measure == pytest.approx((1 - ratio) ** depth * 2, rel=1e-13)
    assert len(G.intervals) == 2 ** depth - 1 + 2


def test_cantor_endpoints_nest():
    # endpoints of a shallower construction survive at every deeper level
    shallow = {c.lo for c in cantor_complement((0, 1), 3, 1 / 3).f_components}
    deep = {c.lo for c in cantor_complement((0, 1), 6, 1 / 3).f_components}
    assert shallow <= deep


def test_measures(single_gap):
    assert g_measure(single_gap) == 7
    assert [c.as_tuple() for c in f_components(single_gap)] == [(0, 1)]
    G = cantor_complement((0, 1), 2, 1 / 3, (0, 1))
    assert g_measure(G) == pytest.approx(1 - 4 / 9)
    assert len(f_components(G)) == 4
    whole = normalize_intervals([(0, 5)], (0, 5))
    assert g_measure(whole) == 5 and f_components(whole) == []


def test_scale_eval_examples(single_gap):
    s = ScaleFunction.from_open_set(single_gap)
    assert scale_eval(s, -4) == 0
    assert scale_eval(s, 1) == 4
    assert scale_eval(s, 4) == 7
    assert scale_eval(s, 0.5) == 4
    with pytest.raises(GeometryError):
        scale_eval(s, 4.5)


def test_scale_base_point(single_gap):
    s = ScaleFunction.from_open_set(single_gap, base_point=2.0)
    assert s(2.0) == 0
    assert s(4.0) == 2
    assert s(0.5) == -1


def test_spec_fragments():
    G = open_set_from_spec({"type": "cantor_complement", "base": [0, 1], "depth": 2, "ratio": 0.5}, (0, 1))
    assert len(G.f_components) == 4
    G = open_set_from_spec({"type": "intervals", "intervals": [[0, 1], [2, 3]]}, (0, 3))
    assert len(G.f_components) == 1
    with pytest.raises(GeometryError):
        open_set_from_spec({"type": "circle"}, (0, 1))


raw_intervals = st.lists(
    st.tuples(st.floats(-10, 10), st.floats(0.01, 5)).map(lambda t: (t[0], t[0] + t[1])),
    min_size=1, max_size=8,
)


@settings(max_examples=80, deadline=None)
@given(raw_intervals)
def test_lengths_partition_window(raw):
    window = Interval(-6.0, 6.0)
    try:
        G = normalize_intervals(raw, window)
    except GeometryError:
        return
    assert G.measure + G.f_measure == pytest.approx(window.length, abs=1e-12)
    for a, b in zip(G.intervals, G.intervals[1:]):
        assert a.hi < b.lo


@settings(max_examples=60, deadline=None)
@given(raw_intervals, st.lists(st.floats(-6, 6), min_size=2, max_size=20))
def test_scale_is_lipschitz_and_monotone(raw, xs):
    try:
        G = normalize_intervals(raw, (-6, 6))
    except GeometryError:
        return
    s = ScaleFunction.from_open_set(G)
    xs = np.sort(np.array(xs))
    v = s(xs)
    assert np.all(np.diff(v) >= -1e-12)
    assert np.all(np.diff(v) <= np.diff(xs) + 1e-12)
    for iv in G.intervals:
        assert s(iv.hi) - s(iv.lo) == pytest.approx(iv.length, abs=1e-12)
