import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skylink import kernels
from skylink.kernels import pure


def _blocked(p0, p1, boxes, impl=kernels):
    return impl.segments_blocked(np.asarray(p0, float), np.asarray(p1, float),
                                 np.asarray(boxes, float))


def test_no_boxes_never_blocks():
    out = _blocked([0, 0, 10], [5, 5, 50], np.zeros((0, 5)))
    assert out.tolist() == [False]


def test_segment_through_box_at_low_altitude_blocked():
    # Path from (0,50,25) to (200,50,35): at the box's x-span [90,110] the
    # crossing altitude is 29.5..30.5 m, below the 50 m roof -> blocked.
    box = [[90.0, 110.0, 0.0, 100.0, 50.0]]
    assert _blocked([0, 50, 25], [200, 50, 35], box).tolist() == [True]
    # Same path but the roof stops at 25 m -> clears it.
    low = [[90.0, 110.0, 0.0, 100.0, 25.0]]
    assert _blocked([0, 50, 25], [200, 50, 35], low).tolist() == [False]


def test_disjoint_building_does_not_block():
    box = [[500.0, 520.0, 500.0, 520.0, 50.0]]
    assert _blocked([0, 0, 25], [0, 0, 120], box).tolist() == [False]


def test_vertical_segment_inside_footprint():
    box = [[-5.0, 5.0, -5.0, 5.0, 40.0]]
    # Climbs out of the box: enters it below 40 m.
    assert _blocked([0, 0, 10], [0, 0, 100], box).tolist() == [True]
    # Entirely above the roof.
    assert _blocked([0, 0, 50], [0, 0, 100], box).tolist() == [False]


def test_batch_shapes():
    boxes = [[0.0, 1.0, 0.0, 1.0, 1.0]]
    p0 = [[-1, 0.5, 0.5], [5, 5, 5]]
    p1 = [[2, 0.5, 0.5], [6, 6, 6]]
    assert _blocked(p0, p1, boxes).tolist() == [True, False]


@st.composite
def _segment_and_box(draw):
    f = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
    p0 = [draw(f), draw(f), draw(st.floats(0, 120))]
    p1 = [draw(f), draw(f), draw(st.floats(0, 120))]
    x0 = draw(f); y0 = draw(f)
    w = draw(st.floats(0.5, 50)); d = draw(st.floats(0.5, 50))
    h = draw(st.floats(0.5, 80))
    return p0, p1, [[x0, x0 + w, y0, y0 + d, h]]


@settings(max_examples=300, deadline=None)
@given(_segment_and_box())
def test_backends_agree(case):
    p0, p1, boxes = case
    got_pure = _blocked(p0, p1, boxes, impl=pure)
    got_active = _blocked(p0, p1, boxes)
    assert got_pure.tolist() == got_active.tolist()


@settings(max_examples=200, deadline=None)
@given(_segment_and_box())
def test_dense_sampling_consistency(case):
    """Any sampled interior point inside the box implies 'blocked'."""
    p0, p1, boxes = case
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    box = np.asarray(boxes[0])
    t = np.linspace(0.0, 1.0, 501)[:, None]
    pts = p0 + t * (p1 - p0)
    inside = ((pts[:, 0] >= box[0]) & (pts[:, 0] <= box[1])
              & (pts[:, 1] >= box[2]) & (pts[:, 1] <= box[3])
              & (pts[:, 2] >= 0.0) & (pts[:, 2] <= box[4]))
    if inside.any():
        assert _blocked(p0, p1, boxes).tolist() == [True]


def test_compiled_backend_present():
    # The build ships the extension; the pure path stays importable either way.
    assert kernels.backend() in ("compiled", "pure")
    assert pure.segments_blocked is not None
