import numpy as np
import pytest

from oracles import _box_iou, brute_force_clear, direct_sot_acc
from scenarios import crossing_gt, crossing_swap_preds, two_object_fixtures
from uavtrack.geometry import BoundingBox
from uavtrack.metrics import SotFrameRecord, average_mota, clear_match, mota, sot_accuracy, sot_records

GT = BoundingBox(0, 0, 10, 10)


def test_sot_perfect_visible():
    assert sot_accuracy([SotFrameRecord(GT, GT, 1)] * 5).acc == 1.0


def test_sot_never_visible_all_empty():
    s = sot_accuracy([SotFrameRecord(None, None, 0)] * 4)
    assert s.acc == 1.0 and s.T_star == 0 and s.penalty_term == 0.0


def test_sot_four_frame_fixture():
    half = BoundingBox(0, 0, 10, 5)
    recs = [SotFrameRecord(half, GT, 1), SotFrameRecord(BoundingBox(50, 50, 3, 3), GT, 1),
            SotFrameRecord(None, None, 0), SotFrameRecord(None, None, 0)]
    assert direct_sot_acc([0.5, 0, 0, 0], [0, 0, 1, 1], [1, 1, 0, 0]) == 0.625
    assert sot_accuracy(recs).acc == pytest.approx(0.625, abs=1e-15)


def test_sot_all_empty_visible():
    s = sot_accuracy([SotFrameRecord(None, GT, 1)] * 2)
    assert s.acc == pytest.approx(-0.2, abs=1e-15)


def test_sot_requires_frames_and_gt():
    with pytest.raises(ValueError):
        sot_accuracy([])
    with pytest.raises(ValueError):
        SotFrameRecord(GT, None, 1)


def random_stream(rng):
    T = int(rng.integers(1, 101))
    recs, ious, p, v = [], [], [], []
    for _ in range(T):
        vis = float(rng.random() < 0.7)
        gt = BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(1, 10, 2)) if vis or rng.random() < 0.5 else None
        pred = None if rng.random() < 0.3 else BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(1, 10, 2))
        recs.append(SotFrameRecord(pred, gt, vis))
        ious.append(_box_iou(pred.to_list(), gt.to_list()) if pred is not None and gt is not None else 0.0)
        p.append(1 if pred is None else 0)
        v.append(vis)
    return recs, ious, p, v


def test_sot_matches_direct_formula_on_random_streams():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        recs, ious, p, v = random_stream(rng)
        acc = sot_accuracy(recs).acc
        assert abs(acc - direct_sot_acc(ious, p, v)) <= 1e-12
        assert -0.2 <= acc <= 1.0


def test_sot_records_pads_missing_predictions():
    recs = sot_records([GT], [GT, GT], [1, 1])
    assert len(recs) == 2 and recs[1].pred is None


def as_boxes(frames):
    return {f: [(i, BoundingBox(*b)) for i, b in objs] for f, objs in frames.items()}


def test_clear_identical():
    gt = {f: [(k, (10.0 * k + f, 5.0, 8.0, 8.0)) for k in range(3)] for f in range(1, 11)}
    r = clear_match(as_boxes(gt), as_boxes(gt))
    assert (r.FP, r.FN, r.IDS, r.GT) == (0, 0, 0, 30)
    assert r.mota == 1.0


def test_clear_no_predictions():
    gt = {f: [(k, (20.0 * k, 0.0, 5.0, 5.0)) for k in range(3)] for f in range(1, 11)}
    r = clear_match(as_boxes(gt), {})
    assert (r.FP, r.FN, r.IDS) == (0, 30, 0)


def test_clear_crossing_swap():
    gt = crossing_gt(12)
    pred = crossing_swap_preds(gt, 7)
    r = clear_match(as_boxes(gt), as_boxes(pred))
    assert (r.FP, r.FN, r.IDS) == (0, 0, 2)
    assert brute_force_clear(gt, pred) == (0, 0, 2)


def test_clear_matches_brute_force_on_fixtures():
    for gt, pred in two_object_fixtures():
        r = clear_match(as_boxes(gt), as_boxes(pred))
        assert (r.FP, r.FN, r.IDS) == brute_force_clear(gt, pred)


def test_clear_per_frame_conservation():
    for gt, pred in two_object_fixtures(20, seed=5):
        r = clear_match(as_boxes(gt), as_boxes(pred))
        for f in gt:
            assert len(r.matches[f]) <= min(len(gt[f]), len(pred[f]))


def test_clear_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        clear_match({1: [(1, GT), (1, GT)]}, {})


@pytest.mark.parametrize("counts, expected", [((0, 0, 0, 100), 1.0), ((0, 100, 0, 100), 0.0), ((10, 20, 5, 100), 0.65)])
def test_mota(counts, expected):
    assert mota(*counts) == pytest.approx(expected, abs=1e-15)


def test_mota_unclamped_and_undefined():
    assert mota(300, 0, 0, 100) == -2.0
    with pytest.raises(ValueError):
        mota(0, 0, 0, 0)


def test_mota_monotone():
    assert mota(1, 2, 3, 50) >= mota(2, 2, 3, 50) >= mota(2, 3, 3, 50) >= mota(2, 3, 4, 50)


@pytest.mark.parametrize("vals, expected", [([1.0], 1.0), ([0.5, 0.7], 0.6), ([-0.2, 0.8, 0.9], 0.5)])
def test_average_mota(vals, expected):
    assert average_mota(vals) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        average_mota([])
