import json

import pytest

from scenarios import linear_path
from uavtrack.geometry import BoundingBox
from uavtrack.metrics import sot_accuracy, sot_records
from uavtrack.sot import Source, default_box, read_sot_json, sot_select, track_sot, write_sot_json
from uavtrack.tracker import TrackOutput, TrackState, Tracker, TrackerConfig


def out(tid, score, box=(0, 0, 5, 5), last=1, state=TrackState.Tracked):
    return TrackOutput(tid, BoundingBox(*box), score, state, 1, last)


def test_highest_score_wins():
    recs = sot_select([(1, [out(1, 0.7), out(2, 0.9)], [])], 30)
    assert recs[0].reported_id == 2 and recs[0].source is Source.Online


def test_score_tie_goes_to_lower_id():
    recs = sot_select([(1, [out(5, 0.8), out(3, 0.8)], [])], 30)
    assert recs[0].reported_id == 3


def test_lost_prediction_requires_same_id_within_buffer():
    lost = out(1, 0.9, box=(7, 7, 5, 5), last=1, state=TrackState.Lost)
    other = out(2, 0.9, last=1, state=TrackState.Lost)
    recs = sot_select([(1, [out(1, 0.9)], []), (2, [], [other, lost]), (40, [], [lost])], 30)
    assert [r.source for r in recs] == [Source.Online, Source.LostPrediction, Source.LastKnown]
    assert recs[1].box == BoundingBox(7, 7, 5, 5)
    assert recs[2].box == BoundingBox(7, 7, 5, 5)


def test_defaults_without_detections():
    recs = sot_select([(f, [], []) for f in range(1, 4)], 30, frame_size=(640, 512))
    assert all(r.box == BoundingBox(319.5, 255.5, 1, 1) for r in recs)
    assert default_box(None) == BoundingBox(0, 0, 1, 1)
    init = BoundingBox(1, 2, 3, 4)
    assert sot_select([(1, [], [])], 30, initial_box=init)[0].box == init


def test_abstain_flag():
    recs = sot_select([(1, [out(1, 0.9)], []), (2, [], [])], 30, abstain_when_lost=True)
    assert recs[1].box is None and recs[1].source is Source.LastKnown


def dropout_run(n=60, buffer=30):
    frames = linear_path(n, absent=range(11, n + 1))
    return track_sot(Tracker(TrackerConfig(track_buffer=buffer)), frames, n)


def test_dropout_source_sequence():
    recs = dropout_run()
    assert len(recs) == 60
    src = [r.source for r in recs]
    assert src[:10] == [Source.Online] * 10
    assert src[10:40] == [Source.LostPrediction] * 30
    assert src[40:] == [Source.LastKnown] * 20
    assert {r.reported_id for r in recs[:40]} == {1}
    assert all(r.box == recs[39].box for r in recs[40:])


def test_lost_predictions_follow_motion():
    recs = dropout_run()
    xs = [r.box.x for r in recs[10:20]]
    assert all(b > a for a, b in zip(xs, xs[1:]))


def test_full_visibility_score_is_mean_iou():
    recs = dropout_run()
    gts = [BoundingBox(100 + 2 * (f - 1), 100 + (f - 1), 12, 10) for f in range(1, 61)]
    score = sot_accuracy(sot_records([r.box for r in recs], gts, [1] * 60))
    assert score.penalty_term == 0.0
    assert score.acc == pytest.approx(score.mean_iou_term)


def test_initial_box_reported_verbatim():
    init = BoundingBox(100.25, 100.5, 12, 10)
    recs = track_sot(Tracker(), {}, 5, initial_box=init)
    assert recs[0].box == init
    assert len(recs) == 5


def test_json_round_trip(tmp_path):
    recs = sot_select([(1, [out(1, 0.9, box=(1.5, 2, 3, 4))], []), (2, [], [])], 30, abstain_when_lost=True)
    p = tmp_path / "s.json"
    write_sot_json(p, recs)
    assert json.loads(p.read_text()) == {"res": [[1.5, 2, 3, 4], []]}
    assert read_sot_json(p) == [BoundingBox(1.5, 2, 3, 4), None]


def test_read_rejects_bad_rows(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{"res": [[1, 2, 3]]}')
    with pytest.raises(ValueError):
        read_sot_json(p)
