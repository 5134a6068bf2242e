"""Frozen results of the end-to-end runs, recorded at the first green build.

A change here means tracking behavior changed; update only on purpose.
"""
from uavtrack.io import embeddings_by_frame, tracks_by_frame
from uavtrack.metrics import clear_match
from uavtrack.synth import ObjectSpec, ScenarioConfig, generate
from uavtrack.tracker import Tracker, TrackerConfig, results_to_rows, run_sequence


def counts(bundle, cfg):
    emb = embeddings_by_frame(bundle.embeddings) if bundle.embeddings else None
    res = run_sequence(Tracker(cfg), bundle.detections, bundle.n_frames, emb)
    gt = {f: [(i, b) for i, b, v in objs if v > 0] for f, objs in bundle.gt.items()}
    r = clear_match(gt, tracks_by_frame(results_to_rows(res)))
    return r.FP, r.FN, r.IDS, r.GT


def test_default_bundle_counts():
    b = generate(ScenarioConfig(n_objects=5, n_frames=300, width_range=(8, 30), pos_jitter=0.3, size_jitter=0.2,
                                miss_rate=0.05, fp_rate=0.25, seed=11))
    assert counts(b, TrackerConfig()) == (0, 77, 0, 1500)


def test_crossing_bundle_counts():
    objs = (ObjectSpec(100, 200, 14, 12, 2.0, 0.0), ObjectSpec(300, 200, 14, 12, -2.0, 0.0),
            ObjectSpec(200, 100, 14, 12, 0.0, 2.0), ObjectSpec(200, 300, 14, 12, 0.0, -2.0))
    b = generate(ScenarioConfig(n_frames=120, objects=objs, pos_jitter=1.0, size_jitter=0.3, miss_rate=0.1,
                                embedding_dim=32, embedding_noise=0.1, seed=3, occlusions=((1, 45, 55), (2, 47, 53))))
    no_reid = counts(b, TrackerConfig(with_reid=False))
    reid = counts(b, TrackerConfig(with_reid=True))
    assert no_reid[2] == 5 and reid[2] == 0
    assert no_reid[3] == reid[3] == 462
