import numpy as np
import pytest

from oracles import batch_map_cv, scalar_cv_kalman
from uavtrack.geometry import BoundingBox
from uavtrack.kalman import CHI2_GATE_4DOF, KalmanError, KalmanFilter, KalmanState

WP, WV = 1.0 / 20, 1.0 / 160
H = 10.0


def measurements(n, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    xs = 50.0 + 1.5 * t + rng.normal(0, 0.4, n)
    return [BoundingBox.from_center(float(x), 80.0, 6.0, H) for x in xs], xs


def run_filter(boxes):
    kf = KalmanFilter(WP, WV)
    st = kf.initiate(boxes[0])
    preds = []
    for b in boxes[1:]:
        st = kf.predict(st)
        preds.append(st.mean[0])
        st = kf.update(st, b)
    return st, preds


def test_predictions_match_scalar_oracle():
    boxes, xs = measurements(40)
    _, preds = run_filter(boxes)
    expected = scalar_cv_kalman(list(xs), WP * H, WP * H, WV * H, 2 * WP * H, 10 * WV * H)
    np.testing.assert_allclose(preds, expected, rtol=0, atol=1e-9)


def test_final_state_matches_batch_map():
    boxes, xs = measurements(25, seed=4)
    st, _ = run_filter(boxes)
    x, v = batch_map_cv(list(xs), (WP * H) ** 2, (WP * H) ** 2, (WV * H) ** 2,
                        (2 * WP * H) ** 2, (10 * WV * H) ** 2)
    assert st.mean[0] == pytest.approx(x, abs=1e-4)
    assert st.mean[4] == pytest.approx(v, abs=1e-4)


def test_predict_moves_by_velocity():
    kf = KalmanFilter()
    st = kf.initiate(BoundingBox(0, 0, 4, 8))
    st.mean[4:6] = [3.0, -1.0]
    p = kf.predict(st)
    np.testing.assert_allclose(p.mean[:2], st.mean[:2] + [3.0, -1.0])
    assert np.all(np.diag(p.covariance) > np.diag(st.covariance))


def test_covariance_stays_psd_over_many_cycles():
    kf = KalmanFilter()
    rng = np.random.default_rng(1)
    st = kf.initiate(BoundingBox(100, 100, 12, 9))
    for i in range(1000):
        st = kf.predict(st)
        if i % 7 != 3:
            b = BoundingBox(100 + i * 0.5 + rng.normal(), 100 + rng.normal(), 12 + rng.normal(0, 0.2), 9 + rng.normal(0, 0.2))
            st = kf.update(st, b)
        assert np.allclose(st.covariance, st.covariance.T, atol=0)
        assert np.linalg.eigvalsh(st.covariance).min() > -1e-9


def test_size_clamped_after_update():
    kf = KalmanFilter()
    st = kf.initiate(BoundingBox(0, 0, 0.01, 0.01))
    st.mean[2:4] = [-5.0, 0.01]
    st = kf.update(st, BoundingBox(0, 0, 0.001, 0.001))
    assert st.mean[2] >= 1e-3 and st.mean[3] >= 1e-3


def test_initiate_rejects_empty_box():
    with pytest.raises(ValueError):
        KalmanFilter().initiate(BoundingBox(0, 0, 0, 5))


def test_gating_distance():
    kf = KalmanFilter()
    st = kf.initiate(BoundingBox(10, 10, 10, 10))
    d = kf.gating_distance(st, [BoundingBox(10, 10, 10, 10), BoundingBox(200, 200, 10, 10)])
    assert d[0] == pytest.approx(0.0, abs=1e-12)
    assert d[1] > CHI2_GATE_4DOF
    assert kf.gating_distance(st, []).shape == (0,)


def test_singular_innovation_raises():
    kf = KalmanFilter()
    bad = KalmanState(np.r_[5.0, 5.0, 1.0, 0.0, np.zeros(4)], np.zeros((8, 8)))
    with pytest.raises(KalmanError):
        kf.update(bad, BoundingBox(0, 0, 1, 1))
