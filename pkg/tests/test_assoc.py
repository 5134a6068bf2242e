import numpy as np
import pytest

from oracles import brute_force_min_cost
from uavtrack.assoc import (FORBIDDEN, embedding_cost, fuse_costs, gate_cost, iou_cost, linear_assignment,
                            solve_assignment)
from uavtrack.geometry import BoundingBox
from uavtrack.kalman import KalmanFilter


def test_iou_cost_values():
    c = iou_cost(np.array([[0, 0, 2, 2.0], [0, 0, 2, 2]]), np.array([[0, 0, 2, 2.0], [9, 9, 1, 1], [1, 0, 2, 2]]))
    np.testing.assert_allclose(c[0], [0, 1, 2 / 3], atol=1e-12)


def test_embedding_cost_values():
    e = np.eye(3)
    c = embedding_cost(e[:1], np.vstack([e[0], -e[0], e[1]]))
    np.testing.assert_allclose(c, [[0, 1, 0.5]], atol=1e-12)


def test_embedding_dimension_mismatch():
    with pytest.raises(ValueError, match="4.*3|tracks have 4"):
        embedding_cost(np.ones((1, 4)), np.ones((1, 3)))


@pytest.mark.parametrize("i, e, expected", [(0.2, 0.1, 0.1), (0.9, 0.05, 0.9), (0.3, 0.4, 0.3)])
def test_fuse_examples(i, e, expected):
    assert fuse_costs([[i]], [[e]], 0.5, 0.25)[0, 0] == expected


def test_fuse_never_exceeds_iou_cost():
    rng = np.random.default_rng(0)
    i, e = rng.random((20, 20)), rng.random((20, 20))
    assert np.all(fuse_costs(i, e) <= i)


def test_fuse_shape_mismatch():
    with pytest.raises(ValueError):
        fuse_costs(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("cost, matches, ur, uc", [
    ([[0.1]], [(0, 0)], [], []),
    ([[0.1, 0.9], [0.9, 0.1]], [(0, 0), (1, 1)], [], []),
    ([[0.95]], [], [0], [0]),
])
def test_linear_assignment_examples(cost, matches, ur, uc):
    m, r, c = linear_assignment(cost, 0.8)
    assert [tuple(x) for x in m] == matches
    assert list(r) == ur and list(c) == uc


def test_empty_matrix():
    m, r, c = linear_assignment(np.zeros((0, 3)), 0.8)
    assert m.shape == (0, 2) and list(r) == [] and list(c) == [0, 1, 2]


def random_matrices(count=200, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, m = rng.integers(1, 8, size=2)
        c = rng.random((n, m))
        if rng.random() < 0.25:
            c = np.round(c * 4) / 4
        yield c


def test_optimal_against_brute_force():
    for c in random_matrices():
        pairs = solve_assignment(c)
        assert len(pairs) == min(c.shape)
        assert sum(c[r, k] for r, k in pairs) == pytest.approx(brute_force_min_cost(c), abs=1e-12)


def test_output_partitions_rows_and_cols():
    for c in random_matrices(50, seed=1):
        m, r, k = linear_assignment(c, 0.5)
        rows = sorted(list(m[:, 0]) + list(r))
        cols = sorted(list(m[:, 1]) + list(k))
        assert rows == list(range(c.shape[0])) and cols == list(range(c.shape[1]))
        assert np.all(c[m[:, 0], m[:, 1]] <= 0.5)


def test_column_permutation_equivariance():
    rng = np.random.default_rng(2)
    for _ in range(50):
        c = rng.random((5, 6))
        perm = rng.permutation(6)
        m1 = dict(map(tuple, linear_assignment(c, 1.0)[0]))
        m2 = dict(map(tuple, linear_assignment(c[:, perm], 1.0)[0]))
        assert {r: perm[k] for r, k in m2.items()} == m1


def test_ties_are_lexicographic():
    assert solve_assignment(np.ones((3, 3))) == [(0, 0), (1, 1), (2, 2)]
    assert solve_assignment(np.array([[0.5, 0.5], [0.5, 0.5]])) == [(0, 0), (1, 1)]


def test_forbidden_entries_avoided():
    c = np.array([[FORBIDDEN, 0.3], [0.2, FORBIDDEN]])
    assert solve_assignment(c) == [(0, 1), (1, 0)]
    m, r, k = linear_assignment(np.array([[FORBIDDEN]]), 0.8)
    assert len(m) == 0 and list(r) == [0]


def test_gate_cost_forbids_far_detections():
    kf = KalmanFilter()
    st = kf.initiate(BoundingBox(0, 0, 10, 10))
    dets = np.array([[0, 0, 10, 10], [300, 300, 10, 10.0]])
    g = gate_cost(np.zeros((1, 2)), kf, [st], [BoundingBox(*d) for d in dets])
    assert g[0, 0] == 0 and g[0, 1] == FORBIDDEN
