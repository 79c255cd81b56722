import numpy as np
import pytest

from lensdepth.geometry import (
    DistanceMatrix,
    PointSet,
    euclidean,
    l2_normalize,
    nearest_particle,
    pairwise_euclidean,
)
from lensdepth.validation import NumericError, ValidationError


def test_euclidean_three_four_five():
    assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0


def test_euclidean_symmetric_and_zero_iff_equal():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.normal(size=(2, 5))
        assert euclidean(a, b) == euclidean(b, a)
        assert euclidean(a, b) > 0.0
        assert euclidean(a, a) == 0.0


def test_euclidean_rejects_bad_input():
    with pytest.raises(ValidationError):
        euclidean([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(NumericError):
        euclidean([np.nan, 0.0], [0.0, 0.0])


def test_pairwise_matches_loop_oracle():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 3))
    E = pairwise_euclidean(X)
    for i in range(20):
        for j in range(20):
            assert abs(E[i, j] - np.linalg.norm(X[i] - X[j])) < 1e-12
    assert np.array_equal(np.diag(E), np.zeros(20))
    assert np.allclose(E, E.T)


def test_pairwise_rectangular():
    rng = np.random.default_rng(8)
    X, Y = rng.normal(size=(6, 2)), rng.normal(size=(4, 2))
    E = pairwise_euclidean(X, Y)
    assert E.shape == (6, 4)
    assert abs(E[2, 3] - np.linalg.norm(X[2] - Y[3])) < 1e-12


def test_nearest_particle_exhaustive_oracle():
    rng = np.random.default_rng(11)
    Q = rng.normal(size=(50, 3))
    for _ in range(20):
        x = rng.normal(size=3)
        i, dist = nearest_particle(x, Q)
        d_all = np.array([np.linalg.norm(q - x) for q in Q])
        assert i == int(np.argmin(d_all))
        # batched and one-row norms may differ in summation order by 1 ulp
        assert abs(dist - d_all[i]) <= 1e-12 * d_all[i]


def test_nearest_particle_tie_goes_to_lowest_index():
    Q = np.array([[5.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    i, dist = nearest_particle([0.0, 1.0], Q)
    assert i == 1
    assert dist == 1.0


def test_nearest_particle_zero_on_member():
    rng = np.random.default_rng(12)
    Q = rng.normal(size=(10, 4))
    i, dist = nearest_particle(Q[6], Q)
    assert i == 6
    assert dist == 0.0


def test_l2_normalize_unit_rows():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(30, 6)) * 10
    N = l2_normalize(X)
    assert np.allclose(np.linalg.norm(N, axis=1), 1.0, atol=1e-14)
    # direction preserved
    assert np.allclose(N * np.linalg.norm(X, axis=1)[:, None], X)


def test_l2_normalize_rejects_zero_row():
    X = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValidationError, match="row 1"):
        l2_normalize(X)


def test_pointset_copies_input_and_is_readonly():
    X = np.array([[0.0, 1.0], [2.0, 3.0]])
    ps = PointSet(X)
    X[0, 0] = 99.0
    assert ps.data[0, 0] == 0.0
    with pytest.raises(ValueError):
        ps.data[0, 0] = 5.0


def test_pointset_shape_properties():
    ps = PointSet(np.zeros((4, 3)), labels=np.array([0, 1, 1, 0]))
    assert ps.n == 4 and ps.d == 3 and ps.n_classes == 2
    assert PointSet(np.zeros((2, 2))).n_classes == 0


def test_pointset_rejects_sparse_label_ids():
    with pytest.raises(ValidationError, match="contiguous"):
        PointSet(np.zeros((3, 2)), labels=np.array([0, 2, 2]))


def test_pointset_rejects_bad_data():
    with pytest.raises(NumericError):
        PointSet(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValidationError):
        PointSet(np.zeros((0, 2)))


def _random_distance_matrix(m, seed):
    X = np.random.default_rng(seed).normal(size=(m, 2))
    return pairwise_euclidean(X)


def test_distance_matrix_full_roundtrip():
    V = _random_distance_matrix(12, 21)
    dm = DistanceMatrix(V)
    assert np.array_equal(dm.full(), np.minimum(V, V.T))
    assert len(dm) == 12


def test_distance_matrix_tri_layout_matches_tril_indices():
    V = _random_distance_matrix(9, 22)
    dm = DistanceMatrix(V)
    assert np.array_equal(dm.tri, V[np.tril_indices(9, k=-1)])


def test_distance_matrix_getitem_vs_full():
    V = _random_distance_matrix(10, 23)
    dm = DistanceMatrix(V)
    F = dm.full()
    rng = np.random.default_rng(24)
    for _ in range(40):
        i, j = rng.integers(10, size=2)
        assert dm[int(i), int(j)] == F[i, j]
    assert dm[4, 4] == 0.0


def test_distance_matrix_max_offdiag():
    V = _random_distance_matrix(8, 25)
    dm = DistanceMatrix(V)
    assert dm.max_offdiag() == V[np.tril_indices(8, k=-1)].max()


def test_distance_matrix_rejects_bad_input():
    with pytest.raises(ValidationError, match="square"):
        DistanceMatrix(np.zeros((3, 4)))
    V = _random_distance_matrix(5, 26)
    bad = V.copy()
    bad[1, 0] = -1.0
    bad[0, 1] = -1.0
    with pytest.raises(ValidationError, match="negative"):
        DistanceMatrix(bad)
    bad = V.copy()
    bad[2, 2] = 1e-9
    with pytest.raises(ValidationError, match="diagonal"):
        DistanceMatrix(bad)
    bad = V.copy()
    bad[3, 1] = bad[1, 3] + 1.0
    with pytest.raises(ValidationError, match="symmetric"):
        DistanceMatrix(bad)
    bad = V.copy()
    bad[4, 0] = np.inf
    with pytest.raises(ValidationError, match="finite"):
        DistanceMatrix(bad)


def test_distance_matrix_from_tri_roundtrip():
    V = _random_distance_matrix(11, 27)
    dm = DistanceMatrix(V)
    back = DistanceMatrix.from_tri(dm.tri, 11)
    assert np.array_equal(back.full(), dm.full())
    with pytest.raises(ValidationError):
        DistanceMatrix.from_tri(dm.tri[:-1], 11)
    with pytest.raises(ValidationError):
        DistanceMatrix.from_tri(np.array([-1.0]), 2)


def test_distance_matrix_out_of_range_index():
    dm = DistanceMatrix(_random_distance_matrix(4, 28))
    with pytest.raises(ValidationError):
        dm[0, 4]
