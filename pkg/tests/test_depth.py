import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lensdepth.datasets import gaussians3, two_moons
from lensdepth.depth import (
    LensDepthScorer,
    kmeans,
    lens_depth,
    lens_depth_batch,
    reduce_kmean_center,
    reduce_kmean_center_plus,
    reduce_random,
)
from lensdepth.fermat import build_fermat_graph, modified_fermat_to_all, unmodified_fermat_to_all
from lensdepth.geometry import PointSet
from lensdepth.validation import ValidationError


def pair_count_oracle(dx, D):
    m = len(dx)
    hits = 0
    for i in range(m):
        for j in range(i):
            if max(dx[i], dx[j]) <= D[i, j]:
                hits += 1
    return hits / (m * (m - 1) // 2)


def test_two_point_midpoint_is_depth_one():
    g = build_fermat_graph(np.array([[0.0], [2.0]]), 1.0)
    assert lens_depth(g, [1.0]) == 1.0


def test_far_query_is_exactly_zero():
    rng = np.random.default_rng(51)
    g = build_fermat_graph(rng.normal(size=(20, 2)), 7.0)
    assert lens_depth(g, [500.0, 500.0]) == 0.0


def test_matches_pair_enumeration_oracle():
    rng = np.random.default_rng(52)
    X = rng.normal(size=(30, 2))
    g = build_fermat_graph(X, 3.0)
    D = g.pairwise.full()
    queries = rng.normal(size=(50, 2)) * 1.5
    got_mod = lens_depth_batch(g, queries, mode="modified")
    got_unmod = lens_depth_batch(g, queries, mode="unmodified")
    for b, x in enumerate(queries):
        assert got_mod[b] == pair_count_oracle(modified_fermat_to_all(g, x), D)
        assert got_unmod[b] == pair_count_oracle(unmodified_fermat_to_all(g, x), D)


def test_depth_is_a_rational_count_in_range():
    rng = np.random.default_rng(53)
    g = build_fermat_graph(rng.normal(size=(17, 3)), 5.0)
    denom = 17 * 16 // 2
    vals = lens_depth_batch(g, rng.normal(size=(25, 3)))
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    assert np.allclose(vals * denom, np.round(vals * denom), atol=1e-9)


def test_sample_order_invariance():
    rng = np.random.default_rng(54)
    X = rng.normal(size=(20, 2))
    perm = rng.permutation(20)
    g1 = build_fermat_graph(X, 3.0)
    g2 = build_fermat_graph(X[perm], 3.0)
    queries = rng.normal(size=(10, 2))
    assert np.array_equal(lens_depth_batch(g1, queries), lens_depth_batch(g2, queries))


def test_voronoi_plateau_and_its_fix():
    ps = two_moons(100, 0.07, seed=0)
    g = build_fermat_graph(ps.data, 7.0)
    rng = np.random.default_rng(55)
    lo, hi = ps.data.min(0) - 0.3, ps.data.max(0) + 0.3
    queries = rng.uniform(lo, hi, size=(100, 2))
    violations = 0
    for x in queries:
        qx = ps.data[int(np.argmin(np.linalg.norm(ps.data - x, axis=1)))]
        assert lens_depth(g, x, mode="unmodified") == lens_depth(g, qx, mode="unmodified")
        if lens_depth(g, x, mode="modified") != lens_depth(g, qx, mode="modified"):
            violations += 1
    assert violations >= 1


def test_vanishing_beyond_max_pairwise():
    rng = np.random.default_rng(56)
    X = rng.normal(size=(30, 2))
    g = build_fermat_graph(X, 7.0)
    radius = g.pairwise.max_offdiag() ** (1.0 / 7.0)
    x = X.mean(axis=0) + np.array([1.0, 0.0]) * (np.abs(X).max() + radius + 1.0)
    snap_min = (np.linalg.norm(X - x, axis=1) ** 7.0).min()
    assert snap_min > g.pairwise.max_offdiag()
    assert lens_depth(g, x) == 0.0


def test_mode_and_shape_validation():
    g = build_fermat_graph(np.random.default_rng(57).normal(size=(5, 2)), 2.0)
    with pytest.raises(ValidationError, match="mode"):
        lens_depth(g, [0.0, 0.0], mode="plain")
    with pytest.raises(ValidationError, match="dimension"):
        lens_depth_batch(g, np.zeros((3, 4)))


# ------------------------------------------------------------- reduction


def test_kmeans_single_cluster_is_the_mean():
    rng = np.random.default_rng(61)
    X = rng.normal(size=(40, 3))
    centers, labels = kmeans(X, 1)
    assert np.allclose(centers[0], X.mean(axis=0), atol=1e-12)
    assert np.all(labels == 0)


def test_kmeans_separated_pairs():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    centers, labels = kmeans(X, 2, seed=3)
    got = centers[np.argsort(centers[:, 0])]
    assert np.allclose(got, [[0.0, 0.5], [10.0, 0.5]])
    assert labels[0] == labels[1] and labels[2] == labels[3] and labels[0] != labels[2]


def test_kmeans_objective_never_increases_with_more_iterations():
    rng = np.random.default_rng(62)
    X = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 4])

    def objective(centers):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        return d2.min(axis=1).sum()

    vals = [objective(kmeans(X, 5, max_iters=t, seed=0)[0]) for t in range(1, 7)]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_kmeans_no_empty_clusters_and_centers_are_member_means():
    rng = np.random.default_rng(63)
    X = np.vstack([rng.normal(size=(15, 2)) * 0.1 + off for off in (0.0, 5.0, 9.0)])
    for seed in range(5):
        centers, labels = kmeans(X, 10, seed=seed)
        counts = np.bincount(labels, minlength=10)
        assert np.all(counts > 0)
        for c in range(10):
            assert np.allclose(centers[c], X[labels == c].mean(axis=0), atol=1e-9)


def test_kmeans_with_k_equal_n_returns_the_points():
    rng = np.random.default_rng(64)
    X = rng.normal(size=(6, 2))
    centers, labels = kmeans(X, 6, seed=1)
    assert np.array_equal(np.sort(centers, axis=0), np.sort(X, axis=0))
    assert sorted(labels.tolist()) == list(range(6))


def test_kmeans_seeded_determinism_and_validation():
    rng = np.random.default_rng(65)
    X = rng.normal(size=(20, 2))
    c1, l1 = kmeans(X, 4, seed=9)
    c2, l2 = kmeans(X, 4, seed=9)
    assert np.array_equal(c1, c2) and np.array_equal(l1, l2)
    with pytest.raises(ValidationError):
        kmeans(X, 0)
    with pytest.raises(ValidationError):
        kmeans(X, 21)


def test_reduce_random_is_a_seeded_subset():
    rng = np.random.default_rng(66)
    X = rng.normal(size=(30, 2))
    sub = reduce_random(X, 10, seed=2)
    assert sub.n == 10
    rows = {tuple(r) for r in X.tolist()}
    assert all(tuple(r) in rows for r in sub.data.tolist())
    assert np.array_equal(sub.data, reduce_random(X, 10, seed=2).data)
    assert np.array_equal(reduce_random(X, 30, seed=5).data, X)
    with pytest.raises(ValidationError):
        reduce_random(X, 1)
    with pytest.raises(ValidationError):
        reduce_random(X, 31)


def test_reduce_kmean_center_examples():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    got = reduce_kmean_center(X, 2, seed=3).data
    assert np.allclose(got[np.argsort(got[:, 0])], [[0.0, 0.5], [10.0, 0.5]])
    rng = np.random.default_rng(67)
    Y = rng.normal(size=(6, 2))
    full = reduce_kmean_center(Y, 6, seed=1).data
    assert np.array_equal(np.sort(full, axis=0), np.sort(Y, axis=0))


def test_reduce_kmean_center_plus_returns_original_rows():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    # centroid ties resolve to the lowest row index of each pair
    got = reduce_kmean_center_plus(X, 2, seed=3).data
    assert np.array_equal(got, np.array([[0.0, 0.0], [10.0, 0.0]]))


def test_reduce_kmean_center_plus_nearest_row_oracle():
    rng = np.random.default_rng(68)
    X = rng.normal(size=(60, 2))
    got = reduce_kmean_center_plus(X, 12, seed=4).data
    centers, _ = kmeans(X, 12, seed=4)
    picks = set()
    for c in centers:
        picks.add(int(np.argmin([np.linalg.norm(r - c) for r in X])))
    assert np.array_equal(got, X[np.array(sorted(picks))])
    rows = {tuple(r) for r in X.tolist()}
    assert all(tuple(r) in rows for r in got.tolist())


# --------------------------------------------------------------- scorer


def test_fit_builds_one_cluster_per_class():
    ps = two_moons(60, 0.07, seed=0)
    scorer = LensDepthScorer(alpha=7.0, strategy="none").fit(ps)
    assert [cm.class_id for cm in scorer.clusters_] == [0, 1]
    assert np.array_equal(scorer.classes_, [0, 1])
    assert scorer.n_features_in_ == 2
    assert scorer.clusters_[0].graph.m == 30


def test_fit_reduction_sizes():
    ps = two_moons(80, 0.07, seed=1)
    scorer = LensDepthScorer(strategy="kmean-center", n_inner=10).fit(ps)
    assert all(cm.graph.m == 10 for cm in scorer.clusters_)
    scorer = LensDepthScorer(strategy="random", n_inner=12, seed=5).fit(ps)
    assert all(cm.graph.m == 12 for cm in scorer.clusters_)
    # without a target size the strategy is inert
    scorer = LensDepthScorer(strategy="kmean-center", n_inner=None).fit(ps)
    assert all(cm.graph.m == 40 for cm in scorer.clusters_)


def test_score_is_invariant_under_class_relabeling():
    ps = two_moons(80, 0.07, seed=2)
    rng = np.random.default_rng(71)
    queries = rng.uniform(-1.5, 2.5, size=(40, 2))
    a = LensDepthScorer(n_inner=15, seed=3).fit(ps.data, ps.labels)
    b = LensDepthScorer(n_inner=15, seed=3).fit(ps.data, 1 - ps.labels)
    assert np.array_equal(a.score_samples(queries), b.score_samples(queries))


def test_score_max_over_clusters():
    ps = gaussians3(n_per=100, sigma=1.0, seed=0)
    scorer = LensDepthScorer(alpha=7.0, strategy="none").fit(ps)
    center = np.array([0.0, 0.0])
    midway = np.array([5.0, 0.0])  # halfway to the second default center
    assert scorer.score_one(midway) < scorer.score_one(center)
    far = np.array([1000.0, 1000.0])
    assert scorer.score_one(far) == 0.0


def test_batch_equals_sequential_and_respects_order():
    ps = two_moons(50, 0.07, seed=3)
    scorer = LensDepthScorer(strategy="none", alpha=3.0).fit(ps)
    rng = np.random.default_rng(72)
    queries = rng.uniform(-1.5, 2.5, size=(20, 2))
    batch = scorer.score_samples(queries)
    assert np.array_equal(batch, [scorer.score_one(x) for x in queries])
    perm = rng.permutation(20)
    assert np.array_equal(scorer.score_samples(queries[perm]), batch[perm])


def test_threads_do_not_change_scores():
    ps = two_moons(40, 0.07, seed=4)
    scorer = LensDepthScorer(strategy="none", alpha=3.0).fit(ps)
    rng = np.random.default_rng(73)
    queries = rng.uniform(-1.5, 2.5, size=(2100, 2))  # spans several chunks
    assert np.array_equal(
        scorer.score_samples(queries, threads=1),
        scorer.score_samples(queries, threads=3),
    )


def test_fit_is_deterministic():
    ps = two_moons(80, 0.07, seed=5)
    a = LensDepthScorer(n_inner=20, seed=11).fit(ps)
    b = LensDepthScorer(n_inner=20, seed=11).fit(ps)
    for ca, cb in zip(a.clusters_, b.clusters_):
        assert np.array_equal(ca.graph.points.data, cb.graph.points.data)
        assert np.array_equal(ca.graph.pairwise.tri, cb.graph.pairwise.tri)
    q = np.random.default_rng(74).uniform(-1, 2, size=(30, 2))
    assert np.array_equal(a.score_samples(q), b.score_samples(q))


def test_normalize_scores_are_scale_invariant():
    rng = np.random.default_rng(75)
    X = rng.normal(size=(60, 3)) + 2.0
    y = np.repeat([0, 1], 30)
    scorer = LensDepthScorer(strategy="none", normalize=True, alpha=3.0).fit(X, y)
    q = rng.normal(size=(10, 3)) + 2.0
    assert np.array_equal(scorer.score_samples(q), scorer.score_samples(q * 7.5))


def test_estimator_api_round_trip():
    scorer = LensDepthScorer(alpha=5.0, n_inner=8, seed=2)
    params = scorer.get_params()
    assert params["alpha"] == 5.0 and params["n_inner"] == 8
    dup = clone(scorer)
    assert dup.get_params() == params
    scorer.set_params(alpha=9.0)
    assert scorer.alpha == 9.0
    with pytest.raises(NotFittedError):
        LensDepthScorer().score_samples(np.zeros((1, 2)))


def test_fit_validation():
    rng = np.random.default_rng(76)
    X = rng.normal(size=(10, 2))
    y = np.repeat([0, 1], 5)
    with pytest.raises(ValidationError, match="labels"):
        LensDepthScorer().fit(X)
    with pytest.raises(ValidationError, match="strategy"):
        LensDepthScorer(strategy="grid").fit(X, y)
    with pytest.raises(ValidationError, match="n_inner"):
        LensDepthScorer(n_inner=1).fit(X, y)
    with pytest.raises(ValidationError, match="exceeds"):
        LensDepthScorer(n_inner=6, strategy="random").fit(X, y)
    with pytest.raises(ValidationError, match="class 2"):
        LensDepthScorer().fit(X, np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 2]))
    fitted = LensDepthScorer(strategy="none").fit(X, y)
    with pytest.raises(ValidationError, match="dimension"):
        fitted.score_samples(np.zeros((2, 3)))
