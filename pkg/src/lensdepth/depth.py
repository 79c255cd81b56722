"""Lens depth over Fermat graphs, inner-point reduction, and the class scorer.

The empirical lens depth of a query x against m inner points is the fraction
of the m*(m-1)/2 point pairs whose "lens" contains x: the pair (i, j) counts
when max(d(x, i), d(x, j)) <= d(i, j), with closed-ball membership, so
boundary hits count as inside. Distances are modified sample Fermat
distances, which makes the depth track the shape and density of the sample
and decay to exactly zero far away.

A fitted scorer holds one graph per class; the confidence score of x is the
maximum depth over the classes. Higher means more in-distribution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .fermat import (
    FermatGraph,
    build_fermat_graph,
    modified_from_snap,
    snap_costs,
    unmodified_fermat_matrix,
)
from .geometry import PointSet, l2_normalize
from .validation import ValidationError, as_points, as_vector, check_labels

STRATEGIES = ("none", "random", "kmean-center", "kmean-center-plus")

# rows per scoring chunk; bounds the (chunk, m) distance buffers
_CHUNK = 2048


@dataclass(frozen=True)
class ClusterModel:
    """One class's inner points and their Fermat graph."""

    graph: FermatGraph
    class_id: int


def _count_pairs(dx: np.ndarray, ti, tj, tri) -> np.ndarray:
    """#{(i<j): max(dx[i], dx[j]) <= pairwise[i, j]} for each row of dx."""
    counts = np.empty(dx.shape[0], dtype=np.int64)
    a = np.empty(ti.size)
    b = np.empty(tj.size)
    for r in range(dx.shape[0]):
        np.take(dx[r], ti, out=a)
        np.take(dx[r], tj, out=b)
        np.maximum(a, b, out=a)
        counts[r] = np.count_nonzero(a <= tri)
    return counts


def lens_depth_batch(g: FermatGraph, X, mode: str = "modified") -> np.ndarray:
    """Lens depth of every row of X against the graph's point pairs."""
    Xq = as_points(X, name="X")
    if Xq.shape[1] != g.d:
        raise ValidationError(f"query dimension {Xq.shape[1]} does not match graph d={g.d}")
    if mode not in ("modified", "unmodified"):
        raise ValidationError(f"mode must be 'modified' or 'unmodified', got {mode!r}")
    m = g.m
    denom = m * (m - 1) // 2
    ti, tj = np.tril_indices(m, k=-1)
    tri = g.pairwise.tri
    out = np.zeros(Xq.shape[0])
    if mode == "modified":
        S = snap_costs(g, Xq)
        # no lens can reach a query whose cheapest entry exceeds every
        # pairwise distance, so those rows stay at exactly 0
        alive = np.flatnonzero(S.min(axis=1) <= g.pairwise.max_offdiag())
        if alive.size:
            dx = modified_from_snap(g, S[alive])
            out[alive] = _count_pairs(dx, ti, tj, tri) / denom
    else:
        dx = unmodified_fermat_matrix(g, Xq)
        out[:] = _count_pairs(dx, ti, tj, tri) / denom
    return out


def lens_depth(g: FermatGraph, x, mode: str = "modified") -> float:
    """Lens depth of a single point, in [0, 1]."""
    v = as_vector(x, dim=g.d, name="x")
    return float(lens_depth_batch(g, v[None, :], mode=mode)[0])


def reduce_random(P, n: int, seed: int = 0) -> PointSet:
    """n distinct rows sampled without replacement, in original row order."""
    ps = P if isinstance(P, PointSet) else PointSet(as_points(P, name="P"))
    if not 2 <= n <= ps.n:
        raise ValidationError(f"n must be in [2, {ps.n}], got {n}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(ps.n, size=n, replace=False))
    return PointSet(ps.data[idx])


def kmeans(P, k: int, max_iters: int = 100, seed: int = 0):
    """Lloyd's algorithm with distance-squared weighted seeding.

    Returns (centroids, labels). Stops when assignments repeat or after
    max_iters. An empty cluster is repaired by stealing the farthest
    member of the largest cluster. All ties resolve to the lowest index,
    so the result is a pure function of (P, k, max_iters, seed).
    """
    X = P.data if isinstance(P, PointSet) else as_points(P, name="P")
    n, d = X.shape
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, d))
    centers[0] = X[int(rng.integers(n))]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0.0:
            pick = int(rng.choice(n, p=closest / total))
        else:
            pick = int(rng.integers(n))
        centers[c] = X[pick]
        np.minimum(closest, ((X - centers[c]) ** 2).sum(axis=1), out=closest)

    labels = np.argmin(cdist(X, centers), axis=1)
    for _ in range(max_iters):
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros((k, d))
        for j in range(d):
            sums[:, j] = np.bincount(labels, weights=X[:, j], minlength=k)
        nonzero = counts > 0
        centers[nonzero] = sums[nonzero] / counts[nonzero, None]
        for c in np.flatnonzero(~nonzero):
            donor = int(np.argmax(counts))
            members = np.flatnonzero(labels == donor)
            far = members[int(np.argmax(np.linalg.norm(X[members] - centers[donor], axis=1)))]
            labels[far] = c
            counts[donor] -= 1
            counts[c] += 1
            centers[c] = X[far]
            rest = np.flatnonzero(labels == donor)
            centers[donor] = X[rest].mean(axis=0)
        new_labels = np.argmin(cdist(X, centers), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers, labels


def reduce_kmean_center(P, n: int, seed: int = 0) -> PointSet:
    """The n cluster centroids of P as inner points."""
    ps = P if isinstance(P, PointSet) else PointSet(as_points(P, name="P"))
    if not 2 <= n <= ps.n:
        raise ValidationError(f"n must be in [2, {ps.n}], got {n}")
    centers, _ = kmeans(ps, n, seed=seed)
    return PointSet(centers)


def reduce_kmean_center_plus(P, n: int, seed: int = 0) -> PointSet:
    """The original row nearest each centroid, deduplicated.

    Two centroids can share a nearest row, so the result may have fewer
    than n points; rows come back in original order.
    """
    ps = P if isinstance(P, PointSet) else PointSet(as_points(P, name="P"))
    if not 2 <= n <= ps.n:
        raise ValidationError(f"n must be in [2, {ps.n}], got {n}")
    centers, _ = kmeans(ps, n, seed=seed)
    chosen = np.argmin(cdist(centers, ps.data), axis=1)
    return PointSet(ps.data[np.unique(chosen)])


def _reduce(rows: np.ndarray, strategy: str, n_inner, seed: int) -> PointSet:
    ps = PointSet(rows)
    if n_inner is None or strategy == "none":
        return ps
    n_inner = int(n_inner)
    if n_inner > ps.n:
        raise ValidationError(f"n_inner={n_inner} exceeds class size {ps.n}")
    if strategy == "random":
        return reduce_random(ps, n_inner, seed)
    if strategy == "kmean-center":
        return reduce_kmean_center(ps, n_inner, seed)
    if strategy == "kmean-center-plus":
        return reduce_kmean_center_plus(ps, n_inner, seed)
    raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")


class LensDepthScorer(BaseEstimator):
    """Per-class lens depth confidence scorer.

    Parameters
    ----------
    alpha : float, default 7.0
        Exponent on hop lengths in the Fermat distance. 1.0 recovers plain
        Euclidean behavior; larger values bend paths through dense regions.
    strategy : str, default "kmean-center"
        Inner-point reduction: "none", "random", "kmean-center" (centroids),
        or "kmean-center-plus" (nearest original row per centroid). Only
        applied when n_inner is set.
    n_inner : int or None, default None
        Inner points kept per class; None fits on every class point.
    normalize : bool, default False
        Scale feature rows to unit norm at fit and score time.
    seed : int, default 0
        Drives the reduction sampling; the same seed is used for every
        class so scores do not depend on how classes are numbered.
    approx_knn_edges : int or None, default None
        Restrict shortest paths to a k-nearest-neighbor subgraph. Faster,
        approximate, off by default.
    engine : str, default "auto"
        All-pairs solver selection, see build_fermat_graph.

    Attributes
    ----------
    clusters_ : list of ClusterModel
    classes_ : ndarray of the distinct labels seen at fit, sorted
    n_features_in_ : int
    """

    def __init__(
        self,
        alpha: float = 7.0,
        strategy: str = "kmean-center",
        n_inner: int | None = None,
        normalize: bool = False,
        seed: int = 0,
        approx_knn_edges: int | None = None,
        engine: str = "auto",
    ):
        self.alpha = alpha
        self.strategy = strategy
        self.n_inner = n_inner
        self.normalize = normalize
        self.seed = seed
        self.approx_knn_edges = approx_knn_edges
        self.engine = engine

    def fit(self, X, y=None):
        """Build one Fermat graph per class from labeled feature rows."""
        if isinstance(X, PointSet):
            if y is None:
                y = X.labels
            X = X.data
        if y is None:
            raise ValidationError("labels are required to fit per-class models")
        data = as_points(X, name="X")
        y = check_labels(y, data.shape[0])
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.n_inner is not None and int(self.n_inner) < 2:
            raise ValidationError(f"n_inner must be >= 2, got {self.n_inner}")
        if self.normalize:
            data = l2_normalize(data)
        self.classes_ = np.unique(y)
        clusters = []
        for cid, label in enumerate(self.classes_):
            rows = data[y == label]
            if rows.shape[0] < 2:
                raise ValidationError(f"class {label} has {rows.shape[0]} point(s); need >= 2")
            inner = _reduce(rows, self.strategy, self.n_inner, int(self.seed))
            if inner.n < 2:
                raise ValidationError(f"class {label} reduced to {inner.n} point(s); need >= 2")
            graph = build_fermat_graph(
                inner,
                float(self.alpha),
                approx_knn_edges=self.approx_knn_edges,
                engine=self.engine,
            )
            clusters.append(ClusterModel(graph=graph, class_id=cid))
        self.clusters_ = clusters
        self.n_features_in_ = data.shape[1]
        return self

    def _prepare(self, X) -> np.ndarray:
        data = as_points(X, name="X")
        if data.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"query dimension {data.shape[1]} does not match fitted d={self.n_features_in_}"
            )
        if self.normalize:
            data = l2_normalize(data)
        return data

    def score_one(self, x) -> float:
        """Confidence score of one point: max lens depth over the classes."""
        check_is_fitted(self)
        v = as_vector(x, name="x")
        return float(self.score_samples(v[None, :])[0])

    def score_samples(self, X, threads: int = 1) -> np.ndarray:
        """Confidence score per row, higher = more in-distribution.

        The result does not depend on threads; work is split over disjoint
        row blocks and each block is a pure function of its rows.
        """
        check_is_fitted(self)
        data = self._prepare(X)
        out = np.empty(data.shape[0])

        def run(lo: int, hi: int):
            block = data[lo:hi]
            best = np.zeros(hi - lo)
            for cm in self.clusters_:
                np.maximum(best, lens_depth_batch(cm.graph, block, mode="modified"), out=best)
            out[lo:hi] = best

        bounds = list(range(0, data.shape[0], _CHUNK)) + [data.shape[0]]
        spans = [(lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
        if threads > 1 and len(spans) > 1:
            with ThreadPoolExecutor(max_workers=int(threads)) as pool:
                list(pool.map(lambda s: run(*s), spans))
        else:
            for lo, hi in spans:
                run(lo, hi)
        return out
