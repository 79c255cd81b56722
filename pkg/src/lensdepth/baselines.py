"""Reference scorers the lens depth method is compared against.

Every scorer here follows the same orientation as the depth scorer: higher
output means more in-distribution. Distance-like quantities are therefore
returned negated. softmax_entropy is the one exception; it reports raw
entropy (higher = more uncertain) and callers negate it when they need a
score.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .geometry import PointSet, l2_normalize
from .validation import NumericError, ValidationError, as_points, as_vector, check_labels


def _class_rows(X, y):
    data = as_points(X, name="X")
    y = check_labels(y, data.shape[0])
    classes = np.unique(y)
    return data, y, classes


class CentroidScorer(BaseEstimator):
    """Negated Euclidean distance to the nearest class centroid."""

    def fit(self, X, y):
        data, y, classes = _class_rows(X, y)
        self.classes_ = classes
        self.centroids_ = np.stack([data[y == c].mean(axis=0) for c in classes])
        self.n_features_in_ = data.shape[1]
        return self

    def score_samples(self, X) -> np.ndarray:
        check_is_fitted(self)
        data = as_points(X, name="X")
        return -cdist(data, self.centroids_).min(axis=1)


def euclidean_centroid_score(centroids, x) -> float:
    """-min_i euclidean(x, centroid_i)."""
    C = as_points(centroids, name="centroids")
    v = as_vector(x, dim=C.shape[1], name="x")
    return float(-np.linalg.norm(C - v, axis=1).min())


class MahalanobisScorer(BaseEstimator):
    """Negated minimum Mahalanobis distance over per-class Gaussians.

    Each class contributes a mean and covariance; distances go through a
    Cholesky solve of the regularized covariance, never an explicit
    inverse. epsilon=None picks 1e-6 * trace(cov)/d per class, enough to
    factorize near-singular estimates without visibly moving distances.
    With pooled=True a single covariance of class-centered rows is shared
    by all classes.
    """

    def __init__(self, epsilon: float | None = None, pooled: bool = False):
        self.epsilon = epsilon
        self.pooled = pooled

    def fit(self, X, y):
        data, y, classes = _class_rows(X, y)
        d = data.shape[1]
        self.classes_ = classes
        self.means_ = np.stack([data[y == c].mean(axis=0) for c in classes])
        if self.pooled:
            centered = data - self.means_[np.searchsorted(classes, y)]
            covs = [np.cov(centered, rowvar=False, ddof=0)] * len(classes)
        else:
            covs = [np.cov(data[y == c], rowvar=False, ddof=0) for c in classes]
        self.factors_ = []
        for cid, cov in enumerate(covs):
            cov = np.atleast_2d(cov)
            eps = self.epsilon
            if eps is None:
                eps = 1e-6 * np.trace(cov) / d
            try:
                self.factors_.append(cho_factor(cov + eps * np.eye(d)))
            except LinAlgError:
                raise NumericError(
                    f"covariance for class {self.classes_[cid]} is not positive "
                    f"definite after adding epsilon={eps:g}"
                ) from None
        self.n_features_in_ = d
        return self

    def score_samples(self, X) -> np.ndarray:
        check_is_fitted(self)
        data = as_points(X, name="X")
        if data.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"query dimension {data.shape[1]} does not match fitted d={self.n_features_in_}"
            )
        best = np.full(data.shape[0], np.inf)
        for mu, factor in zip(self.means_, self.factors_):
            V = data - mu
            sq = np.einsum("bd,db->b", V, cho_solve(factor, V.T))
            np.minimum(best, np.sqrt(np.maximum(sq, 0.0)), out=best)
        return -best


def mahalanobis_score(stats: "MahalanobisScorer", x) -> float:
    """-min over classes of the Mahalanobis distance from x."""
    v = as_vector(x, name="x")
    return float(stats.score_samples(v[None, :])[0])


class KNNScorer(BaseEstimator):
    """Negated Euclidean distance to the k-th nearest training row.

    k has no sensible universal default (it is tuned against held-out
    outliers), so it must be given explicitly. Rows on both sides are
    l2-normalized first unless normalize=False.
    """

    def __init__(self, k: int | None = None, normalize: bool = True):
        self.k = k
        self.normalize = normalize

    def fit(self, X, y=None):
        data = as_points(X, name="X")
        if self.k is None:
            raise ValidationError("k is required for the nearest-neighbor scorer")
        if not 1 <= int(self.k) <= data.shape[0]:
            raise ValidationError(f"k must be in [1, {data.shape[0]}], got {self.k}")
        self.train_ = l2_normalize(data) if self.normalize else data.copy()
        self.n_features_in_ = data.shape[1]
        return self

    def score_samples(self, X) -> np.ndarray:
        check_is_fitted(self)
        data = as_points(X, name="X")
        if self.normalize:
            data = l2_normalize(data)
        k = int(self.k)
        E = cdist(data, self.train_)
        kth = np.partition(E, k - 1, axis=1)[:, k - 1]
        return -kth


def knn_score(train, x, k: int) -> float:
    """-distance from x to its k-th nearest row of train, l2-normalized."""
    pts = train.data if isinstance(train, PointSet) else train
    return float(KNNScorer(k=k).fit(pts).score_samples(np.asarray(x)[None, :])[0])


def softmax_entropy(p) -> float:
    """Shannon entropy -sum p_i ln p_i of one probability vector.

    Entries must be non-negative and sum to 1 within 1e-6; the vector is
    renormalized before the sum. Zero entries contribute zero. Higher
    means more uncertain, so this is not score-oriented.
    """
    v = as_vector(p, name="p")
    if np.any(v < 0.0):
        raise ValidationError("probabilities must be non-negative")
    total = v.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(f"probabilities sum to {total:.8f}, expected 1 within 1e-6")
    v = v / total
    pos = v[v > 0.0]
    return float(-(pos * np.log(pos)).sum())


def softmax_entropy_rows(P) -> np.ndarray:
    """softmax_entropy applied to every row of a matrix."""
    M = as_points(P, name="P")
    return np.array([softmax_entropy(row) for row in M])


def euclidean_lens_depth(Q, x) -> float:
    """Lens depth with plain Euclidean distances and no path structure."""
    pts = Q.data if isinstance(Q, PointSet) else as_points(Q, name="Q")
    v = as_vector(x, dim=pts.shape[1], name="x")
    return float(euclidean_lens_depth_batch(pts, v[None, :])[0])


def euclidean_lens_depth_batch(Q, X) -> np.ndarray:
    """Euclidean lens depth of every row of X against the rows of Q."""
    pts = Q.data if isinstance(Q, PointSet) else as_points(Q, name="Q")
    m = pts.shape[0]
    if m < 2:
        raise ValidationError(f"need at least 2 reference points, got {m}")
    data = as_points(X, name="X")
    if data.shape[1] != pts.shape[1]:
        raise ValidationError(
            f"query dimension {data.shape[1]} does not match reference d={pts.shape[1]}"
        )
    from .depth import _count_pairs

    ti, tj = np.tril_indices(m, k=-1)
    tri = cdist(pts, pts)[ti, tj]
    dx = cdist(data, pts)
    return _count_pairs(dx, ti, tj, tri) / (m * (m - 1) // 2)
