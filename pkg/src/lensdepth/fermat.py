"""Sample Fermat distances: power-weighted shortest paths through a point set.

A hop from u to v costs euclidean(u, v)**alpha with alpha >= 1. Large alpha
penalizes long hops, so cheapest paths hug dense regions of the sample. The
all-pairs matrix within the sample is computed once and queries against it
come in two flavors:

- modified: min over entry points q of snap cost |x - q|**alpha plus the
  in-sample path cost. Grows without bound as x leaves the data.
- unmodified: snap x to its nearest sample point for free, then read that
  row. Constant on each Voronoi cell of the sample; kept to demonstrate the
  plateau artifact the modified form removes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from sklearn.neighbors import NearestNeighbors

from .geometry import DistanceMatrix, PointSet, pairwise_euclidean
from .validation import NumericError, ValidationError, as_points, as_vector

# scipy method codes for the all-pairs solve
_METHODS = {"auto": None, "dijkstra": "D", "floyd-warshall": "FW"}


@dataclass(frozen=True)
class FermatGraph:
    """Inner points of one cluster plus their all-pairs Fermat distances."""

    points: PointSet
    alpha: float
    pairwise: DistanceMatrix

    @property
    def m(self) -> int:
        return self.points.n

    @property
    def d(self) -> int:
        return self.points.d


def _complete_graph_csr(W: np.ndarray) -> csr_matrix:
    # Zero-weight edges (duplicate points) must survive, so the graph is
    # built with explicit entries for every off-diagonal pair; a dense
    # matrix would have scipy treat those zeros as missing edges.
    m = W.shape[0]
    off = ~np.eye(m, dtype=bool)
    data = W[off]
    indices = np.nonzero(off)[1].astype(np.int32)
    indptr = np.arange(m + 1, dtype=np.int32) * (m - 1)
    return csr_matrix((data, indices, indptr), shape=(m, m))


def _knn_graph_csr(X: np.ndarray, k: int, alpha: float) -> csr_matrix:
    m = X.shape[0]
    if k < 1:
        raise ValidationError(f"approx_knn_edges must be >= 1, got {k}")
    nn = NearestNeighbors(n_neighbors=min(k + 1, m)).fit(X)
    dist, idx = nn.kneighbors(X)
    rows = np.repeat(np.arange(m), idx.shape[1])
    cols = idx.ravel()
    vals = np.power(dist.ravel(), alpha)
    # union of both directions so the graph is symmetric; identical (i, j)
    # duplicates carry identical weights, keep the first of each
    r = np.concatenate([rows, cols])
    c = np.concatenate([cols, rows])
    v = np.concatenate([vals, vals])
    key = r * m + c
    uniq, first = np.unique(key, return_index=True)
    return csr_matrix((v[first], (uniq // m, uniq % m)), shape=(m, m))


def build_fermat_graph(
    Q,
    alpha: float,
    *,
    approx_knn_edges: int | None = None,
    engine: str = "auto",
) -> FermatGraph:
    """All-pairs sample Fermat distances over the rows of Q.

    Q may be a PointSet or any (m, d) array, m >= 2. With
    ``approx_knn_edges=k`` the path search runs on a k-nearest-neighbor
    subgraph instead of the complete graph; cheaper, but the result is an
    upper bound on the true distances and fails if the subgraph is
    disconnected. ``engine`` picks the all-pairs solver: "dijkstra",
    "floyd-warshall", or "auto" (Floyd-Warshall for the complete graph,
    Dijkstra for the sparse one; identical results either way).
    """
    ps = Q if isinstance(Q, PointSet) else PointSet(as_points(Q, name="Q"))
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 1.0:
        raise ValidationError(f"alpha must be a finite value >= 1, got {alpha}")
    if ps.n < 2:
        raise ValidationError(f"need at least 2 points to build a graph, got {ps.n}")
    if engine not in _METHODS:
        raise ValidationError(f"engine must be one of {sorted(_METHODS)}, got {engine!r}")

    X = ps.data
    if approx_knn_edges is None:
        W = pairwise_euclidean(X)
        if alpha != 1.0:
            np.power(W, alpha, out=W)
        if not np.all(np.isfinite(W)):
            raise NumericError(
                f"edge weights overflow float64 at alpha={alpha}; rescale the inputs"
            )
        G = _complete_graph_csr(W)
        method = _METHODS[engine] or "FW"
    else:
        G = _knn_graph_csr(X, int(approx_knn_edges), alpha)
        if not np.all(np.isfinite(G.data)):
            raise NumericError(
                f"edge weights overflow float64 at alpha={alpha}; rescale the inputs"
            )
        method = _METHODS[engine] or "D"

    D = shortest_path(G, method=method, directed=False)
    if not np.all(np.isfinite(D)):
        raise NumericError(
            "point set is disconnected under approx_knn_edges; increase k"
        )
    # solver output can differ across directions by rounding; make the
    # smaller of the two the value of both
    np.minimum(D, D.T, out=D)
    return FermatGraph(points=ps, alpha=alpha, pairwise=DistanceMatrix(D))


def fermat_between_samples(g: FermatGraph, i: int, j: int) -> float:
    """Fermat distance between rows i and j of the graph's point set."""
    return g.pairwise[i, j]


def snap_costs(g: FermatGraph, X: np.ndarray) -> np.ndarray:
    """Entry costs euclidean(x, q)**alpha, shape (len(X), m).

    May contain +inf if a query is extreme enough to overflow; callers
    treat that as "farther than anything", which is the right reading.
    """
    E = pairwise_euclidean(X, g.points.data)
    if g.alpha != 1.0:
        np.power(E, g.alpha, out=E)
    return E


def minplus(S: np.ndarray, D: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Row-wise min-plus product: out[b, y] = min_q S[b, q] + D[q, y]."""
    B, m = S.shape
    if out is None:
        out = np.full((B, m), np.inf)
    else:
        out.fill(np.inf)
    tmp = np.empty((B, m))
    for q in range(m):
        np.add(S[:, q, None], D[q], out=tmp)
        np.minimum(out, tmp, out=out)
    return out


def modified_from_snap(g: FermatGraph, S: np.ndarray) -> np.ndarray:
    """Modified distances given precomputed snap costs S of shape (B, m)."""
    D = g.pairwise.full()
    out = minplus(S, D)
    # a query equal to a sample point must reproduce that pairwise row
    # bit for bit, not up to rounding
    hits = np.flatnonzero(S.min(axis=1) == 0.0)
    for b in hits:
        out[b] = D[int(np.argmin(S[b]))]
    return out


def modified_fermat_matrix(g: FermatGraph, X) -> np.ndarray:
    """Modified Fermat distances from each row of X to every graph point."""
    Xq = as_points(X, name="X")
    if Xq.shape[1] != g.d:
        raise ValidationError(f"query dimension {Xq.shape[1]} does not match graph d={g.d}")
    return modified_from_snap(g, snap_costs(g, Xq))


def unmodified_fermat_matrix(g: FermatGraph, X) -> np.ndarray:
    """Plain sample Fermat distances: free snap to the nearest point, then lookup."""
    Xq = as_points(X, name="X")
    if Xq.shape[1] != g.d:
        raise ValidationError(f"query dimension {Xq.shape[1]} does not match graph d={g.d}")
    E = pairwise_euclidean(Xq, g.points.data)
    snap = np.argmin(E, axis=1)
    return g.pairwise.full()[snap].copy()


def modified_fermat_to_all(g: FermatGraph, x) -> np.ndarray:
    """Length-m vector of modified Fermat distances from one query point."""
    v = as_vector(x, dim=g.d, name="x")
    return modified_fermat_matrix(g, v[None, :])[0]


def unmodified_fermat_to_all(g: FermatGraph, x) -> np.ndarray:
    """Length-m vector of plain sample Fermat distances from one query point."""
    v = as_vector(x, dim=g.d, name="x")
    return unmodified_fermat_matrix(g, v[None, :])[0]
