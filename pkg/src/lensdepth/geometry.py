"""Point-set storage, Euclidean primitives, and the symmetric distance container.

Everything is 64-bit floats: lens membership is decided by raw <= comparisons
on distances, and 32-bit drift would flip boolean outcomes near lens
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .validation import ValidationError, as_points, as_vector, check_labels, readonly


@dataclass(frozen=True)
class PointSet:
    """An (n, d) float64 feature matrix with optional dense integer class ids.

    Immutable after construction; the arrays are copied in and marked
    read-only, so instances are safe to share across threads.
    """

    data: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        data = as_points(self.data, name="data")
        object.__setattr__(self, "data", readonly(data.copy()))
        if self.labels is not None:
            lab = check_labels(self.labels, data.shape[0], dense=True)
            object.__setattr__(self, "labels", readonly(lab.copy()))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1


def euclidean(a, b) -> float:
    """Euclidean distance between two equal-dimension finite vectors."""
    va = as_vector(a, name="a")
    vb = as_vector(b, dim=va.size, name="b")
    return float(np.linalg.norm(va - vb))


def pairwise_euclidean(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """All-pairs Euclidean distances, (len(X), len(Y)) with Y defaulting to X."""
    return cdist(X, X if Y is None else Y)


def nearest_particle(x, Q) -> tuple[int, float]:
    """Index and distance of the row of Q closest to x, ties to lowest index."""
    pts = Q.data if isinstance(Q, PointSet) else as_points(Q, name="Q")
    v = as_vector(x, dim=pts.shape[1], name="x")
    d = np.linalg.norm(pts - v, axis=1)
    i = int(np.argmin(d))
    return i, float(d[i])


def l2_normalize(X) -> np.ndarray:
    """Scale every row to unit Euclidean norm; errors on a zero row."""
    A = as_points(X, name="X")
    norms = np.linalg.norm(A, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValidationError(f"cannot l2-normalize: row {zero[0]} has zero norm")
    return A / norms[:, None]


def _tri_index(i: int, j: int) -> int:
    # flat position of (i, j), i > j, in a row-major lower triangle
    return i * (i - 1) // 2 + j


class DistanceMatrix:
    """Symmetric non-negative zero-diagonal matrix stored as one triangle.

    Storing only the lower triangle makes symmetry structural rather than
    numerical and halves memory. The constructor rejects negative entries and
    input whose two triangles disagree beyond floating-point noise (shortest
    path engines may differ by ~1 ulp between directions).
    """

    __slots__ = ("m", "tri", "_full")

    def __init__(self, values: np.ndarray):
        V = np.asarray(values, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValidationError(f"distance matrix must be square, got {V.shape}")
        m = V.shape[0]
        if not np.all(np.isfinite(V)):
            raise ValidationError("distance matrix has non-finite entries")
        if np.any(V < 0.0):
            raise ValidationError("distance matrix has negative entries")
        if np.any(np.diag(V) != 0.0):
            raise ValidationError("distance matrix diagonal must be exactly zero")
        if not np.allclose(V, V.T, rtol=1e-8, atol=1e-12):
            raise ValidationError("distance matrix is not symmetric")
        self.m = m
        self.tri = readonly(V[np.tril_indices(m, k=-1)].copy())
        self._full = None

    @classmethod
    def from_tri(cls, tri: np.ndarray, m: int) -> "DistanceMatrix":
        """Rebuild from a stored row-major lower triangle (persistence path)."""
        obj = cls.__new__(cls)
        t = np.asarray(tri, dtype=np.float64)
        if t.shape != (m * (m - 1) // 2,):
            raise ValidationError(f"triangle length {t.shape} does not match m={m}")
        if not np.all(np.isfinite(t)) or np.any(t < 0.0):
            raise ValidationError("triangle entries must be finite and non-negative")
        obj.m = m
        obj.tri = readonly(t.copy())
        obj._full = None
        return obj

    def full(self) -> np.ndarray:
        """The dense symmetric matrix (cached, read-only)."""
        if self._full is None:
            F = np.zeros((self.m, self.m))
            F[np.tril_indices(self.m, k=-1)] = self.tri
            F += F.T
            self._full = readonly(F)
        return self._full

    def max_offdiag(self) -> float:
        return float(self.tri.max()) if self.tri.size else 0.0

    def __getitem__(self, ij) -> float:
        i, j = ij
        if not (0 <= i < self.m and 0 <= j < self.m):
            raise ValidationError(f"index ({i}, {j}) out of range for m={self.m}")
        if i == j:
            return 0.0
        if i < j:
            i, j = j, i
        return float(self.tri[_tri_index(i, j)])

    def __len__(self) -> int:
        return self.m
