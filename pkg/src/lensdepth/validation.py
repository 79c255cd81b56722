"""Input validation helpers and the exception taxonomy shared by all modules.

Exit-code mapping in the CLI relies on these classes: ValidationError -> 1,
FileFormatError -> 2, NumericError -> 3. All derive from ValueError so that
library users can catch them uniformly.
"""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Bad arguments or violated preconditions (usage errors)."""


class FileFormatError(ValueError):
    """Structurally malformed input file (bad magic, header, ragged rows)."""


class NumericError(ValueError):
    """Numeric failure: non-finite input data, non-PD covariance, etc."""


def as_points(X, *, name: str = "X", min_rows: int = 1) -> np.ndarray:
    """Coerce to a C-contiguous float64 (n, d) matrix and validate it.

    Rejects non-2D input, fewer than `min_rows` rows, zero columns, and
    non-finite entries (reported with row/column indices).
    """
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d array, got ndim={A.ndim}")
    n, d = A.shape
    if n < min_rows:
        raise ValidationError(f"{name} needs at least {min_rows} row(s), got {n}")
    if d < 1:
        raise ValidationError(f"{name} needs at least 1 column")
    if not np.all(np.isfinite(A)):
        i, j = np.argwhere(~np.isfinite(A))[0]
        raise NumericError(f"{name} has non-finite value at row {i}, column {j}")
    return np.ascontiguousarray(A)


def as_vector(x, *, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a finite float64 1-d vector, optionally of fixed dimension."""
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise NumericError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise ValidationError(f"{name} has dimension {v.size}, expected {dim}")
    return v


def check_labels(y, n: int, *, dense: bool = False) -> np.ndarray:
    """Validate class labels: length n, non-negative integers.

    With dense=True additionally require that every id in [0, max] occurs,
    i.e. the ids form a contiguous 0..C-1 set.
    """
    lab = np.asarray(y)
    if lab.ndim != 1 or lab.shape[0] != n:
        raise ValidationError(f"labels must be a length-{n} vector, got shape {lab.shape}")
    if not np.issubdtype(lab.dtype, np.integer):
        asint = lab.astype(np.int64)
        if not np.array_equal(asint, lab):
            raise ValidationError("labels must be integers")
        lab = asint
    lab = lab.astype(np.int64)
    if lab.min() < 0:
        raise ValidationError("labels must be non-negative")
    if dense:
        present = np.unique(lab)
        expect = np.arange(lab.max() + 1)
        if not np.array_equal(present, expect):
            missing = sorted(set(expect.tolist()) - set(present.tolist()))
            raise ValidationError(f"class ids must be contiguous from 0; missing {missing}")
    return lab


def readonly(a: np.ndarray) -> np.ndarray:
    """Return `a` with its write flag cleared (a owns its buffer already)."""
    a.flags.writeable = False
    return a
