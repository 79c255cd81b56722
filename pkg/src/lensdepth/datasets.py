"""Seeded toy-data generators for the 2-d qualitative experiments.

Each generator is a pure function of its arguments; the same seed gives
bit-identical output. Points come back as a labeled PointSet ready for
fitting.
"""

from __future__ import annotations

import numpy as np

from .geometry import PointSet
from .validation import ValidationError, as_points


def two_moons(n: int = 1000, noise: float = 0.07, seed: int = 0) -> PointSet:
    """Two interleaving half-circles with isotropic Gaussian noise.

    Class 0 traces the upper unit semicircle centered at the origin and
    gets ceil(n/2) points; class 1 traces the lower semicircle shifted to
    center (1, 0.5).
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not np.isfinite(noise) or noise < 0:
        raise ValidationError(f"noise must be finite and >= 0, got {noise}")
    n0 = (n + 1) // 2
    n1 = n - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    pts = np.concatenate(
        [
            np.column_stack([np.cos(t0), np.sin(t0)]),
            np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)]),
        ]
    )
    rng = np.random.default_rng(seed)
    if noise > 0:
        pts = pts + rng.normal(scale=noise, size=pts.shape)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return PointSet(pts, labels)


def spiral(n: int = 1000, turns: float = 2.0, noise: float = 0.15, seed: int = 0) -> PointSet:
    """One Archimedean spiral arm, scaled so the outermost radius is 1.

    The angle runs over an even grid from 0 (the origin) to 2*pi*turns,
    so sampling density thins toward the rim; Gaussian noise of scale
    `noise` is added on top. Single class: all labels are 0.
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not turns > 0:
        raise ValidationError(f"turns must be > 0, got {turns}")
    if not np.isfinite(noise) or noise < 0:
        raise ValidationError(f"noise must be finite and >= 0, got {noise}")
    theta = np.linspace(0.0, 2.0 * np.pi * turns, n)
    r = theta / (2.0 * np.pi * turns)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    rng = np.random.default_rng(seed)
    if noise > 0:
        pts = pts + rng.normal(scale=noise, size=pts.shape)
    return PointSet(pts, np.zeros(n, dtype=np.int64))


def gaussians3(
    n_per: int = 500,
    centers=None,
    sigma: float = 1.0,
    seed: int = 0,
) -> PointSet:
    """Three isotropic Gaussian blobs with labels 0, 1, 2.

    Default centers sit at the vertices of an equilateral triangle with
    side 10*sigma, well separated relative to the spread.
    """
    if n_per < 2:
        raise ValidationError(f"n_per must be >= 2, got {n_per}")
    if not np.isfinite(sigma) or sigma <= 0:
        raise ValidationError(f"sigma must be finite and > 0, got {sigma}")
    if centers is None:
        side = 10.0 * sigma
        centers = np.array(
            [
                [0.0, 0.0],
                [side, 0.0],
                [side / 2.0, side * np.sqrt(3.0) / 2.0],
            ]
        )
    else:
        centers = as_points(centers, name="centers")
        if centers.shape[0] != 3:
            raise ValidationError(f"expected 3 centers, got {centers.shape[0]}")
        if any(
            np.array_equal(centers[i], centers[j])
            for i in range(3)
            for j in range(i + 1, 3)
        ):
            raise ValidationError("centers must be pairwise distinct")
    rng = np.random.default_rng(seed)
    pts = np.concatenate(
        [c + rng.normal(scale=sigma, size=(n_per, centers.shape[1])) for c in centers]
    )
    labels = np.repeat(np.arange(3, dtype=np.int64), n_per)
    return PointSet(pts, labels)
