"""Separation and selective-prediction metrics, plus 2-d score maps.

AUROC here is the probability that a randomly chosen in-distribution score
exceeds a randomly chosen out-of-distribution score, ties worth one half.
The consistency curve rejects a growing fraction of the lowest-scored items
and tracks accuracy on what remains; out-of-distribution items are fed in
as incorrect, so a good scorer pushes the curve upward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .validation import ValidationError, as_vector


def auroc(scores_id, scores_ood) -> float:
    """Rank-based separation of two score samples, in [0, 1].

    Computed from midranks, so the result equals the exhaustive pairwise
    count with ties at half weight. Higher scores must mean more
    in-distribution.
    """
    a = as_vector(scores_id, name="scores_id")
    b = as_vector(scores_ood, name="scores_ood")
    if a.size == 0 or b.size == 0:
        raise ValidationError("auroc needs at least one score on each side")
    ranks = rankdata(np.concatenate([a, b]), method="average")
    u = ranks[: a.size].sum() - a.size * (a.size + 1) / 2.0
    return float(u / (a.size * b.size))


def consistency_curve(scores, correct, steps: int = 100) -> list[tuple[float, float]]:
    """Retained accuracy after rejecting the lowest-scored fraction.

    For each fraction r = t/steps, t = 0 .. steps-1, the floor(r*N)
    lowest-scored items are dropped (ties kept in input order) and the
    mean of `correct` over the remainder is reported. r = 1 is excluded;
    nothing would remain.
    """
    s = as_vector(scores, name="scores")
    c = np.asarray(correct, dtype=bool)
    if c.shape != s.shape:
        raise ValidationError(f"scores and correct lengths differ: {s.shape} vs {c.shape}")
    if steps < 2:
        raise ValidationError(f"steps must be >= 2, got {steps}")
    n = s.size
    if n == 0:
        raise ValidationError("need at least one scored item")
    order = np.argsort(s, kind="stable")
    ordered = c[order]
    # suffix mean over the retained tail for each cutoff
    tail_correct = np.concatenate([np.cumsum(ordered[::-1])[::-1], [0]])
    curve = []
    for t in range(steps):
        k = (t * n) // steps
        curve.append((t / steps, float(tail_correct[k] / (n - k))))
    return curve


def grid_map(scorer, xmin, xmax, ymin, ymax, resolution: int) -> np.ndarray:
    """Scores over a uniform 2-d lattice, evaluated at cell centers.

    Returns a (resolution, resolution) array indexed [iy, ix], y ascending
    down the rows. `scorer` is either a callable mapping an (n, 2) array
    to n scores, or an object with that interface under score_samples.
    """
    if resolution < 2:
        raise ValidationError(f"resolution must be >= 2, got {resolution}")
    if not (xmin < xmax and ymin < ymax):
        raise ValidationError("grid bounds must satisfy xmin < xmax and ymin < ymax")
    fn = scorer.score_samples if hasattr(scorer, "score_samples") else scorer
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    vals = np.asarray(fn(pts), dtype=np.float64)
    if vals.shape != (pts.shape[0],):
        raise ValidationError(f"scorer returned shape {vals.shape}, expected ({pts.shape[0]},)")
    return vals.reshape(resolution, resolution)


def grid_points(xmin, xmax, ymin, ymax, resolution: int) -> np.ndarray:
    """The cell-center coordinates grid_map evaluates, as (resolution², 2)."""
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class EvalReport:
    """AUROC plus a consistency curve for one scorer on one ID/OOD split."""

    auroc: float
    curve: list[tuple[float, float]]
    n_id: int
    n_ood: int

    def __post_init__(self):
        if self.n_id < 1 or self.n_ood < 1:
            raise ValidationError("report needs at least one point on each side")
        if not 0.0 <= self.auroc <= 1.0:
            raise ValidationError(f"auroc out of range: {self.auroc}")
        fr = [r for r, _ in self.curve]
        if fr:
            if any(b <= a for a, b in zip(fr, fr[1:])):
                raise ValidationError("curve fractions must increase strictly")
            if fr[0] < 0.0 or fr[-1] >= 1.0:
                raise ValidationError("curve fractions must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "curve": [[r, acc] for r, acc in self.curve],
            "n_id": self.n_id,
            "n_ood": self.n_ood,
        }


def evaluate(scores_id, scores_ood, correct_id=None, steps: int = 100) -> EvalReport:
    """Score separation and the rejection curve for one ID/OOD split.

    `correct_id` flags which ID items the downstream classifier got right
    (defaults to all true); OOD items always count as incorrect.
    """
    a = as_vector(scores_id, name="scores_id")
    b = as_vector(scores_ood, name="scores_ood")
    if correct_id is None:
        cid = np.ones(a.size, dtype=bool)
    else:
        cid = np.asarray(correct_id, dtype=bool)
        if cid.shape != a.shape:
            raise ValidationError("correct_id length does not match scores_id")
    scores = np.concatenate([a, b])
    correct = np.concatenate([cid, np.zeros(b.size, dtype=bool)])
    return EvalReport(
        auroc=auroc(a, b),
        curve=consistency_curve(scores, correct, steps=steps),
        n_id=int(a.size),
        n_ood=int(b.size),
    )
