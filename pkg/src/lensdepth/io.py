"""File formats: feature matrices, Fermat graphs, and fitted model containers.

Three artifact kinds, all little-endian and byte-reproducible:

- feature files: CSV with header ``f0,...,f{d-1}[,label]``, or binary with
  magic ``LDFEAT01`` (u64 n, u64 d, u8 has_labels, n*d f64 row-major,
  n u32 labels if flagged);
- graph files: magic ``LDGRAF01`` (u64 m, u64 d, f64 alpha, m*d f64
  points, m*(m-1)/2 f64 row-major lower-triangle distances);
- model containers: a directory holding ``metadata.json`` plus one
  ``class_<i>.ldgraf`` per class.

Malformed content raises FileFormatError; non-finite payloads raise
NumericError; both carry enough location detail to find the bad byte/row.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .depth import ClusterModel, LensDepthScorer, STRATEGIES
from .fermat import FermatGraph
from .geometry import DistanceMatrix, PointSet
from .validation import FileFormatError, NumericError, ValidationError, as_points, check_labels

FEATURE_MAGIC = b"LDFEAT01"
GRAPH_MAGIC = b"LDGRAF01"
MODEL_FORMAT_VERSION = 1
_METADATA_KEYS = {
    "format_version",
    "alpha",
    "strategy",
    "n_inner",
    "normalize",
    "seed",
    "class_ids",
    "prng",
    "kmeans_init",
}


def _require_finite(X: np.ndarray, path) -> None:
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        r, c = bad[0]
        raise NumericError(f"{path}: non-finite value at row {r}, column {c}")


# ---------------------------------------------------------------- features


def _format_float(v: float) -> str:
    return repr(float(v))


def write_features_csv(path_or_handle, X, labels=None) -> None:
    """Feature rows as CSV; labels become a trailing integer column."""
    X, labels = _coerce_features(X, labels)
    d = X.shape[1]
    header = ",".join(f"f{j}" for j in range(d))
    if labels is not None:
        header += ",label"
    lines = [header]
    for i in range(X.shape[0]):
        row = ",".join(_format_float(v) for v in X[i])
        if labels is not None:
            row += f",{int(labels[i])}"
        lines.append(row)
    _write_lines(path_or_handle, lines)


def write_features_binary(path, X, labels=None) -> None:
    """Feature rows in the LDFEAT01 binary layout."""
    X, labels = _coerce_features(X, labels)
    if labels is not None and labels.max(initial=0) >= 2**32:
        raise ValidationError("labels beyond u32 range cannot be stored in binary form")
    n, d = X.shape
    parts = [
        FEATURE_MAGIC,
        struct.pack("<QQB", n, d, 1 if labels is not None else 0),
        np.ascontiguousarray(X, dtype="<f8").tobytes(),
    ]
    if labels is not None:
        parts.append(np.ascontiguousarray(labels, dtype="<u4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def _coerce_features(X, labels):
    if isinstance(X, PointSet):
        if labels is None:
            labels = X.labels
        X = X.data
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"features must be 2-d, got shape {X.shape}")
    if labels is not None:
        labels = check_labels(labels, X.shape[0])
    return X, labels


def load_features_raw(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Features plus optional labels; tolerates n = 0 (header-only files)."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(FEATURE_MAGIC))
    if magic == FEATURE_MAGIC:
        return _load_features_binary(path)
    return _load_features_csv(path)


def load_features(path) -> PointSet:
    """A non-empty PointSet from a CSV or LDFEAT01 file."""
    X, labels = load_features_raw(path)
    if X.shape[0] == 0:
        raise ValidationError(f"{path}: file contains no feature rows")
    return PointSet(X, labels)


def _load_features_binary(path: Path):
    blob = path.read_bytes()
    head = len(FEATURE_MAGIC) + 17
    if len(blob) < head:
        raise FileFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    n, d, has_labels = struct.unpack_from("<QQB", blob, len(FEATURE_MAGIC))
    if d < 1:
        raise FileFormatError(f"{path}: d must be >= 1, got {d}")
    if has_labels not in (0, 1):
        raise FileFormatError(f"{path}: has_labels byte must be 0 or 1, got {has_labels}")
    expect = head + 8 * n * d + (4 * n if has_labels else 0)
    if len(blob) != expect:
        raise FileFormatError(f"{path}: expected {expect} bytes, found {len(blob)}")
    X = np.frombuffer(blob, dtype="<f8", count=n * d, offset=head).reshape(n, d)
    X = X.astype(np.float64)
    _require_finite(X, path)
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype="<u4", count=n, offset=head + 8 * n * d)
        labels = labels.astype(np.int64)
    return X, labels


def _load_features_csv(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise FileFormatError(f"{path}: not valid UTF-8 ({e})") from None
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise FileFormatError(f"{path}: missing header line")
    cols = lines[0].split(",")
    has_labels = cols[-1] == "label"
    feat_cols = cols[:-1] if has_labels else cols
    if feat_cols != [f"f{j}" for j in range(len(feat_cols))] or not feat_cols:
        raise FileFormatError(f"{path}: header must be f0,...,f{{d-1}}[,label], got {lines[0]!r}")
    d = len(feat_cols)
    n = len(lines) - 1
    X = np.empty((n, d))
    labels = np.empty(n, dtype=np.int64) if has_labels else None
    width = d + (1 if has_labels else 0)
    for i, ln in enumerate(lines[1:]):
        cells = ln.split(",")
        if len(cells) != width:
            raise FileFormatError(f"{path}: row {i} has {len(cells)} cells, expected {width}")
        try:
            X[i] = [float(v) for v in cells[:d]]
        except ValueError as e:
            raise FileFormatError(f"{path}: row {i}: {e}") from None
        if has_labels:
            try:
                labels[i] = int(cells[d])
            except ValueError:
                raise FileFormatError(f"{path}: row {i}: bad label {cells[d]!r}") from None
            if labels[i] < 0:
                raise FileFormatError(f"{path}: row {i}: negative label {labels[i]}")
    _require_finite(X, path)
    return X, labels


# ------------------------------------------------------------------ graphs


def write_graph(path, g: FermatGraph) -> None:
    """One Fermat graph in the LDGRAF01 binary layout."""
    parts = [
        GRAPH_MAGIC,
        struct.pack("<QQd", g.m, g.d, g.alpha),
        np.ascontiguousarray(g.points.data, dtype="<f8").tobytes(),
        np.ascontiguousarray(g.pairwise.tri, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_graph(path) -> FermatGraph:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(GRAPH_MAGIC)] != GRAPH_MAGIC:
        raise FileFormatError(f"{path}: bad magic, not a graph file")
    head = len(GRAPH_MAGIC) + 24
    if len(blob) < head:
        raise FileFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    m, d, alpha = struct.unpack_from("<QQd", blob, len(GRAPH_MAGIC))
    if m < 2 or d < 1:
        raise FileFormatError(f"{path}: need m >= 2 and d >= 1, got m={m}, d={d}")
    if not np.isfinite(alpha) or alpha < 1.0:
        raise FileFormatError(f"{path}: alpha must be finite and >= 1, got {alpha}")
    n_tri = m * (m - 1) // 2
    expect = head + 8 * (m * d + n_tri)
    if len(blob) != expect:
        raise FileFormatError(f"{path}: expected {expect} bytes, found {len(blob)}")
    pts = np.frombuffer(blob, dtype="<f8", count=m * d, offset=head).reshape(m, d)
    pts = pts.astype(np.float64)
    _require_finite(pts, path)
    tri = np.frombuffer(blob, dtype="<f8", count=n_tri, offset=head + 8 * m * d)
    tri = tri.astype(np.float64)
    if not np.all(np.isfinite(tri)) or np.any(tri < 0.0):
        raise NumericError(f"{path}: distances must be finite and non-negative")
    return FermatGraph(
        points=PointSet(pts),
        alpha=float(alpha),
        pairwise=DistanceMatrix.from_tri(tri, m),
    )


# ------------------------------------------------------------------ models


def save_model(directory, scorer: LensDepthScorer) -> None:
    """Fitted scorer as metadata.json plus one graph blob per class."""
    if not hasattr(scorer, "clusters_"):
        raise ValidationError("cannot save an unfitted scorer")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "alpha": float(scorer.alpha),
        "strategy": scorer.strategy,
        "n_inner": None if scorer.n_inner is None else int(scorer.n_inner),
        "normalize": bool(scorer.normalize),
        "seed": int(scorer.seed),
        "class_ids": [int(c) for c in scorer.classes_],
        "prng": "pcg64",
        "kmeans_init": "d2-weighted",
    }
    text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    (directory / "metadata.json").write_text(text, encoding="utf-8")
    for cm in scorer.clusters_:
        write_graph(directory / f"class_{cm.class_id}.ldgraf", cm.graph)


def load_model(directory) -> LensDepthScorer:
    directory = Path(directory)
    meta_path = directory / "metadata.json"
    if not meta_path.is_file():
        raise FileFormatError(f"{directory}: metadata.json not found")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{meta_path}: invalid JSON ({e})") from None
    if not isinstance(meta, dict):
        raise FileFormatError(f"{meta_path}: expected a JSON object")
    missing = _METADATA_KEYS - meta.keys()
    unknown = meta.keys() - _METADATA_KEYS
    if missing:
        raise FileFormatError(f"{meta_path}: missing keys {sorted(missing)}")
    if unknown:
        raise FileFormatError(f"{meta_path}: unknown keys {sorted(unknown)}")
    if meta["format_version"] != MODEL_FORMAT_VERSION:
        raise FileFormatError(
            f"{meta_path}: format_version {meta['format_version']} not supported"
        )
    if meta["strategy"] not in STRATEGIES:
        raise FileFormatError(f"{meta_path}: unknown strategy {meta['strategy']!r}")
    scorer = LensDepthScorer(
        alpha=float(meta["alpha"]),
        strategy=meta["strategy"],
        n_inner=meta["n_inner"],
        normalize=bool(meta["normalize"]),
        seed=int(meta["seed"]),
    )
    class_ids = meta["class_ids"]
    if not class_ids:
        raise FileFormatError(f"{meta_path}: class_ids is empty")
    clusters = []
    dims = set()
    for cid in range(len(class_ids)):
        g = load_graph(directory / f"class_{cid}.ldgraf")
        if g.alpha != float(meta["alpha"]):
            raise FileFormatError(
                f"{directory}: class {cid} graph alpha {g.alpha} != metadata {meta['alpha']}"
            )
        dims.add(g.d)
        clusters.append(ClusterModel(graph=g, class_id=cid))
    if len(dims) != 1:
        raise FileFormatError(f"{directory}: class graphs disagree on dimension: {sorted(dims)}")
    scorer.classes_ = np.asarray(class_ids, dtype=np.int64)
    scorer.clusters_ = clusters
    scorer.n_features_in_ = dims.pop()
    return scorer


# ------------------------------------------------------------- score files


def write_scores_csv(path_or_handle, scores, config: dict | None = None) -> None:
    """Scores as `row,score` CSV with an optional leading config comment."""
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(config, sort_keys=True))
    lines.append("row,score")
    for i, s in enumerate(np.asarray(scores, dtype=np.float64)):
        lines.append(f"{i},{_format_float(s)}")
    _write_lines(path_or_handle, lines)


def write_grid_csv(path_or_handle, grid, xmin, xmax, ymin, ymax, config: dict | None = None) -> None:
    """Grid scores as `x,y,score` CSV, y-major, matching grid_map layout."""
    G = np.asarray(grid, dtype=np.float64)
    res = G.shape[0]
    xs = xmin + (np.arange(res) + 0.5) * (xmax - xmin) / res
    ys = ymin + (np.arange(res) + 0.5) * (ymax - ymin) / res
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(config, sort_keys=True))
    lines.append("x,y,score")
    for iy in range(res):
        for ix in range(res):
            lines.append(
                f"{_format_float(xs[ix])},{_format_float(ys[iy])},{_format_float(G[iy, ix])}"
            )
    _write_lines(path_or_handle, lines)


def load_scores_csv(path) -> np.ndarray:
    """The score column of a `row,score` CSV, comment lines ignored."""
    path = Path(path)
    lines = [
        ln
        for ln in path.read_text(encoding="utf-8").splitlines()
        if ln and not ln.startswith("#")
    ]
    if not lines or lines[0] != "row,score":
        raise FileFormatError(f"{path}: expected a row,score header")
    out = np.empty(len(lines) - 1)
    for i, ln in enumerate(lines[1:]):
        cells = ln.split(",")
        if len(cells) != 2:
            raise FileFormatError(f"{path}: row {i} has {len(cells)} cells, expected 2")
        try:
            out[i] = float(cells[1])
        except ValueError as e:
            raise FileFormatError(f"{path}: row {i}: {e}") from None
    _require_finite(out[:, None], path)
    return out


def _write_lines(path_or_handle, lines) -> None:
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        Path(path_or_handle).write_text(text, encoding="utf-8")
