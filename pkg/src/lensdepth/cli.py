"""Command-line pipelines: generate, fit, score, eval, grid, reduce-bench, baseline.

Conventions shared by every subcommand:

- flags first, ``--config file.json`` second, built-in defaults last; the
  config file may supply any flag of the subcommand by its dest name and
  unknown keys are rejected;
- the resolved configuration is embedded in every data artifact (CSV
  comment line or JSON key) except raw feature files, where it is logged
  to stderr instead;
- logs go to stderr, data to stdout or ``--out``;
- exit codes: 0 success, 1 usage or validation, 2 I/O or malformed file,
  3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import datasets, io, metrics
from .depth import STRATEGIES, LensDepthScorer
from .validation import FileFormatError, NumericError, ValidationError

_UNSET = object()
_REQUIRED = object()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


def _default_threads() -> int:
    env = os.environ.get("LD_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"LD_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValidationError(f"LD_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; this project reserves 2 for
    # I/O failures, so route usage errors to exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


class _Arg:
    def __init__(self, dest, default=_REQUIRED, flag=None, **kwargs):
        self.dest = dest
        self.default = default
        self.flag = flag or "--" + dest.replace("_", "-")
        self.kwargs = kwargs

    def add_to(self, parser):
        parser.add_argument(self.flag, dest=self.dest, default=_UNSET, **self.kwargs)


_COMMON = [
    _Arg("config", default=None, help="JSON file supplying flag values by name"),
]

_THREADS = _Arg(
    "threads",
    default=None,
    type=int,
    help="worker threads (default: LD_THREADS or the hardware count)",
)

_COMMANDS: dict[str, list[_Arg]] = {
    "generate": [
        _Arg("kind", choices=["moons", "spiral", "gaussians"], help="toy dataset family"),
        _Arg("n", default=None, type=int, help="points (moons/spiral: total; gaussians: per class)"),
        _Arg("noise", default=None, type=float, help="Gaussian noise scale"),
        _Arg("seed", default=0, type=int),
        _Arg("turns", default=2.0, type=float, help="spiral winding count"),
        _Arg("sigma", default=1.0, type=float, help="gaussians cluster spread"),
        _Arg("out", default=None, help="output path (default: CSV to stdout)"),
        _Arg("format", default=None, choices=["csv", "bin"], help="default: by --out extension"),
    ],
    "fit": [
        _Arg("features", help="labeled feature file (CSV or LDFEAT01)"),
        _Arg("out", help="model directory to write"),
        _Arg("alpha", default=7.0, type=float),
        _Arg("strategy", default="kmean-center", choices=list(STRATEGIES)),
        _Arg("n_inner", default=None, type=int, help="inner points per class (default: keep all)"),
        _Arg("normalize", default=False, action="store_true"),
        _Arg("seed", default=0, type=int),
        _Arg("approx_knn_edges", default=None, type=int, help="approximate paths over a kNN subgraph"),
        _Arg("engine", default="auto", choices=["auto", "dijkstra", "floyd-warshall"]),
        _THREADS,
    ],
    "score": [
        _Arg("model", help="model directory from fit"),
        _Arg("features", help="feature file to score"),
        _Arg("out", default=None, help="output CSV (default: stdout)"),
        _THREADS,
    ],
    "eval": [
        _Arg("id", help="row,score CSV of in-distribution scores"),
        _Arg("ood", help="row,score CSV of out-of-distribution scores"),
        _Arg("steps", default=100, type=int, help="rejection-grid granularity"),
        _Arg("out", default=None, help="output JSON (default: stdout)"),
    ],
    "grid": [
        _Arg("model", default=None, help="model directory (or use --baseline)"),
        _Arg("baseline", default=None, choices=["ld", "euclid", "mahalanobis", "knn"]),
        _Arg("train", default=None, help="training features for --baseline"),
        _Arg("k", default=None, type=int, help="kth neighbor for --baseline knn"),
        _Arg("epsilon", default=None, type=float, help="covariance ridge for --baseline mahalanobis"),
        _Arg("pooled", default=False, action="store_true", help="pool class covariances"),
        _Arg("xmin", type=float),
        _Arg("xmax", type=float),
        _Arg("ymin", type=float),
        _Arg("ymax", type=float),
        _Arg("resolution", default=100, type=int),
        _Arg("out", default=None, help="output CSV (default: stdout)"),
        _THREADS,
    ],
    "reduce-bench": [
        _Arg("features", help="labeled training features"),
        _Arg("id", help="in-distribution features to score"),
        _Arg("ood", help="out-of-distribution features to score"),
        _Arg("sizes", help="comma-separated inner-point counts, e.g. 500,1000,1500"),
        _Arg("strategies", default="random,kmean-center,kmean-center-plus",
             help="comma-separated reduction strategies"),
        _Arg("alpha", default=7.0, type=float),
        _Arg("seed", default=0, type=int),
        _Arg("normalize", default=False, action="store_true"),
        _Arg("out", default=None, help="output CSV (default: stdout)"),
        _THREADS,
    ],
    "baseline": [
        _Arg("method", choices=["ld", "euclid", "mahalanobis", "knn", "entropy"]),
        _Arg("features", help="feature file to score (probability rows for entropy)"),
        _Arg("train", default=None, help="training features (all methods except entropy)"),
        _Arg("k", default=None, type=int, help="kth neighbor (knn; no default)"),
        _Arg("epsilon", default=None, type=float, help="covariance ridge (mahalanobis)"),
        _Arg("pooled", default=False, action="store_true", help="pool class covariances"),
        _Arg("normalize", default=True, action="store_false", flag="--no-normalize",
             help="disable l2 normalization for knn"),
        _Arg("out", default=None, help="output CSV (default: stdout)"),
    ],
}


def build_parser() -> _Parser:
    parser = _Parser(prog="lensdepth", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, args in _COMMANDS.items():
        sub = subs.add_parser(name, prog=f"lensdepth {name}")
        for a in args + _COMMON:
            a.add_to(sub)
    return parser


def _resolve(ns: argparse.Namespace, command: str) -> dict:
    """Merge flags > config file > defaults into one plain dict."""
    cfg = {}
    raw_cfg = getattr(ns, "config", _UNSET)
    if raw_cfg is not _UNSET and raw_cfg is not None:
        try:
            cfg = json.loads(Path(raw_cfg).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"{raw_cfg}: invalid JSON ({e})") from None
        if not isinstance(cfg, dict):
            raise ValidationError(f"{raw_cfg}: config must be a JSON object")
    spec = {a.dest: a.default for a in _COMMANDS[command]}
    unknown = cfg.keys() - spec.keys()
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
    vals = {}
    missing = []
    for dest, default in spec.items():
        v = getattr(ns, dest)
        if v is _UNSET:
            v = cfg.get(dest, default)
        if v is _REQUIRED:
            missing.append("--" + dest.replace("_", "-"))
            continue
        vals[dest] = v
    if missing:
        raise ValidationError(f"missing required flags: {', '.join(missing)}")
    return vals


def _echo_config(vals: dict, command: str) -> dict:
    out = {"command": command, "format_version": 1}
    out.update({k: v for k, v in sorted(vals.items())})
    return out


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _threads(vals: dict) -> int:
    t = vals.get("threads")
    if t is None:
        return _default_threads()
    if int(t) < 1:
        raise ValidationError(f"--threads must be >= 1, got {t}")
    return int(t)


# ------------------------------------------------------------ subcommands


def cmd_generate(vals: dict) -> None:
    kind = vals["kind"]
    seed = int(vals["seed"])
    if kind == "moons":
        n = 1000 if vals["n"] is None else int(vals["n"])
        noise = 0.07 if vals["noise"] is None else float(vals["noise"])
        ps = datasets.two_moons(n, noise, seed)
    elif kind == "spiral":
        n = 1000 if vals["n"] is None else int(vals["n"])
        noise = 0.15 if vals["noise"] is None else float(vals["noise"])
        ps = datasets.spiral(n, float(vals["turns"]), noise, seed)
    else:
        n = 500 if vals["n"] is None else int(vals["n"])
        ps = datasets.gaussians3(n, sigma=float(vals["sigma"]), seed=seed)
    out = vals["out"]
    fmt = vals["format"]
    if fmt is None:
        fmt = "csv" if out is None or str(out).endswith(".csv") else "bin"
    # feature files carry no metadata slot, so provenance goes to stderr
    _log("config: " + json.dumps(_echo_config(vals, "generate"), sort_keys=True))
    if fmt == "bin":
        if out is None:
            raise ValidationError("binary output requires --out")
        io.write_features_binary(out, ps)
    else:
        io.write_features_csv(out if out is not None else sys.stdout, ps)
    _log(f"wrote {ps.n} points, d={ps.d}, {ps.n_classes} class(es)")


def cmd_fit(vals: dict) -> None:
    ps = io.load_features(vals["features"])
    if ps.labels is None:
        raise ValidationError(f"{vals['features']}: fit requires labeled features")
    scorer = LensDepthScorer(
        alpha=float(vals["alpha"]),
        strategy=vals["strategy"],
        n_inner=None if vals["n_inner"] is None else int(vals["n_inner"]),
        normalize=bool(vals["normalize"]),
        seed=int(vals["seed"]),
        approx_knn_edges=vals["approx_knn_edges"],
        engine=vals["engine"],
    )
    t0 = time.perf_counter()
    scorer.fit(ps)
    for cm in scorer.clusters_:
        _log(f"class {scorer.classes_[cm.class_id]}: m={cm.graph.m} inner points")
    _log(f"fitted {len(scorer.clusters_)} class model(s) in {time.perf_counter() - t0:.2f}s")
    io.save_model(vals["out"], scorer)
    _log(f"model written to {vals['out']}")


def cmd_score(vals: dict) -> None:
    scorer = io.load_model(vals["model"])
    X, _ = io.load_features_raw(vals["features"])
    if X.shape[0] == 0:
        scores = np.empty(0)
    else:
        scores = scorer.score_samples(X, threads=_threads(vals))
    dest = vals["out"] if vals["out"] is not None else sys.stdout
    io.write_scores_csv(dest, scores, config=_echo_config(vals, "score"))


def cmd_eval(vals: dict) -> None:
    scores_id = io.load_scores_csv(vals["id"])
    scores_ood = io.load_scores_csv(vals["ood"])
    report = metrics.evaluate(scores_id, scores_ood, steps=int(vals["steps"]))
    doc = report.to_dict()
    doc["config"] = _echo_config(vals, "eval")
    text = json.dumps(doc, sort_keys=True) + "\n"
    if vals["out"] is None:
        sys.stdout.write(text)
    else:
        Path(vals["out"]).write_text(text, encoding="utf-8")


def _baseline_scorer(method, train_path, vals):
    if train_path is None:
        raise ValidationError(f"--train is required for method {method!r}")
    train = io.load_features(train_path)
    if method == "ld":
        return lambda X: bl.euclidean_lens_depth_batch(train.data, X)
    if method == "euclid":
        if train.labels is None:
            raise ValidationError(f"{train_path}: method euclid requires labels")
        return bl.CentroidScorer().fit(train.data, train.labels).score_samples
    if method == "mahalanobis":
        if train.labels is None:
            raise ValidationError(f"{train_path}: method mahalanobis requires labels")
        eps = vals.get("epsilon")
        scorer = bl.MahalanobisScorer(
            epsilon=None if eps is None else float(eps),
            pooled=bool(vals.get("pooled", False)),
        )
        return scorer.fit(train.data, train.labels).score_samples
    if method == "knn":
        if vals.get("k") is None:
            raise ValidationError("method knn requires --k")
        scorer = bl.KNNScorer(k=int(vals["k"]), normalize=bool(vals.get("normalize", True)))
        return scorer.fit(train.data).score_samples
    raise ValidationError(f"unknown baseline method {method!r}")


def cmd_baseline(vals: dict) -> None:
    method = vals["method"]
    X, _ = io.load_features_raw(vals["features"])
    if X.shape[0] == 0:
        scores = np.empty(0)
    elif method == "entropy":
        # entropy is an uncertainty; flip the sign to match score orientation
        scores = -bl.softmax_entropy_rows(X)
    else:
        scores = _baseline_scorer(method, vals["train"], vals)(X)
    dest = vals["out"] if vals["out"] is not None else sys.stdout
    io.write_scores_csv(dest, scores, config=_echo_config(vals, "baseline"))


def cmd_grid(vals: dict) -> None:
    if (vals["model"] is None) == (vals["baseline"] is None):
        raise ValidationError("pass exactly one of --model or --baseline")
    if vals["model"] is not None:
        scorer = io.load_model(vals["model"])
        if scorer.n_features_in_ != 2:
            raise ValidationError(
                f"grid needs a 2-d model, this one has d={scorer.n_features_in_}"
            )
        threads = _threads(vals)
        fn = lambda X: scorer.score_samples(X, threads=threads)
    else:
        fn = _baseline_scorer(vals["baseline"], vals["train"], vals)
    xmin, xmax = float(vals["xmin"]), float(vals["xmax"])
    ymin, ymax = float(vals["ymin"]), float(vals["ymax"])
    grid = metrics.grid_map(fn, xmin, xmax, ymin, ymax, int(vals["resolution"]))
    dest = vals["out"] if vals["out"] is not None else sys.stdout
    io.write_grid_csv(dest, grid, xmin, xmax, ymin, ymax,
                      config=_echo_config(vals, "grid"))


def _parse_list(text: str, kind, what: str):
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if not items:
        raise ValidationError(f"{what} must be a non-empty comma-separated list")
    try:
        return [kind(s) for s in items]
    except ValueError:
        raise ValidationError(f"bad {what} entry in {text!r}") from None


def cmd_reduce_bench(vals: dict) -> None:
    train = io.load_features(vals["features"])
    if train.labels is None:
        raise ValidationError(f"{vals['features']}: reduce-bench requires labeled features")
    id_pts = io.load_features(vals["id"])
    ood_pts = io.load_features(vals["ood"])
    sizes = _parse_list(vals["sizes"], int, "--sizes")
    strategies = _parse_list(vals["strategies"], str, "--strategies")
    for s in strategies:
        if s not in STRATEGIES or s == "none":
            raise ValidationError(f"unknown reduction strategy {s!r}")
    threads = _threads(vals)
    lines = ["# config: " + json.dumps(_echo_config(vals, "reduce-bench"), sort_keys=True),
             "strategy,n_inner,auroc"]
    for strategy in strategies:
        for n in sizes:
            scorer = LensDepthScorer(
                alpha=float(vals["alpha"]),
                strategy=strategy,
                n_inner=int(n),
                normalize=bool(vals["normalize"]),
                seed=int(vals["seed"]),
            ).fit(train)
            a = metrics.auroc(
                scorer.score_samples(id_pts.data, threads=threads),
                scorer.score_samples(ood_pts.data, threads=threads),
            )
            _log(f"{strategy} n={n}: auroc={a:.4f}")
            lines.append(f"{strategy},{n},{repr(float(a))}")
    text = "\n".join(lines) + "\n"
    if vals["out"] is None:
        sys.stdout.write(text)
    else:
        Path(vals["out"]).write_text(text, encoding="utf-8")


_RUNNERS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "score": cmd_score,
    "eval": cmd_eval,
    "grid": cmd_grid,
    "reduce-bench": cmd_reduce_bench,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        vals = _resolve(ns, ns.command)
        _RUNNERS[ns.command](vals)
    except FileFormatError as e:
        _log(f"error: {e}")
        return EXIT_IO
    except NumericError as e:
        _log(f"error: {e}")
        return EXIT_NUMERIC
    except ValidationError as e:
        _log(f"error: {e}")
        return EXIT_USAGE
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
