"""Non-parametric confidence scoring with lens depth over Fermat distances.

Fit one model per class on feature vectors, then score queries by how deep
they sit inside the closest class: the fraction of sample pairs whose lens
(the intersection of two balls with radius equal to the pair's distance)
contains the query. Distances are power-weighted shortest paths through the
sample, so the score follows the shape and density of each class and drops
to zero away from the data. Higher score = more in-distribution.
"""

from .baselines import (
    CentroidScorer,
    KNNScorer,
    MahalanobisScorer,
    euclidean_centroid_score,
    euclidean_lens_depth,
    euclidean_lens_depth_batch,
    knn_score,
    mahalanobis_score,
    softmax_entropy,
    softmax_entropy_rows,
)
from .datasets import gaussians3, spiral, two_moons
from .depth import (
    STRATEGIES,
    ClusterModel,
    LensDepthScorer,
    kmeans,
    lens_depth,
    lens_depth_batch,
    reduce_kmean_center,
    reduce_kmean_center_plus,
    reduce_random,
)
from .fermat import (
    FermatGraph,
    build_fermat_graph,
    fermat_between_samples,
    modified_fermat_matrix,
    modified_fermat_to_all,
    unmodified_fermat_matrix,
    unmodified_fermat_to_all,
)
from .geometry import DistanceMatrix, PointSet, euclidean, l2_normalize, nearest_particle
from .io import (
    load_features,
    load_graph,
    load_model,
    save_model,
    write_features_binary,
    write_features_csv,
    write_graph,
)
from .metrics import EvalReport, auroc, consistency_curve, evaluate, grid_map
from .validation import FileFormatError, NumericError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "CentroidScorer",
    "ClusterModel",
    "DistanceMatrix",
    "EvalReport",
    "FermatGraph",
    "FileFormatError",
    "KNNScorer",
    "LensDepthScorer",
    "MahalanobisScorer",
    "NumericError",
    "PointSet",
    "STRATEGIES",
    "ValidationError",
    "auroc",
    "build_fermat_graph",
    "consistency_curve",
    "euclidean",
    "euclidean_centroid_score",
    "euclidean_lens_depth",
    "euclidean_lens_depth_batch",
    "evaluate",
    "fermat_between_samples",
    "gaussians3",
    "grid_map",
    "kmeans",
    "knn_score",
    "l2_normalize",
    "lens_depth",
    "lens_depth_batch",
    "load_features",
    "load_graph",
    "load_model",
    "mahalanobis_score",
    "modified_fermat_matrix",
    "modified_fermat_to_all",
    "nearest_particle",
    "reduce_kmean_center",
    "reduce_kmean_center_plus",
    "reduce_random",
    "save_model",
    "softmax_entropy",
    "softmax_entropy_rows",
    "spiral",
    "two_moons",
    "unmodified_fermat_matrix",
    "unmodified_fermat_to_all",
    "write_features_binary",
    "write_features_csv",
    "write_graph",
]
