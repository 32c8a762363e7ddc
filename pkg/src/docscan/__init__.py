"""Unsupervised document classification by clustering embeddings with a
neighbor-consistency objective, plus k-means / random / TF-IDF baselines
and Hungarian-matched accuracy scoring."""

from .errors import (
    DocscanError,
    EmptyVocabulary,
    InsufficientRuns,
    IoFailure,
    KTooLarge,
    MalformedHeader,
    NonFiniteGradient,
    NonFiniteValue,
    TruncatedData,
)
from .evaluate import (
    EvalReport,
    aggregate_runs,
    clustering_accuracy,
    hungarian,
    make_report,
    random_baseline,
    save_report,
)
from .kmeans import KmeansResult, assign_to_centroids, kmeans
from .model import (
    AdamOptimizer,
    LinearClassifier,
    RunConfig,
    forward,
    init_classifier,
    load_model,
    logits,
    predict,
    save_loss_trace,
    save_model,
    scan_loss,
    scan_loss_grad,
    softmax,
    train,
)
from .neighbors import (
    NeighborTable,
    load_neighbor_table,
    mine_neighbors,
    neighbor_label_agreement,
    save_neighbor_table,
)
from .store import (
    TfidfConfig,
    fit_tfidf,
    load_corpus,
    load_embeddings,
    load_labels,
    make_blobs,
    num_classes,
    save_embeddings,
    save_labels,
    tfidf_featurize,
    transform_tfidf,
)

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "DocscanError",
    "EmptyVocabulary",
    "EvalReport",
    "InsufficientRuns",
    "IoFailure",
    "KTooLarge",
    "KmeansResult",
    "LinearClassifier",
    "MalformedHeader",
    "NeighborTable",
    "NonFiniteGradient",
    "NonFiniteValue",
    "RunConfig",
    "TfidfConfig",
    "TruncatedData",
    "aggregate_runs",
    "assign_to_centroids",
    "clustering_accuracy",
    "fit_tfidf",
    "forward",
    "hungarian",
    "init_classifier",
    "kmeans",
    "load_corpus",
    "load_embeddings",
    "load_labels",
    "load_model",
    "load_neighbor_table",
    "logits",
    "make_blobs",
    "make_report",
    "mine_neighbors",
    "neighbor_label_agreement",
    "num_classes",
    "predict",
    "random_baseline",
    "save_embeddings",
    "save_labels",
    "save_loss_trace",
    "save_model",
    "save_neighbor_table",
    "save_report",
    "scan_loss",
    "scan_loss_grad",
    "softmax",
    "tfidf_featurize",
    "train",
    "transform_tfidf",
]
