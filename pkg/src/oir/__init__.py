"""Embedding-agnostic open intent recognition.

Detect known customer-support intents with centroid-plus-adaptive-boundary
classification, flag the rest as UNKNOWN, then discover, label, and
canonicalize new intents from the flagged utterances.
"""

from .canonical import SynonymLexicon, canonicalize_label, merge_labels, singularize
from .clustering import (
    AUTO,
    AgglomerativeClusterer,
    ClusterAssignment,
    ClusteringConfig,
    DiagonalGaussianMixture,
    KMeansClusterer,
    agglomerative,
    gmm_em,
    kmeans,
)
from .detection import (
    UNKNOWN,
    CentroidBoundaryDetector,
    Prediction,
    evaluate_detection,
    fit_detector,
    load_model,
    save_model,
)
from .discovery import (
    AlignmentMap,
    align_assignments,
    cluster_embeddings,
    estimate_k,
    export_assignment,
    refine_clusters,
)
from .embeddings import EmbeddingMatrix, Utterance, load_embeddings, save_embeddings
from .labeling import (
    ActionObjectPair,
    ClusterLabel,
    Lexicon,
    default_lexicon,
    extract_action_object,
    keyword_label,
    label_cluster,
    normalize_verb,
)
from .metrics import ari, clustering_metrics, hungarian_accuracy, nmi
from .pipeline import PipelineConfig, export_report, ingest_batch, query_results, run_pipeline
from .store import BatchJob, ResultRecord, Store
from .text import TfidfEncoder, Vocabulary, embed_tfidf, fit_tfidf, l2_normalize, tokenize

__version__ = "0.1.0"

__all__ = [
    "AUTO",
    "ActionObjectPair",
    "AgglomerativeClusterer",
    "AlignmentMap",
    "BatchJob",
    "CentroidBoundaryDetector",
    "ClusterAssignment",
    "ClusterLabel",
    "ClusteringConfig",
    "DiagonalGaussianMixture",
    "EmbeddingMatrix",
    "KMeansClusterer",
    "Lexicon",
    "PipelineConfig",
    "Prediction",
    "ResultRecord",
    "Store",
    "SynonymLexicon",
    "TfidfEncoder",
    "UNKNOWN",
    "Utterance",
    "Vocabulary",
    "agglomerative",
    "align_assignments",
    "ari",
    "canonicalize_label",
    "cluster_embeddings",
    "clustering_metrics",
    "default_lexicon",
    "embed_tfidf",
    "estimate_k",
    "evaluate_detection",
    "export_assignment",
    "export_report",
    "extract_action_object",
    "fit_detector",
    "fit_tfidf",
    "gmm_em",
    "hungarian_accuracy",
    "ingest_batch",
    "keyword_label",
    "kmeans",
    "l2_normalize",
    "label_cluster",
    "load_embeddings",
    "load_model",
    "merge_labels",
    "nmi",
    "normalize_verb",
    "query_results",
    "refine_clusters",
    "run_pipeline",
    "save_embeddings",
    "save_model",
    "singularize",
    "tokenize",
]
