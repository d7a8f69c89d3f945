"""Label spaces: human, merged, random and KMeans pseudo-labels."""

from carloc.labeling.assignment import (
    LabelAssignment,
    human_labels,
    load_labels,
    merge_labels,
    random_labels,
    save_labels,
)
from carloc.labeling.features import ExtractorConfig, FeatureTable, extract_features, load_features, save_features
from carloc.labeling.kmeans import (
    ClusterResult,
    ClusterStats,
    cluster_stats,
    cluster_to_labels,
    kmeans_cluster,
    lloyd,
)

__all__ = [
    "ClusterResult",
    "ClusterStats",
    "ExtractorConfig",
    "FeatureTable",
    "LabelAssignment",
    "cluster_stats",
    "cluster_to_labels",
    "extract_features",
    "human_labels",
    "kmeans_cluster",
    "lloyd",
    "load_features",
    "load_labels",
    "merge_labels",
    "random_labels",
    "save_features",
    "save_labels",
]
