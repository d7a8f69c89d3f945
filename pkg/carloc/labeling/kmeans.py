"""KMeans pseudo-labels over image embeddings.

Seeding uses scikit-learn's k-means++; the Lloyd loop is run here so that
empty clusters stay empty and every inertia value along the way is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from carloc.core.errors import InvalidCount, KTooLarge
from carloc.ingest.manifest import DatasetManifest
from carloc.labeling.assignment import LabelAssignment
from carloc.labeling.features import FeatureTable
from carloc.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ClusterResult:
    k: int
    centroids: np.ndarray
    assignment: Mapping[str, int]
    inertia: float
    seed: int
    inertia_history: Tuple[float, ...] = field(default_factory=tuple)
    n_iter: int = 0


@dataclass(frozen=True)
class LloydResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: Tuple[float, ...]
    n_iter: int


def _assign(vectors: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, float]:
    distances = cdist(vectors, centroids, metric="sqeuclidean")
    # argmin returns the first minimum: ties go to the lowest cluster index
    labels = distances.argmin(axis=1)
    inertia = float(distances[np.arange(len(vectors)), labels].sum())
    return labels, inertia


def _update(vectors: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    updated = centroids.copy()
    for j in range(len(centroids)):
        members = vectors[labels == j]
        if len(members):
            updated[j] = members.mean(axis=0)
    return updated


def lloyd(vectors: np.ndarray, init_centroids: np.ndarray, max_iter: int = 300, tol: float = 1e-4) -> LloydResult:
    """Lloyd iterations from fixed seeds.

    Stops at an assignment fixpoint, when the largest centroid move is below
    ``tol``, or after ``max_iter`` updates. Empty clusters keep their centroid.
    """

    vectors = np.asarray(vectors, dtype=np.float64)
    centroids = np.array(init_centroids, dtype=np.float64)
    labels, inertia = _assign(vectors, centroids)
    history: List[float] = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        moved = _update(vectors, labels, centroids)
        shift = float(np.sqrt(((moved - centroids) ** 2).sum(axis=1)).max())
        centroids = moved
        new_labels, inertia = _assign(vectors, centroids)
        history.append(inertia)
        converged = np.array_equal(new_labels, labels) or shift < tol
        labels = new_labels
        if converged:
            break
    return LloydResult(labels=labels, centroids=centroids, inertia_history=tuple(history), n_iter=n_iter)


def kmeans_cluster(
    features: FeatureTable, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-4
) -> ClusterResult:
    n = len(features.ids)
    if k < 1:
        raise InvalidCount(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of vectors ({n})")

    vectors = features.vectors.astype(np.float64)
    init, _ = kmeans_plusplus(vectors, n_clusters=k, random_state=seed)
    run = lloyd(vectors, init, max_iter=max_iter, tol=tol)
    assignment = {image_id: int(label) for image_id, label in zip(features.ids, run.labels)}
    sizes = np.bincount(run.labels, minlength=k)
    logger.info(
        "KMeans k=%d: %d iterations, inertia %.4f, %d empty clusters",
        k,
        run.n_iter,
        run.inertia_history[-1],
        int((sizes == 0).sum()),
    )
    return ClusterResult(
        k=k,
        centroids=run.centroids,
        assignment=assignment,
        inertia=run.inertia_history[-1],
        seed=seed,
        inertia_history=run.inertia_history,
        n_iter=run.n_iter,
    )


def cluster_to_labels(result: ClusterResult, name: str) -> LabelAssignment:
    vocab = tuple(f"c{j}" for j in range(result.k))
    return LabelAssignment(space_name=name, kind="cluster", vocab=vocab, mapping=dict(result.assignment))


@dataclass(frozen=True)
class ClusterStats:
    mean: float
    max: int
    min: int
    std: float


def _stats(sizes: np.ndarray) -> ClusterStats:
    return ClusterStats(
        mean=float(sizes.mean()),
        max=int(sizes.max()),
        min=int(sizes.min()),
        std=float(sizes.std()),
    )


def cluster_stats(result: ClusterResult, manifest: DatasetManifest) -> Dict[str, ClusterStats]:
    """Cluster-size statistics for all data and per split (population std)."""

    out: Dict[str, ClusterStats] = {}
    for scope in ("all", "train", "test"):
        ids = manifest.ids(None if scope == "all" else scope)
        labels = np.array([result.assignment[i] for i in ids], dtype=np.int64)
        out[scope] = _stats(np.bincount(labels, minlength=result.k))
    return out
