import numpy as np
import pytest
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from carloc.core.errors import InvalidCount, KTooLarge
from carloc.labeling.features import FeatureTable
from carloc.labeling.kmeans import ClusterResult, cluster_stats, cluster_to_labels, kmeans_cluster, lloyd
from conftest import memory_manifest


def _table(vectors: np.ndarray) -> FeatureTable:
    return FeatureTable(tuple(f"v{i}" for i in range(len(vectors))), vectors.astype(np.float32))


def naive_lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int = 300) -> np.ndarray:
    centroids = centroids.copy()
    labels = None
    for _ in range(max_iter + 1):
        new = np.array([int(np.argmin([((p - c) ** 2).sum() for c in centroids])) for p in points])
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(len(centroids)):
            members = points[labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
    return labels


def test_single_cluster_is_the_mean():
    points = np.random.default_rng(0).normal(size=(30, 3))
    result = kmeans_cluster(_table(points), 1)
    vectors = points.astype(np.float32).astype(np.float64)
    np.testing.assert_allclose(result.centroids[0], vectors.mean(axis=0), rtol=1e-9)
    assert result.inertia == pytest.approx(((vectors - vectors.mean(axis=0)) ** 2).sum(), rel=1e-9)


def test_one_cluster_per_distinct_vector():
    points = np.random.default_rng(1).normal(size=(12, 4))
    result = kmeans_cluster(_table(points), 12)
    assert result.inertia == 0.0
    assert sorted(result.assignment.values()) == list(range(12))


def test_lloyd_matches_naive_oracle():
    rng = np.random.default_rng(42)
    for trial in range(20):
        n, d, k = int(rng.integers(10, 101)), int(rng.integers(1, 6)), int(rng.integers(1, 7))
        points = rng.normal(size=(n, d))
        init, _ = kmeans_plusplus(points, n_clusters=k, random_state=trial)
        run = lloyd(points, init, tol=0.0)
        np.testing.assert_array_equal(run.labels, naive_lloyd(points, init))
        history = np.array(run.inertia_history)
        assert np.all(np.diff(history) <= 1e-9 * np.maximum(1.0, history[:-1]))


def test_kmeans_cluster_matches_oracle_from_same_seeds():
    points = np.random.default_rng(5).normal(size=(50, 3)).astype(np.float32).astype(np.float64)
    init, _ = kmeans_plusplus(points, n_clusters=4, random_state=3)
    result = kmeans_cluster(_table(points), 4, seed=3, tol=0.0)
    labels = np.array([result.assignment[f"v{i}"] for i in range(50)])
    np.testing.assert_array_equal(labels, naive_lloyd(points, init))


def test_every_vector_sits_with_its_nearest_centroid():
    points = np.random.default_rng(8).normal(size=(80, 2))
    result = kmeans_cluster(_table(points), 5, seed=1)
    distances = cdist(points.astype(np.float32).astype(np.float64), result.centroids, metric="sqeuclidean")
    labels = np.array([result.assignment[f"v{i}"] for i in range(80)])
    np.testing.assert_array_equal(labels, distances.argmin(axis=1))


def test_invalid_k():
    table = _table(np.zeros((3, 2)))
    with pytest.raises(KTooLarge):
        kmeans_cluster(table, 4)
    with pytest.raises(InvalidCount):
        kmeans_cluster(table, 0)


def _result(assignment, k):
    return ClusterResult(k=k, centroids=np.zeros((k, 1)), assignment=assignment, inertia=0.0, seed=0)


def test_cluster_labels_keep_empty_clusters():
    labels = cluster_to_labels(_result({"a": 0, "b": 2}, 16), "kmeans16")
    assert labels.num_classes == 16
    assert "c1" in labels.vocab
    assert dict(labels.mapping) == {"a": 0, "b": 2}
    assert labels.kind == "cluster"


def test_cluster_stats():
    manifest = memory_manifest((f"i{n}", "m", "m-a", "2001", "train") for n in range(40))
    result = _result({f"i{n}": 0 if n < 10 else 1 for n in range(40)}, 2)
    stats = cluster_stats(result, manifest)["all"]
    assert (stats.mean, stats.max, stats.min, stats.std) == (20.0, 30, 10, 10.0)

    lumped = cluster_stats(_result({f"i{n}": 3 for n in range(40)}, 4), manifest)
    assert lumped["all"].min == 0
    assert lumped["test"].max == 0
