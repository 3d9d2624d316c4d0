"""
CGA Planner - Objective Partitioning

Directional k-means over MGA weight vectors: vectors are scaled to unit
length, seeded with k-means++ and clustered with Lloyd iterations, so
each CGA instance can work one region of the planning space.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np
from sklearn.cluster import KMeans, kmeans_plusplus
from sklearn.preprocessing import normalize

from core.config import settings
from core.documents import write_document
from modules.mga_weights.schemas import MgaWeightVector
from modules.partition.schemas import WeightCluster, WeightPartition, WorkList

logger = logging.getLogger(__name__)

PARTITION_KIND = "partition"


def _relabel_by_first_appearance(labels: np.ndarray) -> np.ndarray:
    order = {}
    for label in labels:
        order.setdefault(int(label), len(order))
    return np.array([order[int(label)] for label in labels], dtype=int)


def partition_weights(
    vectors: Sequence[MgaWeightVector],
    k: int,
    seed: int,
    max_iters: int = 100,
) -> WeightPartition:
    """
    Cluster weight vectors by direction.

    Args:
        vectors: nonzero weight vectors of equal length
        k: number of clusters, 1 <= k <= len(vectors)
        seed: seed for the k-means++ initialization
        max_iters: Lloyd iteration cap

    Returns:
        WeightPartition with unit-norm centroids; clusters are numbered by
        the first input vector assigned to them
    """
    if not 1 <= k <= len(vectors):
        raise ValueError(f"k must lie in [1, {len(vectors)}], got {k}")
    data = np.array([v.weights for v in vectors], dtype=float)
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"zero weight vector at index {int(np.flatnonzero(norms == 0.0)[0])}")

    unit = normalize(data)
    centers, _ = kmeans_plusplus(unit, n_clusters=k, random_state=seed)
    model = KMeans(n_clusters=k, init=centers, n_init=1, max_iter=max_iters, tol=0.0, algorithm="lloyd")
    model.fit(unit)

    raw = model.labels_
    labels = _relabel_by_first_appearance(raw)
    mapping = {int(r): int(l) for r, l in zip(raw, labels)}

    clusters = []
    for cluster_id in range(len(mapping)):
        raw_id = next(r for r, l in mapping.items() if l == cluster_id)
        center = model.cluster_centers_[raw_id]
        length = np.linalg.norm(center)
        members = np.flatnonzero(labels == cluster_id)
        if length == 0.0:
            center = unit[members].sum(axis=0)
            length = np.linalg.norm(center) or 1.0
        clusters.append(
            WeightCluster(
                centroid=(center / length).tolist(),
                member_indices=members.tolist(),
                members=[vectors[i] for i in members],
            )
        )

    logger.info(f"Partitioned {len(vectors)} weight vectors into {len(clusters)} clusters in {model.n_iter_} iterations")
    return WeightPartition(clusters=clusters, k=k, seed=seed, labels=labels.tolist(), iterations=int(model.n_iter_))


def schedule(partition: WeightPartition, per_instance: int) -> List[WorkList]:
    """Up to ``per_instance`` vectors from each non-empty cluster, in cluster order."""
    if per_instance < 1:
        raise ValueError(f"per_instance must be >= 1, got {per_instance}")
    return [
        WorkList(
            cluster=i,
            indices=cluster.member_indices[:per_instance],
            vectors=cluster.members[:per_instance],
        )
        for i, cluster in enumerate(partition.clusters)
        if cluster.member_indices
    ]


def write_partition(partition: WeightPartition, path: Path) -> Path:
    """Audit document with labels, centroids and member indices."""
    payload = partition.model_dump(mode="json", exclude={"clusters": {"__all__": {"members"}}})
    return write_document(path, PARTITION_KIND, settings.REPORT_SCHEMA_VERSION, payload)
