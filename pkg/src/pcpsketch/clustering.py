"""k-means costs written as projection costs.

Points are the *columns* of ``A``.  A clustering of the ``d`` points into
``k`` groups corresponds to the rank-``k`` projector ``X X^T`` built from the
scaled membership matrix, and its k-means cost is ``||A - A X X^T||_F^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominatorError, ParameterError
from .linalg import OrthonormalBasis, as_matrix


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster labels ``0..k-1`` for ``d`` points; every cluster must be non-empty."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ParameterError("labels must be a non-empty vector")
        if np.any(labels < 0) or np.any(labels >= self.k):
            raise ParameterError(f"labels must lie in [0, {self.k})")
        sizes = np.bincount(labels, minlength=self.k)
        if np.any(sizes == 0):
            raise ParameterError(f"empty cluster(s): {np.flatnonzero(sizes == 0).tolist()}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    @classmethod
    def random(cls, d: int, k: int, seed) -> "ClusterAssignment":
        """Uniformly random labels, re-drawn until every cluster is used."""
        if not 1 <= k <= d:
            raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")
        rng = np.random.default_rng(seed)
        while True:
            labels = rng.integers(0, k, size=d)
            if np.all(np.bincount(labels, minlength=k) > 0):
                return cls(labels, k)


def kmeans_membership(assign: ClusterAssignment) -> OrthonormalBasis:
    """``d x k`` matrix with ``1/sqrt(s_j)`` in row ``i`` when point ``i`` is in cluster ``j``."""
    d = assign.labels.shape[0]
    x = np.zeros((d, assign.k))
    x[np.arange(d), assign.labels] = 1.0 / np.sqrt(assign.sizes[assign.labels])
    return OrthonormalBasis(x)


def clustering_cost(a, assign: ClusterAssignment) -> float:
    """k-means cost of the column clustering as ``||A - A X X^T||_F^2``."""
    a = as_matrix(a)
    x = kmeans_membership(assign).matrix
    resid = a - (a @ x) @ x.T
    return float(np.sum(resid * resid))


def centroid_cost(a, assign: ClusterAssignment) -> float:
    """Sum of squared distances of each column to its cluster mean."""
    a = as_matrix(a)
    total = 0.0
    for j in range(assign.k):
        cols = a[:, assign.labels == j]
        total += float(np.sum((cols - cols.mean(axis=1, keepdims=True)) ** 2))
    return total


def lloyd_step(a, assign: ClusterAssignment) -> ClusterAssignment:
    """Reassign every point to its nearest centroid.

    If that would leave a cluster empty the input assignment is returned.
    """
    a = as_matrix(a)
    centroids = np.stack([a[:, assign.labels == j].mean(axis=1) for j in range(assign.k)], axis=1)
    dist = (
        np.sum(a * a, axis=0)[:, None]
        - 2.0 * a.T @ centroids
        + np.sum(centroids * centroids, axis=0)[None, :]
    )
    labels = np.argmin(dist, axis=1)
    if np.any(np.bincount(labels, minlength=assign.k) == 0):
        return assign
    return ClusterAssignment(labels, assign.k)


def lloyd_refine(a, assign: ClusterAssignment, iterations: int = 5) -> ClusterAssignment:
    for _ in range(iterations):
        nxt = lloyd_step(a, assign)
        if np.array_equal(nxt.labels, assign.labels):
            break
        assign = nxt
    return assign


def sketched_clustering_gap(a, wa, assign: ClusterAssignment) -> float:
    """``|cost(WA) - cost(A)| / cost(A)`` for one clustering of the columns."""
    a = as_matrix(a)
    base = clustering_cost(a, assign)
    # projector form leaves rounding residue where the true cost is zero
    if base <= 1e-28 * float(np.sum(a * a)):
        raise DegenerateDenominatorError("clustering has zero cost on the original matrix")
    return abs(clustering_cost(wa, assign) - base) / base
