"""Baseline k-means so demos run end-to-end without an external clusterer.

Any other clustering algorithm can be plugged in by supplying a cluster-label
file instead; nothing downstream depends on how the labels were produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iter: int = 100
    seed: int = 0
    tol: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol < 0:
            raise ValidationError(f"tol must be >= 0, got {self.tol}")


def _plus_plus_init(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = features.shape[0]
    centers = np.empty((k, features.shape[1]), dtype=np.float64)
    centers[0] = features[rng.integers(n)]
    closest = ((features - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total == 0.0:
            centers[c] = features[rng.integers(n)]
        else:
            r = rng.random() * total
            centers[c] = features[np.searchsorted(np.cumsum(closest), r)]
        closest = np.minimum(closest, ((features - centers[c]) ** 2).sum(axis=1))
    return centers


def _assign(features: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, float]:
    sq = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = sq.argmin(axis=1)
    inertia = float(sq[np.arange(len(labels)), labels].sum())
    return labels, inertia


def kmeans(features: np.ndarray, config: KMeansConfig) -> np.ndarray:
    """Lloyd's iteration with seeded k-means++ initialization.

    Deterministic for a fixed seed; returns contiguous 0-based labels (clusters
    left empty by Lloyd's iteration are compacted away).
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if config.k > n:
        raise ValidationError(f"k={config.k} exceeds the number of points {n}")
    rng = np.random.default_rng(config.seed)
    centers = _plus_plus_init(features, config.k, rng)
    labels, inertia = _assign(features, centers)
    for _ in range(config.max_iter):
        new_centers = centers.copy()
        for c in range(config.k):
            mask = labels == c
            if mask.any():
                new_centers[c] = features[mask].mean(axis=0)
        labels, new_inertia = _assign(features, new_centers)
        assert new_inertia <= inertia + 1e-9, "k-means inertia increased"
        shift = float(np.linalg.norm(new_centers - centers, axis=1).max())
        centers, inertia = new_centers, new_inertia
        if shift < config.tol:
            break
    uniq, compact = np.unique(labels, return_inverse=True)
    return compact.astype(np.int64) if uniq.size < config.k else labels.astype(np.int64)
