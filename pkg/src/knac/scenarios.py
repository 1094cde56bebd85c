"""Seeded synthetic scenarios for demos, benchmarks, and end-to-end tests.

Each scenario returns a dataset whose expert labeling was deliberately
corrupted relative to the generating blobs, the automated clustering that
should expose the corruption, and the ground-truth blob ids for scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clusterer import KMeansConfig, kmeans
from .dataset import BlobSpec, LabeledDataset, corrupt_labels, generate_blobs
from .errors import ValidationError

SCENARIOS = ("split", "merge", "refine")


@dataclass(frozen=True)
class Scenario:
    name: str
    ds: LabeledDataset           # corrupted expert labels + auto clusters
    truth: np.ndarray            # generating blob ids


def _cluster(ds: LabeledDataset, k: int, seed: int) -> LabeledDataset:
    labels = kmeans(ds.features, KMeansConfig(k=k, seed=seed))
    return ds.with_cluster_labels(labels)


def split_scenario(seed: int = 7) -> Scenario:
    """Three expert labels where one covers two well-separated blobs; the
    k=4 clustering sees all four blobs, so exactly one split is warranted."""
    spec = BlobSpec(
        n_blobs=4, points_per_blob=80, dim=2,
        centers=((-12.0, 0.0), (0.0, -10.0), (0.0, 10.0), (12.0, 0.0)),
        std=1.0, seed=seed,
    )
    base = generate_blobs(spec)
    truth = base.expert_labels.copy()
    corrupted = corrupt_labels(base, merges=[{1, 2}])
    return Scenario("split", _cluster(corrupted, k=4, seed=seed), truth)


def merge_scenario(seed: int = 7) -> Scenario:
    """One blob arbitrarily halved into two expert labels; the k=3 clustering
    sees three blobs, so exactly one merge is warranted."""
    spec = BlobSpec(
        n_blobs=3, points_per_blob=80, dim=2,
        centers=((-12.0, 0.0), (12.0, 8.0), (12.0, -8.0)),
        std=1.0, seed=seed,
    )
    base = generate_blobs(spec)
    truth = base.expert_labels.copy()
    corrupted = corrupt_labels(base, splits=[(0, 2, seed)])
    return Scenario("merge", _cluster(corrupted, k=3, seed=seed), truth)


def refine_scenario(seed: int = 7) -> Scenario:
    """Desk-scale refinement benchmark: 8 blobs corrupted by one merge (of
    three labels, so the corruption is heavy enough to matter) and one 3-way
    split; the k=8 clustering recovers the blobs."""
    spec = BlobSpec(
        n_blobs=8, points_per_blob=60, dim=2,
        centers=((-24.0, 0.0), (0.0, 0.0), (24.0, 0.0), (0.0, 24.0),
                 (-24.0, 24.0), (24.0, 24.0), (-24.0, -24.0), (24.0, -24.0)),
        std=1.5, seed=seed,
    )
    base = generate_blobs(spec)
    truth = base.expert_labels.copy()
    corrupted = corrupt_labels(base, merges=[{0, 1, 2}], splits=[(3, 3, seed)])
    return Scenario("refine", _cluster(corrupted, k=8, seed=seed), truth)


def make_scenario(name: str, seed: int = 7) -> Scenario:
    if name == "split":
        return split_scenario(seed)
    if name == "merge":
        return merge_scenario(seed)
    if name == "refine":
        return refine_scenario(seed)
    raise ValidationError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
