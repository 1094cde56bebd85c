import numpy as np
import pytest

from knac.clusterer import KMeansConfig, kmeans
from knac.dataset import BlobSpec, generate_blobs
from knac.errors import ValidationError
from knac.metrics import agreement


class TestKMeans:
    def test_recovers_separated_blobs(self):
        ds = generate_blobs(BlobSpec(n_blobs=2, points_per_blob=50, dim=2,
                                     centers=((0.0, 0.0), (50.0, 50.0)),
                                     std=1.0, seed=1))
        labels = kmeans(ds.features, KMeansConfig(k=2, seed=1))
        assert agreement(ds.expert_labels, labels).v_measure == 1.0

    def test_k_equals_one(self):
        feats = np.random.default_rng(0).normal(size=(10, 2))
        labels = kmeans(feats, KMeansConfig(k=1, seed=0))
        assert set(labels.tolist()) == {0}

    def test_k_equals_n_zero_inertia(self):
        feats = np.arange(12, dtype=float).reshape(6, 2)
        labels = kmeans(feats, KMeansConfig(k=6, seed=0))
        assert sorted(labels.tolist()) == list(range(6))
        centers = np.array([feats[labels == c].mean(axis=0) for c in range(6)])
        inertia = sum(((feats[i] - centers[labels[i]]) ** 2).sum() for i in range(6))
        assert inertia == 0.0

    def test_deterministic_given_seed(self):
        feats = np.random.default_rng(2).normal(size=(80, 3))
        a = kmeans(feats, KMeansConfig(k=4, seed=9))
        b = kmeans(feats, KMeansConfig(k=4, seed=9))
        assert np.array_equal(a, b)

    def test_k_above_n_rejected(self):
        with pytest.raises(ValidationError):
            kmeans(np.zeros((3, 1)), KMeansConfig(k=4))

    def test_labels_contiguous(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            feats = rng.normal(size=(30, 2))
            labels = kmeans(feats, KMeansConfig(k=5, seed=seed))
            uniq = np.unique(labels)
            assert uniq[0] == 0 and uniq[-1] == len(uniq) - 1
