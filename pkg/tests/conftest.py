import numpy as np
import pytest

from knac.dataset import LabeledDataset


def make_ds(features, expert, clusters=None, feature_names=None, row_ids=None):
    """Hand-rolled dataset with numeric name maps (canonical E_i/C_j display)."""
    features = np.asarray(features, dtype=np.float64)
    expert = np.asarray(expert, dtype=np.int64)
    if clusters is None:
        clusters = np.full(len(expert), -1, dtype=np.int64)
    clusters = np.asarray(clusters, dtype=np.int64)
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(features.shape[1]))
    if row_ids is None:
        row_ids = tuple(str(i) for i in range(features.shape[0]))
    expert_map = {str(v): int(v) for v in np.unique(expert)}
    cluster_map = {str(v): int(v) for v in np.unique(clusters) if v != -1}
    return LabeledDataset(features, tuple(feature_names), expert, clusters,
                          tuple(row_ids), expert_map, cluster_map)


def ds_from_contingency(counts, spread=100.0, jitter=0.01, seed=0):
    """Dataset whose contingency matrix equals ``counts``; feature geometry is
    an arbitrary well-separated layout (one site per cell)."""
    counts = np.asarray(counts, dtype=np.int64)
    rng = np.random.default_rng(seed)
    feats, expert, clusters = [], [], []
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            for _ in range(counts[i, j]):
                feats.append([i * spread + rng.normal(0, jitter),
                              j * spread + rng.normal(0, jitter)])
                expert.append(i)
                clusters.append(j)
    return make_ds(np.array(feats), np.array(expert), np.array(clusters))


@pytest.fixture
def tiny_ds():
    return make_ds(
        [[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
    )
