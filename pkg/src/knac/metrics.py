"""Numerical metrics behind the recommendation confidences and evaluation:
silhouette coefficient, inter-cluster linkage distances, and the
homogeneity / completeness / v-measure agreement scores.

All distances are Euclidean. The silhouette is subsampled (seeded, without
replacement) above ``subsample_cap`` points to bound the quadratic cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

LINKAGE_KINDS = ("single", "complete", "average", "centroid")

_silhouette_calls = 0


def silhouette_call_count() -> int:
    """Number of silhouette evaluations since import (instrumentation)."""
    return _silhouette_calls


@dataclass(frozen=True)
class AgreementScores:
    homogeneity: float
    completeness: float
    v_measure: float

    def to_json_dict(self) -> dict:
        return {
            "homogeneity": self.homogeneity,
            "completeness": self.completeness,
            "v_measure": self.v_measure,
        }


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def silhouette(features: np.ndarray, labels: np.ndarray,
               subsample_cap: int = 2000, seed: int = 0) -> float:
    """Mean silhouette s = (b - a) / max(a, b) over (subsampled) points.

    Points in singleton clusters score 0; so do duplicate points where both
    a and b vanish. Deterministic for a fixed seed.
    """
    global _silhouette_calls
    _silhouette_calls += 1
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if subsample_cap < 2:
        raise ValidationError(f"subsample_cap must be >= 2, got {subsample_cap}")
    n = features.shape[0]
    if n > subsample_cap:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(n, size=subsample_cap, replace=False))
        features, labels = features[idx], labels[idx]
        n = subsample_cap
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValidationError("silhouette needs at least 2 distinct labels")
    dist = _pairwise(features)
    masks = {int(lbl): labels == lbl for lbl in uniq}
    sizes = {lbl: int(m.sum()) for lbl, m in masks.items()}
    scores = np.zeros(n, dtype=np.float64)
    for p in range(n):
        own = int(labels[p])
        if sizes[own] == 1:
            continue  # singleton cluster scores 0
        a = dist[p, masks[own]].sum() / (sizes[own] - 1)
        b = min(dist[p, m].mean() for lbl, m in masks.items() if lbl != own)
        denom = max(a, b)
        if denom > 0.0:
            scores[p] = (b - a) / denom
    return float(scores.mean())


def linkage_distance(features: np.ndarray, labels: np.ndarray,
                     a: int, b: int, kind: str) -> float:
    """Distance between clusters a and b under the chosen linkage."""
    if kind not in LINKAGE_KINDS:
        raise ValidationError(f"linkage must be one of {LINKAGE_KINDS}, got {kind!r}")
    if a == b:
        raise ValidationError("linkage_distance needs two distinct labels")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pa, pb = features[labels == a], features[labels == b]
    if not len(pa) or not len(pb):
        raise ValidationError(f"empty cluster in linkage_distance({a}, {b})")
    if kind == "centroid":
        return float(np.linalg.norm(pa.mean(axis=0) - pb.mean(axis=0)))
    cross = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    if kind == "single":
        return float(cross.min())
    if kind == "complete":
        return float(cross.max())
    return float(cross.mean())


def dataset_diameter(features: np.ndarray, chunk: int = 1024) -> float:
    """Max pairwise Euclidean distance, computed in row chunks."""
    features = np.asarray(features, dtype=np.float64)
    best = 0.0
    for lo in range(0, features.shape[0], chunk):
        block = features[lo:lo + chunk]
        d = np.sqrt(((block[:, None, :] - features[None, :, :]) ** 2).sum(axis=2))
        best = max(best, float(d.max()))
    return best


def linkage_matrix_normalized(features: np.ndarray, expert_labels: np.ndarray,
                              kind: str) -> np.ndarray:
    """Pairwise expert-cluster linkage distances scaled by the dataset
    diameter into [0, 1]; symmetric with a zero diagonal."""
    expert_labels = np.asarray(expert_labels, dtype=np.int64)
    uniq = np.unique(expert_labels)
    if uniq.size < 2:
        raise ValidationError("need at least 2 expert labels for a linkage matrix")
    n_e = int(uniq.max()) + 1
    out = np.zeros((n_e, n_e), dtype=np.float64)
    diameter = dataset_diameter(features)
    if diameter == 0.0:
        return out  # all points identical: every distance is 0
    for i_pos, a in enumerate(uniq):
        for b in uniq[i_pos + 1:]:
            d = linkage_distance(features, expert_labels, int(a), int(b), kind)
            value = min(d / diameter, 1.0)
            out[a, b] = out[b, a] = value
    return out


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def agreement(expert_labels, cluster_labels) -> AgreementScores:
    """Homogeneity, completeness, and v-measure between two labelings.

    The first argument plays the role of the reference classes. Conventions:
    h = 1 when the reference has zero entropy, c = 1 when the candidate has
    zero entropy, v = 0 when h = c = 0.
    """
    ref = np.asarray(expert_labels, dtype=np.int64)
    cand = np.asarray(cluster_labels, dtype=np.int64)
    if ref.shape != cand.shape or ref.ndim != 1:
        raise ValidationError(
            f"label vectors must be equal-length 1-D, got {ref.shape} and {cand.shape}"
        )
    n = ref.shape[0]
    ref_ids, ref_ix = np.unique(ref, return_inverse=True)
    cand_ids, cand_ix = np.unique(cand, return_inverse=True)
    table = np.zeros((ref_ids.size, cand_ids.size), dtype=np.float64)
    np.add.at(table, (ref_ix, cand_ix), 1.0)
    h_ref = _entropy_bits(table.sum(axis=1))
    h_cand = _entropy_bits(table.sum(axis=0))
    h_ref_given = 0.0
    h_cand_given = 0.0
    for j in range(cand_ids.size):
        col = table[:, j]
        h_ref_given += col.sum() / n * _entropy_bits(col)
    for i in range(ref_ids.size):
        row = table[i]
        h_cand_given += row.sum() / n * _entropy_bits(row)
    homogeneity = float(1.0 - h_ref_given / h_ref) if h_ref > 0.0 else 1.0
    completeness = float(1.0 - h_cand_given / h_cand) if h_cand > 0.0 else 1.0
    if homogeneity + completeness == 0.0:
        v = 0.0
    else:
        v = 2.0 * homogeneity * completeness / (homogeneity + completeness)
    return AgreementScores(homogeneity, completeness, v)
