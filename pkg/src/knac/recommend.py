"""Split and merge recommendations with quantified confidences.

A split proposes dividing one expert cluster along two or more auto clusters
it contains; its confidence blends the split-matrix evidence with the scaled
silhouette change the split would produce. A merge proposes unifying a pair
of expert clusters; its confidence blends their cosine similarity over auto
clusters with their normalized linkage proximity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .contingency import ContingencyMatrix, MergeMatrix, SplitMatrix, contingency, merge_matrix, split_matrix
from .dataset import LabeledDataset
from .errors import ValidationError


@dataclass(frozen=True)
class RecommendParams:
    epsilon_split: float = 0.8
    lambda_split: float = 0.1
    epsilon_merge: float = 0.8
    lambda_merge: float = 0.2
    linkage: str = "average"
    silhouette_cap: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_split < 1.0:
            raise ValidationError(
                f"lambda_split must be in [0, 1), got {self.lambda_split}"
            )
        if not 0.0 <= self.lambda_merge <= 1.0:
            raise ValidationError(
                f"lambda_merge must be in [0, 1], got {self.lambda_merge}"
            )
        if self.linkage not in metrics.LINKAGE_KINDS:
            raise ValidationError(
                f"linkage must be one of {metrics.LINKAGE_KINDS}, got {self.linkage!r}"
            )
        if self.silhouette_cap < 2:
            raise ValidationError(
                f"silhouette_cap must be >= 2, got {self.silhouette_cap}"
            )

    def to_json_dict(self) -> dict:
        return {
            "epsilon_split": self.epsilon_split,
            "lambda_split": self.lambda_split,
            "epsilon_merge": self.epsilon_merge,
            "lambda_merge": self.lambda_merge,
            "linkage": self.linkage,
            "silhouette_cap": self.silhouette_cap,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SplitRecommendation:
    expert_label: int
    candidates: tuple[int, ...]
    per_candidate_confidence: tuple[float, ...]
    confidence: float
    s_dec: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "type": "split",
            "expert_label": self.expert_label,
            "candidates": list(self.candidates),
            "per_candidate_confidence": list(self.per_candidate_confidence),
            "confidence": self.confidence,
            "s_dec": self.s_dec,
        }


@dataclass(frozen=True)
class MergeRecommendation:
    pair: tuple[int, int]
    target_cluster: int
    confidence: float
    sim_term: float
    linkage_term: float

    def to_json_dict(self) -> dict:
        return {
            "type": "merge",
            "pair": list(self.pair),
            "target_cluster": self.target_cluster,
            "confidence": self.confidence,
            "sim_term": self.sim_term,
            "linkage_term": self.linkage_term,
        }


def split_candidates(h: SplitMatrix, i: int, params: RecommendParams) -> set[int]:
    """Auto clusters whose split evidence clears the widened threshold:
    {j : H[i][j] / (1 - lambda_split) > epsilon_split}."""
    row = h.values[i]
    scale = 1.0 - params.lambda_split
    return {j for j in range(row.shape[0]) if row[j] / scale > params.epsilon_split}


def _relabel_for_split(ds: LabeledDataset, i: int, candidates: tuple[int, ...]) -> np.ndarray:
    """Expert labels with cluster i's points re-assigned by auto-cluster
    membership; points outside the candidate set share one residual label."""
    labels = ds.expert_labels.copy()
    base = ds.n_expert
    sub = {c: base + rank for rank, c in enumerate(candidates)}
    residual = base + len(candidates)
    in_i = ds.expert_labels == i
    for p in np.flatnonzero(in_i):
        labels[p] = sub.get(int(ds.cluster_labels[p]), residual)
    return labels


def split_confidences(ds: LabeledDataset, i: int, candidates, h: SplitMatrix,
                      params: RecommendParams) -> SplitRecommendation:
    """Score a candidate split of expert cluster i.

    Per-candidate confidence is (1-ls) * H[i][j] + ls * s_dec, where s_dec is
    the silhouette change from applying the split, affinely scaled from
    [-2, 2] into [0, 1] (0.5 = no change). The aggregate confidence is the
    mean. With lambda_split = 0 no silhouette is evaluated at all.
    """
    candidates = tuple(sorted(int(c) for c in candidates))
    if len(candidates) < 2:
        raise ValidationError("a split needs at least 2 candidate clusters")
    ls = params.lambda_split
    row = h.values[i]
    s_dec = None
    if ls > 0.0:
        ds.require_clusters()
        s_before = metrics.silhouette(ds.features, ds.expert_labels,
                                      params.silhouette_cap, params.seed)
        s_after = metrics.silhouette(ds.features, _relabel_for_split(ds, i, candidates),
                                     params.silhouette_cap, params.seed)
        s_dec = (s_after - s_before + 2.0) / 4.0
    per = tuple(
        (1.0 - ls) * float(row[j]) + (ls * s_dec if s_dec is not None else 0.0)
        for j in candidates
    )
    return SplitRecommendation(int(i), candidates, per, float(np.mean(per)), s_dec)


def merge_candidates(ds: LabeledDataset, mm: MergeMatrix,
                     params: RecommendParams,
                     m: ContingencyMatrix | None = None) -> list[MergeRecommendation]:
    """All expert-cluster pairs whose blended similarity exceeds the merge
    threshold, sorted by confidence (ties: lower pair ids first).

    The target cluster is the auto cluster carrying the most of the pair's
    joint mass. The linkage term is only computed when lambda_merge > 0.
    """
    n_e = mm.values.shape[0]
    if n_e < 2:
        raise ValidationError("merge recommendations need at least 2 expert clusters")
    if m is None:
        m = contingency(ds)
    lm = params.lambda_merge
    linkage_norm = None
    if lm > 0.0:
        linkage_norm = metrics.linkage_matrix_normalized(
            ds.features, ds.expert_labels, params.linkage)
    out = []
    for j in range(n_e):
        for k in range(j + 1, n_e):
            sim_term = float(mm.sim[j, k])
            linkage_term = float(1.0 - linkage_norm[j, k]) if linkage_norm is not None else 0.0
            confidence = (1.0 - lm) * sim_term + lm * linkage_term
            if confidence > params.epsilon_merge:
                target = int(np.argmax(m.counts[j] + m.counts[k]))
                out.append(MergeRecommendation((j, k), target, confidence,
                                               sim_term, linkage_term))
    out.sort(key=lambda r: (-r.confidence, r.pair[0], r.pair[1]))
    return out


def split_recommendations(ds: LabeledDataset, h: SplitMatrix,
                          params: RecommendParams) -> list[SplitRecommendation]:
    """Splits for every expert cluster with >= 2 candidates, sorted by
    confidence (ties: lower expert id first)."""
    out = []
    for i in range(h.values.shape[0]):
        candidates = split_candidates(h, i, params)
        if len(candidates) >= 2:
            out.append(split_confidences(ds, i, candidates, h, params))
    out.sort(key=lambda r: (-r.confidence, r.expert_label))
    return out


def recommend_all(ds: LabeledDataset, params: RecommendParams,
                  axis_mode: str = "column"):
    """Full pipeline: contingency, derived matrices, both recommendation lists."""
    ds.require_clusters()
    m = contingency(ds)
    h_split = split_matrix(m, axis_mode)
    h_merge = merge_matrix(m)
    splits = split_recommendations(ds, h_split, params)
    merges = merge_candidates(ds, h_merge, params, m) if m.n_expert >= 2 else []
    return m, h_split, h_merge, splits, merges


def render(rec, ds: LabeledDataset | None = None) -> str:
    """Human-readable block for a recommendation.

    Expert and auto cluster ids are mapped through the dataset's name maps;
    unnamed (numeric) labels render in the canonical E_i / C_j form.
    """
    e_name = ds.expert_name if ds is not None else (lambda i: f"E_{i}")
    c_name = ds.cluster_name if ds is not None else (lambda j: f"C_{j}")
    if isinstance(rec, SplitRecommendation):
        inner = ", ".join(c_name(c) for c in rec.candidates)
        return (
            "SPLIT\n"
            f"    EXPERT CLUSTER {e_name(rec.expert_label)}\n"
            "INTO\n"
            f"    CLUSTERS [({inner})] (Confidence {rec.confidence:.2f})"
        )
    if isinstance(rec, MergeRecommendation):
        j, k = rec.pair
        return (
            "MERGE\n"
            f"    EXPERT CLUSTER {e_name(j)}\n"
            "WITH\n"
            f"    EXPERT CLUSTER {e_name(k)}\n"
            "INTO\n"
            f"    CLUSTER {c_name(rec.target_cluster)} (Confidence {rec.confidence:.2f})"
        )
    raise ValidationError(f"cannot render {type(rec).__name__}")
