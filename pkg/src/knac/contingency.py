"""Contingency matrix between expert and automated labelings, and the
normalized derivative matrices that score split and merge evidence.

The split matrix rewards auto clusters that sit cleanly inside one expert
cluster (an entropy penalty across expert rows suppresses smeared columns);
the merge matrix row-normalizes the counts so that row dot products are the
cosine similarity between two expert clusters' distributions over the auto
clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .errors import ValidationError

AXIS_MODES = ("column", "row")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ContingencyMatrix:
    """counts[i][j] = number of points in expert cluster i and auto cluster j."""

    counts: np.ndarray
    expert_ids: tuple[int, ...]
    cluster_ids: tuple[int, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValidationError("contingency counts must be 2-D")
        if (counts < 0).any():
            raise ValidationError("contingency counts must be non-negative")
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def n_expert(self) -> int:
        return self.counts.shape[0]

    @property
    def n_cluster(self) -> int:
        return self.counts.shape[1]

    def to_json_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "expert_ids": list(self.expert_ids),
            "cluster_ids": list(self.cluster_ids),
        }


@dataclass(frozen=True, eq=False)
class SplitMatrix:
    """Row-scaled split evidence in [0, 1]; rows are expert clusters."""

    values: np.ndarray
    axis_mode: str

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=np.float64)))

    def to_json_dict(self) -> dict:
        return {"values": self.values.tolist(), "axis_mode": self.axis_mode}


@dataclass(frozen=True, eq=False)
class MergeMatrix:
    """Row-l2-normalized counts plus the row-cosine similarity matrix."""

    values: np.ndarray
    sim: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=np.float64)))
        object.__setattr__(self, "sim", _freeze(np.asarray(self.sim, dtype=np.float64)))

    def to_json_dict(self) -> dict:
        return {"values": self.values.tolist(), "sim": self.sim.tolist()}


def contingency(ds: LabeledDataset) -> ContingencyMatrix:
    """Count co-assignments of every point to (expert cluster, auto cluster)."""
    ds.require_clusters()
    n_e, n_c = ds.n_expert, ds.n_cluster
    counts = np.zeros((n_e, n_c), dtype=np.int64)
    np.add.at(counts, (ds.expert_labels, ds.cluster_labels), 1)
    return ContingencyMatrix(counts, tuple(range(n_e)), tuple(range(n_c)))


def entropy_bits(distribution) -> float:
    """Shannon entropy (base 2) of a non-negative count/weight vector."""
    vec = np.asarray(distribution, dtype=np.float64)
    if (vec < 0).any():
        raise ValidationError("entropy input must be non-negative")
    total = vec.sum()
    if total <= 0:
        raise ValidationError("entropy input must have positive sum")
    p = vec[vec > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def _minmax_rows(values: np.ndarray) -> np.ndarray:
    """Min-max scale each row to [0, 1]; a flat row maps to all-0 (zero row)
    or all-1 (uniformly strong row)."""
    out = np.empty_like(values)
    for i, row in enumerate(values):
        lo, hi = row.min(), row.max()
        if hi > lo:
            out[i] = (row - lo) / (hi - lo)
        else:
            out[i] = 0.0 if hi == 0.0 else 1.0
    return out


def split_matrix(m: ContingencyMatrix, axis_mode: str = "column") -> SplitMatrix:
    """Split evidence: l2 normalization, entropy penalty, then row min-max.

    Column mode (default) normalizes each auto-cluster column and penalizes it
    by (H(column)/log2(n_E) + 1), so an auto cluster smeared across several
    expert clusters scores lower. Row mode applies both steps to expert rows
    instead. With a single expert cluster the penalty factor is defined as 1.
    """
    if axis_mode not in AXIS_MODES:
        raise ValidationError(f"axis_mode must be one of {AXIS_MODES}, got {axis_mode!r}")
    counts = m.counts.astype(np.float64)
    n_e = m.n_expert
    log_e = np.log2(n_e) if n_e > 1 else 0.0
    work = counts if axis_mode == "column" else counts.T
    scaled = np.zeros_like(work)
    for j in range(work.shape[1]):
        col = work[:, j]
        norm = np.linalg.norm(col)
        if norm == 0.0:
            continue  # zero column carries no evidence; entries stay 0
        penalty = entropy_bits(col) / log_e + 1.0 if log_e > 0.0 else 1.0
        scaled[:, j] = col / (norm * penalty)
    if axis_mode == "row":
        scaled = scaled.T
    return SplitMatrix(_minmax_rows(scaled), axis_mode)


def merge_matrix(m: ContingencyMatrix) -> MergeMatrix:
    """Row-l2-normalize counts; sim = values @ values.T clamped into [0, 1].

    An all-zero expert row stays zero in ``values`` and gets an all-zero sim
    row, diagonal included: with no points there is no evidence of
    self-similarity.
    """
    counts = m.counts.astype(np.float64)
    norms = np.linalg.norm(counts, axis=1)
    nonzero = norms > 0.0
    values = np.zeros_like(counts)
    values[nonzero] = counts[nonzero] / norms[nonzero, None]
    sim = values @ values.T
    sim = np.clip((sim + sim.T) / 2.0, 0.0, 1.0)
    sim[np.diag_indices_from(sim)] = np.where(nonzero, 1.0, 0.0)
    return MergeMatrix(values, sim)
