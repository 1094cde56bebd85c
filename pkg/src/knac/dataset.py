"""Dataset ingestion, validation, and synthetic-data generation.

A :class:`LabeledDataset` carries a numeric feature matrix together with two
label vectors: the expert-assigned clustering and the automatically discovered
clustering. Labels are canonicalized to contiguous 0-based integer ids; the
original label names are retained in name maps so reports can show them.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IngestionError, ValidationError

UNCLUSTERED = -1  # sentinel for "no automated clustering attached yet"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix plus expert and automated label vectors.

    Invariants (enforced at construction): features are finite, both label
    vectors have length n, ids are contiguous from 0 (cluster labels may be
    the UNCLUSTERED sentinel throughout), n >= 1 and d >= 1.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    expert_labels: np.ndarray
    cluster_labels: np.ndarray
    row_ids: tuple[str, ...]
    expert_name_map: dict[str, int] = field(default_factory=dict)
    cluster_name_map: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {feats.shape}")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        bad = np.argwhere(~np.isfinite(feats))
        if bad.size:
            r, c = bad[0]
            raise IngestionError(f"non-finite feature value at row {r}, column {c}")
        if len(self.feature_names) != d:
            raise ValidationError(
                f"{len(self.feature_names)} feature names for {d} columns"
            )
        expert = np.asarray(self.expert_labels, dtype=np.int64)
        cluster = np.asarray(self.cluster_labels, dtype=np.int64)
        for name, vec in (("expert", expert), ("cluster", cluster)):
            if vec.shape != (n,):
                raise ValidationError(
                    f"{name} labels have length {vec.shape[0]}, features have {n} rows"
                )
        _check_contiguous("expert", expert)
        if not np.all(cluster == UNCLUSTERED):
            _check_contiguous("cluster", cluster)
        if len(self.row_ids) != n:
            raise ValidationError(f"{len(self.row_ids)} row ids for {n} rows")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "expert_labels", _freeze(expert))
        object.__setattr__(self, "cluster_labels", _freeze(cluster))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_expert(self) -> int:
        return int(self.expert_labels.max()) + 1

    @property
    def n_cluster(self) -> int:
        m = int(self.cluster_labels.max())
        return 0 if m == UNCLUSTERED else m + 1

    @property
    def has_clusters(self) -> bool:
        return bool(np.all(self.cluster_labels != UNCLUSTERED))

    def require_clusters(self) -> None:
        if not self.has_clusters:
            raise ValidationError(
                "dataset has no automated cluster labels; run a clusterer or "
                "load a clusters file first"
            )

    def expert_name(self, label: int) -> str:
        return _display_name(self.expert_name_map, label, "E")

    def cluster_name(self, label: int) -> str:
        return _display_name(self.cluster_name_map, label, "C")

    def with_cluster_labels(self, labels: np.ndarray,
                            name_map: dict[str, int] | None = None) -> "LabeledDataset":
        labels = np.asarray(labels, dtype=np.int64)
        if name_map is None:
            name_map = {str(v): int(v) for v in np.unique(labels)}
        return LabeledDataset(self.features, self.feature_names, self.expert_labels,
                              labels, self.row_ids, dict(self.expert_name_map), name_map)

    def with_expert_labels(self, labels: np.ndarray,
                           name_map: dict[str, int] | None = None) -> "LabeledDataset":
        labels = np.asarray(labels, dtype=np.int64)
        if name_map is None:
            name_map = {str(v): int(v) for v in np.unique(labels)}
        return LabeledDataset(self.features, self.feature_names, labels,
                              self.cluster_labels, self.row_ids, name_map,
                              dict(self.cluster_name_map))


def _display_name(name_map: dict[str, int], label: int, prefix: str) -> str:
    for name, ident in name_map.items():
        if ident == label:
            # purely numeric source labels render in canonical E_i / C_j form
            return f"{prefix}_{label}" if name.lstrip("-").isdigit() else name
    return f"{prefix}_{label}"


def _check_contiguous(kind: str, labels: np.ndarray) -> None:
    uniq = np.unique(labels)
    if uniq[0] != 0 or uniq[-1] != len(uniq) - 1:
        raise ValidationError(
            f"{kind} label ids must be contiguous from 0, got {uniq.tolist()}"
        )


@dataclass(frozen=True)
class BlobSpec:
    """Recipe for an isotropic-Gaussian-blob dataset; same spec, same bytes."""

    n_blobs: int
    points_per_blob: int
    dim: int
    centers: tuple[tuple[float, ...], ...] | None = None
    std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_blobs < 1 or self.points_per_blob < 1 or self.dim < 1:
            raise ValidationError("blob counts and dimension must be >= 1")
        if self.std <= 0:
            raise ValidationError(f"std must be > 0, got {self.std}")
        if self.centers is not None:
            centers = tuple(tuple(float(x) for x in c) for c in self.centers)
            if len(centers) != self.n_blobs:
                raise ValidationError(
                    f"{len(centers)} centers for {self.n_blobs} blobs"
                )
            if any(len(c) != self.dim for c in centers):
                raise ValidationError("center dimensionality mismatch")
            object.__setattr__(self, "centers", centers)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_rows(path: Path) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IngestionError(f"file not found: {path}") from None
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise IngestionError(f"empty file: {path}")
    return rows


def _parse_features(path: Path) -> tuple[np.ndarray, tuple[str, ...]]:
    rows = _read_rows(path)
    header, data = rows[0], rows[1:]
    if not data:
        raise IngestionError(f"no data rows in {path}")
    width = len(header)
    out = np.empty((len(data), width), dtype=np.float64)
    for r, row in enumerate(data):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {r} has {len(row)} cells, header has {width}"
            )
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: non-numeric feature cell {cell!r} at row {r}, column {c}"
                ) from None
            if not math.isfinite(value):
                raise IngestionError(
                    f"{path}: non-finite feature value {cell!r} at row {r}, column {c}"
                )
            out[r, c] = value
    return out, tuple(header)


def _parse_labels(path: Path) -> tuple[list[str], list[str] | None]:
    """Returns (labels, row_ids); accepts one-column or id,label two-column CSV.

    A single header row is tolerated: if the first row of a two-column file
    does not recur as a label and looks like ('id', <anything>), it is skipped.
    """
    rows = _read_rows(path)
    if all(len(r) == 1 for r in rows):
        return [r[0].strip() for r in rows], None
    if all(len(r) == 2 for r in rows):
        body = rows[1:] if rows and rows[0][0].strip().lower() == "id" else rows
        if not body:
            raise IngestionError(f"no label rows in {path}")
        return [r[1].strip() for r in body], [r[0].strip() for r in body]
    raise IngestionError(f"{path}: expected 1 or 2 columns on every row")


def _canonicalize(raw: Sequence[str]) -> tuple[np.ndarray, dict[str, int]]:
    """Map label names to contiguous 0-based ids.

    All-numeric label sets keep their numeric order (so integer label files
    round-trip to identical vectors); any other label set is numbered in
    order of first appearance.
    """
    if all(name.lstrip("-").isdigit() for name in set(raw)):
        ordered = sorted(set(raw), key=int)
        name_map = {name: i for i, name in enumerate(ordered)}
    else:
        name_map = {}
        for name in raw:
            if name not in name_map:
                name_map[name] = len(name_map)
    out = np.array([name_map[name] for name in raw], dtype=np.int64)
    return out, name_map


def load_dataset(features_path, expert_path, clusters_path=None) -> LabeledDataset:
    """Load features + expert labels (+ optional cluster labels) from CSV files.

    Arbitrary label strings are canonicalized to 0-based ids in order of first
    appearance; the name maps on the returned dataset record the mapping.
    """
    features, names = _parse_features(Path(features_path))
    n = features.shape[0]
    expert_raw, row_ids = _parse_labels(Path(expert_path))
    if len(expert_raw) != n:
        raise IngestionError(
            f"expert labels have {len(expert_raw)} rows, features have {n} rows"
        )
    expert, expert_map = _canonicalize(expert_raw)
    if clusters_path is not None:
        cluster_raw, cluster_row_ids = _parse_labels(Path(clusters_path))
        if len(cluster_raw) != n:
            raise IngestionError(
                f"cluster labels have {len(cluster_raw)} rows, features have {n} rows"
            )
        cluster, cluster_map = _canonicalize(cluster_raw)
        row_ids = row_ids or cluster_row_ids
    else:
        cluster = np.full(n, UNCLUSTERED, dtype=np.int64)
        cluster_map = {}
    ids = tuple(row_ids) if row_ids else tuple(str(i) for i in range(n))
    return LabeledDataset(features, names, expert, cluster, ids, expert_map, cluster_map)


def _format_float(x: float) -> str:
    return repr(float(x))


def save_dataset(ds: LabeledDataset, features_path, expert_path,
                 clusters_path=None, label_map_path=None) -> None:
    """Write a dataset back to canonical CSV; inverse of :func:`load_dataset`."""
    lines = [",".join(ds.feature_names)]
    for row in ds.features:
        lines.append(",".join(_format_float(x) for x in row))
    Path(features_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    inv_expert = {v: k for k, v in ds.expert_name_map.items()}
    expert_lines = [inv_expert.get(int(v), str(int(v))) for v in ds.expert_labels]
    Path(expert_path).write_text("\n".join(expert_lines) + "\n", encoding="utf-8")
    if clusters_path is not None and ds.has_clusters:
        inv_cluster = {v: k for k, v in ds.cluster_name_map.items()}
        cluster_lines = [inv_cluster.get(int(v), str(int(v))) for v in ds.cluster_labels]
        Path(clusters_path).write_text("\n".join(cluster_lines) + "\n", encoding="utf-8")
    if label_map_path is not None:
        Path(label_map_path).write_text(
            json.dumps(ds.expert_name_map, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def generate_blobs(spec: BlobSpec) -> LabeledDataset:
    """Sample isotropic Gaussian blobs; expert labels start as the blob ids.

    Cluster labels are left at the UNCLUSTERED sentinel until a clusterer or
    a label file supplies them.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.centers is not None:
        centers = np.asarray(spec.centers, dtype=np.float64)
    else:
        centers = rng.uniform(-10.0, 10.0, size=(spec.n_blobs, spec.dim))
    n = spec.n_blobs * spec.points_per_blob
    features = np.empty((n, spec.dim), dtype=np.float64)
    expert = np.empty(n, dtype=np.int64)
    for b in range(spec.n_blobs):
        lo = b * spec.points_per_blob
        hi = lo + spec.points_per_blob
        features[lo:hi] = centers[b] + rng.normal(0.0, spec.std, size=(spec.points_per_blob, spec.dim))
        expert[lo:hi] = b
    cluster = np.full(n, UNCLUSTERED, dtype=np.int64)
    names = tuple(f"x{j}" for j in range(spec.dim))
    name_map = {str(b): b for b in range(spec.n_blobs)}
    ids = tuple(str(i) for i in range(n))
    return LabeledDataset(features, names, expert, cluster, ids, name_map, {})


def corrupt_labels(ds: LabeledDataset,
                   merges: Iterable[Iterable[int]] = (),
                   splits: Iterable[tuple[int, int, int]] = ()) -> LabeledDataset:
    """Fake-corrupt the expert labeling by merging and splitting label groups.

    Each merge set collapses to one new label; each (label, n_parts, seed)
    split partitions the label's points into n_parts nearly equal groups via a
    seeded permutation. The old->new mapping is recorded in the returned
    dataset's expert name map (merged labels as "a+b", split parts as "a#k").
    """
    merges = [frozenset(int(x) for x in m) for m in merges]
    splits = [(int(lbl), int(parts), int(seed)) for lbl, parts, seed in splits]
    known = set(range(ds.n_expert))
    seen: set[int] = set()
    for m in merges:
        bad = m - known
        if bad:
            raise ValidationError(f"unknown expert label ids in merge: {sorted(bad)}")
        if m & seen:
            raise ValidationError(f"overlapping merge sets at labels {sorted(m & seen)}")
        seen |= m
    for lbl, parts, _ in splits:
        if lbl not in known:
            raise ValidationError(f"unknown expert label id in split: {lbl}")
        if parts < 2:
            raise ValidationError(f"split needs n_parts >= 2, got {parts}")

    inv = {v: k for k, v in ds.expert_name_map.items()}
    old_name = lambda lbl: inv.get(lbl, str(lbl))
    raw = [old_name(int(v)) for v in ds.expert_labels]

    for m in merges:
        merged = "+".join(old_name(lbl) for lbl in sorted(m))
        for i, lbl in enumerate(ds.expert_labels):
            if int(lbl) in m:
                raw[i] = merged
    for lbl, parts, seed in splits:
        idx = np.flatnonzero(ds.expert_labels == lbl)
        if not idx.size:
            raise ValidationError(f"expert label {lbl} has no points to split")
        perm = np.random.default_rng(seed).permutation(idx)
        for part, chunk in enumerate(np.array_split(perm, parts)):
            for i in chunk:
                raw[i] = f"{old_name(lbl)}#{part}"

    new_labels, name_map = _canonicalize(raw)
    return LabeledDataset(ds.features, ds.feature_names, new_labels,
                          ds.cluster_labels, ds.row_ids, name_map,
                          dict(ds.cluster_name_map))
