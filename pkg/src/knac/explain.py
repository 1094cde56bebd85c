"""Human-readable justifications for recommendations: conjunctive rules with
precision and coverage, induced by a deterministic greedy search over a
per-feature quantile grid, plus quantile bounding boxes for plotting.

The inducer replaces perturbation-based model-agnostic explainers: rules are
grown directly against the labels, so the reported precision and coverage are
exact on the data they were induced from, and the whole procedure is
deterministic (fixed tie-breaks, no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset
from .errors import ValidationError


@dataclass(frozen=True)
class Condition:
    """One conjunct: feature <op> value. Ops: '<=', '>', '==', 'in' (interval)."""

    feature: str
    op: str
    value: float | str | tuple[float, float]

    def __post_init__(self):
        if self.op not in ("<=", ">", "==", "in"):
            raise ValidationError(f"unknown condition op {self.op!r}")
        if self.op == "in":
            lo, hi = self.value
            if lo > hi:
                raise ValidationError(f"interval lower {lo} exceeds upper {hi}")

    def mask(self, features: np.ndarray, feature_names) -> np.ndarray:
        col = features[:, list(feature_names).index(self.feature)]
        if self.op == "<=":
            return col <= self.value
        if self.op == ">":
            return col > self.value
        if self.op == "==":
            return col == float(self.value)
        lo, hi = self.value
        return (col >= lo) & (col <= hi)

    def text(self) -> str:
        if self.op == "in":
            lo, hi = self.value
            return f"{self.feature} in [{lo:.2f}, {hi:.2f}]"
        if self.op == "==":
            return f"{self.feature} == {self.value}"
        return f"{self.feature} {self.op} {self.value:.2f}"

    def to_json_dict(self) -> dict:
        value = list(self.value) if self.op == "in" else self.value
        return {"feature": self.feature, "op": self.op, "value": value}

    @staticmethod
    def from_json_dict(d: dict) -> "Condition":
        value = tuple(d["value"]) if d["op"] == "in" else d["value"]
        return Condition(d["feature"], d["op"], value)


@dataclass(frozen=True)
class ExplanationRule:
    """Conjunctive rule for one target label with exact precision/coverage
    on the slice it was induced from."""

    target_label: int
    conditions: tuple[Condition, ...]
    precision: float
    coverage: float

    def mask(self, features: np.ndarray, feature_names) -> np.ndarray:
        out = np.ones(features.shape[0], dtype=bool)
        for cond in self.conditions:
            out &= cond.mask(features, feature_names)
        return out

    def text(self, label_name: str | None = None) -> str:
        name = label_name if label_name is not None else str(self.target_label)
        body = " AND ".join(c.text() for c in self.conditions) or "TRUE"
        return (f"{name}: {body} "
                f"(Precision: {self.precision:.2f}, Coverage: {self.coverage:.2f})")

    def to_json_dict(self) -> dict:
        return {
            "target_label": self.target_label,
            "conditions": [c.to_json_dict() for c in self.conditions],
            "precision": self.precision,
            "coverage": self.coverage,
        }


@dataclass(frozen=True)
class BoundingBox:
    """Per-feature inner-quantile intervals of one cluster's points."""

    label: int
    intervals: tuple[tuple[float, float], ...]
    quantiles: tuple[float, float]

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "intervals": [list(iv) for iv in self.intervals],
            "quantiles": list(self.quantiles),
        }


@dataclass(frozen=True)
class RuleConfig:
    max_conditions: int = 3
    precision_target: float = 0.95
    quantile_grid: int = 10
    # greedy growth can stall below the optimum a predicate pair reaches;
    # when it ends under the precision target, an exact search over all 1-
    # and 2-condition conjunctions replaces the result if strictly better.
    # Skipped when the predicate pool exceeds pair_search_limit.
    pair_search_limit: int = 600

    def __post_init__(self):
        if self.max_conditions < 0:
            raise ValidationError("max_conditions must be >= 0")
        if self.quantile_grid < 2:
            raise ValidationError(
                f"quantile_grid must be >= 2, got {self.quantile_grid}"
            )


def grid_predicates(features: np.ndarray, feature_names,
                    quantile_grid: int) -> list[Condition]:
    """Candidate conditions {f <= q, f > q} over interior quantile cuts of
    every feature, in deterministic order (feature, threshold, '<=' first)."""
    fracs = [k / quantile_grid for k in range(1, quantile_grid)]
    out = []
    for fi, name in enumerate(feature_names):
        cuts = np.unique(np.quantile(features[:, fi], fracs))
        for q in cuts:
            out.append(Condition(name, "<=", float(q)))
            out.append(Condition(name, ">", float(q)))
    return out


def induce_rule(features: np.ndarray, binary_target: np.ndarray,
                config: RuleConfig = RuleConfig(),
                feature_names=None) -> ExplanationRule:
    """Greedy conjunction growth: repeatedly add the grid predicate that
    maximizes precision (ties: larger coverage, then lower feature index and
    threshold), stopping at the precision target, the condition cap, or when
    no predicate strictly improves precision. Never emits a zero-coverage rule.
    """
    features = np.asarray(features, dtype=np.float64)
    target = np.asarray(binary_target, dtype=bool)
    n = features.shape[0]
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(features.shape[1])]
    if not target.any() or target.all():
        raise ValidationError("rule induction needs both target classes present")
    candidates = grid_predicates(features, feature_names, config.quantile_grid)
    feature_index = {name: i for i, name in enumerate(feature_names)}
    masks = [c.mask(features, feature_names) for c in candidates]

    chosen: list[Condition] = []
    current = np.ones(n, dtype=bool)
    precision = float(target.mean())
    while len(chosen) < config.max_conditions and precision < config.precision_target:
        best = None
        for cond, cmask in zip(candidates, masks):
            merged = current & cmask
            covered = int(merged.sum())
            if covered == 0:
                continue
            prec = float(target[merged].sum()) / covered
            key = (-prec, -covered, feature_index[cond.feature],
                   cond.value, 0 if cond.op == "<=" else 1)
            if best is None or key < best[0]:
                best = (key, cond, merged, prec)
        if best is None or best[3] <= precision:
            break
        _, cond, current, new_precision = best
        assert new_precision >= precision
        precision = new_precision
        chosen.append(cond)

    if (precision < config.precision_target and config.max_conditions >= 1
            and len(candidates) <= config.pair_search_limit):
        rescue = _best_pair(candidates, masks, target, feature_index,
                            config.max_conditions)
        if rescue is not None and rescue[2] > precision:
            chosen, current, precision = rescue

    coverage = float(current.sum()) / n
    return ExplanationRule(-1, tuple(chosen), precision, coverage)


def _cond_key(cond: Condition, feature_index) -> tuple:
    return (feature_index[cond.feature], cond.value, 0 if cond.op == "<=" else 1)


def _best_pair(candidates, masks, target, feature_index, max_conditions):
    """Exact search over all 1- and 2-condition conjunctions, maximizing
    (precision, coverage) with lexicographic condition-order tie-breaks."""
    best = None
    pool = list(zip(candidates, masks))
    for i, (cond_a, mask_a) in enumerate(pool):
        options = [((cond_a,), mask_a)]
        if max_conditions >= 2:
            for cond_b, mask_b in pool[i + 1:]:
                options.append(((cond_a, cond_b), mask_a & mask_b))
        for conds, merged in options:
            covered = int(merged.sum())
            if covered == 0:
                continue
            prec = float(target[merged].sum()) / covered
            order = tuple(sorted(_cond_key(c, feature_index) for c in conds))
            key = (-prec, -covered, len(conds), order)
            if best is None or key < best[0]:
                best = (key, list(conds), merged, prec)
    if best is None:
        return None
    return best[1], best[2], best[3]


def _slice_rule(features, target, config, feature_names, label) -> ExplanationRule:
    """Rule for one label on a slice. Degenerate targets short-circuit to the
    trivial always-true rule (precision 1 when the label owns the whole
    slice, 0 when it owns none): with no contrast there is nothing to learn."""
    if target.all():
        return ExplanationRule(int(label), (), 1.0, 1.0)
    if not target.any():
        return ExplanationRule(int(label), (), 0.0, 1.0)
    rule = induce_rule(features, target, config, feature_names)
    return ExplanationRule(int(label), rule.conditions, rule.precision, rule.coverage)


def explain_split(ds: LabeledDataset, rec, config: RuleConfig = RuleConfig()) -> list[ExplanationRule]:
    """One one-vs-rest rule per candidate auto cluster, induced on the points
    of the expert cluster being split."""
    ds.require_clusters()
    mask = ds.expert_labels == rec.expert_label
    feats = ds.features[mask]
    clusters = ds.cluster_labels[mask]
    return [
        _slice_rule(feats, clusters == c, config, ds.feature_names, c)
        for c in rec.candidates
    ]


def explain_merge(ds: LabeledDataset, rec, config: RuleConfig = RuleConfig()) -> tuple[ExplanationRule, ExplanationRule]:
    """One one-vs-other rule per expert cluster of the pair, induced on the
    union of the two clusters' points. Low precision on both sides signals
    the clusters are indistinguishable in feature space."""
    j, k = rec.pair
    mask = (ds.expert_labels == j) | (ds.expert_labels == k)
    feats = ds.features[mask]
    expert = ds.expert_labels[mask]
    rule_j = _slice_rule(feats, expert == j, config, ds.feature_names, j)
    rule_k = _slice_rule(feats, expert == k, config, ds.feature_names, k)
    return rule_j, rule_k


def bounding_box(ds: LabeledDataset, label: int,
                 quantiles: tuple[float, float] = (0.05, 0.95),
                 source: str = "expert") -> BoundingBox:
    """Per-feature [q_lo, q_hi] interval of one cluster's points."""
    lo, hi = quantiles
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValidationError(f"bad quantile pair {quantiles}")
    labels = ds.expert_labels if source == "expert" else ds.cluster_labels
    points = ds.features[labels == label]
    if not len(points):
        raise ValidationError(f"{source} label {label} has no points")
    intervals = tuple(
        (float(np.quantile(points[:, j], lo)), float(np.quantile(points[:, j], hi)))
        for j in range(points.shape[1])
    )
    return BoundingBox(int(label), intervals, (float(lo), float(hi)))
