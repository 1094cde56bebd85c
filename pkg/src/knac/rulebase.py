"""Executable, confidence-weighted rule knowledge base.

Rules are conjunctions over the dataset's features concluding an expert
label; inference is most-confident-wins among the rules that fire. Split
refinements are layered on top of base conclusions: when the base conclusion
has split rules attached, the most confident firing split rule takes over,
and the parent label is retained when none fires. Every mutation returns a
new version; the event history makes old versions reconstructible.

A knowledge base may also carry per-row label assignments. These stand in
for rule-based knowledge when the expert labeling arrives as a raw label
vector, so the refinement loop is uniform either way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .dataset import LabeledDataset
from .errors import ValidationError
from .explain import Condition, ExplanationRule

UNLABELED = -1


@dataclass(frozen=True)
class KBRule:
    rule_id: str
    conditions: tuple[Condition, ...]
    conclusion: int
    confidence: float
    provenance: tuple[tuple[str, object], ...] = (("kind", "expert"),)
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"rule confidence must be in [0, 1], got {self.confidence}"
            )

    def provenance_dict(self) -> dict:
        return dict(self.provenance)

    def holds(self, instance: np.ndarray, schema) -> bool:
        row = np.asarray(instance, dtype=np.float64).reshape(1, -1)
        return all(bool(c.mask(row, schema)[0]) for c in self.conditions)

    def text(self, name_of=str) -> str:
        body = " AND ".join(c.text() for c in self.conditions) or "TRUE"
        return f"{name_of(self.conclusion)}: {body} (Confidence: {self.confidence:.2f})"

    def to_json_dict(self) -> dict:
        return {
            "conclusion": self.conclusion,
            "conditions": [c.to_json_dict() for c in self.conditions],
            "confidence": self.confidence,
            "enabled": self.enabled,
            "provenance": dict(self.provenance),
            "rule_id": self.rule_id,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "KBRule":
        return KBRule(
            rule_id=d["rule_id"],
            conditions=tuple(Condition.from_json_dict(c) for c in d["conditions"]),
            conclusion=int(d["conclusion"]),
            confidence=float(d["confidence"]),
            provenance=tuple(sorted(d["provenance"].items())),
            enabled=bool(d["enabled"]),
        )


def split_provenance(parent: int, recommendation_id: str) -> tuple:
    return tuple(sorted({"kind": "split", "parent": parent,
                         "recommendation_id": recommendation_id}.items()))


def merge_provenance(pair: tuple[int, int], recommendation_id: str) -> tuple:
    return tuple(sorted({"kind": "merge", "pair": list(pair),
                         "recommendation_id": recommendation_id}.items()))


@dataclass(frozen=True)
class SplitBlock:
    parent: int
    rules: tuple[KBRule, ...]

    def to_json_dict(self) -> dict:
        return {"parent": self.parent,
                "rules": [r.to_json_dict() for r in self.rules]}


@dataclass(frozen=True)
class KnowledgeBase:
    schema: tuple[str, ...]
    rules: tuple[KBRule, ...] = ()
    splits: tuple[SplitBlock, ...] = ()
    assignments: tuple[tuple[str, int], ...] | None = None
    default_label: int | None = None
    version: int = 0
    next_rule_seq: int = 0
    history: tuple[tuple, ...] = ()

    def known_labels(self) -> set[int]:
        labels = {r.conclusion for r in self.rules}
        for block in self.splits:
            labels.add(block.parent)
            labels.update(r.conclusion for r in block.rules)
        if self.assignments:
            labels.update(v for _, v in self.assignments)
        if self.default_label is not None:
            labels.add(self.default_label)
        return labels

    def rule_by_id(self, rule_id: str) -> KBRule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        for block in self.splits:
            for r in block.rules:
                if r.rule_id == rule_id:
                    return r
        raise ValidationError(f"no rule with id {rule_id!r}")

    def to_json_dict(self) -> dict:
        return {
            "assignments": [[k, v] for k, v in self.assignments] if self.assignments is not None else None,
            "default_label": self.default_label,
            "history": [dict(ev) for ev in self.history],
            "next_rule_seq": self.next_rule_seq,
            "rules": [r.to_json_dict() for r in self.rules],
            "schema": list(self.schema),
            "splits": [b.to_json_dict() for b in self.splits],
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json_dict(d: dict) -> "KnowledgeBase":
        return KnowledgeBase(
            schema=tuple(d["schema"]),
            rules=tuple(KBRule.from_json_dict(r) for r in d["rules"]),
            splits=tuple(
                SplitBlock(int(b["parent"]),
                           tuple(KBRule.from_json_dict(r) for r in b["rules"]))
                for b in d["splits"]
            ),
            assignments=tuple((k, int(v)) for k, v in d["assignments"]) if d["assignments"] is not None else None,
            default_label=d["default_label"],
            version=int(d["version"]),
            next_rule_seq=int(d["next_rule_seq"]),
            history=tuple(tuple(sorted(ev.items())) for ev in d["history"]),
        )

    @staticmethod
    def from_json(text: str) -> "KnowledgeBase":
        return KnowledgeBase.from_json_dict(json.loads(text))


def new_kb(schema, default_label: int | None = None) -> KnowledgeBase:
    return KnowledgeBase(schema=tuple(schema), default_label=default_label)


def wrapper_kb(ds: LabeledDataset) -> KnowledgeBase:
    """Synthesize a label-holding knowledge base from a raw expert labeling,
    so a plain label vector can drive the same refinement loop as rules."""
    assignments = tuple((rid, int(lbl)) for rid, lbl in zip(ds.row_ids, ds.expert_labels))
    return KnowledgeBase(schema=tuple(ds.feature_names), assignments=assignments)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def _fire(rules, instance: np.ndarray, schema) -> KBRule | None:
    """Most confident enabled rule whose conjunction holds; earliest wins ties."""
    best = None
    best_key = None
    for idx, rule in enumerate(rules):
        if not rule.enabled or not rule.holds(instance, schema):
            continue
        key = (-rule.confidence, idx)
        if best_key is None or key < best_key:
            best, best_key = rule, key
    return best


def _sub_rules(kb: KnowledgeBase, parent: int) -> list[KBRule]:
    out: list[KBRule] = []
    for block in kb.splits:
        if block.parent == parent:
            out.extend(block.rules)
    return out


def _refine(kb: KnowledgeBase, instance, label: int, confidence: float):
    visited = set()
    while label not in visited:
        visited.add(label)
        fired = _fire(_sub_rules(kb, label), instance, kb.schema)
        if fired is None or fired.conclusion == label:
            break
        label, confidence = fired.conclusion, fired.confidence
    return label, confidence


def infer(kb: KnowledgeBase, instance) -> tuple[int, float] | None:
    """Conclude a label for one feature vector, or None when nothing fires
    and no default label is set."""
    instance = np.asarray(instance, dtype=np.float64)
    if instance.shape != (len(kb.schema),):
        raise ValidationError(
            f"instance has shape {instance.shape}, schema has {len(kb.schema)} features"
        )
    fired = _fire(kb.rules, instance, kb.schema)
    if fired is not None:
        label, confidence = fired.conclusion, fired.confidence
    elif kb.default_label is not None:
        label, confidence = kb.default_label, 0.0
    else:
        return None
    return _refine(kb, instance, label, confidence)


def label_dataset(kb: KnowledgeBase, ds: LabeledDataset) -> np.ndarray:
    """Row-wise inference over a dataset; unlabeled rows get UNLABELED.

    Rows no rule concludes fall back to the stored per-row assignment (when
    the KB carries one), then to the default label.
    """
    if tuple(ds.feature_names) != kb.schema:
        raise ValidationError(
            f"dataset features {ds.feature_names} do not match KB schema {kb.schema}"
        )
    n = ds.n
    labels = np.full(n, UNLABELED, dtype=np.int64)
    unresolved = np.ones(n, dtype=bool)
    order = sorted(range(len(kb.rules)),
                   key=lambda i: (-kb.rules[i].confidence, i))
    for i in order:
        rule = kb.rules[i]
        if not rule.enabled:
            continue
        take = unresolved & _rule_mask(rule, ds)
        labels[take] = rule.conclusion
        unresolved &= ~take
    if kb.assignments is not None and unresolved.any():
        lookup = dict(kb.assignments)
        for p in np.flatnonzero(unresolved):
            hit = lookup.get(ds.row_ids[p])
            if hit is not None:
                labels[p] = hit
                unresolved[p] = False
    if kb.default_label is not None:
        labels[unresolved] = kb.default_label
        unresolved[:] = False
    parents = {block.parent for block in kb.splits}
    if parents:
        for p in range(n):
            if labels[p] in parents:
                labels[p], _ = _refine(kb, ds.features[p], int(labels[p]), 1.0)
    return labels


def _rule_mask(rule: KBRule, ds: LabeledDataset) -> np.ndarray:
    out = np.ones(ds.n, dtype=bool)
    for cond in rule.conditions:
        out &= cond.mask(ds.features, ds.feature_names)
    return out


# ---------------------------------------------------------------------------
# Mutations (each returns a new version)
# ---------------------------------------------------------------------------

def _event(kb: KnowledgeBase, op: str, **payload) -> tuple:
    ev = {"op": op, "version": kb.version + 1}
    ev.update(payload)
    return tuple(sorted(ev.items(), key=lambda kv: kv[0]))


def _take_id(kb: KnowledgeBase, offset: int = 0) -> str:
    return f"r{kb.next_rule_seq + offset}"


def _check_features(kb: KnowledgeBase, conditions) -> None:
    for cond in conditions:
        if cond.feature not in kb.schema:
            raise ValidationError(f"unknown feature {cond.feature!r} in rule")


def import_explanation(kb: KnowledgeBase, rule: ExplanationRule, as_label: int,
                       provenance: tuple = (("kind", "expert"),)) -> KnowledgeBase:
    """Adopt an explanation rule as an executable rule; its confidence is the
    product of the explanation's precision and coverage."""
    _check_features(kb, rule.conditions)
    kb_rule = KBRule(
        rule_id=_take_id(kb),
        conditions=rule.conditions,
        conclusion=int(as_label),
        confidence=rule.precision * rule.coverage,
        provenance=provenance,
    )
    return replace(
        kb,
        rules=kb.rules + (kb_rule,),
        version=kb.version + 1,
        next_rule_seq=kb.next_rule_seq + 1,
        history=kb.history + (_event(kb, "import_explanation",
                                     rule_id=kb_rule.rule_id,
                                     as_label=int(as_label)),),
    )


def apply_split(kb: KnowledgeBase, parent_label: int,
                rules: list[tuple[int, KBRule]]) -> KnowledgeBase:
    """Attach split rules under a parent label: instances concluding the
    parent consult these rules first and keep the parent label when none
    fires."""
    if parent_label not in kb.known_labels():
        raise ValidationError(f"unknown parent label {parent_label}")
    if len(rules) < 2:
        raise ValidationError("a split needs at least 2 new labels")
    new_labels = [int(lbl) for lbl, _ in rules]
    if len(set(new_labels)) != len(new_labels):
        raise ValidationError(f"duplicate new labels in split: {new_labels}")
    assigned = []
    for offset, (new_label, rule) in enumerate(rules):
        _check_features(kb, rule.conditions)
        assigned.append(replace(rule,
                                rule_id=_take_id(kb, offset),
                                conclusion=int(new_label)))
    block = SplitBlock(int(parent_label), tuple(assigned))
    return replace(
        kb,
        splits=kb.splits + (block,),
        version=kb.version + 1,
        next_rule_seq=kb.next_rule_seq + len(assigned),
        history=kb.history + (_event(kb, "apply_split",
                                     parent=int(parent_label),
                                     new_labels=new_labels,
                                     rule_ids=[r.rule_id for r in assigned]),),
    )


def apply_merge(kb: KnowledgeBase, pair: tuple[int, int], new_label: int) -> KnowledgeBase:
    """Rewrite every conclusion of either pair label to the new label."""
    j, k = int(pair[0]), int(pair[1])
    if j == k:
        raise ValidationError("merge needs two distinct labels")
    known = kb.known_labels()
    for lbl in (j, k):
        if lbl not in known:
            raise ValidationError(f"unknown label {lbl} in merge")
    new_label = int(new_label)
    rewrite = lambda lbl: new_label if lbl in (j, k) else lbl
    rules = tuple(
        replace(r, conclusion=rewrite(r.conclusion)) if r.conclusion in (j, k) else r
        for r in kb.rules
    )
    splits = tuple(
        SplitBlock(rewrite(b.parent),
                   tuple(replace(r, conclusion=rewrite(r.conclusion))
                         if r.conclusion in (j, k) else r
                         for r in b.rules))
        for b in kb.splits
    )
    assignments = kb.assignments
    if assignments is not None:
        assignments = tuple((rid, rewrite(lbl)) for rid, lbl in assignments)
    default = kb.default_label
    if default is not None:
        default = rewrite(default)
    return replace(
        kb,
        rules=rules,
        splits=splits,
        assignments=assignments,
        default_label=default,
        version=kb.version + 1,
        history=kb.history + (_event(kb, "apply_merge",
                                     pair=[j, k], new_label=new_label,
                                     mapping={str(j): new_label, str(k): new_label}),),
    )


def set_confidence(kb: KnowledgeBase, rule_id: str, confidence: float) -> KnowledgeBase:
    """Expert adjustment of one rule's confidence, version-tracked."""
    if not 0.0 <= confidence <= 1.0:
        raise ValidationError(f"confidence must be in [0, 1], got {confidence}")
    kb.rule_by_id(rule_id)  # raises when unknown
    rules = tuple(replace(r, confidence=confidence) if r.rule_id == rule_id else r
                  for r in kb.rules)
    splits = tuple(
        SplitBlock(b.parent,
                   tuple(replace(r, confidence=confidence) if r.rule_id == rule_id else r
                         for r in b.rules))
        for b in kb.splits
    )
    return replace(
        kb,
        rules=rules,
        splits=splits,
        version=kb.version + 1,
        history=kb.history + (_event(kb, "set_confidence",
                                     rule_id=rule_id, confidence=confidence),),
    )


# ---------------------------------------------------------------------------
# Renderings
# ---------------------------------------------------------------------------

def kb_text(kb: KnowledgeBase, name_of=str) -> str:
    """Listing-style rendering: one rule per line, split blocks indented."""
    lines = [f"# knowledge base v{kb.version}"]
    if kb.assignments is not None:
        lines.append(f"# {len(kb.assignments)} per-row label assignments")
    if kb.default_label is not None:
        lines.append(f"# default label: {name_of(kb.default_label)}")
    for rule in kb.rules:
        flag = "" if rule.enabled else " [disabled]"
        lines.append(f"{rule.rule_id}. {rule.text(name_of)}{flag}")
    for block in kb.splits:
        lines.append(f"split of {name_of(block.parent)}:")
        for rule in block.rules:
            lines.append(f"    {rule.rule_id}. {rule.text(name_of)}")
    return "\n".join(lines) + "\n"


def kb_table(kb: KnowledgeBase, name_of=str) -> str:
    """Tabular rendering: one column per condition attribute, plus conclusion
    and confidence."""
    all_rules = list(kb.rules) + [r for b in kb.splits for r in b.rules]
    attrs = []
    for rule in all_rules:
        for cond in rule.conditions:
            if cond.feature not in attrs:
                attrs.append(cond.feature)
    header = attrs + ["conclusion", "confidence"]
    rows = []
    for rule in all_rules:
        cells = {a: [] for a in attrs}
        for cond in rule.conditions:
            cells[cond.feature].append(cond.text().replace(f"{cond.feature} ", ""))
        row = [" & ".join(cells[a]) or "-" for a in attrs]
        row += [name_of(rule.conclusion), f"{rule.confidence:.2f}"]
        rows.append(row)
    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
              for c in range(len(header))]
    fmt = lambda row: "| " + " | ".join(cell.ljust(w) for cell, w in zip(row, widths)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([fmt(header), sep] + [fmt(r) for r in rows]) + "\n"
