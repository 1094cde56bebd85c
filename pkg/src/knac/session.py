"""Refinement-loop orchestration: compute recommendations, apply expert
decisions, track convergence, and persist every step.

State model: the knowledge base (with its per-row assignments) is the single
source of truth for the expert labeling. Each iteration derives the current
label vector from the KB, canonicalizes it into a dataset view, recomputes
matrices and recommendations, and appends agreement scores against the
reference labeling. Accepted splits attach explanation rules to the KB;
accepted merges rewrite conclusions. A merge whose labels were already
touched by another accepted refinement in the same iteration is skipped as
stale and re-derived next round.

A session persists as a directory: session.json, decisions.log (append-only
JSON lines, one array of decisions per iterate), kb/v*.json (every KB
version), and the dataset CSVs. Replaying the decision log from the initial
KB reconstructs the final KB byte-for-byte.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rulebase
from .contingency import ContingencyMatrix, MergeMatrix, SplitMatrix
from .dataset import LabeledDataset, load_dataset, save_dataset
from .errors import ValidationError
from .explain import ExplanationRule, RuleConfig, explain_merge, explain_split
from .metrics import AgreementScores, agreement
from .recommend import (
    MergeRecommendation,
    RecommendParams,
    SplitRecommendation,
    recommend_all,
    render,
)
from .rulebase import KBRule, KnowledgeBase

ITERATION_CAP = 20
UNLABELED_NAME = "unlabeled"


def json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class Decision:
    recommendation_id: str
    verdict: str
    note: str | None = None
    actor: str = "expert"
    timestamp: str = ""

    def __post_init__(self):
        if self.verdict not in ("accept", "reject"):
            raise ValidationError(f"verdict must be accept|reject, got {self.verdict!r}")

    def to_json_dict(self) -> dict:
        return {
            "actor": self.actor,
            "note": self.note,
            "recommendation_id": self.recommendation_id,
            "timestamp": self.timestamp,
            "verdict": self.verdict,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Decision":
        return Decision(d["recommendation_id"], d["verdict"], d.get("note"),
                        d.get("actor", "expert"), d.get("timestamp", ""))


@dataclass(frozen=True)
class PendingRecommendation:
    rec_id: str
    kind: str  # split | merge
    rec: SplitRecommendation | MergeRecommendation
    explanations: tuple[ExplanationRule, ...]
    render_text: str

    def to_json_dict(self) -> dict:
        d = self.rec.to_json_dict()
        return {
            "id": self.rec_id,
            "kind": self.kind,
            "recommendation": d,
            "explanations": [e.to_json_dict() for e in self.explanations],
            "render_text": self.render_text,
        }


@dataclass
class Session:
    """One refinement loop: parameters, KB, pending recommendations,
    decision log, metrics history."""

    session_id: str
    params: RecommendParams
    axis_mode: str
    base_ds: LabeledDataset              # features + fixed cluster labels
    kb: KnowledgeBase
    label_names: dict[int, str]          # KB label id -> display name
    next_label_id: int
    reference_labels: np.ndarray         # labeling the metrics compare against
    has_reference: bool
    rule_config: RuleConfig = field(default_factory=RuleConfig)
    iteration: int = 0
    converged: bool = False
    decisions: list[Decision] = field(default_factory=list)
    decision_iterations: list[int] = field(default_factory=list)
    staged: list[Decision] = field(default_factory=list)
    metrics_history: list[AgreementScores] = field(default_factory=list)
    store: "SessionStore | None" = None

    # derived, recomputed by _refresh()
    kb_labels: np.ndarray = field(default=None, repr=False)
    ds: LabeledDataset = field(default=None, repr=False)
    canon_to_kb: list[int] = field(default_factory=list, repr=False)
    contingency: ContingencyMatrix = field(default=None, repr=False)
    h_split: SplitMatrix = field(default=None, repr=False)
    h_merge: MergeMatrix = field(default=None, repr=False)
    pending: list[PendingRecommendation] = field(default_factory=list, repr=False)

    # ------------------------------------------------------------------
    # Derived state
    # ------------------------------------------------------------------

    def name_of(self, kb_label: int) -> str:
        if kb_label == rulebase.UNLABELED:
            return UNLABELED_NAME
        return self.label_names.get(kb_label, str(kb_label))

    def _canonicalize(self) -> None:
        labels = self.kb_labels
        uniq = sorted(int(v) for v in np.unique(labels) if v != rulebase.UNLABELED)
        if (labels == rulebase.UNLABELED).any():
            uniq.append(rulebase.UNLABELED)
        to_canon = {kb: canon for canon, kb in enumerate(uniq)}
        canon_labels = np.array([to_canon[int(v)] for v in labels], dtype=np.int64)
        name_map: dict[str, int] = {}
        for kb_id in uniq:
            name = self.name_of(kb_id)
            if name in name_map:
                name = f"{name}({kb_id})"
            name_map[name] = to_canon[kb_id]
        self.canon_to_kb = uniq
        self.ds = self.base_ds.with_expert_labels(canon_labels, name_map)

    def _refresh(self) -> None:
        self.kb_labels = rulebase.label_dataset(self.kb, self.base_ds)
        self._canonicalize()
        m, h_split, h_merge, splits, merges = recommend_all(
            self.ds, self.params, self.axis_mode)
        self.contingency, self.h_split, self.h_merge = m, h_split, h_merge
        pending: list[PendingRecommendation] = []
        for rec in splits:
            rid = f"i{self.iteration}-split-e{rec.expert_label}"
            expl = tuple(explain_split(self.ds, rec, self.rule_config))
            pending.append(PendingRecommendation(
                rid, "split", rec, expl, render(rec, self.ds)))
        for rec in merges:
            rid = f"i{self.iteration}-merge-e{rec.pair[0]}-e{rec.pair[1]}"
            expl = tuple(explain_merge(self.ds, rec, self.rule_config))
            pending.append(PendingRecommendation(
                rid, "merge", rec, expl, render(rec, self.ds)))
        self.pending = pending

    def _append_metrics(self) -> None:
        self.metrics_history.append(
            agreement(self.reference_labels, self.ds.expert_labels))

    def pending_by_id(self) -> dict[str, PendingRecommendation]:
        return {p.rec_id: p for p in self.pending}

    # ------------------------------------------------------------------
    # Refinement
    # ------------------------------------------------------------------

    def _apply_split(self, item: PendingRecommendation) -> set[int]:
        rec: SplitRecommendation = item.rec
        parent_kb = self.canon_to_kb[rec.expert_label]
        parent_name = self.name_of(parent_kb)
        pairs: list[tuple[int, KBRule]] = []
        touched = {parent_kb}
        for expl in item.explanations:
            new_id = self.next_label_id
            self.next_label_id += 1
            self.label_names[new_id] = f"{parent_name}/{self.ds.cluster_name(expl.target_label)}"
            rule = KBRule(
                rule_id="",
                conditions=expl.conditions,
                conclusion=new_id,
                confidence=expl.precision * expl.coverage,
                provenance=rulebase.split_provenance(parent_kb, item.rec_id),
            )
            pairs.append((new_id, rule))
            touched.add(new_id)
        self.kb = rulebase.apply_split(self.kb, parent_kb, pairs)
        return touched

    def _apply_merge(self, item: PendingRecommendation) -> set[int]:
        rec: MergeRecommendation = item.rec
        j_kb = self.canon_to_kb[rec.pair[0]]
        k_kb = self.canon_to_kb[rec.pair[1]]
        new_id = self.next_label_id
        self.next_label_id += 1
        self.label_names[new_id] = f"{self.name_of(j_kb)}+{self.name_of(k_kb)}"
        self.kb = rulebase.apply_merge(self.kb, (j_kb, k_kb), new_id)
        return {j_kb, k_kb, new_id}

    def iterate(self, decisions: list[Decision]) -> "Session":
        """Apply one round of expert decisions and recompute everything.

        Accepted splits are applied first, then accepted merges in pending
        order; convergence is declared when no decision accepted anything.
        """
        by_id = self.pending_by_id()
        seen: set[str] = set()
        stamped: list[Decision] = []
        for d in decisions:
            if d.recommendation_id not in by_id:
                raise ValidationError(
                    f"decision for unknown or stale recommendation {d.recommendation_id!r}")
            if d.recommendation_id in seen:
                raise ValidationError(
                    f"duplicate decision for recommendation {d.recommendation_id!r}")
            seen.add(d.recommendation_id)
            stamped.append(d if d.timestamp else
                           Decision(d.recommendation_id, d.verdict, d.note,
                                    d.actor, _utcnow()))

        accepted = [d for d in stamped if d.verdict == "accept"]
        touched: set[int] = set()
        for d in accepted:
            item = by_id[d.recommendation_id]
            if item.kind == "split":
                touched |= self._apply_split(item)
        for d in accepted:
            item = by_id[d.recommendation_id]
            if item.kind == "merge":
                j_kb = self.canon_to_kb[item.rec.pair[0]]
                k_kb = self.canon_to_kb[item.rec.pair[1]]
                if touched & {j_kb, k_kb}:
                    continue  # stale: labels changed this iteration; re-derive next round
                touched |= self._apply_merge(item)

        self.converged = not accepted
        self.iteration += 1
        for d in stamped:
            self.decisions.append(d)
            self.decision_iterations.append(self.iteration)
        self.staged = []
        self._refresh()
        self._append_metrics()
        if self.store is not None:
            self.store.save(self, log_decisions=stamped)
        return self

    def auto_expert(self, accept_threshold: float,
                    iteration_cap: int = ITERATION_CAP) -> "Session":
        """Scripted expert: accept everything at or above the threshold,
        iterate to convergence or the iteration cap."""
        if not 0.0 <= accept_threshold <= 1.01:
            raise ValidationError(
                f"accept_threshold must be in [0, 1.01], got {accept_threshold}")
        while not self.converged and self.iteration < iteration_cap:
            decisions = [
                Decision(p.rec_id,
                         "accept" if p.rec.confidence >= accept_threshold else "reject",
                         actor="auto", timestamp=_utcnow())
                for p in self.pending
            ]
            self.iterate(decisions)
        return self


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def start(ds: LabeledDataset, params: RecommendParams,
          kb: KnowledgeBase | None = None, *,
          session_id: str = "session",
          axis_mode: str = "column",
          reference_labels=None,
          rule_config: RuleConfig | None = None,
          store: "SessionStore | None" = None) -> Session:
    """Open a refinement session.

    When no knowledge base is given, the dataset's expert labels are wrapped
    into a label-holding KB so the loop is uniform. When one is given, the
    expert labeling is derived from it. Metrics are computed against
    ``reference_labels`` when provided (e.g. ground truth in benchmarks),
    otherwise against the automated clustering.
    """
    ds.require_clusters()
    if kb is None:
        kb = rulebase.wrapper_kb(ds)
    elif tuple(ds.feature_names) != kb.schema:
        raise ValidationError("dataset features do not match the KB schema")
    inverse = {v: k for k, v in ds.expert_name_map.items()}
    label_names = {int(i): inverse.get(int(i), str(int(i)))
                   for i in np.unique(ds.expert_labels)}
    if reference_labels is not None:
        reference = np.asarray(reference_labels, dtype=np.int64)
        if reference.shape != (ds.n,):
            raise ValidationError("reference labels must have one entry per row")
        has_reference = True
    else:
        reference = ds.cluster_labels.copy()
        has_reference = False
    session = Session(
        session_id=session_id,
        params=params,
        axis_mode=axis_mode,
        base_ds=ds,
        kb=kb,
        label_names=label_names,
        next_label_id=int(ds.expert_labels.max()) + 1,
        reference_labels=reference,
        has_reference=has_reference,
        rule_config=rule_config or RuleConfig(),
        store=store,
    )
    session._refresh()
    session._append_metrics()
    if store is not None:
        store.save(session, initial=True)
    return session


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def data_dir_from_env(explicit: str | None = None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get("KNAC_DATA_DIR", "knac_data"))


class SessionStore:
    """Directory-per-session persistence under a data directory."""

    def __init__(self, base_dir):
        self.base = Path(base_dir)
        self.base.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        return self.base / session_id

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.base.iterdir()
                      if (p / "session.json").exists())

    def exists(self, session_id: str) -> bool:
        return (self.path(session_id) / "session.json").exists()

    def save(self, session: Session, initial: bool = False,
             log_decisions: list[Decision] | None = None) -> None:
        root = self.path(session.session_id)
        (root / "kb").mkdir(parents=True, exist_ok=True)
        if initial or not (root / "data.csv").exists():
            save_dataset(session.base_ds, root / "data.csv", root / "expert.csv",
                         root / "clusters.csv", root / "label_map.json")
            if session.has_reference:
                (root / "reference.csv").write_text(
                    "\n".join(str(int(v)) for v in session.reference_labels) + "\n",
                    encoding="utf-8")
        kb_file = root / "kb" / f"v{session.kb.version}.json"
        if not kb_file.exists():
            kb_file.write_text(session.kb.to_json(), encoding="utf-8")
        state = {
            "axis_mode": session.axis_mode,
            "converged": session.converged,
            "decision_iterations": session.decision_iterations,
            "decisions": [d.to_json_dict() for d in session.decisions],
            "has_reference": session.has_reference,
            "id": session.session_id,
            "iteration": session.iteration,
            "kb_version": session.kb.version,
            "label_names": {str(k): v for k, v in sorted(session.label_names.items())},
            "metrics_history": [m.to_json_dict() for m in session.metrics_history],
            "next_label_id": session.next_label_id,
            "params": session.params.to_json_dict(),
            "rule_config": {
                "max_conditions": session.rule_config.max_conditions,
                "pair_search_limit": session.rule_config.pair_search_limit,
                "precision_target": session.rule_config.precision_target,
                "quantile_grid": session.rule_config.quantile_grid,
            },
            "staged": [d.to_json_dict() for d in session.staged],
        }
        (root / "session.json").write_text(json_dumps(state), encoding="utf-8")
        if log_decisions is not None:
            line = json.dumps(
                {"decisions": [d.to_json_dict() for d in log_decisions],
                 "iteration": session.iteration},
                sort_keys=True)
            with open(root / "decisions.log", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def load(self, session_id: str) -> Session:
        root = self.path(session_id)
        state_file = root / "session.json"
        if not state_file.exists():
            raise ValidationError(f"no session named {session_id!r} under {self.base}")
        state = json.loads(state_file.read_text(encoding="utf-8"))
        ds = load_dataset(root / "data.csv", root / "expert.csv", root / "clusters.csv")
        kb_file = root / "kb" / f"v{state['kb_version']}.json"
        kb = KnowledgeBase.from_json(kb_file.read_text(encoding="utf-8"))
        if state["has_reference"]:
            reference = np.array(
                [int(line) for line in
                 (root / "reference.csv").read_text(encoding="utf-8").split()],
                dtype=np.int64)
        else:
            reference = ds.cluster_labels.copy()
        session = Session(
            session_id=state["id"],
            params=RecommendParams(**state["params"]),
            axis_mode=state["axis_mode"],
            base_ds=ds,
            kb=kb,
            label_names={int(k): v for k, v in state["label_names"].items()},
            next_label_id=int(state["next_label_id"]),
            reference_labels=reference,
            has_reference=state["has_reference"],
            rule_config=RuleConfig(**state["rule_config"]),
            iteration=int(state["iteration"]),
            converged=bool(state["converged"]),
            decisions=[Decision.from_json_dict(d) for d in state["decisions"]],
            decision_iterations=[int(i) for i in state["decision_iterations"]],
            staged=[Decision.from_json_dict(d) for d in state["staged"]],
            metrics_history=[AgreementScores(**m) for m in state["metrics_history"]],
            store=self,
        )
        session._refresh()
        return session

    def decision_log(self, session_id: str) -> list[dict]:
        log = self.path(session_id) / "decisions.log"
        if not log.exists():
            return []
        return [json.loads(line) for line in
                log.read_text(encoding="utf-8").splitlines() if line.strip()]

    def replay(self, session_id: str) -> KnowledgeBase:
        """Rebuild the final KB by replaying the decision log from the
        initial state; the event-sourcing check compares it byte-for-byte
        against the persisted KB."""
        root = self.path(session_id)
        state = json.loads((root / "session.json").read_text(encoding="utf-8"))
        ds = load_dataset(root / "data.csv", root / "expert.csv", root / "clusters.csv")
        kb0 = KnowledgeBase.from_json((root / "kb" / "v0.json").read_text(encoding="utf-8"))
        reference = None
        if state["has_reference"]:
            reference = [int(line) for line in
                         (root / "reference.csv").read_text(encoding="utf-8").split()]
        session = start(
            ds, RecommendParams(**state["params"]), kb0,
            session_id=f"{session_id}-replay",
            axis_mode=state["axis_mode"],
            reference_labels=reference,
            rule_config=RuleConfig(**state["rule_config"]),
        )
        for entry in self.decision_log(session_id):
            session.iterate([Decision.from_json_dict(d) for d in entry["decisions"]])
        return session.kb
