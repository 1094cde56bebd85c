import numpy as np
import pytest

from knac.errors import ValidationError
from knac.metrics import agreement
from knac.recommend import RecommendParams
from knac.scenarios import merge_scenario, refine_scenario, split_scenario
from knac.session import Decision, SessionStore, start


@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path / "data")


class TestStart:
    def test_blob_scenario_has_pending(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s1", store=store)
        assert s.pending
        assert s.iteration == 0
        assert not s.converged
        assert len(s.metrics_history) == 1

    def test_impossible_thresholds_converge_immediately(self, store):
        sc = split_scenario(7)
        # with lambda_split=0 the candidate score is the H value itself (<= 1)
        params = RecommendParams(epsilon_split=1.01, epsilon_merge=1.01,
                                 lambda_split=0.0)
        s = start(sc.ds, params, session_id="s2", store=store)
        assert s.pending == []
        s.iterate([])
        assert s.converged

    def test_restart_round_trip(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s3", store=store)
        loaded = store.load("s3")
        assert loaded.iteration == s.iteration
        assert [p.rec_id for p in loaded.pending] == [p.rec_id for p in s.pending]
        assert [p.to_json_dict() for p in loaded.pending] == \
            [p.to_json_dict() for p in s.pending]

    def test_requires_cluster_labels(self, store):
        from knac.dataset import BlobSpec, generate_blobs

        ds = generate_blobs(BlobSpec(n_blobs=2, points_per_blob=5, dim=2, seed=0))
        with pytest.raises(ValidationError):
            start(ds, RecommendParams(), session_id="s4", store=store)


class TestIterate:
    def test_accepted_split_not_rerecommended(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s5", store=store)
        split_ids = [p.rec_id for p in s.pending if p.kind == "split"]
        assert len(split_ids) == 1
        s.iterate([Decision(split_ids[0], "accept")])
        assert all(p.kind != "split" for p in s.pending)
        assert not s.converged

    def test_all_reject_converges_kb_unchanged(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s6", store=store)
        version_before = s.kb.version
        s.iterate([Decision(p.rec_id, "reject") for p in s.pending])
        assert s.converged
        assert s.kb.version == version_before

    def test_empty_decisions_idempotent_on_pending(self, store):
        sc = refine_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s7", store=store)
        before = [(p.kind, p.rec.to_json_dict(), [e.to_json_dict() for e in p.explanations])
                  for p in s.pending]
        s.iterate([])
        after = [(p.kind, p.rec.to_json_dict(), [e.to_json_dict() for e in p.explanations])
                 for p in s.pending]
        assert before == after
        assert s.converged

    def test_unknown_decision_rejected(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s8", store=store)
        with pytest.raises(ValidationError, match="unknown or stale"):
            s.iterate([Decision("nope", "accept")])

    def test_duplicate_decision_rejected(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s9", store=store)
        rid = s.pending[0].rec_id
        with pytest.raises(ValidationError, match="duplicate"):
            s.iterate([Decision(rid, "accept"), Decision(rid, "reject")])

    def test_merge_improves_metrics(self, store):
        sc = merge_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s10", store=store,
                  reference_labels=sc.truth)
        merge_ids = [p.rec_id for p in s.pending if p.kind == "merge"]
        assert len(merge_ids) == 1
        v_before = s.metrics_history[-1].v_measure
        s.iterate([Decision(merge_ids[0], "accept")])
        assert s.metrics_history[-1].v_measure >= v_before
        assert s.metrics_history[-1].v_measure == pytest.approx(1.0)


class TestAutoExpert:
    def test_threshold_above_one_converges_in_one_round(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s11", store=store)
        s.auto_expert(1.01)
        assert s.converged
        assert s.iteration == 1
        assert s.kb.version == 0

    def test_refinement_recovers_ground_truth(self, store):
        sc = refine_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s12", store=store,
                  reference_labels=sc.truth)
        corrupted = agreement(sc.truth, sc.ds.expert_labels).v_measure
        s.auto_expert(0.8)
        final = agreement(sc.truth, s.ds.expert_labels).v_measure
        assert s.converged
        assert corrupted <= 0.90
        assert final >= 0.95
        v_history = [m.v_measure for m in s.metrics_history]
        assert all(b >= a - 1e-9 for a, b in zip(v_history, v_history[1:]))

    def test_iteration_cap_respected(self, store):
        sc = refine_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s13", store=store)
        s.auto_expert(0.0, iteration_cap=1)
        assert s.iteration == 1
        assert not s.converged  # explicit non-convergence status at the cap

    def test_bad_threshold_rejected(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="s14", store=store)
        with pytest.raises(ValidationError):
            s.auto_expert(2.0)


class TestPersistence:
    def test_save_load_save_byte_identical(self, store):
        sc = refine_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="p1", store=store,
                  reference_labels=sc.truth)
        s.auto_expert(0.8)
        root = store.path("p1")
        before = {p.relative_to(root): p.read_bytes()
                  for p in root.rglob("*") if p.is_file()}
        reloaded = store.load("p1")
        store.save(reloaded)
        after = {p.relative_to(root): p.read_bytes()
                 for p in root.rglob("*") if p.is_file()}
        assert before == after

    def test_decision_log_replay_reconstructs_kb(self, store):
        sc = refine_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="p2", store=store,
                  reference_labels=sc.truth)
        s.auto_expert(0.8)
        replayed = store.replay("p2")
        assert replayed.to_json() == s.kb.to_json()
        persisted = (store.path("p2") / "kb" / f"v{s.kb.version}.json").read_text()
        assert replayed.to_json() == persisted

    def test_no_decision_lost(self, store):
        sc = split_scenario(7)
        s = start(sc.ds, RecommendParams(), session_id="p3", store=store)
        rid = [p.rec_id for p in s.pending if p.kind == "split"][0]
        s.iterate([Decision(rid, "accept", note="looks right")])
        entries = store.decision_log("p3")
        assert len(entries) == 1
        assert entries[0]["decisions"][0]["recommendation_id"] == rid
        assert entries[0]["decisions"][0]["note"] == "looks right"
        loaded = store.load("p3")
        assert loaded.decisions[0].note == "looks right"

    def test_unknown_session_rejected(self, store):
        with pytest.raises(ValidationError):
            store.load("ghost")
