import base64
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from knac.dataset import save_dataset
from knac.recommend import RecommendParams
from knac.scenarios import split_scenario
from knac.service import create_app
from knac.session import SessionStore, start


@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path / "svc")


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


@pytest.fixture
def demo_session(store):
    sc = split_scenario(7)
    start(sc.ds, RecommendParams(), session_id="demo",
          reference_labels=sc.truth, store=store)
    return "demo"


def upload_files(tmp_path):
    sc = split_scenario(7)
    paths = {n: tmp_path / f"{n}.csv" for n in ("data", "expert", "clusters")}
    save_dataset(sc.ds, paths["data"], paths["expert"], paths["clusters"])
    return paths


class TestSessionLifecycle:
    def test_create_fetch_matches_direct_pipeline(self, client, tmp_path, store):
        paths = upload_files(tmp_path)
        with open(paths["data"], "rb") as d, open(paths["expert"], "rb") as e, \
                open(paths["clusters"], "rb") as c:
            resp = client.post("/api/sessions", files={
                "data": ("data.csv", d, "text/csv"),
                "expert": ("expert.csv", e, "text/csv"),
                "clusters": ("clusters.csv", c, "text/csv"),
            }, data={"session_id": "web"})
        assert resp.status_code == 201, resp.text
        assert resp.json() == {"id": "web"}
        view = client.get("/api/sessions/web").json()
        assert view["iteration"] == 0
        assert len(view["recommendations"]) == 1
        assert view["recommendations"][0]["kind"] == "split"
        # identical inputs through the library yield identical payloads
        sc = split_scenario(7)
        direct = start(sc.ds, RecommendParams(), session_id="direct",
                       store=SessionStore(tmp_path / "direct"))
        direct_recs = [p.to_json_dict() for p in direct.pending]
        web_recs = view["recommendations"]
        assert [r["recommendation"] for r in web_recs] == \
            [r["recommendation"] for r in direct_recs]

    def test_unknown_session_404(self, client):
        resp = client.get("/api/sessions/ghost")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_session"

    def test_list_sessions(self, client, demo_session):
        assert demo_session in client.get("/api/sessions").json()["sessions"]

    def test_duplicate_session_rejected(self, client, tmp_path, demo_session):
        paths = upload_files(tmp_path)
        with open(paths["data"], "rb") as d, open(paths["expert"], "rb") as e, \
                open(paths["clusters"], "rb") as c:
            resp = client.post("/api/sessions", files={
                "data": ("data.csv", d), "expert": ("expert.csv", e),
                "clusters": ("clusters.csv", c),
            }, data={"session_id": demo_session})
        assert resp.status_code == 400
        assert resp.json()["code"] == "duplicate_session"


class TestDecisionsAndIterate:
    def test_accept_and_iterate(self, client, demo_session):
        view = client.get(f"/api/sessions/{demo_session}").json()
        rid = view["recommendations"][0]["id"]
        token = view["iteration_token"]
        resp = client.post(f"/api/sessions/{demo_session}/decisions", json={
            "iteration_token": token,
            "decisions": [{"recommendation_id": rid, "verdict": "accept"}],
        })
        assert resp.status_code == 200, resp.text
        resp = client.post(f"/api/sessions/{demo_session}/iterate",
                           json={"iteration_token": token})
        assert resp.status_code == 200, resp.text
        after = resp.json()
        assert after["iteration"] == 1
        assert all(r["id"] != rid for r in after["recommendations"])
        metrics = client.get(f"/api/sessions/{demo_session}/metrics").json()
        assert len(metrics["metrics_history"]) == 2

    def test_stale_recommendation_conflict(self, client, demo_session):
        token = client.get(f"/api/sessions/{demo_session}").json()["iteration_token"]
        resp = client.post(f"/api/sessions/{demo_session}/decisions", json={
            "iteration_token": token,
            "decisions": [{"recommendation_id": "bogus", "verdict": "accept"}],
        })
        assert resp.status_code == 409
        assert resp.json()["code"] == "stale_recommendation"

    def test_stale_token_conflict(self, client, demo_session):
        resp = client.post(f"/api/sessions/{demo_session}/decisions", json={
            "iteration_token": "it99", "decisions": [],
        })
        assert resp.status_code == 409
        assert resp.json()["code"] == "stale_token"

    def test_concurrent_iterate_conflict(self, client, demo_session):
        app = client.app
        lock = app.state.service_state.lock_for(demo_session)
        token = client.get(f"/api/sessions/{demo_session}").json()["iteration_token"]
        assert lock.acquire(blocking=False)
        try:
            resp = client.post(f"/api/sessions/{demo_session}/iterate",
                               json={"iteration_token": token})
            assert resp.status_code == 409
            assert resp.json()["code"] == "iteration_in_progress"
        finally:
            lock.release()


class TestExplanationEndpoint:
    def test_rules_masks_and_boxes(self, client, demo_session):
        view = client.get(f"/api/sessions/{demo_session}").json()
        rid = view["recommendations"][0]["id"]
        resp = client.get(
            f"/api/sessions/{demo_session}/recommendations/{rid}/explanation")
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["kind"] == "split"
        assert len(payload["rules"]) == 2
        for rule in payload["rules"]:
            assert 0.0 <= rule["confidence"] <= 1.0
            assert rule["confidence"] == pytest.approx(
                rule["precision"] * rule["coverage"], abs=1e-12)
            for cond in rule["conditions"]:
                mask = cond["match_mask"]
                bits = np.unpackbits(
                    np.frombuffer(base64.b64decode(mask["b64"]), dtype=np.uint8))
                assert mask["n"] == view["n_rows"]
                assert bits[:mask["n"]].sum() > 0
        assert payload["bounding_boxes"]
        assert all(len(b["intervals"]) == len(view["feature_names"])
                   for b in payload["bounding_boxes"])

    def test_unknown_recommendation_409(self, client, demo_session):
        resp = client.get(
            f"/api/sessions/{demo_session}/recommendations/nope/explanation")
        assert resp.status_code == 409
        assert resp.json()["code"] == "stale_recommendation"


class TestStability:
    def test_view_byte_stable_and_restart_safe(self, client, demo_session, store):
        a = client.get(f"/api/sessions/{demo_session}").content
        b = client.get(f"/api/sessions/{demo_session}").content
        assert a == b
        fresh = TestClient(create_app(store))  # new app over the same store
        c = fresh.get(f"/api/sessions/{demo_session}").content
        assert a == c

    def test_kb_endpoint(self, client, demo_session):
        payload = client.get(f"/api/sessions/{demo_session}/kb").json()
        assert payload["kb"]["version"] == 0
        assert payload["text"].startswith("# knowledge base")

    def test_points_endpoint(self, client, demo_session):
        payload = client.get(f"/api/sessions/{demo_session}/points").json()
        assert len(payload["x"]) == len(payload["y"]) == len(payload["expert"])
        resp = client.get(f"/api/sessions/{demo_session}/points?fx=5&fy=0")
        assert resp.status_code == 400
