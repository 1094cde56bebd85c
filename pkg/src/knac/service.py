"""HTTP session API powering the interactive review loop.

All state lives in the session store; every response is a pure projection of
the stored session, so a service restart loses nothing. Mutations on one
session are serialized behind a per-session lock and an optimistic iteration
token: decision posts carry the token of the view they were made against and
are rejected with 409 when it is stale.
"""

from __future__ import annotations

import base64
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .dataset import load_dataset
from .clusterer import KMeansConfig, kmeans
from .errors import KnacError, ValidationError
from .explain import bounding_box
from .recommend import RecommendParams
from .rulebase import kb_text
from .session import Decision, Session, SessionStore, start

MAX_UPLOAD_BYTES = 50 * 1024 * 1024
MAX_ROWS = 200_000
MAX_SCATTER_POINTS = 5000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status, self.code, self.message = status, code, message


def _bitmask(mask: np.ndarray) -> dict:
    return {
        "n": int(mask.shape[0]),
        "b64": base64.b64encode(np.packbits(mask.astype(np.uint8)).tobytes()).decode("ascii"),
    }


def _token(session: Session) -> str:
    return f"it{session.iteration}"


def session_view(session: Session) -> dict:
    ds = session.ds
    return {
        "id": session.session_id,
        "iteration": session.iteration,
        "iteration_token": _token(session),
        "converged": session.converged,
        "kb_version": session.kb.version,
        "params": session.params.to_json_dict(),
        "axis_mode": session.axis_mode,
        "n_rows": ds.n,
        "feature_names": list(ds.feature_names),
        "expert_names": [ds.expert_name(i) for i in range(ds.n_expert)],
        "cluster_names": [ds.cluster_name(j) for j in range(ds.n_cluster)],
        "contingency": session.contingency.to_json_dict(),
        "h_split": session.h_split.to_json_dict(),
        "h_merge": session.h_merge.to_json_dict(),
        "recommendations": [p.to_json_dict() for p in session.pending],
        "staged": [d.to_json_dict() for d in session.staged],
        "metrics_history": [m.to_json_dict() for m in session.metrics_history],
        "has_reference": session.has_reference,
    }


def explanation_view(session: Session, rec_id: str) -> dict:
    item = session.pending_by_id().get(rec_id)
    if item is None:
        raise ApiError(409, "stale_recommendation",
                       f"recommendation {rec_id!r} is not pending")
    ds = session.ds
    rules = []
    for rule in item.explanations:
        if item.kind == "split":
            slice_mask = ds.expert_labels == item.rec.expert_label
            label_name = ds.cluster_name(rule.target_label)
        else:
            j, k = item.rec.pair
            slice_mask = (ds.expert_labels == j) | (ds.expert_labels == k)
            label_name = ds.expert_name(rule.target_label)
        conditions = []
        for cond in rule.conditions:
            cond_mask = cond.mask(ds.features, ds.feature_names) & slice_mask
            conditions.append({**cond.to_json_dict(), "match_mask": _bitmask(cond_mask)})
        rules.append({
            "target_label": rule.target_label,
            "target_name": label_name,
            "text": rule.text(label_name),
            "precision": rule.precision,
            "coverage": rule.coverage,
            "confidence": rule.precision * rule.coverage,
            "conditions": conditions,
            "rule_mask": _bitmask(rule.mask(ds.features, ds.feature_names) & slice_mask),
        })
    boxes = []
    if item.kind == "split":
        boxes.append({**bounding_box(ds, item.rec.expert_label, source="expert").to_json_dict(),
                      "source": "expert", "name": ds.expert_name(item.rec.expert_label)})
        for c in item.rec.candidates:
            boxes.append({**bounding_box(ds, c, source="cluster").to_json_dict(),
                          "source": "cluster", "name": ds.cluster_name(c)})
    else:
        for e in item.rec.pair:
            boxes.append({**bounding_box(ds, e, source="expert").to_json_dict(),
                          "source": "expert", "name": ds.expert_name(e)})
    return {
        "id": item.rec_id,
        "kind": item.kind,
        "recommendation": item.rec.to_json_dict(),
        "render_text": item.render_text,
        "rules": rules,
        "bounding_boxes": boxes,
    }


class ServiceState:
    """Session cache plus per-session mutation locks.

    Locks are reentrant: endpoints hold the session lock across validation
    and mutation, and cache misses inside that window reacquire it to load.
    """

    def __init__(self, store: SessionStore):
        self.store = store
        self.cache: dict[str, Session] = {}
        self.locks: dict[str, threading.RLock] = {}
        self.registry_lock = threading.Lock()

    def lock_for(self, session_id: str) -> threading.RLock:
        with self.registry_lock:
            return self.locks.setdefault(session_id, threading.RLock())

    def get(self, session_id: str) -> Session:
        hit = self.cache.get(session_id)
        if hit is not None:
            return hit
        if not self.store.exists(session_id):
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        with self.lock_for(session_id):
            if session_id not in self.cache:
                self.cache[session_id] = self.store.load(session_id)
            return self.cache[session_id]

    def put(self, session: Session) -> None:
        self.cache[session.session_id] = session


def _parse_decisions(payload, session: Session) -> list[Decision]:
    if not isinstance(payload, list):
        raise ApiError(400, "bad_request", "decisions must be a list")
    pending = session.pending_by_id()
    decisions = []
    for item in payload:
        rid = item.get("recommendation_id")
        verdict = item.get("verdict")
        if rid not in pending:
            raise ApiError(409, "stale_recommendation",
                           f"recommendation {rid!r} is not pending")
        if verdict not in ("accept", "reject"):
            raise ApiError(400, "bad_verdict", f"verdict {verdict!r}")
        decisions.append(Decision(rid, verdict, item.get("note"),
                                  item.get("actor", "expert")))
    return decisions


def _check_token(body: dict, session: Session) -> None:
    token = body.get("iteration_token")
    if token != _token(session):
        raise ApiError(409, "stale_token",
                       f"token {token!r} does not match {_token(session)!r}")


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="knac session API")
    state = ServiceState(store)
    app.state.service_state = state

    @app.exception_handler(ApiError)
    async def handle_api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(KnacError)
    async def handle_knac_error(_req: Request, exc: KnacError):
        status = 400 if isinstance(exc, ValidationError) else 500
        return JSONResponse(status_code=status,
                            content={"code": "validation_error", "message": str(exc)})

    @app.get("/api/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.post("/api/sessions", status_code=201)
    async def create_session(
        data: UploadFile,
        expert: UploadFile,
        clusters: UploadFile | None = None,
        reference: UploadFile | None = None,
        session_id: str = Form(...),
        epsilon_split: float = Form(0.8),
        lambda_split: float = Form(0.1),
        epsilon_merge: float = Form(0.8),
        lambda_merge: float = Form(0.2),
        linkage: str = Form("average"),
        silhouette_cap: int = Form(2000),
        seed: int = Form(0),
        axis_mode: str = Form("column"),
        kmeans_k: int | None = Form(None),
    ):
        import tempfile

        if store.exists(session_id):
            raise ApiError(400, "duplicate_session",
                           f"session {session_id!r} already exists")
        params = RecommendParams(epsilon_split, lambda_split, epsilon_merge,
                                 lambda_merge, linkage, silhouette_cap, seed)
        with tempfile.TemporaryDirectory() as tmp:
            paths = {}
            for name, upload in (("data", data), ("expert", expert),
                                 ("clusters", clusters), ("reference", reference)):
                if upload is None:
                    continue
                blob = await upload.read()
                if len(blob) > MAX_UPLOAD_BYTES:
                    raise ApiError(400, "too_large",
                                   f"{name} exceeds {MAX_UPLOAD_BYTES} bytes")
                path = Path(tmp) / f"{name}.csv"
                path.write_bytes(blob)
                paths[name] = path
            ds = load_dataset(paths["data"], paths["expert"], paths.get("clusters"))
            if ds.n > MAX_ROWS:
                raise ApiError(400, "too_large", f"row cap is {MAX_ROWS}, got {ds.n}")
            if not ds.has_clusters:
                if kmeans_k is None:
                    raise ApiError(400, "missing_clusters",
                                   "upload a clusters file or pass kmeans_k")
                ds = ds.with_cluster_labels(kmeans(ds.features, KMeansConfig(k=kmeans_k, seed=seed)))
            reference_labels = None
            if "reference" in paths:
                from .dataset import _canonicalize, _parse_labels
                raw, _ = _parse_labels(paths["reference"])
                reference_labels, _ = _canonicalize(raw)
            session = start(ds, params, session_id=session_id, axis_mode=axis_mode,
                            reference_labels=reference_labels, store=store)
        state.put(session)
        return {"id": session.session_id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view(state.get(session_id))

    @app.get("/api/sessions/{session_id}/recommendations/{rec_id}/explanation")
    def get_explanation(session_id: str, rec_id: str):
        return explanation_view(state.get(session_id), rec_id)

    @app.post("/api/sessions/{session_id}/decisions")
    async def post_decisions(session_id: str, request: Request):
        body = await request.json()
        lock = state.lock_for(session_id)
        with lock:
            session = state.get(session_id)
            _check_token(body, session)
            decisions = _parse_decisions(body.get("decisions"), session)
            session.staged = (
                [d for d in session.staged
                 if d.recommendation_id not in {n.recommendation_id for n in decisions}]
                + decisions)
            if session.store is not None:
                session.store.save(session)
            return {"staged": [d.to_json_dict() for d in session.staged],
                    "iteration_token": _token(session)}

    @app.post("/api/sessions/{session_id}/iterate")
    async def post_iterate(session_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        lock = state.lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise ApiError(409, "iteration_in_progress",
                           "another iteration is being applied")
        try:
            session = state.get(session_id)
            _check_token(body, session)
            decisions = session.staged
            if body.get("decisions") is not None:
                decisions = _parse_decisions(body["decisions"], session)
            session.iterate(decisions)
            return session_view(session)
        finally:
            lock.release()

    @app.get("/api/sessions/{session_id}/kb")
    def get_kb(session_id: str):
        session = state.get(session_id)
        return {"kb": session.kb.to_json_dict(),
                "text": kb_text(session.kb, session.name_of)}

    @app.get("/api/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        session = state.get(session_id)
        return {"metrics_history": [m.to_json_dict() for m in session.metrics_history],
                "has_reference": session.has_reference}

    @app.get("/api/sessions/{session_id}/points")
    def get_points(session_id: str, fx: int = 0, fy: int = 1):
        session = state.get(session_id)
        ds = session.ds
        if not (0 <= fx < ds.d and 0 <= fy < ds.d):
            raise ApiError(400, "bad_request", f"feature indexes out of range 0..{ds.d - 1}")
        idx = np.arange(ds.n)
        if ds.n > MAX_SCATTER_POINTS:
            idx = np.sort(np.random.default_rng(0).choice(ds.n, MAX_SCATTER_POINTS, replace=False))
        return {
            "row_index": idx.tolist(),
            "x": ds.features[idx, fx].tolist(),
            "y": ds.features[idx, fy].tolist(),
            "expert": ds.expert_labels[idx].tolist(),
            "cluster": ds.cluster_labels[idx].tolist(),
        }

    import os

    ui_dir = Path(os.environ.get(
        "KNAC_UI_DIR",
        Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"))
    if ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
