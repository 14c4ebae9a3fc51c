"""HTTP routing service.

A thin FastAPI layer over a RoutingEngine that owns the published snapshot.
Reads are lock-free: each request grabs the current snapshot reference once
and uses it end to end, so a concurrent publish can never produce a torn
view. Mutations (calibrate, add-config) serialize behind a lock and publish
a new snapshot version atomically, to memory and to the snapshot directory.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import replace
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import adaptive as adaptive_mod
from .core import ModelConfiguration, ResponseCell, Scalarization, TradeoffProfile, build_pool, config_id, load_matrix
from .costing import compute_costs, load_prices, merge_costs, raw_cost_of_cells
from .embed import EmbeddingStore, HashFeaturizer, RemoteEmbeddingService, load_embedding_store
from .errors import (
    DataFormatError,
    EngineError,
    NoSnapshotError,
    RemoteEmbeddingError,
    ValidationError,
)
from .irt import TrainingConfig, ability_ordering, train
from .snapshot import (
    SNAPSHOT_DIR_ENV,
    EngineSnapshot,
    load_latest_snapshot,
    make_snapshot,
    publish_to_dir,
    route_embedding,
)


class RoutingEngine:
    """Owns the live snapshot and the calibration/onboarding workflows."""

    def __init__(self, snapshot_dir: str | None = None, embed_source=None,
                 snapshot: EngineSnapshot | None = None):
        if snapshot_dir is None:
            snapshot_dir = os.environ.get(SNAPSHOT_DIR_ENV) or None
        self.snapshot_dir = snapshot_dir
        self._snapshot = snapshot
        self._store: EmbeddingStore | None = None
        self._embed_source = embed_source
        self._hash_cache: HashFeaturizer | None = None
        self._write_lock = threading.Lock()
        if snapshot is None and snapshot_dir:
            self._snapshot = load_latest_snapshot(snapshot_dir)

    # -- snapshot access ---------------------------------------------------

    @property
    def snapshot(self) -> EngineSnapshot | None:
        return self._snapshot

    def require_snapshot(self) -> EngineSnapshot:
        snap = self._snapshot
        if snap is None:
            raise NoSnapshotError("no snapshot published yet; calibrate first")
        return snap

    def publish(self, snap: EngineSnapshot) -> int:
        if self.snapshot_dir:
            publish_to_dir(snap, self.snapshot_dir)
        self._snapshot = snap  # single reference swap: readers see old or new
        return snap.version

    # -- embedding for ad-hoc texts ---------------------------------------

    def _embed_text(self, text: str, dim: int):
        src = self._embed_source
        if isinstance(src, EmbeddingStore):
            return src.embed(text)  # text is treated as a stored query id
        if src is not None:
            return src.embed(text)
        if self._hash_cache is None or self._hash_cache.dim != dim:
            self._hash_cache = HashFeaturizer(dim)
        return self._hash_cache.embed(text)

    # -- request paths -----------------------------------------------------

    def route(self, *, text: str | None, embedding, w1: float, scalarization: str):
        """Route one query; returns (decision, timing dict, snapshot version)."""
        snap = self.require_snapshot()
        if (text is None) == (embedding is None):
            raise ValidationError("provide exactly one of 'text' or 'embedding'")
        t0 = time.perf_counter()
        vec = self._embed_text(text, snap.dim) if embedding is None else embedding
        t1 = time.perf_counter()
        profile = TradeoffProfile(w1=w1, scalarization=Scalarization(scalarization))
        decision = route_embedding(snap, vec, profile)
        t2 = time.perf_counter()
        timing = {"embed_ms": (t1 - t0) * 1e3, "route_ms": (t2 - t1) * 1e3}
        return decision, timing, snap.version

    def calibrate(self, matrix_path: str, embeddings_path: str, prices_path: str,
                  training: TrainingConfig = TrainingConfig()) -> dict:
        with self._write_lock:
            matrix, dim = load_matrix(matrix_path)
            store = load_embedding_store(embeddings_path, dim=dim)
            prices = load_prices(prices_path)
            pool = build_pool(matrix.configs, prices)
            result = train(matrix, store, training)
            # Keep versions monotonic across recalibrations so recovery from
            # the snapshot directory always picks the newest publish.
            next_version = (self._snapshot.version if self._snapshot else 0) + 1
            params = replace(result.params, version=next_version)
            cost_table = compute_costs(matrix, pool, pool_version=next_version)
            snap = make_snapshot(params, cost_table, pool)
            version = self.publish(snap)
            self._store = store
            return {
                "version": version,
                "final_loss": result.final_loss,
                "ability_ordering": ability_ordering(result.params),
            }

    def add_config(self, model: str, budget, price_per_token: float,
                   responses_path: str, embeddings_path: str | None = None,
                   budget_queries: int | None = None) -> dict:
        with self._write_lock:
            snap = self.require_snapshot()
            cid = config_id(model, budget)
            if cid in snap.params.theta:
                raise ValidationError(f"configuration {cid!r} is already calibrated")
            store = self._store
            if embeddings_path is not None:
                store = load_embedding_store(embeddings_path, dim=snap.dim)
            if store is None:
                raise ValidationError(
                    "no embedding store available; pass embeddings_path or calibrate first")
            records = adaptive_mod.load_response_log(responses_path)
            candidates = [q for q in records if q in store]
            if not candidates:
                raise ValidationError("response log covers no queries with stored embeddings")

            def oracle(_cid: str, qid: str) -> int:
                return records[qid]["correct"]

            new_params, result = adaptive_mod.run_session(
                snap.params, cid, oracle, candidates, store, budget=budget_queries)
            probed = [
                ResponseCell(cid, s.query_id, s.response,
                             records[s.query_id]["reasoning_tokens"],
                             records[s.query_id]["completion_tokens"])
                for s in result.steps
            ]
            raw = raw_cost_of_cells(probed, price_per_token)
            cost_table = merge_costs(snap.cost_table, {cid: raw},
                                     pool_version=new_params.version)
            new_cfg = ModelConfiguration.make(model, budget, price_per_token)
            new_snap = make_snapshot(new_params, cost_table, snap.pool + (new_cfg,))
            version = self.publish(new_snap)
            self._store = store
            return {
                "version": version,
                "config_id": cid,
                "ability": result.theta_hat,
                "probed_queries": len(result.steps),
                "steps": [
                    {"step": s.step, "query_id": s.query_id, "response": s.response,
                     "theta_hat": s.theta_hat}
                    for s in result.steps
                ],
            }

    def list_configs(self) -> dict:
        snap = self.require_snapshot()
        rows = []
        for cfg in snap.pool:
            rows.append({
                "id": cfg.id,
                "model": cfg.model_name,
                "budget": cfg.budget,
                "price_per_token": cfg.price_per_token,
                "ability": cfg.ability,
                "raw_cost": snap.cost_table.raw_cost[cfg.id],
                "normalized_cost": snap.cost_table.normalized_cost[cfg.id],
            })
        rows.sort(key=lambda r: (-(r["ability"] if r["ability"] is not None else float("-inf")),
                                 r["id"]))
        return {"version": snap.version, "configs": rows}


def engine_from_config(cfg: dict) -> RoutingEngine:
    """Build an engine from a service config document.

    Recognized keys: snapshot_dir, embed {kind: hash | store | remote, ...}.
    """
    embed_cfg = cfg.get("embed") or {}
    kind = embed_cfg.get("kind", "hash")
    if kind == "hash":
        source = None  # hash featurizer is the built-in default
    elif kind == "store":
        source = load_embedding_store(embed_cfg["path"])
    elif kind == "remote":
        source = RemoteEmbeddingService(endpoint=embed_cfg.get("endpoint"),
                                        dim=embed_cfg.get("dim"))
    else:
        raise ValidationError(f"unknown embed kind {kind!r}")
    return RoutingEngine(snapshot_dir=cfg.get("snapshot_dir"), embed_source=source)


# ---------------------------------------------------------------------------
# HTTP layer


class RouteRequest(BaseModel):
    text: Optional[str] = None
    embedding: Optional[list[float]] = None
    w1: float
    scalarization: str = "linear"


class CalibrateRequest(BaseModel):
    matrix_path: str
    embeddings_path: str
    prices_path: str
    epochs: int = 100
    learning_rate: float = 5e-4
    batch_size: int = 32
    grad_clip_norm: float = 1.0
    seed: int = 0
    positive_discrimination: bool = False


class AddConfigRequest(BaseModel):
    model: str
    budget: int | str
    price_per_token: float
    responses_path: str
    embeddings_path: Optional[str] = None
    budget_queries: Optional[int] = None


def create_app(engine: RoutingEngine) -> FastAPI:
    app = FastAPI(title="routeiq", docs_url=None, redoc_url=None)

    @app.exception_handler(EngineError)
    async def _engine_error(_req, exc: EngineError):
        status = 400
        if isinstance(exc, NoSnapshotError):
            status = 503
        elif isinstance(exc, RemoteEmbeddingError):
            status = 502
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "message": str(exc)})

    @app.exception_handler(OSError)
    async def _os_error(_req, exc: OSError):
        return JSONResponse(status_code=400,
                            content={"error": "io-error", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        snap = engine.snapshot
        return {"status": "ok", "snapshot_version": snap.version if snap else None}

    @app.get("/configs")
    def configs():
        return engine.list_configs()

    @app.post("/route")
    def route(req: RouteRequest):
        decision, timing, version = engine.route(
            text=req.text, embedding=req.embedding, w1=req.w1,
            scalarization=req.scalarization)
        return {
            "config_id": decision.config_id,
            "predicted_performance": decision.predicted_performance,
            "predicted_cost": decision.predicted_cost,
            "scalar_score": decision.scalar_score,
            "w1": decision.profile.w1,
            "scalarization": decision.profile.scalarization.value,
            "timing": timing,
            "snapshot_version": version,
        }

    @app.post("/calibrate")
    def calibrate(req: CalibrateRequest):
        training = TrainingConfig(
            epochs=req.epochs, learning_rate=req.learning_rate,
            batch_size=req.batch_size, grad_clip_norm=req.grad_clip_norm,
            seed=req.seed, positive_discrimination=req.positive_discrimination)
        return engine.calibrate(req.matrix_path, req.embeddings_path,
                                req.prices_path, training)

    @app.post("/add-config")
    def add_config(req: AddConfigRequest):
        return engine.add_config(req.model, req.budget, req.price_per_token,
                                 req.responses_path, req.embeddings_path,
                                 req.budget_queries)

    return app
