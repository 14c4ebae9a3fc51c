"""
Routing service roundtrip
=========================

Calibrates an engine from files, exercises the HTTP surface in-process
(no sockets needed), and shows snapshot publication plus recovery from
the snapshot directory.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from routeiq import (
    TrainingConfig,
    generate_world,
    sample_matrix,
    save_embedding_store,
    save_matrix,
    save_prices,
)
from routeiq.service import RoutingEngine, create_app

workdir = Path(tempfile.mkdtemp(prefix="routing-demo-"))
print(f"working under {workdir}")

# -- write calibration inputs as the file formats the service consumes ------
world = generate_world(n_configs=6, n_queries=120, dim=8, seed=23)
matrix = sample_matrix(world)
save_matrix(matrix, workdir / "matrix.ldjson", dim=world.dim)
save_embedding_store(workdir / "embeddings.ldjson", world.embeddings)
save_prices(world.prices, workdir / "prices.json")

# -- boot an engine and calibrate over HTTP ---------------------------------
engine = RoutingEngine(snapshot_dir=str(workdir / "snapshots"))
client = TestClient(create_app(engine))

print("\nGET /healthz before calibration:", client.get("/healthz").json())
resp = client.post("/route", json={"text": "2+2?", "w1": 0.5})
print(f"routing before calibration -> {resp.status_code} {resp.json()['error']}")

resp = client.post("/calibrate", json={
    "matrix_path": str(workdir / "matrix.ldjson"),
    "embeddings_path": str(workdir / "embeddings.ldjson"),
    "prices_path": str(workdir / "prices.json"),
    "epochs": 40,
})
body = resp.json()
print(f"\ncalibrated: version {body['version']}, final loss {body['final_loss']:.4f}")
print(f"ability ordering: {body['ability_ordering']}")

# -- route: by raw embedding and by text ------------------------------------
vec = list(world.embeddings[world.queries[0]])
for payload in (
    {"embedding": vec, "w1": 0.8},
    {"embedding": vec, "w1": 0.1},
    {"text": "integrate x^2 from 0 to 1", "w1": 0.8},
):
    body = client.post("/route", json=payload).json()
    kind = "embedding" if "embedding" in payload else "text"
    print(f"route ({kind}, w1={payload['w1']}): {body['config_id']} "
          f"p={body['predicted_performance']:.3f} c={body['predicted_cost']:.3f} "
          f"in {body['timing']['route_ms']:.2f}ms")

# -- the configs table the service exposes ----------------------------------
table = client.get("/configs").json()
print("\nconfig          ability   norm cost")
for row in table["configs"]:
    print(f"{row['id']:<14}  {row['ability']:>+7.3f}   {row['normalized_cost']:.3f}")

# -- snapshots persist; a fresh engine recovers the latest one --------------
published = sorted(p.name for p in (workdir / "snapshots").iterdir())
print(f"\npublished snapshot files: {published}")
revived = RoutingEngine(snapshot_dir=str(workdir / "snapshots"))
print(f"fresh engine recovered snapshot version {revived.snapshot.version}")
decision, timing, _ = revived.route(text=None, embedding=vec, w1=0.8,
                                    scalarization="linear")
print(f"revived engine routes the same query to {decision.config_id}")
