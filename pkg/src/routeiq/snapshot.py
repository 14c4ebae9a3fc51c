"""Published engine state: fitted parameters, cost table, and config pool.

A snapshot is immutable and internally consistent: every pool config has an
ability and a cost, and the parameter, cost-table and snapshot versions all
agree. Routing always reads one snapshot object end to end, so concurrent
publishes can never produce a torn read. Persistence goes through a
temp-file rename, which keeps on-disk snapshots atomic too.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import ModelConfiguration, RoutingDecision, TradeoffProfile
from .costing import CostTable
from .errors import DataFormatError, ValidationError
from .irt import IrtParameters, item_params, params_from_dict, params_to_dict, sigmoid
from .scalarize import route

#: Environment variable naming the default snapshot directory.
SNAPSHOT_DIR_ENV = "RADAR_SNAPSHOT_DIR"

_SNAPSHOT_RE = re.compile(r"snapshot-(\d{6})\.json$")


@dataclass(frozen=True)
class EngineSnapshot:
    params: IrtParameters
    cost_table: CostTable
    pool: tuple[ModelConfiguration, ...]
    version: int

    def __post_init__(self):
        object.__setattr__(self, "pool", tuple(self.pool))
        if not self.pool:
            raise ValidationError("snapshot pool is empty")
        if self.version != self.params.version or self.version != self.cost_table.pool_version:
            raise ValidationError(
                f"inconsistent versions: snapshot={self.version} "
                f"params={self.params.version} costs={self.cost_table.pool_version}")
        ids = [c.id for c in self.pool]
        if len(set(ids)) != len(ids):
            raise ValidationError("snapshot pool contains duplicate config ids")
        for cid in ids:
            if cid not in self.params.theta:
                raise ValidationError(f"pool config {cid!r} has no fitted ability")
            if cid not in self.cost_table.raw_cost:
                raise ValidationError(f"pool config {cid!r} has no cost entry")

    @property
    def dim(self) -> int:
        return self.params.dim

    @cached_property
    def config_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.pool)

    @cached_property
    def theta_vec(self) -> np.ndarray:
        return self.params.theta_vector(self.config_ids)

    @cached_property
    def norm_cost_vec(self) -> np.ndarray:
        return np.array([self.cost_table.normalized_cost[c] for c in self.config_ids])


def make_snapshot(params: IrtParameters, cost_table: CostTable,
                  pool: tuple[ModelConfiguration, ...]) -> EngineSnapshot:
    """Stamp abilities onto the pool and assemble a consistent snapshot."""
    stamped = tuple(
        replace(c, ability=float(params.theta[c.id]), calibrated=True)
        if c.id in params.theta else c
        for c in pool
    )
    return EngineSnapshot(params=params, cost_table=cost_table, pool=stamped,
                          version=params.version)


def route_embedding(snap: EngineSnapshot, embedding, profile: TradeoffProfile) -> RoutingDecision:
    """Route one embedded query against a snapshot.

    Builds the per-query pool of (config, predicted performance, normalized
    cost) and applies the standard scalarized selection, so the result is
    identical to calling the selection rule directly.
    """
    a, b = item_params(snap.params, embedding)
    p = np.clip(sigmoid(a * (snap.theta_vec - b)), 1e-12, 1.0 - 1e-12)
    pool = [(cid, float(p[i]), float(snap.norm_cost_vec[i]))
            for i, cid in enumerate(snap.config_ids)]
    return route(profile, pool)


# ---------------------------------------------------------------------------
# Persistence: one JSON document per snapshot version.


def snapshot_to_dict(snap: EngineSnapshot) -> dict:
    return {
        "version": snap.version,
        "params": params_to_dict(snap.params),
        "cost_table": {
            "raw_cost": {k: float(v) for k, v in snap.cost_table.raw_cost.items()},
            "normalized_cost": {k: float(v) for k, v in snap.cost_table.normalized_cost.items()},
            "pool_version": snap.cost_table.pool_version,
        },
        "pool": [
            {"id": c.id, "model": c.model_name, "budget": c.budget,
             "price_per_token": c.price_per_token, "ability": c.ability,
             "calibrated": c.calibrated}
            for c in snap.pool
        ],
    }


def snapshot_from_dict(doc) -> EngineSnapshot:
    try:
        params = params_from_dict(doc["params"])
        ct = doc["cost_table"]
        cost_table = CostTable(raw_cost=ct["raw_cost"], normalized_cost=ct["normalized_cost"],
                               pool_version=int(ct["pool_version"]))
        pool = tuple(
            ModelConfiguration(
                id=c["id"], model_name=c["model"], budget=int(c["budget"]),
                price_per_token=float(c["price_per_token"]),
                ability=(float(c["ability"]) if c.get("ability") is not None else None),
                calibrated=bool(c.get("calibrated", False)),
            )
            for c in doc["pool"]
        )
        return EngineSnapshot(params=params, cost_table=cost_table, pool=pool,
                              version=int(doc["version"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad snapshot document: {exc}") from None


def save_snapshot(snap: EngineSnapshot, path) -> None:
    """Write one snapshot file atomically (temp file + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(snapshot_to_dict(snap), fh, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_snapshot(path) -> EngineSnapshot:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad JSON: {exc}") from None
    return snapshot_from_dict(doc)


def snapshot_path(directory, version: int) -> Path:
    return Path(directory) / f"snapshot-{version:06d}.json"


def publish_to_dir(snap: EngineSnapshot, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = snapshot_path(directory, snap.version)
    save_snapshot(snap, path)
    return path


def load_latest_snapshot(directory) -> EngineSnapshot | None:
    """Highest-versioned snapshot in the directory, or None if there is none."""
    directory = Path(directory)
    if not directory.is_dir():
        return None
    best = None
    best_version = -1
    for entry in directory.iterdir():
        m = _SNAPSHOT_RE.fullmatch(entry.name)
        if m and int(m.group(1)) > best_version:
            best_version = int(m.group(1))
            best = entry
    return load_snapshot(best) if best is not None else None
