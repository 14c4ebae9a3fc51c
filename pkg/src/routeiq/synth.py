"""Synthetic worlds with known ground truth.

A world fixes true item weights, config abilities, per-config prices and
token usage; matrices sampled from it follow the same response model the
engine fits. Used to exercise the full pipeline end to end where the right
answers are known, and as the data source for the simulate command.

Generation is deterministic per seed. Embeddings reserve slot 0 as a
constant 1.0 bias component: with zero-mean embeddings a linear map cannot
give discriminations a positive mean, and a world whose discriminations
straddle zero has no coherent difficulty direction to recover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ModelConfiguration, ResponseCell, ResponseMatrix, Scalarization, TradeoffProfile
from .costing import CostTable
from .errors import ValidationError
from .irt import IrtParameters, predict_grid

#: Reasoning-budget ladder used for generated config grids.
BUDGET_LADDER = (0, 256, 512, 1024, 2048, 4096, 8192, 16384)


@dataclass(frozen=True)
class SyntheticWorld:
    """Ground truth for a simulated routing problem."""

    dim: int
    seed: int
    configs: tuple[ModelConfiguration, ...]
    queries: tuple[str, ...]
    embeddings: Mapping[str, np.ndarray]
    true_w_a: np.ndarray
    true_w_b: np.ndarray
    true_theta: Mapping[str, float]
    prices: Mapping[str, float]
    token_mean: Mapping[str, float]

    def true_params(self) -> IrtParameters:
        return IrtParameters(
            w_a=self.true_w_a, w_b=self.true_w_b,
            theta=dict(self.true_theta), dim=self.dim,
        )

    def embedding_matrix(self, query_ids: Sequence[str] | None = None) -> np.ndarray:
        qids = list(query_ids) if query_ids is not None else list(self.queries)
        return np.vstack([self.embeddings[q] for q in qids])


def generate_world(n_configs: int, n_queries: int, dim: int, seed: int = 0) -> SyntheticWorld:
    """Build a world: config grid over models x budgets, seeded truth.

    Query discriminations center near 1 with moderate spread, difficulties
    and abilities are roughly standard normal, prices rise with model index
    and mean token usage rises with reasoning budget.
    """
    if n_configs <= 0 or n_queries <= 0 or dim <= 1:
        raise ValidationError("need n_configs >= 1, n_queries >= 1, dim >= 2")
    rng = np.random.default_rng([seed, 0])

    queries = tuple(f"q{j:06d}" for j in range(n_queries))
    E = rng.standard_normal((n_queries, dim))
    E[:, 0] = 1.0  # bias slot
    embeddings = {q: E[j].copy() for j, q in enumerate(queries)}

    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)
    w_a = np.zeros(dim)
    w_a[0] = 1.0
    w_a += 0.25 * u
    w_b = rng.standard_normal(dim)
    w_b /= np.linalg.norm(w_b)

    n_models = math.ceil(n_configs / len(BUDGET_LADDER))
    prices = {f"m{j}": 2e-6 * (j + 1) for j in range(n_models)}
    configs = []
    token_mean = {}
    theta = {}
    theta_draws = rng.standard_normal(n_configs)
    for i in range(n_configs):
        model = f"m{i // len(BUDGET_LADDER)}"
        budget = BUDGET_LADDER[i % len(BUDGET_LADDER)]
        cfg = ModelConfiguration.make(model, budget, prices[model])
        configs.append(cfg)
        token_mean[cfg.id] = 150.0 + 0.75 * budget + 40.0 * (i // len(BUDGET_LADDER))
        theta[cfg.id] = float(theta_draws[i])

    return SyntheticWorld(
        dim=dim, seed=seed, configs=tuple(configs), queries=queries,
        embeddings=embeddings, true_w_a=w_a, true_w_b=w_b, true_theta=theta,
        prices=prices, token_mean=token_mean,
    )


def success_probabilities(world: SyntheticWorld) -> np.ndarray:
    """(n_configs, n_queries) true success probabilities of the world."""
    E = world.embedding_matrix()
    return predict_grid(world.true_params(), [c.id for c in world.configs], E)


def sample_matrix(world: SyntheticWorld, density: float = 1.0, draw: int = 0) -> ResponseMatrix:
    """Sample a response matrix from the world's true model.

    `density` < 1 keeps a random subset of cells. Deterministic for a given
    (world, draw); distinct draws give independent samples.
    """
    if not (0.0 < density <= 1.0):
        raise ValidationError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng([world.seed, 1, draw])
    P = success_probabilities(world)
    n, k = P.shape
    correct = (rng.random((n, k)) < P).astype(np.int64)
    keep = rng.random((n, k)) < density if density < 1.0 else np.ones((n, k), dtype=bool)

    config_ids = [c.id for c in world.configs]
    means = np.array([world.token_mean[cid] for cid in config_ids])
    reasoning = rng.poisson(0.8 * means[:, None], size=(n, k))
    completion = rng.poisson(0.2 * means[:, None], size=(n, k))

    cells = []
    for i, cid in enumerate(config_ids):
        for j, qid in enumerate(world.queries):
            if keep[i, j]:
                cells.append(ResponseCell(cid, qid, int(correct[i, j]),
                                          int(reasoning[i, j]), int(completion[i, j])))
    return ResponseMatrix(tuple(config_ids), world.queries, tuple(cells))


def oracle_route(profile: TradeoffProfile, pool) -> str:
    """Reference routing rule, written independently of the engine's.

    Scans the pool once, ordering candidates by scalar score, then low
    normalized cost, then config id. Returns the winning config id.
    """
    best_key = None
    best_id = None
    for cid, p, c in pool:
        if profile.scalarization is Scalarization.LINEAR:
            s = profile.w1 * p - (1.0 - profile.w1) * c
            key = (-s, c, cid)
        else:
            s = max(profile.w1 * abs(1.0 - p), (1.0 - profile.w1) * c)
            key = (s, c, cid)
        if best_key is None or key < best_key:
            best_key = key
            best_id = cid
    if best_id is None:
        raise ValidationError("oracle received an empty pool")
    return best_id


def oracle_router_baseline(ground_truth: ResponseMatrix, cost_table: CostTable) -> dict[str, str]:
    """Hindsight router: per query, the correct config with the lowest cost.

    Considers only configs with an observed cell on the query; prefers
    correct over incorrect, then low normalized cost, then low id. This is
    the ceiling no predictive router can beat on realized outcomes.
    """
    by_query: dict[str, list] = {q: [] for q in ground_truth.queries}
    for cell in ground_truth.cells:
        if cell.query_id in by_query:
            by_query[cell.query_id].append(cell)
    out = {}
    for qid, cells in by_query.items():
        if not cells:
            raise ValidationError(f"query {qid!r} has no observed cells to pick from")
        best = min(cells, key=lambda c: (-c.correct,
                                         cost_table.normalized_cost.get(c.config_id, np.inf),
                                         c.config_id))
        out[qid] = best.config_id
    return out


def world_manifest(world: SyntheticWorld) -> dict:
    """JSON-ready description of the world, including the hidden truth."""
    return {
        "seed": world.seed,
        "dim": world.dim,
        "n_configs": len(world.configs),
        "n_queries": len(world.queries),
        "configs": [
            {"id": c.id, "model": c.model_name, "budget": c.budget,
             "price_per_token": c.price_per_token}
            for c in world.configs
        ],
        "true_theta": {k: float(v) for k, v in world.true_theta.items()},
        "true_w_a": [float(x) for x in world.true_w_a],
        "true_w_b": [float(x) for x in world.true_w_b],
        "token_mean": {k: float(v) for k, v in world.token_mean.items()},
    }
