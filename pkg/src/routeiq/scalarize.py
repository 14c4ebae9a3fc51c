"""Two-objective scalarization and the routing rule.

A pool entry is (config_id, predicted_performance, normalized_cost). Linear
scalarization maximizes  w1 * p - (1 - w1) * c;  Chebyshev minimizes the
weighted distance to the ideal point (p=1, c=0):  max(w1 * |1 - p|,
(1 - w1) * c).  Chebyshev can reach points inside concave stretches of the
tradeoff frontier that no linear weighting selects.

Ties are broken identically everywhere: lowest normalized cost first, then
lexicographically smallest config id. Selection is therefore a total order
and deterministic.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import RoutingDecision, Scalarization, TradeoffProfile
from .errors import EmptyPoolError, ValidationError

# Above this pool size route() switches to the vectorized path; both paths
# realize the same total order, so the cutover never changes a decision.
_VECTOR_CUTOVER = 64


def linear_score(w1: float, performance: float, cost: float) -> float:
    """Weighted performance minus weighted cost; higher is better."""
    return w1 * performance - (1.0 - w1) * cost


def chebyshev_score(w1: float, performance: float, cost: float) -> float:
    """Weighted max-distance to the ideal point (1, 0); lower is better."""
    return max(w1 * abs(1.0 - performance), (1.0 - w1) * cost)


def _check_pool(pool):
    ids, perf, cost = [], [], []
    for entry in pool:
        cid, p, c = entry
        if not (0.0 <= p <= 1.0) or not np.isfinite(p):
            raise ValidationError(f"predicted performance for {cid!r} out of [0, 1]: {p}")
        if not (0.0 <= c <= 1.0) or not np.isfinite(c):
            raise ValidationError(f"normalized cost for {cid!r} out of [0, 1]: {c}")
        ids.append(cid); perf.append(float(p)); cost.append(float(c))
    if not ids:
        raise EmptyPoolError("routing pool is empty")
    return ids, perf, cost


def _pick(scores: Sequence[float], costs: Sequence[float], ids: Sequence[str], maximize: bool) -> int:
    """Index of the winner under (score, then low cost, then low id)."""
    best = 0
    for i in range(1, len(scores)):
        si, sb = scores[i], scores[best]
        if si != sb:
            if (si > sb) if maximize else (si < sb):
                best = i
            continue
        if costs[i] != costs[best]:
            if costs[i] < costs[best]:
                best = i
            continue
        if ids[i] < ids[best]:
            best = i
    return best


def _pick_vector(scores: np.ndarray, costs: np.ndarray, ids: Sequence[str], maximize: bool) -> int:
    extreme = scores.max() if maximize else scores.min()
    tied = np.flatnonzero(scores == extreme)
    if tied.size == 1:
        return int(tied[0])
    return int(min(tied, key=lambda i: (costs[i], ids[i])))


def route(profile: TradeoffProfile, pool: Iterable[tuple[str, float, float]]) -> RoutingDecision:
    """Select one configuration from the pool under the given profile."""
    ids, perf, cost = _check_pool(pool)
    w1 = profile.w1
    linear = profile.scalarization is Scalarization.LINEAR

    if len(ids) >= _VECTOR_CUTOVER:
        p = np.asarray(perf)
        c = np.asarray(cost)
        if linear:
            scores = w1 * p - (1.0 - w1) * c
        else:
            scores = np.maximum(w1 * np.abs(1.0 - p), (1.0 - w1) * c)
        i = _pick_vector(scores, c, ids, maximize=linear)
        score = float(scores[i])
    else:
        if linear:
            scores = [linear_score(w1, p, c) for p, c in zip(perf, cost)]
        else:
            scores = [chebyshev_score(w1, p, c) for p, c in zip(perf, cost)]
        i = _pick(scores, cost, ids, maximize=linear)
        score = scores[i]

    return RoutingDecision(
        config_id=ids[i],
        predicted_performance=perf[i],
        predicted_cost=cost[i],
        scalar_score=score,
        profile=profile,
    )


def default_weight_grid(n: int = 101) -> list[float]:
    """Evenly spaced weights over [0, 1] inclusive."""
    if n < 2:
        raise ValidationError(f"weight grid needs at least 2 points, got {n}")
    return [i / (n - 1) for i in range(n)]


def sweep(weights: Sequence[float], scalarization: Scalarization,
          pools: Mapping[str, Sequence[tuple[str, float, float]]]) -> dict[float, list[RoutingDecision]]:
    """Route every query at every weight.

    `pools` maps query id to its pool; iteration order of the mapping fixes
    the decision order. Returns {weight: [decision per query]}.
    """
    if not pools:
        raise ValidationError("sweep needs at least one query pool")
    out: dict[float, list[RoutingDecision]] = {}
    for w1 in weights:
        profile = TradeoffProfile(w1=float(w1), scalarization=scalarization)
        out[float(w1)] = [route(profile, pool) for pool in pools.values()]
    return out


def pools_from_predictions(config_ids: Sequence[str], probabilities: np.ndarray,
                           normalized_cost: Mapping[str, float]) -> list[list[tuple[str, float, float]]]:
    """Per-query pools from a (n_configs, n_queries) probability grid."""
    P = np.asarray(probabilities, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != len(config_ids):
        raise ValidationError(f"probability grid shape {P.shape} does not match {len(config_ids)} configs")
    costs = [float(normalized_cost[cid]) for cid in config_ids]
    pools = []
    for j in range(P.shape[1]):
        pools.append([(cid, float(P[i, j]), costs[i]) for i, cid in enumerate(config_ids)])
    return pools
