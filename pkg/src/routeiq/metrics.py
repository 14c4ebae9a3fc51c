"""Evaluation of routing quality on held-out queries.

Sweeping the preference weight traces a performance-versus-cost curve. Two
summaries are computed over it:

* hypervolume - area of the region the curve dominates, with the reference
  point at zero performance and maximal (1.0) normalized cost. Larger is
  better; 1.0 means perfect accuracy at zero cost somewhere on the curve.
* cpt(x) - "cost to performance threshold": the cheapest curve point, as a
  fraction of a reference configuration's dollar cost, whose realized
  performance reaches x% of the reference's performance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ResponseMatrix, RoutingDecision
from .costing import CostTable
from .errors import (
    EmptyCurveError,
    MissingGroundTruthError,
    ThresholdUnreachableError,
    UnknownConfigError,
    ValidationError,
)


@dataclass(frozen=True)
class CurvePoint:
    """Realized outcome of routing the test set at one preference weight."""

    w1: float
    performance: float
    cost: float
    dollar_cost: float

    def __post_init__(self):
        if not (0.0 <= self.performance <= 1.0):
            raise ValidationError(f"realized performance out of [0, 1]: {self.performance}")
        if not (0.0 <= self.cost <= 1.0):
            raise ValidationError(f"realized normalized cost out of [0, 1]: {self.cost}")
        if self.dollar_cost < 0:
            raise ValidationError(f"dollar cost must be >= 0: {self.dollar_cost}")


@dataclass(frozen=True)
class TradeoffCurve:
    """Curve points ordered by ascending weight."""

    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda p: p.w1))
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def performance_cost_pairs(self) -> list[tuple[float, float]]:
        return [(p.performance, p.cost) for p in self.points]


def realize_curve(decisions_per_weight: Mapping[float, Sequence[RoutingDecision]],
                  queries: Sequence[str], ground_truth: ResponseMatrix,
                  cost_table: CostTable) -> TradeoffCurve:
    """Score sweep decisions against observed outcomes.

    Decision lists must align one-to-one with `queries`. Performance at a
    weight is the mean ground-truth correctness of the selected configs;
    cost is their mean normalized cost, dollar_cost their mean raw cost.
    """
    if not decisions_per_weight:
        raise EmptyCurveError("no weights supplied")
    if not queries:
        raise ValidationError("no test queries supplied")
    points = []
    for w1, decisions in decisions_per_weight.items():
        if len(decisions) != len(queries):
            raise ValidationError(
                f"weight {w1}: {len(decisions)} decisions for {len(queries)} queries")
        correct = 0.0
        norm_cost = 0.0
        dollars = 0.0
        for qid, dec in zip(queries, decisions):
            cell = ground_truth.lookup(dec.config_id, qid)
            if cell is None:
                raise MissingGroundTruthError(
                    f"no observed outcome for config {dec.config_id!r} on query {qid!r}")
            if dec.config_id not in cost_table.raw_cost:
                raise UnknownConfigError(f"config {dec.config_id!r} missing from cost table")
            correct += cell.correct
            norm_cost += cost_table.normalized_cost[dec.config_id]
            dollars += cost_table.raw_cost[dec.config_id]
        n = len(queries)
        points.append(CurvePoint(w1=float(w1), performance=correct / n,
                                 cost=norm_cost / n, dollar_cost=dollars / n))
    return TradeoffCurve(tuple(points))


def non_dominated(pairs: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Pareto-efficient (performance, cost) pairs, ascending in both.

    A pair is dominated if another has performance at least as high and cost
    at least as low, strictly better in one.
    """
    pts = sorted(set(pairs), key=lambda pc: (pc[1], -pc[0]))
    kept: list[tuple[float, float]] = []
    best_p = -np.inf
    for p, c in pts:
        if p > best_p:
            kept.append((p, c))
            best_p = p
    return kept


def hypervolume_from_points(pairs: Iterable[tuple[float, float]]) -> float:
    """Dominated area between the point set and the (perf=0, cost=1) corner.

    Each point (p, c) dominates the rectangle [0, p] x [c, 1]; the result is
    the area of the union, computed exactly from the non-dominated staircase.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyCurveError("cannot compute hypervolume of an empty curve")
    for p, c in pairs:
        if not (0.0 <= p <= 1.0 and 0.0 <= c <= 1.0):
            raise ValidationError(f"curve point ({p}, {c}) outside the unit square")
    front = non_dominated(pairs)
    area = 0.0
    for (p, c), (_, c_next) in zip(front, front[1:]):
        area += (c_next - c) * p
    last_p, last_c = front[-1]
    area += (1.0 - last_c) * last_p
    return area


def hypervolume(curve: TradeoffCurve) -> float:
    if not curve.points:
        raise EmptyCurveError("cannot compute hypervolume of an empty curve")
    return hypervolume_from_points(curve.performance_cost_pairs())


def reference_point(ground_truth: ResponseMatrix, cost_table: CostTable,
                    reference_config: str, queries: Sequence[str] | None = None):
    """Realized (performance, dollar_cost) of one fixed configuration.

    Used as the yardstick for cpt. Performance is its mean correctness over
    the test queries; cost is its raw dollar cost from the cost table.
    """
    if reference_config not in cost_table.raw_cost:
        raise UnknownConfigError(f"reference config {reference_config!r} missing from cost table")
    qids = list(queries) if queries is not None else list(ground_truth.queries)
    if not qids:
        raise ValidationError("no queries to evaluate the reference config on")
    total = 0.0
    for qid in qids:
        cell = ground_truth.lookup(reference_config, qid)
        if cell is None:
            raise MissingGroundTruthError(
                f"no observed outcome for reference {reference_config!r} on query {qid!r}")
        total += cell.correct
    return total / len(qids), float(cost_table.raw_cost[reference_config])


def cpt(curve: TradeoffCurve, x_percent: float, reference_performance: float,
        reference_dollar_cost: float) -> float:
    """Cheapest qualifying curve point's dollar cost relative to the reference.

    A point qualifies when its realized performance is at least
    (x_percent / 100) * reference_performance. Raises
    ThresholdUnreachableError when no point qualifies.
    """
    if not curve.points:
        raise EmptyCurveError("cannot compute cpt of an empty curve")
    if x_percent <= 0 or not np.isfinite(x_percent):
        raise ValidationError(f"x_percent must be positive, got {x_percent}")
    if reference_dollar_cost <= 0 or not np.isfinite(reference_dollar_cost):
        raise ValidationError(f"reference dollar cost must be positive, got {reference_dollar_cost}")
    if not (0.0 <= reference_performance <= 1.0):
        raise ValidationError(f"reference performance out of [0, 1]: {reference_performance}")
    threshold = (x_percent / 100.0) * reference_performance
    qualifying = [pt.dollar_cost for pt in curve.points if pt.performance >= threshold]
    if not qualifying:
        raise ThresholdUnreachableError(
            f"no curve point reaches {x_percent}% of reference performance "
            f"({threshold:.4f} needed)")
    return min(qualifying) / reference_dollar_cost


def evaluation_report(curve: TradeoffCurve, cpt_thresholds: Sequence[float],
                      reference_performance: float, reference_dollar_cost: float,
                      reference_config: str | None = None) -> dict:
    """Assemble the JSON-ready evaluation document.

    Unreachable cpt thresholds are reported as null rather than an error so
    one bad threshold does not sink the whole report.
    """
    cpt_map: dict[str, float | None] = {}
    for x in cpt_thresholds:
        try:
            cpt_map[f"{x:g}"] = cpt(curve, x, reference_performance, reference_dollar_cost)
        except ThresholdUnreachableError:
            cpt_map[f"{x:g}"] = None
    doc = {
        "points": [
            {"w1": pt.w1, "performance": pt.performance, "cost": pt.cost,
             "dollar_cost": pt.dollar_cost}
            for pt in curve.points
        ],
        "hypervolume": hypervolume(curve),
        "cpt": cpt_map,
        "reference": {
            "performance": reference_performance,
            "dollar_cost": reference_dollar_cost,
        },
    }
    if reference_config is not None:
        doc["reference"]["config_id"] = reference_config
    return doc
