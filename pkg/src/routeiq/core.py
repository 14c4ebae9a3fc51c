"""Domain types shared across the routing engine.

The central objects are:

* :class:`Query` - a routable unit of work with a fixed-dimensional embedding.
* :class:`ModelConfiguration` - a (model, reasoning budget) pair with pricing.
* :class:`ResponseMatrix` - sparse binary outcomes of configs on queries,
  with token counts per observed cell.
* :class:`TradeoffProfile` / :class:`RoutingDecision` - the request and the
  result of a routing call.

Also defined here: matrix validation (duplicates, dangling references, empty
rows/columns) and the line-delimited JSON matrix file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataFormatError, ValidationError

# Reasoning-effort tiers for models that expose named levels instead of
# numeric budgets. Encoded as negative sentinels so they can never collide
# with a real token budget.
TIER_BUDGETS = {"low": -1, "medium": -2, "high": -3}
_BUDGET_TIERS = {v: k for k, v in TIER_BUDGETS.items()}


def parse_budget(value) -> int:
    """Normalize a reasoning budget to its integer encoding.

    Accepts a non-negative integer token budget, a tier name from
    ``TIER_BUDGETS``, or an already-encoded sentinel.
    """
    if isinstance(value, str):
        if value in TIER_BUDGETS:
            return TIER_BUDGETS[value]
        try:
            value = int(value)
        except ValueError:
            raise ValidationError(f"unknown budget tier or integer: {value!r}") from None
    if not isinstance(value, (int, np.integer)):
        raise ValidationError(f"budget must be an int or tier name, got {type(value).__name__}")
    value = int(value)
    if value < 0 and value not in _BUDGET_TIERS:
        raise ValidationError(f"negative budget {value} is not a known tier sentinel")
    return value


def budget_label(budget: int) -> str:
    """Human-readable form of an encoded budget (tier name or the number)."""
    return _BUDGET_TIERS.get(budget, str(budget))


def config_id(model_name: str, budget) -> str:
    """Canonical identity string ``model@budget`` for a configuration."""
    if not model_name or "@" in model_name:
        raise ValidationError(f"bad model name {model_name!r}: must be non-empty, no '@'")
    return f"{model_name}@{budget_label(parse_budget(budget))}"


def parse_config_id(cid: str) -> tuple[str, int]:
    """Split a canonical id back into (model_name, encoded_budget)."""
    model, sep, raw = cid.rpartition("@")
    if not sep or not model:
        raise ValidationError(f"malformed configuration id {cid!r}, expected 'model@budget'")
    return model, parse_budget(raw)


def as_embedding(vec, dim: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float64 vector, rejecting NaN/Inf and wrong length."""
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"embedding must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("embedding contains NaN or infinite components")
    if dim is not None and arr.size != dim:
        from .errors import DimensionMismatchError

        raise DimensionMismatchError(f"embedding has dimension {arr.size}, expected {dim}")
    return arr


@dataclass(frozen=True, eq=False)
class Query:
    """A routable query: stable id, optional raw text, fixed-dim embedding."""

    id: str
    embedding: np.ndarray
    text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("query id must be non-empty")
        object.__setattr__(self, "embedding", as_embedding(self.embedding))

    @property
    def dim(self) -> int:
        return int(self.embedding.size)


@dataclass(frozen=True)
class ModelConfiguration:
    """A deployable (model, reasoning budget) pair with per-token pricing."""

    id: str
    model_name: str
    budget: int
    price_per_token: float
    ability: float | None = None
    calibrated: bool = False

    def __post_init__(self):
        if self.price_per_token < 0 or not np.isfinite(self.price_per_token):
            raise ValidationError(f"price_per_token must be finite and >= 0, got {self.price_per_token}")
        if self.id != config_id(self.model_name, self.budget):
            raise ValidationError(
                f"configuration id {self.id!r} does not match model={self.model_name!r} budget={self.budget!r}"
            )

    @classmethod
    def make(cls, model_name: str, budget, price_per_token: float, ability=None, calibrated=False):
        b = parse_budget(budget)
        return cls(config_id(model_name, b), model_name, b, float(price_per_token), ability, calibrated)


def build_pool(config_ids: Sequence[str], prices: Mapping[str, float]) -> tuple[ModelConfiguration, ...]:
    """Turn canonical ids plus a per-model price table into a config pool.

    Raises ValidationError on duplicate ids or models missing a price.
    """
    seen = set()
    pool = []
    for cid in config_ids:
        if cid in seen:
            raise ValidationError(f"duplicate configuration id {cid!r} in pool")
        seen.add(cid)
        model, budget = parse_config_id(cid)
        if model not in prices:
            raise ValidationError(f"no price listed for model {model!r}")
        pool.append(ModelConfiguration.make(model, budget, prices[model]))
    return tuple(pool)


@dataclass(frozen=True)
class ResponseCell:
    """One observed outcome: did `config_id` answer `query_id` correctly,

    and how many reasoning/completion tokens did the attempt consume.
    """

    config_id: str
    query_id: str
    correct: int
    reasoning_tokens: int
    completion_tokens: int

    def __post_init__(self):
        if self.correct not in (0, 1):
            raise ValidationError(f"correct must be 0 or 1, got {self.correct!r}")
        if self.reasoning_tokens < 0 or self.completion_tokens < 0:
            raise ValidationError("token counts must be >= 0")

    @property
    def total_tokens(self) -> int:
        return self.reasoning_tokens + self.completion_tokens


@dataclass(frozen=True)
class ResponseMatrix:
    """Sparse config-by-query outcome matrix.

    `configs` and `queries` fix row/column order; `cells` holds observed
    entries only. Construction is permissive: use :func:`validate_matrix`
    to get a full report of invariant violations.
    """

    configs: tuple[str, ...]
    queries: tuple[str, ...]
    cells: tuple[ResponseCell, ...]

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "cells", tuple(self.cells))

    @cached_property
    def config_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.configs)}

    @cached_property
    def query_index(self) -> dict[str, int]:
        return {q: j for j, q in enumerate(self.queries)}

    @cached_property
    def cell_map(self) -> dict[tuple[str, str], ResponseCell]:
        return {(c.config_id, c.query_id): c for c in self.cells}

    @cached_property
    def index_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Cells flattened to aligned arrays: (config_idx, query_idx, correct, total_tokens)."""
        n = len(self.cells)
        ci = np.empty(n, dtype=np.int64)
        qi = np.empty(n, dtype=np.int64)
        y = np.empty(n, dtype=np.float64)
        tok = np.empty(n, dtype=np.int64)
        cix, qix = self.config_index, self.query_index
        for k, cell in enumerate(self.cells):
            ci[k] = cix[cell.config_id]
            qi[k] = qix[cell.query_id]
            y[k] = cell.correct
            tok[k] = cell.total_tokens
        return ci, qi, y, tok

    def lookup(self, config_id: str, query_id: str) -> ResponseCell | None:
        return self.cell_map.get((config_id, query_id))

    def subset_queries(self, query_ids: Sequence[str]) -> "ResponseMatrix":
        """Restrict to the given queries (order preserved from the argument)."""
        keep = set(query_ids)
        unknown = keep - set(self.queries)
        if unknown:
            raise ValidationError(f"unknown query ids in subset: {sorted(unknown)[:5]}")
        cells = tuple(c for c in self.cells if c.query_id in keep)
        return ResponseMatrix(self.configs, tuple(query_ids), cells)

    def subset_configs(self, config_ids: Sequence[str]) -> "ResponseMatrix":
        keep = set(config_ids)
        unknown = keep - set(self.configs)
        if unknown:
            raise ValidationError(f"unknown config ids in subset: {sorted(unknown)[:5]}")
        cells = tuple(c for c in self.cells if c.config_id in keep)
        return ResponseMatrix(tuple(config_ids), self.queries, cells)


class Scalarization(str, Enum):
    LINEAR = "linear"
    CHEBYSHEV = "chebyshev"


@dataclass(frozen=True)
class TradeoffProfile:
    """A caller's performance-versus-cost preference.

    `w1` weights predicted performance; `1 - w1` weights normalized cost.
    """

    w1: float
    scalarization: Scalarization = Scalarization.LINEAR

    def __post_init__(self):
        if not (0.0 <= self.w1 <= 1.0) or not np.isfinite(self.w1):
            raise ValidationError(f"w1 must lie in [0, 1], got {self.w1}")
        object.__setattr__(self, "scalarization", Scalarization(self.scalarization))


@dataclass(frozen=True)
class RoutingDecision:
    """Outcome of routing one query under one profile."""

    config_id: str
    predicted_performance: float
    predicted_cost: float
    scalar_score: float
    profile: TradeoffProfile

    def __post_init__(self):
        if not (0.0 <= self.predicted_performance <= 1.0):
            raise ValidationError(f"predicted_performance out of [0, 1]: {self.predicted_performance}")
        if not np.isfinite(self.predicted_cost) or self.predicted_cost < 0:
            raise ValidationError(f"predicted_cost must be finite and >= 0: {self.predicted_cost}")


@dataclass(frozen=True)
class Violation:
    """One matrix invariant violation with enough context to locate it."""

    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "matrix ok"
        return "; ".join(str(v) for v in self.violations)


def validate_matrix(matrix: ResponseMatrix) -> ValidationReport:
    """Report every invariant violation in a ResponseMatrix.

    Checked: duplicate (config, query) cells, cells referencing unlisted
    configs or queries, and configs/queries with zero observed cells.
    """
    out: list[Violation] = []
    configs = set(matrix.configs)
    queries = set(matrix.queries)
    if len(configs) != len(matrix.configs):
        out.append(Violation("duplicate-config", "config id list contains repeats"))
    if len(queries) != len(matrix.queries):
        out.append(Violation("duplicate-query", "query id list contains repeats"))

    seen: set[tuple[str, str]] = set()
    config_counts = {c: 0 for c in matrix.configs}
    query_counts = {q: 0 for q in matrix.queries}
    for i, cell in enumerate(matrix.cells):
        key = (cell.config_id, cell.query_id)
        if key in seen:
            out.append(Violation("duplicate-cell", f"cell {i}: repeated pair {key}"))
        seen.add(key)
        if cell.config_id not in configs:
            out.append(Violation("dangling-config", f"cell {i}: unknown config {cell.config_id!r}"))
        else:
            config_counts[cell.config_id] += 1
        if cell.query_id not in queries:
            out.append(Violation("dangling-query", f"cell {i}: unknown query {cell.query_id!r}"))
        else:
            query_counts[cell.query_id] += 1

    for c, cnt in config_counts.items():
        if cnt == 0:
            out.append(Violation("empty-config-row", f"config {c!r} has no observed cells"))
    for q, cnt in query_counts.items():
        if cnt == 0:
            out.append(Violation("empty-query-column", f"query {q!r} has no observed cells"))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Matrix file format: line-delimited JSON. First line is a header object
# {"dim": d, "configs": [...], "queries": [...]}; every following line is one
# cell {"config_id", "query_id", "correct", "reasoning_tokens",
# "completion_tokens"}. Round-trips losslessly.


def save_matrix(matrix: ResponseMatrix, path, dim: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"dim": int(dim), "configs": list(matrix.configs), "queries": list(matrix.queries)}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for c in matrix.cells:
            rec = {
                "config_id": c.config_id,
                "query_id": c.query_id,
                "correct": c.correct,
                "reasoning_tokens": c.reasoning_tokens,
                "completion_tokens": c.completion_tokens,
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def load_matrix(path) -> tuple[ResponseMatrix, int]:
    """Read a matrix file; returns (matrix, embedding_dim from the header)."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DataFormatError(f"{path}: empty file, expected a header line")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:1: bad header JSON: {exc}") from None
        for key in ("dim", "configs", "queries"):
            if key not in header:
                raise DataFormatError(f"{path}:1: header missing {key!r}")
        cells = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                cell = ResponseCell(
                    config_id=rec["config_id"],
                    query_id=rec["query_id"],
                    correct=int(rec["correct"]),
                    reasoning_tokens=int(rec["reasoning_tokens"]),
                    completion_tokens=int(rec["completion_tokens"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad cell record: {exc}") from None
            cells.append(cell)
    matrix = ResponseMatrix(tuple(header["configs"]), tuple(header["queries"]), tuple(cells))
    return matrix, int(header["dim"])
