"""Per-configuration cost estimation from observed token usage.

Raw cost of a configuration is its mean observed token count (reasoning plus
completion) times its per-token price, in dollars. For routing, raw costs are
min-max normalized across the pool so the cheapest config sits at 0 and the
most expensive at 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ModelConfiguration, ResponseMatrix
from .errors import DataFormatError, EmptyPoolError, MissingTokenDataError, ValidationError


@dataclass(frozen=True)
class CostTable:
    """Raw dollar costs and pool-normalized costs, one entry per config."""

    raw_cost: Mapping[str, float]
    normalized_cost: Mapping[str, float]
    pool_version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "raw_cost", dict(self.raw_cost))
        object.__setattr__(self, "normalized_cost", dict(self.normalized_cost))
        if set(self.raw_cost) != set(self.normalized_cost):
            raise ValidationError("raw and normalized cost tables cover different configs")
        for cid, c in self.normalized_cost.items():
            if not (0.0 <= c <= 1.0):
                raise ValidationError(f"normalized cost for {cid!r} out of [0, 1]: {c}")

    def configs(self) -> list[str]:
        return list(self.raw_cost)


def normalize_costs(raw: Mapping[str, float]) -> dict[str, float]:
    """Min-max normalize raw costs onto [0, 1].

    A degenerate pool (all raw costs equal, including a single config) maps
    every entry to 0.
    """
    if not raw:
        raise EmptyPoolError("cannot normalize an empty cost table")
    vals = np.array(list(raw.values()), dtype=np.float64)
    lo, hi = float(vals.min()), float(vals.max())
    if hi == lo:
        return {cid: 0.0 for cid in raw}
    span = hi - lo
    return {cid: (float(c) - lo) / span for cid, c in raw.items()}


def compute_costs(matrix: ResponseMatrix, configs: Sequence[ModelConfiguration],
                  pool_version: int = 1) -> CostTable:
    """Build a CostTable from observed cells and per-token prices.

    Every config in `configs` must have at least one observed cell in the
    matrix; configs with usage in the matrix but absent from `configs` are
    ignored.
    """
    if not configs:
        raise EmptyPoolError("config pool is empty")
    by_config: dict[str, list[int]] = {c.id: [] for c in configs}
    for cell in matrix.cells:
        if cell.config_id in by_config:
            by_config[cell.config_id].append(cell.total_tokens)

    raw: dict[str, float] = {}
    for cfg in configs:
        tokens = by_config[cfg.id]
        if not tokens:
            raise MissingTokenDataError(f"no observed cells to cost configuration {cfg.id!r}")
        raw[cfg.id] = float(np.mean(tokens)) * cfg.price_per_token
    return CostTable(raw_cost=raw, normalized_cost=normalize_costs(raw), pool_version=pool_version)


def merge_costs(table: CostTable, new_raw: Mapping[str, float], pool_version: int) -> CostTable:
    """Extend a cost table with raw costs for new configs and renormalize."""
    raw = dict(table.raw_cost)
    raw.update({cid: float(c) for cid, c in new_raw.items()})
    return CostTable(raw_cost=raw, normalized_cost=normalize_costs(raw), pool_version=pool_version)


def raw_cost_of_cells(cells, price_per_token: float) -> float:
    """Mean total tokens over cells times price; cells must be non-empty."""
    tokens = [c.total_tokens for c in cells]
    if not tokens:
        raise MissingTokenDataError("no cells supplied for costing")
    return float(np.mean(tokens)) * float(price_per_token)


# Price file: JSON object mapping model name to dollars per token.


def load_prices(path) -> dict[str, float]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataFormatError(f"{path}: price file must be a JSON object")
    prices = {}
    for model, price in doc.items():
        try:
            price = float(price)
        except (TypeError, ValueError):
            raise DataFormatError(f"{path}: price for {model!r} is not a number") from None
        if price < 0 or not np.isfinite(price):
            raise DataFormatError(f"{path}: price for {model!r} must be finite and >= 0")
        prices[str(model)] = price
    return prices


def save_prices(prices: Mapping[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: float(v) for k, v in prices.items()}, fh, sort_keys=True, indent=2)
        fh.write("\n")
