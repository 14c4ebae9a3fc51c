"""Turning raw evaluation logs into response matrices, plus query splits.

Raw logs are line-delimited JSON, one attempt per line:

    {"config_id": "m0@512", "query_id": "q1", "correct": 1,
     "reasoning_tokens": 120, "completion_tokens": 40, "tag": "math"}

The config may instead be given as separate "model" and "budget" fields.
Repeated (config, query) pairs keep the first occurrence; later collisions
are counted and reported, never silently merged.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ResponseCell, ResponseMatrix, config_id, parse_config_id
from .errors import DataFormatError, ValidationError


@dataclass(frozen=True)
class IngestResult:
    matrix: ResponseMatrix
    tags: dict[str, str]
    collisions: int


def _record_to_cell(rec: Mapping) -> tuple[ResponseCell, str | None]:
    if "config_id" in rec:
        # normalize through parse/format so "m0@0512" style variants collapse
        model, budget = parse_config_id(str(rec["config_id"]))
        cid = config_id(model, budget)
    elif "model" in rec and "budget" in rec:
        cid = config_id(str(rec["model"]), rec["budget"])
    else:
        raise ValidationError("record needs 'config_id' or 'model' + 'budget'")
    cell = ResponseCell(
        config_id=cid,
        query_id=str(rec["query_id"]),
        correct=int(rec["correct"]),
        reasoning_tokens=int(rec["reasoning_tokens"]),
        completion_tokens=int(rec["completion_tokens"]),
    )
    tag = rec.get("tag")
    return cell, (str(tag) if tag is not None else None)


def build_matrix(records: Iterable[Mapping]) -> IngestResult:
    """Assemble a ResponseMatrix from parsed log records.

    Config and query order follow first appearance. The first record for a
    (config, query) pair wins; subsequent ones only increment the collision
    count. Tags attach to queries; a query's first non-null tag sticks.
    """
    configs: dict[str, None] = {}
    queries: dict[str, None] = {}
    cells: dict[tuple[str, str], ResponseCell] = {}
    tags: dict[str, str] = {}
    collisions = 0
    for i, rec in enumerate(records):
        try:
            cell, tag = _record_to_cell(rec)
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise DataFormatError(f"record {i}: {exc}") from None
        key = (cell.config_id, cell.query_id)
        if key in cells:
            collisions += 1
        else:
            cells[key] = cell
            configs.setdefault(cell.config_id)
            queries.setdefault(cell.query_id)
        if tag is not None and cell.query_id not in tags:
            tags[cell.query_id] = tag
    if not cells:
        raise ValidationError("no usable records: cannot build an empty matrix")
    matrix = ResponseMatrix(tuple(configs), tuple(queries), tuple(cells.values()))
    return IngestResult(matrix=matrix, tags=tags, collisions=collisions)


def load_raw_log(path) -> IngestResult:
    """Parse a raw log file; malformed lines fail with their line number."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad JSON: {exc}") from None
            if not isinstance(rec, dict):
                raise DataFormatError(f"{path}:{lineno}: expected a JSON object")
            records.append(rec)
    try:
        return build_matrix(records)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def split_queries(query_ids: Sequence[str], fraction: float, seed: int = 0) -> tuple[list[str], list[str]]:
    """Random train/test partition of query ids.

    `fraction` is the train share. The train side must come out non-empty;
    an empty test side is allowed but warned about, since downstream
    evaluation will have nothing to score.
    """
    ids = list(query_ids)
    if len(set(ids)) != len(ids):
        raise ValidationError("query ids must be unique before splitting")
    if not ids:
        raise ValidationError("no query ids to split")
    if not (0.0 < fraction <= 1.0):
        raise ValidationError(f"train fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_train = int(round(len(ids) * fraction))
    if n_train == 0:
        raise ValidationError(f"train fraction {fraction} leaves an empty train split")
    train = [ids[i] for i in perm[:n_train]]
    test = [ids[i] for i in perm[n_train:]]
    if not test:
        warnings.warn("train fraction leaves an empty test split", stacklevel=2)
    return train, test


def holdout_by_tag(tags: Mapping[str, str], holdout_tags: Iterable[str],
                   exclude_tags: Iterable[str] = ()) -> tuple[list[str], list[str]]:
    """Partition queries by tag: held-out tags go to test, excluded are dropped.

    Queries whose tag is in both sets raise; untagged behavior is the
    caller's job (only queries present in `tags` are partitioned).
    """
    holdout = set(holdout_tags)
    exclude = set(exclude_tags)
    overlap = holdout & exclude
    if overlap:
        raise ValidationError(f"tags cannot be both held out and excluded: {sorted(overlap)}")
    train, test = [], []
    for qid, tag in tags.items():
        if tag in exclude:
            continue
        (test if tag in holdout else train).append(qid)
    if not train:
        raise ValidationError("holdout selection leaves an empty train split")
    if not test:
        warnings.warn("holdout selection leaves an empty test split", stacklevel=2)
    return train, test
