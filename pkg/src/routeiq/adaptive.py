"""Adaptive onboarding of a new configuration.

A new (model, budget) configuration is probed on a small, informative subset
of calibration queries instead of the full set. Queries are chosen greedily
by Fisher information at the current ability estimate; after each observed
response the ability is re-estimated by maximum likelihood with item
parameters held fixed. The session transcript records every step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DataFormatError,
    EmptyResponsesError,
    ExhaustedCandidatesError,
    NumericalError,
    ValidationError,
)
from .irt import IrtParameters, item_params_batch, sigmoid

# Ability search interval and convergence tolerance for the MLE.
THETA_LO = -8.0
THETA_HI = 8.0
THETA_TOL = 1e-6

# Fraction of the candidate pool probed when no explicit budget is given.
DEFAULT_BUDGET_FRACTION = 0.12

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...


def default_budget(n_candidates: int) -> int:
    """ceil(fraction * pool size), at least 1 for a non-empty pool.

    Computed in integer arithmetic so float rounding can never push the
    ceiling over an exact multiple.
    """
    if n_candidates <= 0:
        raise ValidationError("candidate pool is empty")
    return max(1, -((-12 * n_candidates) // 100))


def fisher_information(theta: float, a, b):
    """Fisher information of a response at ability theta.

    I(theta) = a^2 * p * (1 - p) with p = sigmoid(a * (theta - b)).
    Accepts scalars or aligned arrays.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = sigmoid(a * (theta - b))
    info = a * a * p * (1.0 - p)
    return float(info) if info.ndim == 0 else info


def _loglik_derivs(theta: float, a: np.ndarray, b: np.ndarray, y: np.ndarray):
    """First and second derivative of the response log-likelihood in theta."""
    p = sigmoid(a * (theta - b))
    d1 = float(np.sum(a * (y - p)))
    d2 = -float(np.sum(a * a * p * (1.0 - p)))
    return d1, d2


def estimate_ability_from_items(a, b, y, lo: float = THETA_LO, hi: float = THETA_HI,
                                tol: float = THETA_TOL) -> float:
    """Maximum-likelihood ability for responses y on items (a, b).

    The log-likelihood is concave in theta, so its derivative is
    nonincreasing; we keep a sign-change bracket and take Newton steps,
    falling back to a golden-section interior point whenever Newton leaves
    the bracket. All-correct or all-incorrect response sets push the MLE to
    the search boundary.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.size == 0:
        raise EmptyResponsesError("cannot estimate ability from zero responses")
    if a.shape != b.shape or a.shape != y.shape:
        raise ValidationError("item and response arrays must align")

    # The derivative is nonincreasing, so its value at an endpoint bounds it
    # on the whole interval: no interior root means a boundary maximum.
    d_lo, _ = _loglik_derivs(lo, a, b, y)
    if d_lo <= 0.0:
        return lo
    d_hi, _ = _loglik_derivs(hi, a, b, y)
    if d_hi >= 0.0:
        return hi

    theta = 0.5 * (lo + hi)
    for _ in range(200):
        d1, d2 = _loglik_derivs(theta, a, b, y)
        if d1 == 0.0:
            return theta
        if d1 > 0.0:
            lo = theta
        else:
            hi = theta
        if hi - lo < tol:
            return 0.5 * (lo + hi)
        nxt = theta - d1 / d2 if d2 < 0.0 else None
        if nxt is None or not (lo < nxt < hi):
            # Golden-section point biased toward the half holding the root.
            frac = _INV_GOLDEN if d1 > 0.0 else 1.0 - _INV_GOLDEN
            nxt = lo + frac * (hi - lo)
        if abs(nxt - theta) < tol:
            return nxt
        theta = nxt
    raise NumericalError("ability estimate failed to converge")


def estimate_ability(params: IrtParameters, responses: Mapping[str, int], embeddings) -> float:
    """MLE ability from a map of query id -> 0/1 response."""
    if not responses:
        raise EmptyResponsesError("cannot estimate ability from zero responses")
    qids = list(responses)
    E = _gather(embeddings, qids, params.dim)
    a, b = item_params_batch(params, E)
    y = np.array([float(responses[q]) for q in qids])
    if np.any((y != 0.0) & (y != 1.0)):
        raise ValidationError("responses must be 0 or 1")
    return estimate_ability_from_items(a, b, y)


def _gather(embeddings, qids: Sequence[str], dim: int) -> np.ndarray:
    getter = embeddings.embed if hasattr(embeddings, "embed") else embeddings.__getitem__
    E = np.empty((len(qids), dim), dtype=np.float64)
    for i, qid in enumerate(qids):
        E[i] = np.asarray(getter(qid), dtype=np.float64)
    return E


@dataclass
class AdaptiveSession:
    """Mutable state of one onboarding run."""

    config_id: str
    budget: int
    selected: list[str] = field(default_factory=list)
    responses: dict[str, int] = field(default_factory=dict)
    theta_hat: float = 0.0

    def observe(self, query_id: str, response: int) -> None:
        if response not in (0, 1):
            raise ValidationError(f"response must be 0 or 1, got {response!r}")
        if query_id in self.responses:
            raise ValidationError(f"query {query_id!r} already observed in this session")
        self.selected.append(query_id)
        self.responses[query_id] = int(response)

    @property
    def done(self) -> bool:
        return len(self.responses) >= self.budget


@dataclass(frozen=True)
class SessionStep:
    step: int
    query_id: str
    response: int
    theta_hat: float


@dataclass(frozen=True)
class SessionResult:
    config_id: str
    theta_hat: float
    steps: tuple[SessionStep, ...]


def select_next(params: IrtParameters, session: AdaptiveSession,
                candidate_queries: Sequence[str], embeddings) -> str:
    """Most informative unprobed candidate at the current ability estimate.

    Ability is re-estimated from the session's responses (0 before any
    observation). Information ties break on lexicographically smallest id.
    """
    remaining = [q for q in candidate_queries if q not in session.responses]
    if not remaining:
        raise ExhaustedCandidatesError(f"no unprobed candidates left for {session.config_id!r}")
    theta = estimate_ability(params, session.responses, embeddings) if session.responses else 0.0
    E = _gather(embeddings, remaining, params.dim)
    a, b = item_params_batch(params, E)
    info = fisher_information(theta, a, b)
    best = np.max(info)
    tied = np.flatnonzero(info == best)
    if tied.size == 1:
        return remaining[int(tied[0])]
    return min(remaining[int(i)] for i in tied)


def run_session(params: IrtParameters, config_id: str,
                response_oracle: Callable[[str, str], int],
                candidate_queries: Sequence[str], embeddings,
                budget: int | None = None) -> tuple[IrtParameters, SessionResult]:
    """Run a full onboarding session for one new configuration.

    `response_oracle(config_id, query_id)` supplies the observed 0/1 outcome.
    Returns updated parameters (new ability, version bumped) and the
    transcript. Given the same inputs and a deterministic oracle, the
    transcript is identical run to run.
    """
    if config_id in params.theta:
        raise ValidationError(f"configuration {config_id!r} already has a fitted ability")
    candidates = list(dict.fromkeys(candidate_queries))
    if not candidates:
        raise ValidationError("candidate pool is empty")
    if budget is None:
        budget = default_budget(len(candidates))
    if budget <= 0:
        raise ValidationError(f"budget must be positive, got {budget}")
    budget = min(budget, len(candidates))

    session = AdaptiveSession(config_id=config_id, budget=budget)
    steps = []
    while not session.done:
        qid = select_next(params, session, candidates, embeddings)
        resp = int(response_oracle(config_id, qid))
        session.observe(qid, resp)
        session.theta_hat = estimate_ability(params, session.responses, embeddings)
        steps.append(SessionStep(step=len(steps) + 1, query_id=qid, response=resp,
                                 theta_hat=session.theta_hat))

    updated = params.with_ability(config_id, session.theta_hat)
    return updated, SessionResult(config_id=config_id, theta_hat=session.theta_hat,
                                  steps=tuple(steps))


def load_response_log(path) -> dict[str, dict]:
    """Read an onboarding response log.

    Line-delimited JSON records {"query_id", "correct", "reasoning_tokens",
    "completion_tokens"}; first record per query wins. Token counts are kept
    so probed cells can be costed.
    """
    out: dict[str, dict] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                qid = str(rec["query_id"])
                entry = {
                    "correct": int(rec["correct"]),
                    "reasoning_tokens": int(rec["reasoning_tokens"]),
                    "completion_tokens": int(rec["completion_tokens"]),
                }
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad response record: {exc}") from None
            if entry["correct"] not in (0, 1):
                raise DataFormatError(f"{path}:{lineno}: correct must be 0 or 1")
            out.setdefault(qid, entry)
    if not out:
        raise DataFormatError(f"{path}: no response records found")
    return out
