"""Two-parameter logistic response model over query embeddings.

Each query q with embedding e gets a discrimination a(q) = w_a . e and a
difficulty b(q) = w_b . e; each model configuration g gets a scalar ability
theta_g. The probability that g answers q correctly is

    p = sigmoid(a(q) * (theta_g - b(q)))

Parameters are fit by minimizing mean binary cross-entropy over the observed
cells of a response matrix with minibatch Adam. Training is deterministic for
a fixed seed: identical inputs give bit-identical parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .core import ResponseMatrix, validate_matrix
from .errors import (
    DataFormatError,
    DegenerateMatrixError,
    DimensionMismatchError,
    LookupMissError,
    MissingEmbeddingError,
    NumericalError,
    UnknownConfigError,
    ValidationError,
)

# Probabilities are clamped to this open interval before the log-loss; the
# matching analytic gradient is zero wherever the clamp binds.
P_CLAMP = 1e-7

# Logits beyond this magnitude saturate the sigmoid in float64 anyway.
Z_CLIP = 45.0


def sigmoid(z):
    """Numerically stable logistic function, scalar or array."""
    z = np.clip(z, -Z_CLIP, Z_CLIP)
    return 1.0 / (1.0 + np.exp(-z))


def softplus(z):
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=np.float64)
    return np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)


_LINKS = ("identity", "softplus")


@dataclass(frozen=True)
class IrtParameters:
    """Fitted model state.

    `w_a` / `w_b` map embeddings to discrimination / difficulty; `theta`
    maps configuration ids to abilities. `discrimination_link` optionally
    constrains discrimination positive via softplus.
    """

    w_a: np.ndarray
    w_b: np.ndarray
    theta: Mapping[str, float]
    dim: int
    version: int = 1
    discrimination_link: str = "identity"

    def __post_init__(self):
        w_a = np.asarray(self.w_a, dtype=np.float64)
        w_b = np.asarray(self.w_b, dtype=np.float64)
        if w_a.shape != (self.dim,) or w_b.shape != (self.dim,):
            raise DimensionMismatchError(
                f"weight shapes {w_a.shape}/{w_b.shape} do not match dim {self.dim}"
            )
        if not (np.all(np.isfinite(w_a)) and np.all(np.isfinite(w_b))):
            raise ValidationError("weights contain NaN or infinite entries")
        theta = dict(self.theta)
        for cid, th in theta.items():
            if not math.isfinite(th):
                raise ValidationError(f"ability for {cid!r} is not finite")
        if self.discrimination_link not in _LINKS:
            raise ValidationError(f"unknown discrimination_link {self.discrimination_link!r}")
        object.__setattr__(self, "w_a", w_a)
        object.__setattr__(self, "w_b", w_b)
        object.__setattr__(self, "theta", theta)

    def theta_vector(self, config_ids: Sequence[str]) -> np.ndarray:
        out = np.empty(len(config_ids), dtype=np.float64)
        for i, cid in enumerate(config_ids):
            if cid not in self.theta:
                raise UnknownConfigError(f"no ability for configuration {cid!r}")
            out[i] = self.theta[cid]
        return out

    def with_ability(self, config_id: str, ability: float) -> "IrtParameters":
        """New parameter set with one ability added/updated and version bumped."""
        theta = dict(self.theta)
        theta[config_id] = float(ability)
        return replace(self, theta=theta, version=self.version + 1)


def _apply_link(a_lin, link: str):
    return softplus(a_lin) if link == "softplus" else a_lin


def item_params(params: IrtParameters, embedding) -> tuple[float, float]:
    """Discrimination and difficulty of one query under fitted weights."""
    e = np.asarray(embedding, dtype=np.float64)
    if e.shape != (params.dim,):
        raise DimensionMismatchError(f"embedding shape {e.shape} does not match dim {params.dim}")
    a = float(_apply_link(float(params.w_a @ e), params.discrimination_link))
    b = float(params.w_b @ e)
    return a, b


def item_params_batch(params: IrtParameters, embeddings: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized item_params over a (k, dim) embedding block."""
    E = np.asarray(embeddings, dtype=np.float64)
    if E.ndim != 2 or E.shape[1] != params.dim:
        raise DimensionMismatchError(f"embedding block shape {E.shape} does not match dim {params.dim}")
    a = _apply_link(E @ params.w_a, params.discrimination_link)
    b = E @ params.w_b
    return a, b


def predict_correct(params: IrtParameters, config_id: str, embedding) -> float:
    """P(config answers query correctly), strictly inside (0, 1)."""
    if config_id not in params.theta:
        raise UnknownConfigError(f"no ability for configuration {config_id!r}")
    a, b = item_params(params, embedding)
    p = sigmoid(a * (params.theta[config_id] - b))
    return float(np.clip(p, 1e-12, 1.0 - 1e-12))


def predict_grid(params: IrtParameters, config_ids: Sequence[str], embeddings: np.ndarray) -> np.ndarray:
    """(n_configs, n_queries) success probabilities, rows in config order."""
    a, b = item_params_batch(params, embeddings)
    th = params.theta_vector(config_ids)
    p = sigmoid(a[None, :] * (th[:, None] - b[None, :]))
    return np.clip(p, 1e-12, 1.0 - 1e-12)


def _embedding_matrix(embeddings, query_ids: Sequence[str], dim: int | None = None) -> np.ndarray:
    """Gather embeddings for `query_ids` into one array, checking coverage."""
    getter = embeddings.embed if hasattr(embeddings, "embed") else embeddings.__getitem__
    rows = []
    for qid in query_ids:
        try:
            vec = np.asarray(getter(qid), dtype=np.float64)
        except (KeyError, LookupMissError):
            raise MissingEmbeddingError(f"no embedding for query {qid!r}") from None
        if dim is None:
            dim = vec.size
        if vec.shape != (dim,):
            raise DimensionMismatchError(f"embedding for {qid!r} has shape {vec.shape}, expected ({dim},)")
        rows.append(vec)
    if not rows:
        raise ValidationError("no query ids to embed")
    return np.vstack(rows)


def _flatten(matrix: ResponseMatrix, embeddings):
    """Matrix cells as aligned arrays plus per-cell embedding rows."""
    E = _embedding_matrix(embeddings, matrix.queries)
    ci, qi, y, _ = matrix.index_arrays
    return E, E[qi], ci, y


def _loss_and_grads(w_a, w_b, theta_vec, E_cells, ci, y, link: str):
    """Mean clamped BCE and its exact gradients over one cell block."""
    a_lin = E_cells @ w_a
    a = _apply_link(a_lin, link)
    b = E_cells @ w_b
    th = theta_vec[ci]
    z = a * (th - b)
    p = sigmoid(z)
    pc = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    n = y.size
    loss = float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))

    # Gradient of the clamp is zero where it binds, so mask those cells.
    inside = (p > P_CLAMP) & (p < 1.0 - P_CLAMP)
    g = np.where(inside, p - y, 0.0) / n
    ga = g * (th - b)                      # dL/da per cell
    if link == "softplus":
        ga = ga * sigmoid(a_lin)           # chain through softplus
    g_wa = E_cells.T @ ga
    g_wb = E_cells.T @ (g * (-a))
    g_th = np.bincount(ci, weights=g * a, minlength=theta_vec.size)
    return loss, g_wa, g_wb, g_th


def bce_loss(params: IrtParameters, matrix: ResponseMatrix, embeddings) -> float:
    """Mean binary cross-entropy of the model over observed cells."""
    if not matrix.cells:
        raise DegenerateMatrixError("matrix has no observed cells")
    _, E_cells, ci, y = _flatten(matrix, embeddings)
    theta_vec = params.theta_vector(matrix.configs)
    loss, *_ = _loss_and_grads(params.w_a, params.w_b, theta_vec, E_cells, ci, y,
                               params.discrimination_link)
    return loss


def bce_loss_and_gradients(params: IrtParameters, matrix: ResponseMatrix, embeddings):
    """Loss plus analytic gradients (d loss / d w_a, w_b, theta).

    Returns (loss, g_wa, g_wb, g_theta) with g_theta keyed by config id.
    """
    if not matrix.cells:
        raise DegenerateMatrixError("matrix has no observed cells")
    _, E_cells, ci, y = _flatten(matrix, embeddings)
    theta_vec = params.theta_vector(matrix.configs)
    loss, g_wa, g_wb, g_th = _loss_and_grads(params.w_a, params.w_b, theta_vec,
                                             E_cells, ci, y, params.discrimination_link)
    g_theta = {cid: float(g_th[i]) for i, cid in enumerate(matrix.configs)}
    return loss, g_wa, g_wb, g_theta


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer settings. Defaults match the engine's calibration recipe."""

    epochs: int = 100
    learning_rate: float = 5e-4
    batch_size: int = 32
    grad_clip_norm: float = 1.0
    seed: int = 0
    positive_discrimination: bool = False

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValidationError("epochs and batch_size must be positive")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise ValidationError("learning_rate and grad_clip_norm must be positive")


@dataclass(frozen=True)
class TrainingResult:
    params: IrtParameters
    epoch_losses: tuple[float, ...]

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def train(matrix: ResponseMatrix, embeddings, config: TrainingConfig = TrainingConfig()) -> TrainingResult:
    """Fit the response model to a matrix with minibatch Adam.

    Preconditions: the matrix validates cleanly and every config and query
    has at least one observed cell. The rng is consumed in a fixed order
    (weight init, then one shuffle per epoch), so results are reproducible
    bit-for-bit for a given seed.
    """
    report = validate_matrix(matrix)
    if not report.ok:
        raise DegenerateMatrixError(f"matrix failed validation: {report.summary()}")
    if not matrix.cells:
        raise DegenerateMatrixError("matrix has no observed cells")

    E, E_cells, ci, y = _flatten(matrix, embeddings)
    d = E.shape[1]
    n_configs = len(matrix.configs)
    n_cells = y.size
    link = "softplus" if config.positive_discrimination else "identity"

    rng = np.random.default_rng(config.seed)
    w_a = rng.standard_normal(d) / math.sqrt(d)
    w_b = rng.standard_normal(d) / math.sqrt(d)
    theta = np.zeros(n_configs)

    # Adam state, one slot per parameter block, shared step counter.
    b1, b2, eps = 0.9, 0.999, 1e-8
    m_wa = np.zeros(d); v_wa = np.zeros(d)
    m_wb = np.zeros(d); v_wb = np.zeros(d)
    m_th = np.zeros(n_configs); v_th = np.zeros(n_configs)
    lr = config.learning_rate
    clip = config.grad_clip_norm
    t = 0

    epoch_losses = []
    B = config.batch_size
    for _ in range(config.epochs):
        perm = rng.permutation(n_cells)
        total = 0.0
        batches = 0
        for start in range(0, n_cells, B):
            idx = perm[start:start + B]
            loss, g_wa, g_wb, g_th = _loss_and_grads(
                w_a, w_b, theta, E_cells[idx], ci[idx], y[idx], link)
            total += loss
            batches += 1

            gn = math.sqrt(float(g_wa @ g_wa) + float(g_wb @ g_wb) + float(g_th @ g_th))
            if gn > clip:
                scale = clip / gn
                g_wa = g_wa * scale; g_wb = g_wb * scale; g_th = g_th * scale

            t += 1
            c1 = 1.0 - b1 ** t
            c2 = 1.0 - b2 ** t
            for par, g, m, v in ((w_a, g_wa, m_wa, v_wa),
                                 (w_b, g_wb, m_wb, v_wb),
                                 (theta, g_th, m_th, v_th)):
                m *= b1; m += (1.0 - b1) * g
                v *= b2; v += (1.0 - b2) * (g * g)
                par -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        epoch_losses.append(total / batches)

    if not all(math.isfinite(x) for x in epoch_losses):
        raise NumericalError("training diverged: non-finite epoch loss")

    if link == "identity":
        # The model is invariant under (w_a, w_b, theta) -> -(w_a, w_b, theta);
        # pin the orientation so fitted discriminations are positive on average.
        if float(np.mean(E @ w_a)) < 0.0:
            w_a = -w_a; w_b = -w_b; theta = -theta

    params = IrtParameters(
        w_a=w_a, w_b=w_b,
        theta={cid: float(theta[i]) for i, cid in enumerate(matrix.configs)},
        dim=d, version=1, discrimination_link=link,
    )
    return TrainingResult(params=params, epoch_losses=tuple(epoch_losses))


def ability_ordering(params: IrtParameters) -> list[str]:
    """Config ids sorted by ability, best first; ties break on id."""
    return sorted(params.theta, key=lambda cid: (-params.theta[cid], cid))


# ---------------------------------------------------------------------------
# Parameter snapshots: a single JSON document, round-trips losslessly.


def params_to_dict(params: IrtParameters) -> dict:
    return {
        "version": params.version,
        "dim": params.dim,
        "discrimination_link": params.discrimination_link,
        "w_a": [float(x) for x in params.w_a],
        "w_b": [float(x) for x in params.w_b],
        "theta": {cid: float(th) for cid, th in params.theta.items()},
    }


def params_from_dict(doc: Mapping) -> IrtParameters:
    try:
        return IrtParameters(
            w_a=np.asarray(doc["w_a"], dtype=np.float64),
            w_b=np.asarray(doc["w_b"], dtype=np.float64),
            theta={str(k): float(v) for k, v in doc["theta"].items()},
            dim=int(doc["dim"]),
            version=int(doc.get("version", 1)),
            discrimination_link=doc.get("discrimination_link", "identity"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad parameter document: {exc}") from None


def save_params(params: IrtParameters, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params), fh, sort_keys=True)
        fh.write("\n")


def load_params(path) -> IrtParameters:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad JSON: {exc}") from None
    return params_from_dict(doc)
