"""Embedding acquisition: precomputed stores, a remote HTTP service, and a
deterministic hashing fallback.

All three sources produce finite float64 vectors of a fixed dimension, so the
rest of the engine never needs to know where an embedding came from.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from typing import Iterable, Mapping, Sequence

import numpy as np
import requests

from .core import as_embedding
from .errors import (
    DataFormatError,
    DimensionMismatchError,
    LookupMissError,
    RemoteEmbeddingError,
    ValidationError,
)

#: Environment variable naming the default remote embedding endpoint.
ENDPOINT_ENV = "RADAR_EMBED_ENDPOINT"


def _maybe_normalize(vec: np.ndarray, normalize: bool) -> np.ndarray:
    if not normalize:
        return vec
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec
    return vec / norm


class EmbeddingStore:
    """In-memory map from query id to a precomputed embedding vector.

    All vectors share one dimension; lookups of unknown ids raise
    LookupMissError rather than returning a sentinel.
    """

    def __init__(self, vectors: Mapping[str, np.ndarray], texts: Mapping[str, str] | None = None,
                 normalize: bool = False):
        if not vectors:
            raise ValidationError("embedding store must contain at least one vector")
        self._vectors: dict[str, np.ndarray] = {}
        self._texts = dict(texts or {})
        dim = None
        for qid, raw in vectors.items():
            vec = as_embedding(raw, dim)
            if dim is None:
                dim = vec.size
            self._vectors[qid] = _maybe_normalize(vec, normalize)
        self.dim = int(dim)

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, qid):
        return qid in self._vectors

    def ids(self) -> list[str]:
        return list(self._vectors)

    def text(self, qid: str) -> str | None:
        return self._texts.get(qid)

    def embed(self, qid: str) -> np.ndarray:
        try:
            return self._vectors[qid]
        except KeyError:
            raise LookupMissError(f"no embedding stored for query id {qid!r}") from None

    def matrix(self, ids: Sequence[str]) -> np.ndarray:
        """Stack embeddings for `ids` into a (len(ids), dim) array."""
        out = np.empty((len(ids), self.dim), dtype=np.float64)
        for i, qid in enumerate(ids):
            out[i] = self.embed(qid)
        return out


class HashFeaturizer:
    """Deterministic text-to-vector fallback with no model dependency.

    Each output slot hashes the UTF-8 text with blake2b under a per-slot salt
    and maps the 64-bit digest onto [-1, 1]. Stable across platforms and
    processes; embeddings carry no semantics beyond separating distinct texts.
    """

    def __init__(self, dim: int, normalize: bool = False):
        if dim <= 0:
            raise ValidationError(f"featurizer dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.normalize = normalize

    def embed(self, text: str) -> np.ndarray:
        data = text.encode("utf-8")
        out = np.empty(self.dim, dtype=np.float64)
        for slot in range(self.dim):
            h = hashlib.blake2b(data, digest_size=8, salt=slot.to_bytes(8, "little"))
            u = int.from_bytes(h.digest(), "little")
            out[slot] = (u / float(2**64 - 1)) * 2.0 - 1.0
        return _maybe_normalize(out, self.normalize)


class RemoteEmbeddingService:
    """Client for an HTTP embedding endpoint.

    POSTs {"texts": [...]} and expects {"embeddings": [[...], ...]}. Retries
    transient failures with exponential backoff and caps concurrent in-flight
    requests with a semaphore.
    """

    def __init__(self, endpoint: str | None = None, dim: int | None = None, *,
                 retries: int = 2, backoff: float = 0.25, timeout: float = 10.0,
                 max_inflight: int = 8, normalize: bool = False, session=None):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ValidationError(f"no embedding endpoint given and {ENDPOINT_ENV} is unset")
        self.endpoint = endpoint
        self.dim = dim
        self.retries = int(retries)
        self.backoff = float(backoff)
        self.timeout = float(timeout)
        self.normalize = normalize
        self._gate = threading.Semaphore(max_inflight)
        self._session = session or requests.Session()

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        payload = {"texts": list(texts)}
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                body = resp.json()
                return self._parse(body, len(texts))
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
        raise RemoteEmbeddingError(
            f"embedding endpoint {self.endpoint} failed after {self.retries + 1} attempts: {last_exc}"
        )

    def _parse(self, body, expected: int) -> list[np.ndarray]:
        if not isinstance(body, dict) or "embeddings" not in body:
            raise ValueError("response missing 'embeddings' field")
        rows = body["embeddings"]
        if len(rows) != expected:
            raise ValueError(f"expected {expected} embeddings, got {len(rows)}")
        out = []
        for row in rows:
            vec = as_embedding(row, self.dim)
            if self.dim is None:
                self.dim = vec.size
            out.append(_maybe_normalize(vec, self.normalize))
        return out


def embed_query(source, query) -> np.ndarray:
    """Fetch an embedding from any source type.

    `query` is an id for an EmbeddingStore and raw text for a featurizer or
    remote service. Output is validated finite with the source's dimension.
    """
    vec = source.embed(query)
    return as_embedding(vec, getattr(source, "dim", None))


# ---------------------------------------------------------------------------
# Embedding store file format: line-delimited JSON, one record per line:
# {"id": ..., "text": optional, "embedding": [...]}.


def save_embedding_store(path, vectors: Mapping[str, np.ndarray],
                         texts: Mapping[str, str] | None = None) -> None:
    texts = texts or {}
    with open(path, "w", encoding="utf-8") as fh:
        for qid, vec in vectors.items():
            rec = {"id": qid}
            if qid in texts:
                rec["text"] = texts[qid]
            rec["embedding"] = [float(x) for x in np.asarray(vec, dtype=np.float64)]
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def load_embedding_store(path, dim: int | None = None, normalize: bool = False) -> EmbeddingStore:
    """Load a store file; rejects nonfinite vectors and dimension drift."""
    vectors: dict[str, np.ndarray] = {}
    texts: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                qid = rec["id"]
                raw = rec["embedding"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad embedding record: {exc}") from None
            if qid in vectors:
                raise DataFormatError(f"{path}:{lineno}: duplicate embedding for id {qid!r}")
            try:
                vec = as_embedding(raw, dim)
            except DimensionMismatchError:
                raise
            except ValidationError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = vec.size
            vectors[qid] = vec
            if "text" in rec:
                texts[qid] = rec["text"]
    if not vectors:
        raise DataFormatError(f"{path}: no embedding records found")
    return EmbeddingStore(vectors, texts, normalize=normalize)
