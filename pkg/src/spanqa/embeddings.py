"""Embedding clients: HTTP transport plus a deterministic offline mock.

The contract is intentionally small: a client has an ``embedder_id``, a
fixed dimensionality, and turns a list of texts into one unit-normalized
vector per text. Vector identity is tied to ``embedder_id`` so an index
built with one model refuses queries embedded with another.
"""

from __future__ import annotations

import hashlib
import logging
import time
from abc import ABC, abstractmethod

import httpx
import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingError(Exception):
    """Embedding backend failure after retries."""


class EmbeddingClient(ABC):
    """Turns texts into unit-normalized vectors of a fixed dimensionality."""

    @property
    @abstractmethod
    def embedder_id(self) -> str:
        """Stable identifier of the embedding model/service."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimensionality of returned vectors."""

    @abstractmethod
    def embed(self, texts: list[str]) -> np.ndarray:
        """Embed ``texts`` into an array of shape (len(texts), dim).

        Rows are unit vectors under the L2 norm.

        Raises:
            EmbeddingError: If the backend fails after its retry budget.
        """


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if not np.all(np.isfinite(vectors)) or np.any(norms == 0.0):
        raise EmbeddingError("embedding backend returned a zero or non-finite vector")
    return vectors / norms


class HashEmbedder(EmbeddingClient):
    """Deterministic offline embedder: seeded pseudo-random unit vectors.

    Any given (embedder_id, text) pair always maps to the same vector, so
    indexes and searches built on it are reproducible across processes.
    Vectors carry no semantics beyond exact-text identity.
    """

    def __init__(self, name: str = "hash-v1", dim: int = 256) -> None:
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self._name = name
        self._dim = dim

    @property
    def embedder_id(self) -> str:
        return f"mock://{self._name}?dim={self._dim}"

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self._dim), dtype=np.float64)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(f"{self._name}\x00{text}".encode()).digest()
            seed = int.from_bytes(digest[:8], "big")
            out[i] = np.random.default_rng(seed).standard_normal(self._dim)
        return _normalize_rows(out)


class HttpEmbedder(EmbeddingClient):
    """Client for an HTTP embedding service.

    Request: ``POST {endpoint}`` with ``{"model": ..., "texts": [...]}``.
    Response: ``{"vectors": [[...], ...]}`` with one fixed-width vector
    per input text. Transient failures are retried with bounded backoff.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        dim: int,
        *,
        timeout_seconds: float = 30.0,
        retries: int = 3,
        backoff_seconds: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self._endpoint = endpoint
        self._model_id = model_id
        self._dim = dim
        self._retries = retries
        self._backoff_seconds = backoff_seconds
        self._client = httpx.Client(timeout=timeout_seconds, transport=transport)

    @property
    def embedder_id(self) -> str:
        return f"{self._endpoint}#{self._model_id}"

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, texts: list[str]) -> np.ndarray:
        payload = {"model": self._model_id, "texts": texts}
        last_error: Exception | None = None
        for attempt in range(self._retries):
            if attempt:
                time.sleep(self._backoff_seconds * 2 ** (attempt - 1))
            try:
                response = self._client.post(self._endpoint, json=payload)
                response.raise_for_status()
                vectors = np.asarray(response.json()["vectors"], dtype=np.float64)
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                logger.warning("embedding request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if vectors.shape != (len(texts), self._dim):
                raise EmbeddingError(
                    f"embedding service returned shape {vectors.shape}, "
                    f"expected ({len(texts)}, {self._dim})"
                )
            return _normalize_rows(vectors)
        raise EmbeddingError(f"embedding request failed after {self._retries} attempts: {last_error}")


def create_embedding_client(spec: str, *, dim: int = 256, model_id: str = "") -> EmbeddingClient:
    """Build a client from a URL-style spec.

    ``mock://<name>`` yields the deterministic :class:`HashEmbedder`;
    ``http(s)://...`` yields :class:`HttpEmbedder` for the given model.
    """
    if spec.startswith("mock://"):
        return HashEmbedder(spec[len("mock://") :] or "hash-v1", dim=dim)
    if spec.startswith(("http://", "https://")):
        return HttpEmbedder(spec, model_id=model_id, dim=dim)
    raise ValueError(f"unsupported embedding client spec: {spec!r}")
