"""Text embedding: a deterministic offline embedder plus a remote HTTP client.

The deterministic embedder hashes character 3-grams (NFKC-normalized) into
a fixed number of buckets and L2-normalizes the counts.  It is language
agnostic — kana/kanji and Latin text hash the same way — needs no model
download, and gives byte-stable vectors for golden tests.  Production
deployments point ``mode: remote`` at any service speaking the JSON
protocol below.
"""

from __future__ import annotations

import os
import time
import unicodedata
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyTextError, RemoteBadDimensionError, RemoteUnavailableError

DEFAULT_DIMENSION = 2048

ENDPOINT_ENV = "VAXRAG_EMBED_ENDPOINT"
API_KEY_ENV = "VAXRAG_EMBED_API_KEY"


@dataclass
class EmbedderConfig:
    dimension: int = DEFAULT_DIMENSION
    mode: str = "deterministic"  # "deterministic" | "remote"
    endpoint: Optional[str] = None
    timeout_ms: int = 30_000
    max_batch: int = 64

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.mode not in ("deterministic", "remote"):
            raise ValueError(f"unknown embedder mode: {self.mode}")
        if self.mode == "remote" and not (self.endpoint or os.environ.get(ENDPOINT_ENV)):
            raise ValueError("remote mode requires an endpoint")


def _char_ngrams(text: str, n: int = 3) -> list[str]:
    text = unicodedata.normalize("NFKC", text)
    if len(text) < n:
        return [text]
    return [text[i:i + n] for i in range(len(text) - n + 1)]


class DeterministicEmbedder:
    """Hashed bag of character 3-grams, L2-normalized."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension

    def embed_text(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyTextError("cannot embed empty text")
        counts = np.zeros(self.dimension, dtype=np.float64)
        for gram in _char_ngrams(text):
            bucket = zlib.crc32(gram.encode("utf-8")) % self.dimension
            counts[bucket] += 1.0
        return counts / np.linalg.norm(counts)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed_text(t) for t in texts]


class RemoteEmbedder:
    """Client for ``POST {"texts": [...]} -> {"vectors": [[...]]}`` services."""

    def __init__(self, config: EmbedderConfig, *, max_retries: int = 3):
        self.config = config
        self.dimension = config.dimension
        self.endpoint = config.endpoint or os.environ.get(ENDPOINT_ENV, "")
        self.max_retries = max_retries
        self._client = None

    def _http(self):
        import httpx

        if self._client is None:
            headers = {}
            api_key = os.environ.get(API_KEY_ENV)
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
            self._client = httpx.Client(
                timeout=self.config.timeout_ms / 1000.0, headers=headers
            )
        return self._client

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        for text in texts:
            if not text or not text.strip():
                raise EmptyTextError("cannot embed empty text")
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.config.max_batch):
            out.extend(self._post_batch(texts[start:start + self.config.max_batch]))
        return out

    def _post_batch(self, chunk: list[str]) -> list[np.ndarray]:
        import httpx

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = self._http().post(self.endpoint, json={"texts": chunk})
                resp.raise_for_status()
                payload = resp.json()
                break
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
                time.sleep(min(2.0, 0.1 * 2 ** attempt))
        else:
            raise RemoteUnavailableError(f"embedding service failed: {last_error}")

        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(chunk):
            raise RemoteUnavailableError("embedding service returned a malformed payload")
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dimension,):
                raise RemoteBadDimensionError(
                    f"expected dimension {self.dimension}, got {arr.shape}"
                )
            norm = np.linalg.norm(arr)
            if norm == 0:
                raise RemoteUnavailableError("embedding service returned a zero vector")
            out.append(arr / norm)
        return out


def build_embedder(config: EmbedderConfig):
    if config.mode == "remote":
        return RemoteEmbedder(config)
    return DeterministicEmbedder(config.dimension)
