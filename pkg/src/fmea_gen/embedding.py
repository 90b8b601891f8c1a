"""Text embedding providers and cosine-similarity ranking of example candidates.

Two providers: a deterministic hashed bag-of-words embedder that works offline
(the default everywhere, including tests), and a remote HTTP embedder for real
models. Vectors from different providers are never comparable.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyPoolError,
    EmptyTextError,
    ProviderUnavailableError,
    ZeroVectorError,
)
from .model import FmeaDocument
from .textutil import fnv1a_64, tokenize

DEFAULT_DIM = 256
DEFAULT_FANOUT = 4


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    provider_id: str

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ExampleCandidate:
    """A ranked retrieval hit; score is None for unscored (random) picks."""

    doc_id: str
    score: float | None
    preview: str

    def to_json_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "score": "unscored" if self.score is None else self.score,
            "preview": self.preview,
        }


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


class HashEmbedder:
    """Deterministic bag-of-words embedder: tokens hash into ``dim`` buckets.

    A pure function of the token multiset of the lowercased input, so word
    order never matters and results are bit-identical across processes.
    """

    def __init__(self, dim: int = DEFAULT_DIM, provider_id: str = "builtin-hash"):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.provider_id = provider_id

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out = []
        for text in texts:
            counts = [0.0] * self.dim
            for token in tokenize(text):
                counts[fnv1a_64(token.encode("utf-8")) % self.dim] += 1.0
            out.append(EmbeddingVector(values=tuple(counts), provider_id=self.provider_id))
        return out


class RemoteEmbedder:
    """HTTP embedding endpoint speaking ``{"input": [...]}`` -> ``{"embeddings": [...]}``.

    Endpoint and token default to the FMEA_EMBED_URL / FMEA_EMBED_TOKEN
    environment variables.
    """

    def __init__(self, url: str | None = None, token: str | None = None, dim: int = DEFAULT_DIM,
                 provider_id: str = "remote", timeout_s: float = 30.0):
        self.url = url or os.environ.get("FMEA_EMBED_URL", "")
        self.token = token if token is not None else os.environ.get("FMEA_EMBED_TOKEN")
        self.dim = dim
        self.provider_id = provider_id
        self.timeout_s = timeout_s

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        import httpx

        if not self.url:
            raise ProviderUnavailableError("no embedding endpoint configured (FMEA_EMBED_URL)")
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            response = httpx.post(self.url, json={"input": list(texts)}, headers=headers, timeout=self.timeout_s)
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise ProviderUnavailableError(f"embedding endpoint failed: {exc}") from exc
        vectors = payload.get("embeddings", [])
        if len(vectors) != len(texts):
            raise ProviderUnavailableError(
                f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} inputs"
            )
        return [EmbeddingVector(values=tuple(float(x) for x in vec), provider_id=self.provider_id) for vec in vectors]


def embed(text: str, provider: EmbeddingProvider) -> EmbeddingVector:
    """Embed one trimmed text; deterministic per (provider, text)."""
    trimmed = text.strip()
    if not trimmed:
        raise EmptyTextError("cannot embed empty text")
    vector = provider.embed_batch([trimmed])[0]
    if vector.dim != provider.dim:
        raise DimensionMismatchError(
            f"provider {provider.provider_id!r} declared dim {provider.dim}, produced {vector.dim}"
        )
    return vector


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; vectors must share provider and dimension."""
    if a.provider_id != b.provider_id:
        raise DimensionMismatchError(f"cannot compare vectors from {a.provider_id!r} and {b.provider_id!r}")
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    va = np.asarray(a.values)
    vb = np.asarray(b.values)
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine is undefined for an all-zero vector")
    score = float(np.dot(va, vb)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, score))


def candidate_preview(doc: FmeaDocument) -> str:
    return f"{doc.equipment_name}: {doc.short_description}"


def rank_candidates(
    query_text: str,
    pool: Sequence[FmeaDocument],
    k: int,
    provider: EmbeddingProvider,
    doc_vector: Callable[[FmeaDocument], EmbeddingVector] | None = None,
    fanout: int = DEFAULT_FANOUT,
) -> list[ExampleCandidate]:
    """Top-``min(k, |pool|)`` pool documents by cosine similarity to the query.

    Sorted by descending score, ties broken by ascending doc_id, so rankings
    are fully deterministic. ``doc_vector`` lets callers supply cached
    embeddings; otherwise each document's short description is embedded here,
    fanned out over at most ``fanout`` worker threads (result order is the
    same as sequential execution).
    """
    if not pool:
        raise EmptyPoolError("candidate pool is empty")
    if k < 1:
        raise ValueError("k must be >= 1")

    query_vec = embed(query_text, provider)
    if doc_vector is None:
        doc_vector = lambda doc: embed(doc.short_description, provider)

    if len(pool) > 1 and fanout > 1:
        with ThreadPoolExecutor(max_workers=min(fanout, len(pool))) as pool_exec:
            vectors = list(pool_exec.map(doc_vector, pool))
    else:
        vectors = [doc_vector(doc) for doc in pool]

    scored = [
        ExampleCandidate(doc_id=doc.doc_id, score=cosine(query_vec, vec), preview=candidate_preview(doc))
        for doc, vec in zip(pool, vectors)
    ]
    scored.sort(key=lambda c: (-c.score, c.doc_id))
    return scored[: min(k, len(scored))]


def random_candidate(pool: Sequence[FmeaDocument], seed: int) -> ExampleCandidate:
    """Seeded uniform pick; the result carries no similarity score."""
    if not pool:
        raise EmptyPoolError("candidate pool is empty")
    ordered = sorted(pool, key=lambda d: d.doc_id)
    doc = random.Random(seed).choice(ordered)
    return ExampleCandidate(doc_id=doc.doc_id, score=None, preview=candidate_preview(doc))
