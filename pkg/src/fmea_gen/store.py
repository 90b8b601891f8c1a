"""Directory-backed FMEA corpus: one JSON file per document plus a manifest.

The corpus is small (hundreds of documents), so human-inspectable files beat
throughput. Reads are served from an in-memory index; every mutation goes
through a single writer lock and lands atomically (write-then-rename).
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import model
from .embedding import EmbeddingProvider, EmbeddingVector, embed
from .errors import DuplicateIdError, EmptyCorpusError, NotFoundError
from .model import FmeaDocument

DEFAULT_RATIOS = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class CorpusSplit:
    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train_ids), len(self.validation_ids), len(self.test_ids))

    def part(self, name: str) -> tuple[str, ...]:
        try:
            return {"train": self.train_ids, "validation": self.validation_ids, "test": self.test_ids}[name]
        except KeyError:
            raise ValueError(f"unknown split part {name!r}") from None

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
            "test_ids": list(self.test_ids),
        }


def split_ids(ids: Iterable[str], seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> CorpusSplit:
    """Deterministically partition ids into train/validation/test.

    Rounding rule: floor the train and validation sizes, remainder to test
    (the only simple rule giving 571/71/72 at N=714 under 0.8/0.1/0.1).
    """
    ids = sorted(ids)
    if not ids:
        raise EmptyCorpusError("cannot split an empty corpus")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be three non-negative numbers, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1.0, got {sum(ratios)!r}")

    random.Random(seed).shuffle(ids)
    n = len(ids)
    n_train = math.floor(n * ratios[0])
    n_val = math.floor(n * ratios[1])
    return CorpusSplit(
        train_ids=tuple(ids[:n_train]),
        validation_ids=tuple(ids[n_train : n_train + n_val]),
        test_ids=tuple(ids[n_train + n_val :]),
        seed=seed,
        ratios=ratios,
    )


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _write_atomic(path: Path, content: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    tmp.replace(path)


class CorpusStore:
    """FMEA library rooted at a directory; safe to share across request handlers."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "splits").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._docs: dict[str, FmeaDocument] = {}
        self._hashes: dict[str, str] = {}
        # embedding cache: (provider_id, sha256(text)) -> vector values
        self._embeddings: dict[str, list[float]] = {}
        self._load()

    # --- loading ------------------------------------------------------------

    def _load(self) -> None:
        manifest_path = self.root / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            doc_ids = manifest.get("documents", {})
        else:
            doc_ids = {p.stem: None for p in self.root.glob("*.json") if p.name != "manifest.json"}
        for doc_id in doc_ids:
            path = self.root / f"{doc_id}.json"
            if not path.exists():
                raise NotFoundError(f"manifest lists {doc_id!r} but {path} is missing")
            doc = model.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
            self._docs[doc.doc_id] = doc
            self._hashes[doc.doc_id] = _sha256(model.canonical_json(doc))
        cache_path = self.root / "embeddings.json"
        if cache_path.exists():
            self._embeddings = json.loads(cache_path.read_text(encoding="utf-8"))

    def _save_manifest(self) -> None:
        manifest = {"documents": {doc_id: self._hashes[doc_id] for doc_id in sorted(self._docs)}}
        _write_atomic(self.root / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))

    # --- document operations --------------------------------------------------

    def ingest(self, doc: FmeaDocument) -> str:
        """Validate and durably store one document; returns its id."""
        model.require_valid(doc)
        with self._lock:
            if doc.doc_id in self._docs:
                raise DuplicateIdError(f"document {doc.doc_id!r} already ingested")
            self._write_doc(doc)
            self._save_manifest()
        return doc.doc_id

    def ingest_many(self, docs: Iterable[FmeaDocument]) -> tuple[int, int]:
        """Bulk ingest; returns (ingested, skipped_duplicates). Invalid docs raise."""
        ingested = 0
        skipped = 0
        with self._lock:
            for doc in docs:
                if doc.doc_id in self._docs:
                    skipped += 1
                    continue
                model.require_valid(doc)
                self._write_doc(doc)
                ingested += 1
            if ingested:
                self._save_manifest()
        return ingested, skipped

    def _write_doc(self, doc: FmeaDocument) -> None:
        _write_atomic(self.root / f"{doc.doc_id}.json", json.dumps(model.to_json_dict(doc), indent=2, ensure_ascii=False))
        self._docs[doc.doc_id] = doc
        self._hashes[doc.doc_id] = _sha256(model.canonical_json(doc))

    def get(self, doc_id: str) -> FmeaDocument:
        with self._lock:
            try:
                return self._docs[doc_id]
            except KeyError:
                raise NotFoundError(f"no document {doc_id!r}") from None

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def list_ids(
        self,
        provenance: str | None = None,
        split_part: str | None = None,
        seed: int | None = None,
    ) -> list[str]:
        """Stable id listing, optionally filtered by provenance or split membership."""
        with self._lock:
            ids = sorted(self._docs)
            if provenance is not None:
                ids = [i for i in ids if self._docs[i].provenance == provenance]
        if split_part is not None:
            if seed is None:
                raise ValueError("split_part filtering requires a seed")
            member = set(self.load_split(seed).part(split_part))
            ids = [i for i in ids if i in member]
        return ids

    def documents(self, ids: Iterable[str] | None = None) -> list[FmeaDocument]:
        with self._lock:
            if ids is None:
                return [self._docs[i] for i in sorted(self._docs)]
            return [self.get(i) for i in ids]

    # --- splits -----------------------------------------------------------------

    def make_split(self, seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> CorpusSplit:
        """Create (and persist) the deterministic split for this corpus and seed."""
        with self._lock:
            split = split_ids(self._docs.keys(), seed, ratios)
            _write_atomic(self.root / "splits" / f"{seed}.json", json.dumps(split.to_json_dict(), indent=2))
        return split

    def load_split(self, seed: int) -> CorpusSplit:
        path = self.root / "splits" / f"{seed}.json"
        if not path.exists():
            raise NotFoundError(f"no split for seed {seed}; run make_split first")
        data = json.loads(path.read_text(encoding="utf-8"))
        return CorpusSplit(
            train_ids=tuple(data["train_ids"]),
            validation_ids=tuple(data["validation_ids"]),
            test_ids=tuple(data["test_ids"]),
            seed=int(data["seed"]),
            ratios=tuple(data["ratios"]),
        )

    def ensure_split(self, seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> CorpusSplit:
        try:
            return self.load_split(seed)
        except NotFoundError:
            return self.make_split(seed, ratios)

    # --- embedding cache ----------------------------------------------------------

    def embedding_for(self, doc_id: str, provider: EmbeddingProvider) -> EmbeddingVector:
        """Embedding of the document's short description, cached by provider and text hash."""
        doc = self.get(doc_id)
        key = f"{provider.provider_id}|{_sha256(doc.short_description.strip())}"
        with self._lock:
            cached = self._embeddings.get(key)
        if cached is not None:
            return EmbeddingVector(values=tuple(cached), provider_id=provider.provider_id)
        vector = embed(doc.short_description, provider)
        with self._lock:
            self._embeddings[key] = list(vector.values)
            _write_atomic(self.root / "embeddings.json", json.dumps(self._embeddings, sort_keys=True))
        return vector

    def rebuild_embeddings(self, provider: EmbeddingProvider) -> int:
        """Drop and recompute the cache for every document; returns the count."""
        with self._lock:
            self._embeddings = {}
        for doc_id in self.list_ids():
            self.embedding_for(doc_id, provider)
        return len(self._docs)
