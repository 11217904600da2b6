"""Multi-collection exact cosine top-k index with filtering and snapshots.

Design notes:
  - Exact flat scan per collection (no ANN): corpora here are desk scale
    (~10^5 documents), so brute force stays fast and tests deterministic.
  - Vectors are L2-normalized once at upsert; cosine then reduces to a dot
    product against the collection matrix.
  - Ordering is fully deterministic: score descending, doc_id ascending.
  - Snapshots are length-prefixed binary with a header and a SHA-256
    checksum so round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from .corpus import CollectionId, Document
from .errors import (
    CorruptSnapshotError,
    DimensionMismatchError,
    UnknownCollectionError,
    ZeroVectorError,
)

SNAPSHOT_MAGIC = b"VXDB"
SNAPSHOT_VERSION = 1
NORM_TOLERANCE = 1e-6


@dataclass
class VectorRecord:
    doc_id: str
    collection: CollectionId
    vector: np.ndarray
    payload: Document


@dataclass
class SearchQuery:
    collection: CollectionId
    vector: np.ndarray
    top_k: int = 5
    time_window: Optional[tuple[datetime, datetime]] = None
    filters: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.time_window is not None:
            start, end = self.time_window
            if start > end:
                raise ValueError("time_window start must be <= end")


@dataclass
class SearchHit:
    doc_id: str
    score: float
    payload: Document


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two raw (not necessarily normalized) vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


class _Collection:
    """Rows for one collection; matrix view rebuilt lazily after writes."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.ids: list[str] = []
        self.index: dict[str, int] = {}
        self.vectors: list[np.ndarray] = []
        self.payloads: list[Document] = []
        self.epochs: list[float] = []
        self._matrix: Optional[np.ndarray] = None
        self._id_array: Optional[np.ndarray] = None
        self._epoch_array: Optional[np.ndarray] = None

    def invalidate(self):
        self._matrix = None
        self._id_array = None
        self._epoch_array = None

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.vectors:
                self._matrix = np.vstack(self.vectors)
            else:
                self._matrix = np.zeros((0, self.dimension))
        return self._matrix

    def id_array(self) -> np.ndarray:
        if self._id_array is None:
            self._id_array = np.asarray(self.ids, dtype=object)
        return self._id_array

    def epoch_array(self) -> np.ndarray:
        if self._epoch_array is None:
            self._epoch_array = np.asarray(self.epochs, dtype=np.float64)
        return self._epoch_array


class VectorStore:
    """In-memory exact-search store over the five knowledge collections.

    Concurrency: many readers, one writer per collection (a lock per
    collection guards mutation); ``snapshot`` takes every lock so the file
    reflects a consistent view.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._collections = {c: _Collection(dimension) for c in CollectionId}
        self._locks = {c: threading.RLock() for c in CollectionId}

    def _coll(self, collection) -> _Collection:
        try:
            collection = CollectionId(collection)
        except ValueError:
            raise UnknownCollectionError(str(collection)) from None
        return self._collections[collection]

    # -- writes --------------------------------------------------------

    def upsert(self, rec: VectorRecord) -> None:
        vec = np.asarray(rec.vector, dtype=np.float64)
        if vec.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"expected ({self.dimension},), got {vec.shape}"
            )
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ZeroVectorError("cannot store a zero vector")
        if abs(norm - 1.0) > NORM_TOLERANCE:
            vec = vec / norm
        coll = self._coll(rec.collection)
        epoch = rec.payload.timestamp.timestamp()
        with self._locks[CollectionId(rec.collection)]:
            pos = coll.index.get(rec.doc_id)
            if pos is None:
                coll.index[rec.doc_id] = len(coll.ids)
                coll.ids.append(rec.doc_id)
                coll.vectors.append(vec)
                coll.payloads.append(rec.payload)
                coll.epochs.append(epoch)
            else:
                coll.vectors[pos] = vec
                coll.payloads[pos] = rec.payload
                coll.epochs[pos] = epoch
            coll.invalidate()

    # -- reads ---------------------------------------------------------

    def get(self, collection, doc_id: str) -> Optional[Document]:
        coll = self._coll(collection)
        pos = coll.index.get(doc_id)
        return coll.payloads[pos] if pos is not None else None

    def has(self, collection, doc_id: str) -> bool:
        return self.get(collection, doc_id) is not None

    def _filter_mask(self, coll: _Collection, time_window, filters) -> np.ndarray:
        n = len(coll.ids)
        mask = np.ones(n, dtype=bool)
        if time_window is not None:
            start, end = time_window
            epochs = coll.epoch_array()
            mask &= (epochs >= start.timestamp()) & (epochs <= end.timestamp())
        if filters:
            for i in np.flatnonzero(mask):
                meta = coll.payloads[i].metadata
                for key, value in filters.items():
                    if meta.get(key) != value:
                        mask[i] = False
                        break
        return mask

    def search(self, q: SearchQuery) -> list[SearchHit]:
        """Exact top-k by cosine among records passing the window and filters."""
        coll = self._coll(q.collection)
        query = np.asarray(q.vector, dtype=np.float64)
        if query.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"expected ({self.dimension},), got {query.shape}"
            )
        qnorm = np.linalg.norm(query)
        if qnorm == 0.0:
            raise ZeroVectorError("cannot search with a zero vector")
        query = query / qnorm

        mask = self._filter_mask(coll, q.time_window, q.filters)
        candidates = np.flatnonzero(mask)
        if candidates.size == 0:
            return []

        scores = coll.matrix()[candidates] @ query
        ids = coll.id_array()[candidates].astype(str)
        # primary: score descending; secondary: doc_id ascending
        order = np.lexsort((ids, -scores))[: q.top_k]
        return [
            SearchHit(
                doc_id=coll.ids[candidates[i]],
                score=float(scores[i]),
                payload=coll.payloads[candidates[i]],
            )
            for i in order
        ]

    def scan(
        self,
        collection,
        time_window=None,
        filters: Optional[dict[str, str]] = None,
        limit: Optional[int] = None,
    ) -> list[Document]:
        """All documents passing the filters, ordered by (timestamp, doc_id)."""
        coll = self._coll(collection)
        mask = self._filter_mask(coll, time_window, filters or {})
        docs = [coll.payloads[i] for i in np.flatnonzero(mask)]
        docs.sort(key=lambda d: (d.timestamp, d.id))
        return docs if limit is None else docs[:limit]

    def count(self, collection, time_window=None) -> int:
        coll = self._coll(collection)
        if time_window is None:
            return len(coll.ids)
        return int(self._filter_mask(coll, time_window, {}).sum())

    def counts(self) -> dict[str, int]:
        return {c.value: len(self._collections[c].ids) for c in CollectionId}

    def dedup_keys(self, collection) -> set[str]:
        coll = self._coll(collection)
        return {
            p.metadata["dedup_key"]
            for p in coll.payloads
            if "dedup_key" in p.metadata
        }

    # -- persistence -----------------------------------------------------

    def snapshot(self, path) -> None:
        """Write the store to ``path``; see module docstring for the format."""
        for lock in self._locks.values():
            lock.acquire()
        try:
            body = bytearray()
            body += SNAPSHOT_MAGIC
            body += struct.pack("<II", SNAPSHOT_VERSION, self.dimension)
            body += struct.pack("<I", len(CollectionId))
            for cid in sorted(CollectionId, key=lambda c: c.value):
                coll = self._collections[cid]
                name = cid.value.encode("utf-8")
                body += struct.pack("<H", len(name)) + name
                body += struct.pack("<I", len(coll.ids))
                for doc_id in sorted(coll.ids):
                    pos = coll.index[doc_id]
                    id_bytes = doc_id.encode("utf-8")
                    payload = json.dumps(
                        coll.payloads[pos].to_dict(),
                        ensure_ascii=False,
                        sort_keys=True,
                    ).encode("utf-8")
                    body += struct.pack("<H", len(id_bytes)) + id_bytes
                    body += coll.vectors[pos].astype(np.float64).tobytes()
                    body += struct.pack("<I", len(payload)) + payload
            digest = hashlib.sha256(bytes(body)).digest()
            with open(path, "wb") as fh:
                fh.write(bytes(body))
                fh.write(digest)
        finally:
            for lock in self._locks.values():
                lock.release()

    @classmethod
    def restore(cls, path) -> "VectorStore":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 32 + len(SNAPSHOT_MAGIC):
            raise CorruptSnapshotError("snapshot too short")
        body, digest = blob[:-32], blob[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise CorruptSnapshotError("checksum mismatch")

        view = memoryview(body)
        offset = 0

        def take(n: int) -> bytes:
            nonlocal offset
            if offset + n > len(view):
                raise CorruptSnapshotError("unexpected end of snapshot")
            chunk = view[offset:offset + n].tobytes()
            offset += n
            return chunk

        if take(len(SNAPSHOT_MAGIC)) != SNAPSHOT_MAGIC:
            raise CorruptSnapshotError("bad magic")
        version, dimension = struct.unpack("<II", take(8))
        if version != SNAPSHOT_VERSION:
            raise CorruptSnapshotError(f"unsupported snapshot version {version}")
        if dimension < 1:
            raise CorruptSnapshotError("invalid dimension in header")
        (ncoll,) = struct.unpack("<I", take(4))

        store = cls(dimension)
        for _ in range(ncoll):
            (name_len,) = struct.unpack("<H", take(2))
            name = take(name_len).decode("utf-8")
            try:
                cid = CollectionId(name)
            except ValueError:
                raise CorruptSnapshotError(f"unknown collection {name!r}") from None
            (count,) = struct.unpack("<I", take(4))
            for _ in range(count):
                (id_len,) = struct.unpack("<H", take(2))
                doc_id = take(id_len).decode("utf-8")
                vector = np.frombuffer(take(8 * dimension), dtype=np.float64).copy()
                (payload_len,) = struct.unpack("<I", take(4))
                payload = Document.from_dict(json.loads(take(payload_len)))
                store.upsert(
                    VectorRecord(doc_id=doc_id, collection=cid,
                                 vector=vector, payload=payload)
                )
        if offset != len(view):
            raise CorruptSnapshotError("trailing bytes after records")
        return store


def brute_force_search(
    records: Sequence[tuple[str, np.ndarray]], query: np.ndarray, top_k: int
) -> list[tuple[str, float]]:
    """Reference scorer used by the CLI self-check; O(n) per query."""
    qn = query / np.linalg.norm(query)
    scored = []
    for doc_id, vec in records:
        vn = vec / np.linalg.norm(vec)
        scored.append((doc_id, float(np.dot(vn, qn))))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:top_k]
