"""Document model, JSONL replay connectors, deduplication, and batch ingestion.

All knowledge enters the platform as JSONL files (one object per line,
UTF-8).  Live collectors are out of scope; each collection has a connector
that maps source-specific fields (DOI, MeSH terms, tweet ids, session ids)
into the common :class:`Document` shape so tests and replays stay hermetic.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional

from .errors import (
    BadTimestampError,
    EmptyTextError,
    MalformedJsonError,
    MissingFieldError,
)


class CollectionId(str, Enum):
    """The five knowledge collections."""

    PAPERS = "papers"
    OFFICIAL = "official"
    SOCIAL = "social"
    CHAT = "chat"
    NEWS = "news"


REQUIRED_FIELDS = ("id", "text", "timestamp", "source", "lang")

# Social post text is scrubbed of @-mentions before storage so no raw handle
# can survive into retrieval snippets, summaries, or reports.
_MENTION_RE = re.compile(r"@[A-Za-z0-9_]+")

_WS_RE = re.compile(r"\s+")


@dataclass
class Document:
    """One knowledge item: paper abstract, official page, post, news item, or chat turn."""

    id: str
    collection: CollectionId
    text: str
    lang: str
    timestamp: datetime
    source: str
    url_or_doi: Optional[str] = None
    author_ref: Optional[str] = None
    metadata: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "collection": self.collection.value,
            "text": self.text,
            "lang": self.lang,
            "timestamp": format_timestamp(self.timestamp),
            "source": self.source,
            "metadata": dict(self.metadata),
        }
        if self.url_or_doi is not None:
            d["url_or_doi"] = self.url_or_doi
        if self.author_ref is not None:
            d["author_ref"] = self.author_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            id=d["id"],
            collection=CollectionId(d["collection"]),
            text=d["text"],
            lang=d["lang"],
            timestamp=parse_timestamp(d["timestamp"]),
            source=d["source"],
            url_or_doi=d.get("url_or_doi"),
            author_ref=d.get("author_ref"),
            metadata=dict(d.get("metadata", {})),
        )


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if not isinstance(value, str) or not value:
        raise BadTimestampError(f"not a timestamp string: {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise BadTimestampError(f"unparseable timestamp: {value!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def pseudonymize_author(handle: str, salt: str) -> str:
    """Keyed hash of an author handle; stable per (handle, salt), irreversible."""
    if not handle:
        raise ValueError("handle must be nonempty")
    digest = hmac.new(salt.encode("utf-8"), handle.encode("utf-8"), hashlib.sha256)
    return digest.hexdigest()[:16]


def parse_record(line: str, collection: CollectionId, *, salt: str = "") -> Document:
    """Validate one JSONL line into a Document.

    Social records must arrive with an ``author`` field (the raw handle),
    which is pseudonymized with ``salt`` and never stored; @-mentions in the
    post text are masked for the same reason.
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedJsonError("line is not a JSON object")

    for name in REQUIRED_FIELDS:
        if name not in raw or raw[name] in (None, ""):
            raise MissingFieldError(name)

    text = str(raw["text"])
    if not text.strip():
        raise MissingFieldError("text")

    timestamp = parse_timestamp(raw["timestamp"])

    metadata = {}
    for key, value in (raw.get("metadata") or {}).items():
        metadata[str(key)] = str(value)

    author_ref = None
    if collection is CollectionId.SOCIAL:
        text = _MENTION_RE.sub("@user", text)
        author = raw.get("author") or raw.get("author_ref")
        if author:
            author_ref = pseudonymize_author(str(author), salt)
    else:
        author = raw.get("author") or raw.get("author_ref")
        if author:
            author_ref = str(author)

    return Document(
        id=str(raw["id"]),
        collection=collection,
        text=text,
        lang=str(raw["lang"]),
        timestamp=timestamp,
        source=str(raw["source"]),
        url_or_doi=(str(raw["url_or_doi"]) if raw.get("url_or_doi") else None),
        author_ref=author_ref,
        metadata=metadata,
    )


def iter_jsonl(path, collection: CollectionId, *, salt: str = ""):
    """Yield (line_number, Document-or-error) pairs from a JSONL file."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, parse_record(line, collection, salt=salt), None
            except (MalformedJsonError, MissingFieldError, BadTimestampError) as exc:
                yield lineno, None, exc


def _normalize_for_dedup(text: str) -> str:
    # NFKC so Japanese full/half-width variants unify before hashing.
    text = unicodedata.normalize("NFKC", text).lower()
    return _WS_RE.sub(" ", text).strip()


def dedup_key(doc: Document) -> str:
    """Deterministic duplicate key: URL/DOI when present, else a text hash."""
    if doc.url_or_doi:
        return f"url:{doc.url_or_doi}"
    normalized = _normalize_for_dedup(doc.text)
    digest = hashlib.sha256(
        f"{doc.collection.value}\x00{normalized}".encode("utf-8")
    ).hexdigest()
    return f"txt:{digest[:32]}"


@dataclass
class IngestStats:
    inserted: int = 0
    skipped_duplicates: int = 0
    failed: int = 0
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "inserted": self.inserted,
            "skipped_duplicates": self.skipped_duplicates,
            "failed": self.failed,
            "failures": list(self.failures),
        }


# One writer per collection; parsing stays pure so callers may parallelize it.
_COLLECTION_WRITE_LOCKS = {c: threading.Lock() for c in CollectionId}


def ingest_batch(records: Iterable[Document], store, embedder) -> IngestStats:
    """Embed and upsert every non-duplicate document.

    Duplicates are detected against both the current batch and documents
    already in the store (via the dedup key recorded in document metadata),
    which makes re-ingesting the same file a no-op.  A document whose
    embedding fails is counted in ``failed`` without poisoning the batch;
    total counts always sum to the input length.
    """
    from .vectorstore import VectorRecord  # local import to avoid a cycle

    stats = IngestStats()
    records = list(records)
    if not records:
        return stats

    by_collection: dict[CollectionId, list[Document]] = {}
    for doc in records:
        by_collection.setdefault(doc.collection, []).append(doc)

    for collection, docs in by_collection.items():
        with _COLLECTION_WRITE_LOCKS[collection]:
            known_keys = store.dedup_keys(collection)
            for doc in docs:
                key = dedup_key(doc)
                if key in known_keys:
                    stats.skipped_duplicates += 1
                    continue
                try:
                    vector = embedder.embed_text(doc.text)
                except EmptyTextError as exc:
                    stats.failed += 1
                    stats.failures.append(f"{doc.id}: {exc}")
                    continue
                doc.metadata["dedup_key"] = key
                store.upsert(VectorRecord(doc_id=doc.id, collection=collection,
                                          vector=vector, payload=doc))
                known_keys.add(key)
                stats.inserted += 1
    return stats
