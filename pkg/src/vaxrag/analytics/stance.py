"""Stance classification of social posts and daily time-series aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .. import llm
from ..corpus import Document, format_timestamp
from ..errors import ProviderUnavailableError, SchemaError, UnknownDocIdError


class Stance(str, Enum):
    SUPPORTIVE = "supportive"
    OPPOSED = "opposed"
    NEUTRAL = "neutral"
    UNCLEAR = "unclear"


_LABELS_SCHEMA = {
    "type": "object",
    "properties": {
        "labels": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    # free string on purpose: invalid labels map to unclear
                    # instead of burning schema-repair retries
                    "stance": {"type": "string"},
                },
                "required": ["id", "stance"],
            },
        }
    },
    "required": ["labels"],
}


@dataclass
class StanceBatchResult:
    labels: dict[str, Stance] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


def classify_stance_batch(
    posts: list[Document], provider, batch_size: int = 25
) -> StanceBatchResult:
    """Label each post supportive/opposed/neutral/unclear.

    Post dates ride along in the prompt for temporal context.  Every input
    post receives a label: unparseable or missing model outputs fall back to
    ``unclear``, and a provider outage returns the partial results gathered
    so far together with an error summary.
    """
    result = StanceBatchResult()
    for start in range(0, len(posts), batch_size):
        batch = posts[start:start + batch_size]
        payload = [
            {
                "id": doc.id,
                "date": format_timestamp(doc.timestamp)[:10],
                "text": doc.text,
            }
            for doc in batch
        ]
        prompt = llm.render_prompt(
            "stance_classify", posts_json=json.dumps(payload, ensure_ascii=False)
        )
        req = llm.ChatRequest(
            messages=[llm.ChatMessage("user", prompt)],
            response_schema=_LABELS_SCHEMA,
        )
        try:
            reply = llm.complete_structured(provider, req)
            labelled = {entry["id"]: entry["stance"] for entry in reply["labels"]}
        except SchemaError:
            labelled = {}
        except ProviderUnavailableError as exc:
            for doc in posts[start:]:
                result.labels.pop(doc.id, None)
            result.errors.append(f"provider failed at offset {start}: {exc}")
            return result
        for doc in batch:
            raw = labelled.get(doc.id, "")
            try:
                result.labels[doc.id] = Stance(raw)
            except ValueError:
                result.labels[doc.id] = Stance.UNCLEAR
    return result


@dataclass
class StanceSeries:
    """Per-day stance counts, keyed by ISO date."""

    days: dict[str, dict[str, int]] = field(default_factory=dict)

    def total(self) -> int:
        return sum(sum(counts.values()) for counts in self.days.values())

    def to_dict(self) -> dict:
        return {day: dict(counts) for day, counts in sorted(self.days.items())}


def aggregate_daily(classified: dict[str, Stance], posts: list[Document]) -> StanceSeries:
    """Daily counts for the classified posts; days without posts are absent."""
    by_id = {doc.id: doc for doc in posts}
    series = StanceSeries()
    for doc_id, stance in classified.items():
        doc = by_id.get(doc_id)
        if doc is None:
            raise UnknownDocIdError(doc_id)
        day = format_timestamp(doc.timestamp)[:10]
        counts = series.days.setdefault(
            day, {s.value: 0 for s in Stance}
        )
        counts[stance.value] += 1
    return series
