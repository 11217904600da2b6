"""LLM-based misinformation flagging of social posts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .. import llm
from ..corpus import Document
from ..errors import ProviderUnavailableError, SchemaError


class MisinfoCategory(str, Enum):
    SAFETY_CONCERNS = "safety_concerns"
    EFFICACY_DOUBTS = "efficacy_doubts"
    CONSPIRACY_THEORIES = "conspiracy_theories"


@dataclass
class MisinfoFlag:
    doc_id: str
    category: MisinfoCategory
    rationale: str

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "category": self.category.value,
            "rationale": self.rationale,
        }


_FLAGS_SCHEMA = {
    "type": "object",
    "properties": {
        "flags": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "category": {
                        "enum": [c.value for c in MisinfoCategory]
                    },
                    "rationale": {"type": "string"},
                },
                "required": ["id", "category"],
            },
        }
    },
    "required": ["flags"],
}


def detect_misinfo_batch(
    posts: list[Document], provider, batch_size: int = 25
) -> list[MisinfoFlag]:
    """Flag posts contradicting scientific consensus; flags reference input ids only."""
    input_ids = {doc.id for doc in posts}
    flags: list[MisinfoFlag] = []
    for start in range(0, len(posts), batch_size):
        batch = posts[start:start + batch_size]
        payload = [{"id": doc.id, "text": doc.text} for doc in batch]
        prompt = llm.render_prompt(
            "misinfo_detect", posts_json=json.dumps(payload, ensure_ascii=False)
        )
        req = llm.ChatRequest(
            messages=[llm.ChatMessage("user", prompt)],
            response_schema=_FLAGS_SCHEMA,
        )
        try:
            reply = llm.complete_structured(provider, req)
        except SchemaError:
            continue  # skip the batch rather than fabricate flags
        except ProviderUnavailableError:
            break  # partial results
        for entry in reply["flags"]:
            if entry["id"] in input_ids:
                flags.append(
                    MisinfoFlag(
                        doc_id=entry["id"],
                        category=MisinfoCategory(entry["category"]),
                        rationale=entry.get("rationale", ""),
                    )
                )
    return flags
