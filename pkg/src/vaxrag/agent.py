"""Iterative retrieve-and-reason controller behind the public chat service.

One turn runs a bounded decision cycle: analyze gaps, pick a tool, retrieve,
review, and check sufficiency, finishing with an answer whose inline [n]
markers are validated (and repaired if needed) against the evidence that was
actually retrieved.  Social evidence is aggregated before it can be quoted,
so no individual post or author is ever surfaced.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional

from . import citations, llm
from .citations import Reference
from .corpus import CollectionId, Document, format_timestamp, ingest_batch
from .errors import SchemaError
from .vectorstore import SearchHit, SearchQuery

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_SIZE = 10
DEFAULT_ITERATION_CAP = 8
DEFAULT_TOP_K = 5
SOCIAL_K_MIN = 3

INSUFFICIENT_SOCIAL_SNIPPET = (
    "Insufficient public data to summarize social-media discussion on this topic."
)

_CJK_RE = re.compile(r"[぀-ヿ一-鿿]")


class ToolName(str, Enum):
    PAPERS = "papers"
    WEB = "web"
    SOCIAL = "social"
    NEWS = "news"
    CHITCHAT = "chitchat"


TOOL_COLLECTIONS = {
    ToolName.PAPERS: CollectionId.PAPERS,
    ToolName.WEB: CollectionId.OFFICIAL,
    ToolName.SOCIAL: CollectionId.SOCIAL,
    ToolName.NEWS: CollectionId.NEWS,
}

_ACTION_SCHEMA = {
    "type": "object",
    "properties": {
        "thought": {"type": "string"},
        "tool": {"enum": ["papers", "web", "social", "news", "chitchat", "finish"]},
        "query": {"type": "string"},
    },
    "required": ["tool"],
}

_SUFFICIENT_SCHEMA = {
    "type": "object",
    "properties": {"sufficient": {"type": "boolean"}},
    "required": ["sufficient"],
}


@dataclass
class Evidence:
    doc_id: str
    display: str
    snippet: str
    tool: ToolName


@dataclass
class Iteration:
    thought: str
    tool: str  # ToolName value or "finish"
    query: str
    hits: list[SearchHit] = field(default_factory=list)
    tool_citation_check: list[str] = field(default_factory=list)  # empty == pass

    def to_dict(self) -> dict:
        return {
            "thought": self.thought,
            "tool": self.tool,
            "query": self.query,
            "hit_ids": [h.doc_id for h in self.hits],
            "tool_citation_check": "pass" if not self.tool_citation_check
            else self.tool_citation_check,
        }


@dataclass
class AgentTrace:
    iterations: list[Iteration] = field(default_factory=list)
    iteration_cap: int = DEFAULT_ITERATION_CAP
    degraded: bool = False

    def to_dict(self) -> dict:
        return {
            "iterations": [i.to_dict() for i in self.iterations],
            "iteration_cap": self.iteration_cap,
            "degraded": self.degraded,
        }


@dataclass
class Response:
    text: str
    references: list[Reference]
    trace: AgentTrace

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "references": [r.to_dict() for r in self.references],
            "degraded": self.trace.degraded,
            "trace_summary": self.trace.to_dict(),
        }


@dataclass
class Turn:
    user_text: str
    response: Response


@dataclass
class ConversationState:
    session_id: str
    consent: bool = False
    window_size: int = DEFAULT_WINDOW_SIZE
    turns: list[Turn] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


@dataclass
class ToolResult:
    hits: list[SearchHit]
    evidence: list[Evidence]
    notice: Optional[str] = None


def reference_display(doc: Document, collection: CollectionId) -> str:
    """Source-appropriate formatted citation line."""
    title = doc.metadata.get("title") or doc.text.split("\n")[0][:80]
    year = doc.timestamp.year
    date = doc.timestamp.strftime("%Y-%m-%d")
    if collection is CollectionId.PAPERS:
        display = f"{title}. {doc.source} ({year})."
        if doc.url_or_doi:
            display += f" DOI: {doc.url_or_doi}"
        return display
    if collection is CollectionId.NEWS:
        return f"{title}. {doc.source} ({date})."
    if collection is CollectionId.OFFICIAL:
        display = f"{title}. {doc.source}."
        if doc.url_or_doi:
            display += f" {doc.url_or_doi}"
        return display
    if collection is CollectionId.CHAT:
        return f"Chat interactions ({date})."
    return f"{title} ({date})."


def validate_citations_tool(hit_ids: list[str], cited_ids: list[str]) -> list[str]:
    """First validation level: a tool may only cite documents it retrieved."""
    known = set(hit_ids)
    return [cid for cid in cited_ids if cid not in known]


def validate_citations_response(resp: Response, store=None) -> list[str]:
    """Second validation level: whole-response marker/reference integrity."""
    violations = citations.validate_bijection(resp.text, resp.references)
    if store is not None:
        for ref in resp.references:
            found = any(store.has(c, ref.doc_id) for c in CollectionId)
            if not found:
                violations.append(f"reference {ref.n} doc_id {ref.doc_id!r} not in store")
    return violations


def trim_history(state: ConversationState) -> str:
    """Render at most the most recent window_size turns for prompt context."""
    recent = state.turns[-state.window_size:]
    lines = []
    for turn in recent:
        lines.append(f"User: {turn.user_text}")
        lines.append(f"Assistant: {turn.response.text}")
    return "\n".join(lines) if lines else "(no prior turns)"


def _guess_lang(text: str) -> str:
    return "ja" if _CJK_RE.search(text) else "en"


class Agent:
    """Binds the controller loop to a store, an embedder, and an LLM provider."""

    def __init__(
        self,
        store,
        embedder,
        provider,
        *,
        top_k: int = DEFAULT_TOP_K,
        iteration_cap: int = DEFAULT_ITERATION_CAP,
        social_k_min: int = SOCIAL_K_MIN,
        clock: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
    ):
        self.store = store
        self.embedder = embedder
        self.provider = provider
        self.top_k = top_k
        self.iteration_cap = iteration_cap
        self.social_k_min = social_k_min
        self.clock = clock

    # -- decision steps ---------------------------------------------------

    def select_action(self, history: str, user_text: str, evidence_block: str) -> dict:
        prompt = llm.render_prompt(
            "agent_select_action",
            history=history,
            user_text=user_text,
            evidence=evidence_block or "(none yet)",
        )
        req = llm.ChatRequest(
            messages=[
                llm.ChatMessage("system", llm.load_prompt("agent_system")),
                llm.ChatMessage("user", prompt),
            ],
            response_schema=_ACTION_SCHEMA,
        )
        action = llm.complete_structured(self.provider, req)
        action.setdefault("thought", "")
        action.setdefault("query", "")
        return action

    def _sufficient(self, user_text: str, evidence_block: str) -> bool:
        prompt = llm.render_prompt(
            "agent_sufficiency", user_text=user_text, evidence=evidence_block
        )
        req = llm.ChatRequest(
            messages=[llm.ChatMessage("user", prompt)],
            response_schema=_SUFFICIENT_SCHEMA,
        )
        try:
            return bool(llm.complete_structured(self.provider, req)["sufficient"])
        except SchemaError:
            return False  # unsure -> keep retrieving until the cap resolves it

    def execute_tool(self, tool: ToolName, query: str, window=None) -> ToolResult:
        if tool is ToolName.CHITCHAT:
            return ToolResult(hits=[], evidence=[])
        if not query.strip():
            raise ValueError(f"tool {tool.value} requires a nonempty query")
        collection = TOOL_COLLECTIONS[tool]
        hits = self.store.search(
            SearchQuery(
                collection=collection,
                vector=self.embedder.embed_text(query),
                top_k=self.top_k,
                time_window=window,
            )
        )
        if tool is ToolName.SOCIAL:
            summary = self.aggregate_social(hits)
            if len(hits) < self.social_k_min:
                return ToolResult(hits=hits, evidence=[], notice=summary)
            evidence = [
                Evidence(
                    doc_id=hits[0].doc_id,
                    display=f"Aggregated public posts (n={len(hits)}).",
                    snippet=summary,
                    tool=tool,
                )
            ]
            return ToolResult(hits=hits, evidence=evidence)
        evidence = [
            Evidence(
                doc_id=h.doc_id,
                display=reference_display(h.payload, collection),
                snippet=h.payload.text[:300],
                tool=tool,
            )
            for h in hits
        ]
        return ToolResult(hits=hits, evidence=evidence)

    def aggregate_social(self, hits: list[SearchHit], k_min: Optional[int] = None) -> str:
        """Theme/sentiment summary over >= k_min posts, never quoting anyone.

        Falls back to a fixed notice when posts are too few or the generated
        summary leaks an author pseudonym or a verbatim run longer than 10
        tokens from any single post.
        """
        from .analytics.textproc import tokenize

        k_min = self.social_k_min if k_min is None else k_min
        if len(hits) < k_min:
            return INSUFFICIENT_SOCIAL_SNIPPET

        posts = [
            {"date": format_timestamp(h.payload.timestamp)[:10], "text": h.payload.text}
            for h in hits
        ]
        prompt = llm.render_prompt(
            "agent_social_summary",
            posts_json=json.dumps(posts, ensure_ascii=False),
        )
        summary = self.provider.complete(
            llm.ChatRequest(messages=[llm.ChatMessage("user", prompt)])
        )

        for hit in hits:
            ref = hit.payload.author_ref
            if ref and ref in summary:
                logger.warning("social summary leaked an author pseudonym; degrading")
                return INSUFFICIENT_SOCIAL_SNIPPET
        summary_tokens = tokenize(summary)
        shingle = 11  # "longer than 10 consecutive tokens" boundary
        summary_shingles = {
            tuple(summary_tokens[i:i + shingle])
            for i in range(max(0, len(summary_tokens) - shingle + 1))
        }
        if summary_shingles:
            for hit in hits:
                post_tokens = tokenize(hit.payload.text)
                for i in range(max(0, len(post_tokens) - shingle + 1)):
                    if tuple(post_tokens[i:i + shingle]) in summary_shingles:
                        logger.warning("social summary quoted a post verbatim; degrading")
                        return INSUFFICIENT_SOCIAL_SNIPPET
        return summary

    def _synthesize(self, history: str, user_text: str, evidence: list[Evidence]) -> str:
        block = "\n".join(
            f"[{i + 1}] ({e.tool.value}) {e.snippet}" for i, e in enumerate(evidence)
        ) or "(no evidence; answer conversationally)"
        prompt = llm.render_prompt(
            "agent_synthesize", history=history, user_text=user_text, evidence=block
        )
        return self.provider.complete(
            llm.ChatRequest(
                messages=[
                    llm.ChatMessage("system", llm.load_prompt("agent_system")),
                    llm.ChatMessage("user", prompt),
                ]
            )
        )

    # -- main loop ----------------------------------------------------------

    def run_turn(self, state: ConversationState, user_text: str) -> Response:
        if not user_text or not user_text.strip():
            raise ValueError("user_text must be nonempty")

        with state.lock:  # one in-flight turn per session
            history = trim_history(state)
            trace = AgentTrace(iteration_cap=self.iteration_cap)
            evidence: list[Evidence] = []
            seen_docs: set[str] = set()

            while len(trace.iterations) < self.iteration_cap - 1:
                evidence_block = "\n".join(
                    f"[{i + 1}] {e.snippet}" for i, e in enumerate(evidence)
                )
                try:
                    action = self.select_action(history, user_text, evidence_block)
                except SchemaError:
                    trace.degraded = True
                    break
                if action["tool"] == "finish":
                    break
                tool = ToolName(action["tool"])
                result = self.execute_tool(tool, action.get("query") or user_text)
                check = validate_citations_tool(
                    [h.doc_id for h in result.hits],
                    [e.doc_id for e in result.evidence],
                )
                trace.iterations.append(
                    Iteration(
                        thought=action.get("thought", ""),
                        tool=tool.value,
                        query=action.get("query", ""),
                        hits=result.hits,
                        tool_citation_check=check,
                    )
                )
                for ev in result.evidence:
                    if ev.doc_id not in seen_docs:
                        seen_docs.add(ev.doc_id)
                        evidence.append(ev)
                if tool is ToolName.CHITCHAT:
                    break
                evidence_block = "\n".join(
                    f"[{i + 1}] {e.snippet}" for i, e in enumerate(evidence)
                )
                if self._sufficient(user_text, evidence_block):
                    break
            else:
                trace.degraded = True  # iteration cap reached

            draft = self._synthesize(history, user_text, evidence)
            response = self._assemble(draft, evidence, trace)
            state.turns.append(Turn(user_text=user_text, response=response))
            if state.consent:
                self._persist_turn(state, user_text, response)
            return response

    def _assemble(self, draft: str, evidence: list[Evidence], trace: AgentTrace) -> Response:
        text, used, had_dangling = citations.repair_draft(
            draft, [e.doc_id for e in evidence]
        )
        trace.degraded = trace.degraded or had_dangling
        references = [
            Reference(n=i + 1, doc_id=evidence[idx - 1].doc_id,
                      display=evidence[idx - 1].display)
            for i, idx in enumerate(used)
        ]
        trace.iterations.append(Iteration(thought="", tool="finish", query=""))
        response = Response(text=text, references=references, trace=trace)

        violations = validate_citations_response(response, self.store)
        if violations:
            # one repair pass: drop what cannot be resolved, then flag degraded
            bad = {ref.n for ref in references
                   if not any(self.store.has(c, ref.doc_id) for c in CollectionId)}
            keep = [ref for ref in references if ref.n not in bad]
            stripped = response.text
            for n in bad:
                stripped = stripped.replace(f"[{n}]", "")
            text2, used2, _ = citations.repair_draft(
                stripped, [ref.doc_id for ref in keep]
            )
            # keep list is already 1..len ordered, so repair just renumbers
            displays = {ref.doc_id: ref.display for ref in keep}
            references = [
                Reference(n=i + 1, doc_id=keep[idx - 1].doc_id,
                          display=displays[keep[idx - 1].doc_id])
                for i, idx in enumerate(used2)
            ]
            trace.degraded = True
            response = Response(text=text2, references=references, trace=trace)
        return response

    def _persist_turn(self, state: ConversationState, user_text: str, response: Response):
        turn_no = len(state.turns)
        doc = Document(
            id=f"{state.session_id}-t{turn_no}",
            collection=CollectionId.CHAT,
            text=f"Q: {user_text}\nA: {response.text}",
            lang=_guess_lang(user_text),
            timestamp=self.clock(),
            source="chat-service",
            metadata={"session_id": state.session_id, "consent": "true"},
        )
        ingest_batch([doc], self.store, self.embedder)
