"""Chat-completion contract plus hermetic mock providers.

Every LLM-backed feature (agent, analytics, reports, evaluation) goes
through :func:`complete` / :func:`complete_structured` so tests can swap in
a :class:`ScriptedProvider` (fixed reply sequence) or :class:`RuleProvider`
(reply computed from the request) and the whole platform becomes
byte-deterministic at temperature 0.

Prompt text lives in ``prompts/*.txt`` template files with named
placeholders; templates are data, not code.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

import jsonschema

from .errors import ProviderUnavailableError, SchemaError

ENDPOINT_ENV = "VAXRAG_LLM_ENDPOINT"
API_KEY_ENV = "VAXRAG_LLM_API_KEY"
MODEL_ENV = "VAXRAG_LLM_MODEL"

REPAIR_RETRIES = 2

_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)


@dataclass
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str


@dataclass
class ChatRequest:
    messages: list[ChatMessage]
    temperature: float = 0.0
    max_tokens: int = 2048
    response_schema: Optional[dict] = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def last_user_text(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "user":
                return msg.content
        return ""

    def rendered(self) -> str:
        return "\n".join(f"{m.role}: {m.content}" for m in self.messages)


class TokenBucket:
    """Simple shared rate limiter; thread-safe."""

    def __init__(self, rate_per_sec: float = 50.0, capacity: float = 50.0):
        self.rate = rate_per_sec
        self.capacity = capacity
        self._tokens = capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


_GLOBAL_BUCKET = TokenBucket()


class ScriptedProvider:
    """Replays an ordered script of (matcher, reply) pairs.

    Each call consumes the next entry; a non-None matcher must appear as a
    substring of the rendered request, otherwise the test scripting is wrong
    and we fail loudly.  An exhausted script behaves like an unavailable
    provider.
    """

    def __init__(self, script: list[tuple[Optional[str], str]]):
        self.script = list(script)
        self._pos = 0
        self._lock = threading.Lock()

    @property
    def calls_made(self) -> int:
        return self._pos

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            if self._pos >= len(self.script):
                raise ProviderUnavailableError("scripted provider exhausted")
            matcher, reply = self.script[self._pos]
            self._pos += 1
        if matcher is not None and matcher not in req.rendered():
            raise AssertionError(
                f"script entry {self._pos - 1} expected {matcher!r} in request"
            )
        return reply


class RuleProvider:
    """Computes the reply from the request via a caller-supplied handler."""

    def __init__(self, handler: Callable[[ChatRequest], str]):
        self.handler = handler

    def complete(self, req: ChatRequest) -> str:
        return self.handler(req)


class RemoteProvider:
    """HTTP client for any `POST {model, messages, ...} -> {content}` endpoint."""

    def __init__(self, endpoint: Optional[str] = None, model: Optional[str] = None,
                 timeout_s: float = 60.0, bucket: Optional[TokenBucket] = None):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        self.model = model or os.environ.get(MODEL_ENV, "default")
        self.timeout_s = timeout_s
        self.bucket = bucket or _GLOBAL_BUCKET
        if not self.endpoint:
            raise ValueError(f"remote provider requires an endpoint ({ENDPOINT_ENV})")
        self._client = None
        self._lock = threading.Lock()

    def _http(self):
        import httpx

        with self._lock:
            if self._client is None:
                headers = {}
                api_key = os.environ.get(API_KEY_ENV)
                if api_key:
                    headers["Authorization"] = f"Bearer {api_key}"
                self._client = httpx.Client(timeout=self.timeout_s, headers=headers)
        return self._client

    def complete(self, req: ChatRequest) -> str:
        import httpx

        self.bucket.acquire()
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        try:
            resp = self._http().post(self.endpoint, json=body)
            resp.raise_for_status()
            return str(resp.json()["content"])
        except (httpx.TransportError, httpx.HTTPStatusError, KeyError) as exc:
            raise ProviderUnavailableError(f"chat provider failed: {exc}") from exc


def complete(provider, req: ChatRequest) -> str:
    return provider.complete(req)


def _extract_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    match = _JSON_BLOCK_RE.search(text)
    if match:
        try:
            return json.loads(match.group(0))
        except json.JSONDecodeError:
            return None
    return None


def complete_structured(provider, req: ChatRequest):
    """Call the provider and parse/validate the reply against the schema.

    On parse or validation failure the reply and a repair instruction are
    appended and the call retried, up to REPAIR_RETRIES times; the result is
    never unvalidated data.
    """
    if req.response_schema is None:
        raise ValueError("complete_structured requires response_schema")

    messages = list(req.messages)
    last_reply = ""
    for attempt in range(1 + REPAIR_RETRIES):
        attempt_req = ChatRequest(
            messages=messages,
            temperature=req.temperature,
            max_tokens=req.max_tokens,
            response_schema=req.response_schema,
        )
        last_reply = provider.complete(attempt_req)
        parsed = _extract_json(last_reply)
        if parsed is not None:
            try:
                jsonschema.validate(parsed, req.response_schema)
                return parsed
            except jsonschema.ValidationError as exc:
                problem = f"schema violation: {exc.message}"
        else:
            problem = "reply was not valid JSON"
        messages = messages + [
            ChatMessage("assistant", last_reply),
            ChatMessage(
                "user",
                f"Your reply could not be used ({problem}). "
                "Answer again with ONLY a JSON object matching the required schema.",
            ),
        ]
    raise SchemaError(
        f"no schema-valid reply after {REPAIR_RETRIES} repairs", raw=last_reply
    )


def load_prompt(name: str) -> str:
    """Load a prompt template from the packaged prompts directory."""
    return resources.files("vaxrag.prompts").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


def render_prompt(name: str, **values: str) -> str:
    """Fill ``{placeholder}`` slots in the named template."""
    template = load_prompt(name)
    return template.format(**values)
