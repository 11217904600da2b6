"""Server configuration: a small YAML key-value file mapped onto dataclasses."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .embed import EmbedderConfig


@dataclass
class AgentParams:
    window_size: int = 10
    iteration_cap: int = 8
    top_k: int = 5


@dataclass
class LlmConfig:
    mode: str = "demo"  # "demo" | "remote"
    endpoint: Optional[str] = None
    model: Optional[str] = None


@dataclass
class ReportDefaults:
    window_days: int = 30
    languages: tuple[str, str] = ("ja", "en")


@dataclass
class ServerConfig:
    listen: str = "127.0.0.1:8000"
    store_path: Optional[str] = None       # snapshot to load at startup, if present
    snapshot_on_shutdown: bool = False
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    agent: AgentParams = field(default_factory=AgentParams)
    report: ReportDefaults = field(default_factory=ReportDefaults)
    consent_default: bool = False
    pseudonym_salt: str = "local-dev-salt"

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


def load_config(path) -> ServerConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    cfg = ServerConfig()
    cfg.listen = raw.get("listen", cfg.listen)
    cfg.store_path = raw.get("store_path", cfg.store_path)
    cfg.snapshot_on_shutdown = bool(raw.get("snapshot_on_shutdown", False))
    cfg.consent_default = bool(raw.get("consent_default", False))
    cfg.pseudonym_salt = str(raw.get("pseudonym_salt", cfg.pseudonym_salt))
    if "embedder" in raw:
        cfg.embedder = EmbedderConfig(**raw["embedder"])
    if "llm" in raw:
        cfg.llm = LlmConfig(**raw["llm"])
    if "agent" in raw:
        cfg.agent = AgentParams(**raw["agent"])
    if "report" in raw:
        rep = dict(raw["report"])
        if "languages" in rep:
            rep["languages"] = tuple(rep["languages"])
        cfg.report = ReportDefaults(**rep)
    return cfg
