"""Report orchestration: run the analyzers, order the sections, check references."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Optional

from ..corpus import CollectionId, format_timestamp
from .analyzers import SECTION_ORDER, ReportAnalyzers, SectionDoc

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_DAYS = 30

ANALYZER_SECTIONS = SECTION_ORDER[:4]  # everything except the summary


@dataclass
class ReportRequest:
    window: tuple[datetime, datetime]
    languages: tuple[str, str] = ("ja", "en")
    sections: frozenset[str] = frozenset(ANALYZER_SECTIONS)

    def __post_init__(self):
        start, end = self.window
        if start >= end:
            raise ValueError("window start must be before end")
        unknown = set(self.sections) - set(ANALYZER_SECTIONS)
        if unknown:
            raise ValueError(f"unknown sections: {sorted(unknown)}")

    @classmethod
    def for_month_window(cls, end: datetime, **kwargs) -> "ReportRequest":
        return cls(window=(end - timedelta(days=DEFAULT_WINDOW_DAYS), end), **kwargs)


@dataclass
class Report:
    id: str
    window: tuple[datetime, datetime]
    languages: tuple[str, str]
    sections: list[SectionDoc]
    generated_at: datetime

    def section(self, key: str) -> Optional[SectionDoc]:
        for sec in self.sections:
            if sec.key == key:
                return sec
        return None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "window": {
                "start": format_timestamp(self.window[0]),
                "end": format_timestamp(self.window[1]),
            },
            "languages": list(self.languages),
            "sections": [s.to_dict() for s in self.sections],
            "generated_at": format_timestamp(self.generated_at),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)


def _degraded_section(key: str, error: Exception) -> SectionDoc:
    from .analyzers import EMPTY_BODIES, SECTION_TITLES

    return SectionDoc(
        key=key,
        title=dict(SECTION_TITLES[key]),
        body=dict(EMPTY_BODIES[key]),
        notices=[f"section failed and was degraded: {error}"],
        empty=True,
    )


def assemble(
    request: ReportRequest,
    store,
    provider,
    *,
    clock: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
    lda_seed: int = 7,
) -> Report:
    """Run the requested analyzers, then the executive summary.

    Section order is fixed regardless of request order; a failing analyzer
    degrades its own section and never takes down the rest.  The summary is
    synthesized only when at least two sections were requested.
    """
    analyzers = ReportAnalyzers(
        store, provider, languages=request.languages, lda_seed=lda_seed
    )
    runner = {
        "news_trends": analyzers.analyze_news,
        "research_progress": analyzers.analyze_papers,
        "social_media_analysis": analyzers.analyze_social,
        "chat_analysis": analyzers.analyze_chat,
    }
    sections: list[SectionDoc] = []
    for key in ANALYZER_SECTIONS:
        if key not in request.sections:
            continue
        try:
            sections.append(runner[key](request.window))
        except Exception as exc:  # orchestrator isolation
            logger.exception("analyzer %s failed", key)
            sections.append(_degraded_section(key, exc))

    if len(request.sections) >= 2:
        try:
            sections.append(analyzers.synthesize_summary(sections))
        except Exception as exc:
            logger.exception("summary synthesis failed")
            sections.append(_degraded_section("overall_summary", exc))

    generated_at = clock()
    raw = f"{format_timestamp(request.window[0])}|{format_timestamp(request.window[1])}|{format_timestamp(generated_at)}"
    report_id = "rpt-" + hashlib.sha256(raw.encode()).hexdigest()[:12]
    return Report(
        id=report_id,
        window=request.window,
        languages=request.languages,
        sections=sections,
        generated_at=generated_at,
    )


def check_reference_validity(report: Report, store) -> tuple[float, list[str]]:
    """Proportion of citations that resolve in the store, plus the dangling ids.

    A report with zero citations is vacuously valid (1.0).
    """
    total = 0
    dangling: list[str] = []
    for section in report.sections:
        for ref in section.references:
            total += 1
            if not any(store.has(c, ref.doc_id) for c in CollectionId):
                dangling.append(ref.doc_id)
    if total == 0:
        return 1.0, []
    return (total - len(dangling)) / total, dangling
