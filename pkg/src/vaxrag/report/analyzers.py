"""The four analysis modules feeding the institutional report.

Each analyzer reads one collection inside the reporting window, runs its
domain analysis, and emits a bilingual :class:`SectionDoc` whose citation
markers are validated against the documents it actually used.  An analyzer
must never raise: thin data or provider trouble degrade the section with a
notice instead.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .. import citations, llm
from ..agent import reference_display
from ..analytics import (
    aggregate_daily,
    build_tfidf,
    chart_series,
    chart_topics,
    classify_stance_batch,
    detect_misinfo_batch,
    label_topics,
    select_vocabulary,
    tokenize,
    top_keywords,
    train_lda,
)
from ..analytics.lda import DEFAULT_K
from ..citations import Reference
from ..corpus import CollectionId, format_timestamp
from ..errors import SchemaError, VaxragError

logger = logging.getLogger(__name__)

SECTION_ORDER = (
    "news_trends",
    "research_progress",
    "social_media_analysis",
    "chat_analysis",
    "overall_summary",
)

SECTION_TITLES = {
    "news_trends": {"ja": "ニュース動向", "en": "News Trends"},
    "research_progress": {"ja": "研究の進展", "en": "Research Progress"},
    "social_media_analysis": {"ja": "ソーシャルメディア分析", "en": "Social Media Analysis"},
    "chat_analysis": {"ja": "チャット分析", "en": "Chat Analysis"},
    "overall_summary": {"ja": "総括", "en": "Overall Summary"},
}

EMPTY_BODIES = {
    "news_trends": {
        "ja": "対象期間に関連する報道はありませんでした。",
        "en": "No relevant media coverage in the reporting period.",
    },
    "research_progress": {
        "ja": "対象期間に新しい学術研究はありませんでした。",
        "en": "No new academic research in the reporting period.",
    },
    "social_media_analysis": {
        "ja": "対象期間に分析可能な投稿はありませんでした。",
        "en": "No analyzable public posts in the reporting period.",
    },
    "chat_analysis": {
        "ja": "対象期間に同意済みの会話はありませんでした。",
        "en": "No consented conversations in the reporting period.",
    },
    "overall_summary": {
        "ja": "対象期間に報告できるデータはありませんでした。",
        "en": "No data available to summarize for the reporting period.",
    },
}

_BODY_SCHEMA = {
    "type": "object",
    "properties": {"body": {"type": "string"}},
    "required": ["body"],
}

_CHAT_SCHEMA = {
    "type": "object",
    "properties": {
        "body": {"type": "string"},
        "themes": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "theme": {"type": "string"},
                    "count": {"type": "integer"},
                },
                "required": ["theme", "count"],
            },
        },
    },
    "required": ["body"],
}

MAX_PROMPT_DOCS = 20
TOPIC_MIN_POSTS_PER_TOPIC = 5


@dataclass
class SectionDoc:
    key: str
    title: dict[str, str]
    body: dict[str, str]
    references: list[Reference] = field(default_factory=list)
    charts: list[dict] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)
    empty: bool = False

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "title": dict(self.title),
            "body": dict(self.body),
            "references": [r.to_dict() for r in self.references],
            "charts": [dict(c) for c in self.charts],
            "notices": list(self.notices),
            "empty": self.empty,
        }


class ReportAnalyzers:
    """Shared wiring (store, LLM, languages, seeds) for the four analyzers."""

    def __init__(self, store, provider, languages=("ja", "en"), lda_seed: int = 7):
        self.store = store
        self.provider = provider
        self.languages = tuple(languages)
        self.lda_seed = lda_seed

    # -- helpers -----------------------------------------------------------

    def _window_text(self, window) -> str:
        start, end = window
        return f"{format_timestamp(start)[:10]} .. {format_timestamp(end)[:10]}"

    def _empty_section(self, key: str) -> SectionDoc:
        return SectionDoc(
            key=key,
            title=dict(SECTION_TITLES[key]),
            body={lang: EMPTY_BODIES[key][lang] for lang in self.languages},
            empty=True,
        )

    def _generate_body(self, template: str, schema=None, **slots) -> dict:
        req = llm.ChatRequest(
            messages=[llm.ChatMessage("user", llm.render_prompt(template, **slots))],
            response_schema=schema or _BODY_SCHEMA,
        )
        return llm.complete_structured(self.provider, req)

    def _translate(self, body: str, target_lang: str) -> str:
        try:
            reply = self._generate_body(
                "translate_section", body=body, target_lang=target_lang
            )
            return reply["body"]
        except (SchemaError, VaxragError) as exc:
            logger.warning("translation degraded: %s", exc)
            return body  # untranslated fallback keeps both language slots nonempty

    def _bilingual(self, primary_body: str) -> dict[str, str]:
        primary, secondary = self.languages
        return {
            primary: primary_body,
            secondary: self._translate(primary_body, secondary),
        }

    def _docs_section(self, key: str, template: str, collection, window) -> SectionDoc:
        docs = self.store.scan(collection, time_window=window, limit=MAX_PROMPT_DOCS)
        if not docs:
            return self._empty_section(key)
        block = "\n".join(
            f"[{i + 1}] {format_timestamp(d.timestamp)[:10]} {d.source}: {d.text[:400]}"
            for i, d in enumerate(docs)
        )
        section = SectionDoc(key=key, title=dict(SECTION_TITLES[key]), body={})
        try:
            draft = self._generate_body(
                template, window=self._window_text(window), docs_block=block
            )["body"]
        except (SchemaError, VaxragError) as exc:
            section.notices.append(f"analysis degraded: {exc}")
            section.body = {lang: EMPTY_BODIES[key][lang] for lang in self.languages}
            section.empty = True
            return section

        text, used, had_dangling = citations.repair_draft(draft, [d.id for d in docs])
        if had_dangling:
            section.notices.append("dropped citation markers with no matching document")
        section.references = [
            Reference(
                n=i + 1,
                doc_id=docs[idx - 1].id,
                display=reference_display(docs[idx - 1], collection),
            )
            for i, idx in enumerate(used)
        ]
        section.body = self._bilingual(text)
        return section

    # -- the four analyzers --------------------------------------------------

    def analyze_news(self, window) -> SectionDoc:
        return self._docs_section(
            "news_trends", "report_news_section", CollectionId.NEWS, window
        )

    def analyze_papers(self, window) -> SectionDoc:
        return self._docs_section(
            "research_progress", "report_papers_section", CollectionId.PAPERS, window
        )

    def analyze_social(self, window) -> SectionDoc:
        key = "social_media_analysis"
        posts = self.store.scan(CollectionId.SOCIAL, time_window=window)
        if not posts:
            return self._empty_section(key)
        section = SectionDoc(key=key, title=dict(SECTION_TITLES[key]), body={})
        analytics_payload: dict = {"post_count": len(posts)}

        # stance trend
        stance_result = classify_stance_batch(posts, self.provider)
        section.notices.extend(stance_result.errors)
        series = aggregate_daily(stance_result.labels, posts)
        if series.days:
            section.charts.append({"kind": "stance_series", **chart_series(series)})
            analytics_payload["stance_daily"] = series.to_dict()

        # topic distribution, guarded against degenerate corpora
        topic_labels: list[str] = []
        tokens = [tokenize(p.text) for p in posts]
        try:
            tfidf = build_tfidf(tokens, min_df=2)
            vocab = select_vocabulary(tfidf, tokens)
            vocab_set = set(vocab)
            usable = [t for t in tokens if any(term in vocab_set for term in t)]
            if len(usable) >= TOPIC_MIN_POSTS_PER_TOPIC * DEFAULT_K and len(vocab) >= DEFAULT_K:
                model = train_lda(usable, k=DEFAULT_K, vocab=vocab, seed=self.lda_seed)
                keywords = [top_keywords(model, t, 8) for t in range(model.k)]
                topic_labels = label_topics(model, keywords, self.provider)
                section.charts.append(
                    {"kind": "topic_weights", **chart_topics(model, topic_labels)}
                )
                analytics_payload["topics"] = [
                    {"label": label, "keywords": kw}
                    for label, kw in zip(topic_labels, keywords)
                ]
            else:
                section.notices.append(
                    "topic modeling skipped: too few posts for stable topics"
                )
        except VaxragError as exc:
            section.notices.append(f"topic modeling degraded: {exc}")

        # misinformation categories
        flags = detect_misinfo_batch(posts, self.provider)
        category_counts: dict[str, int] = {}
        for flag in flags:
            category_counts[flag.category.value] = (
                category_counts.get(flag.category.value, 0) + 1
            )
        analytics_payload["misinformation_counts"] = category_counts

        try:
            draft = self._generate_body(
                "report_social_narrative",
                window=self._window_text(window),
                analytics_json=json.dumps(
                    analytics_payload, ensure_ascii=False, sort_keys=True
                ),
            )["body"]
        except (SchemaError, VaxragError) as exc:
            section.notices.append(f"narrative degraded: {exc}")
            draft = EMPTY_BODIES[key][self.languages[0]]
        # aggregated analysis carries no per-document citations
        text, _, _ = citations.repair_draft(draft, [])
        section.body = self._bilingual(text)
        return section

    def analyze_chat(self, window) -> SectionDoc:
        key = "chat_analysis"
        docs = self.store.scan(CollectionId.CHAT, time_window=window)
        if not docs:
            return self._empty_section(key)
        questions = []
        for doc in docs:
            first = doc.text.split("\n", 1)[0]
            questions.append(
                {
                    "date": format_timestamp(doc.timestamp)[:10],
                    "text": first[3:] if first.startswith("Q: ") else first,
                }
            )
        section = SectionDoc(key=key, title=dict(SECTION_TITLES[key]), body={})
        try:
            reply = self._generate_body(
                "report_chat_section",
                schema=_CHAT_SCHEMA,
                window=self._window_text(window),
                questions_json=json.dumps(questions, ensure_ascii=False),
            )
        except (SchemaError, VaxragError) as exc:
            section.notices.append(f"analysis degraded: {exc}")
            section.body = {lang: EMPTY_BODIES[key][lang] for lang in self.languages}
            section.empty = True
            return section
        themes = reply.get("themes") or []
        if themes:
            section.charts.append(
                {
                    "kind": "chat_themes",
                    "labels": [t["theme"] for t in themes],
                    "counts": [int(t["count"]) for t in themes],
                }
            )
        text, _, _ = citations.repair_draft(reply["body"], [])
        section.body = self._bilingual(text)
        return section

    def synthesize_summary(self, sections: list[SectionDoc]) -> SectionDoc:
        key = "overall_summary"
        nonempty = [s for s in sections if not s.empty]
        if not nonempty:
            return self._empty_section(key)
        primary = self.languages[0]
        payload = [
            {"section": s.key, "text": s.body.get(primary, "")} for s in nonempty
        ]
        section = SectionDoc(key=key, title=dict(SECTION_TITLES[key]), body={})
        try:
            draft = self._generate_body(
                "report_summary",
                sections_json=json.dumps(payload, ensure_ascii=False),
            )["body"]
        except (SchemaError, VaxragError) as exc:
            section.notices.append(f"synthesis degraded: {exc}")
            draft = EMPTY_BODIES[key][primary]
        # executive synthesis introduces no sources of its own
        text, _, _ = citations.repair_draft(draft, [])
        section.body = self._bilingual(text)
        return section
