"""Deterministic demo corpus and an offline rule-based LLM.

The generator writes one JSONL file per collection plus a manifest, at the
same per-collection proportions as the production database (papers 5,
official 67, social 1329, chat 14, all seeded), concentrated around four
reporting windows in 2020 so reports have data to chew on.

``DemoProvider`` answers every prompt template in this package with
schema-valid, deterministic output, so the full stack (chat, analytics,
reports, evaluation) runs with no model or network.  Tests use it as their
rule-based mock.
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .llm import ChatRequest, RuleProvider

FIXTURE_COUNTS = {"papers": 5, "official": 67, "social": 1329, "chat": 14, "news": 24}
DEMO_SALT = "demo-fixture-salt"

# the four reporting windows exercised by report tests (30 days each)
REPORT_WINDOWS = (
    ("2020-01-01", "2020-01-31"),
    ("2020-07-01", "2020-07-31"),
    ("2020-09-01", "2020-09-30"),
    ("2020-10-01", "2020-10-31"),
)

_SUPPORTIVE = (
    "今日HPVワクチンを打ちました。思ったより痛くなかったです。",
    "娘と一緒に接種しました。将来の安心のためです。",
    "ワクチン接種を受けました。副反応もなく元気です。",
    "予約していた接種がやっと終わった。ほっとした。",
)
_OPPOSED = (
    "HPVワクチンで不妊になると聞いて怖くなった。",
    "このワクチンは効かないという話を読んだ。打ちたくない。",
    "ワクチンは製薬会社の陰謀だと思う。信用できない。",
    "副反応が危険すぎる。絶対に反対です。",
)
_NEUTRAL = (
    "自治体がHPVワクチンの案内を再開したというニュースを見た。",
    "学校で接種の説明資料が配られたそうです。",
    "定期接種の対象年齢について報道がありました。",
    "HPVワクチンの勧奨再開が検討されているとのことです。",
)
_UNCLEAR = (
    "HPVワクチンって結局どうなんだろう。",
    "接種するべきか迷っています。誰か教えて。",
    "子宮頸がん検診とワクチンの違いがよくわからない。",
    "予約はどこでできるのかな。",
)
_POST_POOLS = (_SUPPORTIVE, _OPPOSED, _NEUTRAL, _UNCLEAR)

_PAPER_TOPICS = (
    ("Quadrivalent vaccine efficacy against persistent infection",
     "Long-term follow-up shows sustained protection against persistent HPV "
     "infection and high-grade cervical lesions in vaccinated cohorts."),
    ("Safety surveillance of HPV immunization programs",
     "Population-scale surveillance finds no elevated risk of serious adverse "
     "events after HPV vaccination compared with matched controls."),
    ("Catch-up vaccination in women aged 17-25",
     "Catch-up immunization remains effective for preventing incident "
     "infection in previously unexposed young adults."),
    ("Cervical screening outcomes after national program suspension",
     "Modeling of the suspension period projects excess cervical cancer cases "
     "attributable to missed birth cohorts."),
    ("Immunogenicity of two-dose schedules in adolescents",
     "Two-dose schedules show non-inferior antibody titers versus three-dose "
     "schedules in adolescents."),
)

_QUESTIONS = (
    "HPVワクチンは何歳まで受けられますか?",
    "副反応にはどんなものがありますか?",
    "接種は無料ですか?",
    "男性も接種できますか?",
    "妊娠中でも接種できますか?",
    "What are the side effects of the HPV vaccine?",
    "How effective is the vaccine for adults over 26?",
)

_NEWS_HEADLINES = (
    "自治体がHPVワクチン接種の個別通知を開始",
    "専門家会議、HPVワクチンの勧奨再開を議論",
    "子宮頸がん検診の受診率向上キャンペーン開始",
    "HPV vaccination rates show gradual recovery",
    "New study reinforces HPV vaccine safety profile",
    "厚生科学審議会がワクチン安全性データを公表",
)


def _iso(day: datetime) -> str:
    return day.strftime("%Y-%m-%dT%H:%M:%SZ")


def _window_days(window: tuple[str, str]) -> list[datetime]:
    start = datetime.fromisoformat(window[0]).replace(tzinfo=timezone.utc)
    end = datetime.fromisoformat(window[1]).replace(tzinfo=timezone.utc)
    days = []
    day = start
    while day <= end:
        days.append(day)
        day += timedelta(days=1)
    return days


def generate_demo_corpus(out_dir, seed: int = 2024) -> dict:
    """Write per-collection JSONL files and manifest.json; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    journals = ("Vaccine", "Lancet Oncology", "J Infect Dis", "BMC Public Health",
                "Medicinski glasnik")
    papers = []
    paper_dates = ("2020-01-10", "2020-07-10", "2020-09-10", "2020-10-12", "2021-03-15")
    for i, ((title, abstract), date) in enumerate(zip(_PAPER_TOPICS, paper_dates)):
        papers.append({
            "id": f"paper-{i + 1:03d}",
            "text": f"{title}. {abstract}",
            "timestamp": f"{date}T00:00:00Z",
            "source": journals[i % len(journals)],
            "lang": "en",
            "url_or_doi": f"10.5555/demo.{2020 + i}.{i + 11}",
            "metadata": {"title": title, "mesh": "Papillomavirus Vaccines"},
        })

    official = []
    month = datetime(2020, 1, 15, tzinfo=timezone.utc)
    for i in range(FIXTURE_COUNTS["official"]):
        official.append({
            "id": f"mhlw-{i + 1:04d}",
            "text": (f"HPVワクチンに関する自治体向け事務連絡 第{i + 1}号。"
                     "接種体制、予約方法、相談窓口について案内します。"),
            "timestamp": _iso(month + timedelta(days=int(rng.integers(0, 10)))),
            "source": "MHLW",
            "lang": "ja",
            "url_or_doi": f"https://example.go.jp/notice/{i + 1:04d}",
            "metadata": {"title": f"事務連絡 第{i + 1}号"},
        })
        month += timedelta(days=11)

    social = []
    window_days = [d for w in REPORT_WINDOWS for d in _window_days(w)]
    all_days = _window_days(("2020-01-01", "2021-12-31"))
    per_window = 120 * len(REPORT_WINDOWS)
    flavors = ("かかりつけ医にも相談してみます。", "周りでも話題になっています。",
               "体験談を読みあさっている。", "自治体の窓口に問い合わせ中。",
               "姉妹にも共有した。", "学校からの手紙がきっかけ。")
    for i in range(FIXTURE_COUNTS["social"]):
        if i < per_window:
            day = window_days[int(rng.integers(0, len(window_days)))]
        else:
            day = all_days[int(rng.integers(0, len(all_days)))]
        pool = _POST_POOLS[int(rng.integers(0, len(_POST_POOLS)))]
        base = pool[int(rng.integers(0, len(pool)))]
        flavor = flavors[int(rng.integers(0, len(flavors)))]
        # suffix keeps every post text unique so dedup keeps all of them
        text = f"{base}{flavor} その{i + 1}"
        social.append({
            "id": f"post-{i + 1:05d}",
            "text": text,
            "timestamp": _iso(day + timedelta(hours=int(rng.integers(0, 24)))),
            "source": "X(Twitter)",
            "lang": "ja",
            "author": f"@user_ja_{int(rng.integers(0, 400)):03d}",
            "metadata": {"tweet_id": str(100000 + i)},
        })

    chat = []
    chat_days = [w[0] for w in REPORT_WINDOWS for _ in (0, 1)]  # 2 per window
    for i in range(FIXTURE_COUNTS["chat"]):
        if i < len(chat_days):
            date = f"{chat_days[i]}T09:00:00Z"
        else:
            date = f"2024-0{(i % 6) + 1}-05T09:00:00Z"
        question = _QUESTIONS[i % len(_QUESTIONS)]
        chat.append({
            "id": f"chat-{i + 1:03d}",
            "text": (f"Q: {question}\n"
                     f"A: ガイドラインに基づいてご案内します。(回答 {i + 1})"),
            "timestamp": date,
            "source": "chat-service",
            "lang": "ja" if i % 3 else "en",
            "metadata": {"session_id": f"sess-{i // 2 + 1:02d}", "consent": "true"},
        })

    news = []
    outlets = ("Demo Shimbun", "Health Wire", "Public Press")
    slot = 0
    for w_idx, window in enumerate(REPORT_WINDOWS):
        days = _window_days(window)
        for j in range(5):
            headline = _NEWS_HEADLINES[(w_idx + j) % len(_NEWS_HEADLINES)]
            news.append({
                "id": f"news-{slot + 1:03d}",
                "text": f"{headline}。詳細は各自治体の発表を参照。",
                "timestamp": _iso(days[j * 5 + 2]),
                "source": outlets[j % len(outlets)],
                "lang": "ja",
                "url_or_doi": f"https://news.example.com/{slot + 1:03d}",
                "metadata": {"title": headline},
            })
            slot += 1
    for j in range(FIXTURE_COUNTS["news"] - slot):
        headline = _NEWS_HEADLINES[j % len(_NEWS_HEADLINES)]
        news.append({
            "id": f"news-{slot + 1:03d}",
            "text": f"{headline}。続報が待たれる。",
            "timestamp": f"2021-0{j + 2}-10T08:00:00Z",
            "source": outlets[j % len(outlets)],
            "lang": "ja",
            "url_or_doi": f"https://news.example.com/{slot + 1:03d}",
            "metadata": {"title": headline},
        })
        slot += 1

    files = {
        "papers": papers, "official": official, "social": social,
        "chat": chat, "news": news,
    }
    manifest = {"seed": seed, "collections": {}}
    for name, records in files.items():
        path = out / f"{name}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        manifest["collections"][name] = {"file": path.name, "count": len(records)}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# Offline provider


_TASK_RE = re.compile(r"TASK: (\w+)")

_STANCE_RULES = (
    (("打ちました", "接種しました", "受けました", "終わった"), "supportive"),
    (("不妊", "陰謀", "反対", "危険", "怖", "効かない"), "opposed"),
    (("ニュース", "報道", "案内", "資料", "とのこと", "そうです"), "neutral"),
)

_MISINFO_RULES = (
    ("不妊になる", "safety_concerns", "claims vaccination causes infertility"),
    ("危険すぎる", "safety_concerns", "overstates adverse-event risk"),
    ("効かない", "efficacy_doubts", "denies established efficacy"),
    ("陰謀", "conspiracy_theories", "frames vaccination as a plot"),
)


def _after(prompt: str, marker: str) -> str:
    _, _, rest = prompt.partition(marker)
    return rest.strip()


def _json_line_after(prompt: str, marker: str):
    rest = _after(prompt, marker)
    return json.loads(rest.splitlines()[0])


def classify_stance_text(text: str) -> str:
    for needles, label in _STANCE_RULES:
        if any(n in text for n in needles):
            return label
    return "unclear"


def _demo_reply(req: ChatRequest) -> str:
    prompt = req.last_user_text()
    match = _TASK_RE.search(prompt)
    task = match.group(1) if match else ""

    if task == "agent_select_action":
        user_text = _after(prompt, "Current user message:").split("\n\nEvidence")[0]
        evidence = _after(prompt, "Evidence gathered this turn:").splitlines()[0]
        if evidence != "(none yet)":
            return json.dumps({"thought": "enough evidence", "tool": "finish", "query": ""})
        lowered = user_text.lower()
        if any(w in lowered for w in ("hello", "hi ", "thanks", "こんにちは", "ありがとう")):
            tool = "chitchat"
        elif any(w in user_text for w in ("研究", "論文")) or "stud" in lowered or "research" in lowered:
            tool = "papers"
        elif "ニュース" in user_text or "news" in lowered:
            tool = "news"
        elif any(w in user_text for w in ("みんな", "投稿", "世間")) or "social" in lowered:
            tool = "social"
        else:
            tool = "web"
        return json.dumps(
            {"thought": f"route to {tool}", "tool": tool, "query": user_text.strip()},
            ensure_ascii=False,
        )

    if task == "agent_sufficiency":
        return json.dumps({"sufficient": True})

    if task == "agent_synthesize":
        evidence = _after(prompt, "Numbered evidence snippets:")
        n = len(re.findall(r"^\[\d+\]", evidence, flags=re.MULTILINE))
        if n == 0:
            return "こんにちは。HPVワクチンについて何でも聞いてください。"
        markers = "".join(f"[{i + 1}]" for i in range(min(n, 3)))
        return (
            "取得した資料に基づいてご案内します。最新の知見では安全性と有効性が"
            f"確認されています{markers}。ご不明な点があればお知らせください。"
        )

    if task == "agent_social_summary":
        return ("公開投稿の傾向としては、接種体験の共有と安全性への不安が混在して"
                "おり、有効性に関する疑問も散見されます。")

    if task == "stance_classify":
        posts = _json_line_after(prompt, "Posts (JSON):")
        labels = [
            {"id": p["id"], "stance": classify_stance_text(p["text"])} for p in posts
        ]
        return json.dumps({"labels": labels}, ensure_ascii=False)

    if task == "misinfo_detect":
        posts = _json_line_after(prompt, "Posts (JSON):")
        flags = []
        for post in posts:
            for needle, category, rationale in _MISINFO_RULES:
                if needle in post["text"]:
                    flags.append(
                        {"id": post["id"], "category": category, "rationale": rationale}
                    )
                    break
        return json.dumps({"flags": flags}, ensure_ascii=False)

    if task == "topic_labels":
        topics = re.findall(r"^topic \d+: ([^,\n]+)", prompt, flags=re.MULTILINE)
        return json.dumps(
            {"labels": [f"「{t.strip()}」を中心とした話題" for t in topics]},
            ensure_ascii=False,
        )

    if task in ("report_news_section", "report_papers_section"):
        docs = re.findall(r"^\[(\d+)\]", _after(prompt, "Numbered"), flags=re.MULTILINE)
        cites = "".join(f"[{i}]" for i in docs)
        noun = "報道" if task == "report_news_section" else "研究"
        return json.dumps(
            {"body": f"対象期間の主要な{noun}を整理します。各項目の要点と意義は"
                     f"次のとおりです{cites}。"},
            ensure_ascii=False,
        )

    if task == "report_social_narrative":
        analytics = _json_line_after(prompt, "Computed analytics (JSON):")
        n = analytics.get("post_count", 0)
        misinfo = analytics.get("misinformation_counts", {})
        flagged = sum(misinfo.values())
        return json.dumps(
            {"body": f"対象期間の投稿{n}件を分析しました。スタンスの推移は図の"
                     f"とおりで、誤情報の疑いは{flagged}件でした。"},
            ensure_ascii=False,
        )

    if task == "report_chat_section":
        questions = _json_line_after(prompt, "chat service (JSON):")
        themes = {}
        for q in questions:
            theme = ("side-effects" if ("副反応" in q["text"] or "side" in q["text"].lower())
                     else "eligibility-and-access")
            themes[theme] = themes.get(theme, 0) + 1
        return json.dumps(
            {
                "body": f"利用者からの質問{len(questions)}件を分類しました。"
                        "副反応と接種対象に関する情報ニーズが中心です。",
                "themes": [{"theme": k, "count": v} for k, v in sorted(themes.items())],
            },
            ensure_ascii=False,
        )

    if task == "report_summary":
        return json.dumps(
            {"body": "全セクションを通じ、安全性情報の発信強化と接種機会の案内が"
                     "重要と考えられます。"},
            ensure_ascii=False,
        )

    if task == "translate_section":
        target = _after(prompt, "into ").split(",")[0].strip()
        body = _after(prompt, "marker exactly where it is:").split("\nReply with ONLY")[0].strip()
        return json.dumps({"body": f"({target}) {body}"}, ensure_ascii=False)

    if task == "judge_scores":
        dims = re.findall(r"^- (\w+):", _after(prompt, "Dimensions:"), flags=re.MULTILINE)
        return json.dumps(
            {"scores": {d: 5 for d in dims}, "notes": {d: "meets rubric" for d in dims}}
        )

    return "了解しました。"


class DemoProvider(RuleProvider):
    """Deterministic offline provider covering every packaged prompt template."""

    def __init__(self):
        super().__init__(_demo_reply)
