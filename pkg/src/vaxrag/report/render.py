"""Self-contained bilingual HTML rendering of a report.

Output is a single UTF-8 document with charts inlined as SVG and a print
stylesheet, so converting to PDF is an external `print to file` step.  The
renderer is a pure function of the report: same report, same bytes, with
``\n`` line endings on every platform.
"""

from __future__ import annotations

import html

from ..corpus import format_timestamp
from .assemble import Report

_CSS = """
body { font-family: "Hiragino Sans", "Noto Sans JP", "Segoe UI", sans-serif;
       margin: 0; color: #1c2733; background: #f5f7fa; }
main { max-width: 920px; margin: 0 auto; padding: 2rem 1.5rem; }
header.report { border-bottom: 3px solid #2c6e8f; margin-bottom: 1.5rem; }
header.report h1 { margin: 0 0 0.3rem; }
.meta { color: #5b6b7a; font-size: 0.9rem; margin-bottom: 1rem; }
nav.toc ol { margin: 0.4rem 0 1.2rem; padding-left: 1.4rem; }
section.report-section { background: #ffffff; border: 1px solid #d8e0e8;
  border-radius: 8px; padding: 1rem 1.4rem; margin-bottom: 1.2rem; }
section.report-section h2 { margin-top: 0.2rem; border-bottom: 1px solid #e3e9ef;
  padding-bottom: 0.4rem; }
.lang-label { display: inline-block; font-size: 0.72rem; font-weight: 700;
  color: #2c6e8f; border: 1px solid #2c6e8f; border-radius: 3px;
  padding: 0 0.35rem; margin-bottom: 0.3rem; text-transform: uppercase; }
.notice { background: #fdf3e0; border-left: 4px solid #d9962e;
  padding: 0.4rem 0.8rem; font-size: 0.88rem; margin: 0.5rem 0; }
.references { font-size: 0.88rem; }
.references li { margin-bottom: 0.2rem; }
figure.chart { margin: 1rem 0; }
figure.chart figcaption { font-size: 0.85rem; color: #5b6b7a; }
@media print {
  body { background: #ffffff; }
  section.report-section { border: none; page-break-inside: avoid; }
  nav.toc { display: none; }
}
"""

_PALETTE = ("#2c6e8f", "#c0504d", "#6a9a58", "#8064a2", "#d9962e", "#4bacc6",
            "#7f7f7f", "#b8860b")


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _svg_line_chart(dates: list[str], series: dict[str, list[int]],
                    width: int = 640, height: int = 240) -> str:
    pad_l, pad_r, pad_t, pad_b = 40, 10, 10, 34
    plot_w = width - pad_l - pad_r
    plot_h = height - pad_t - pad_b
    ymax = max(1, max(max(vals) for vals in series.values()))
    n = len(dates)

    def x_at(i: int) -> float:
        return pad_l + (plot_w * i / max(1, n - 1))

    def y_at(v: float) -> float:
        return pad_t + plot_h * (1 - v / ymax)

    parts = [
        f'<svg viewBox="0 0 {width} {height}" role="img" class="chart-svg" '
        f'xmlns="http://www.w3.org/2000/svg">'
    ]
    parts.append(
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + plot_h}" '
        'stroke="#8fa1b0" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{pad_l}" y1="{pad_t + plot_h}" x2="{pad_l + plot_w}" '
        f'y2="{pad_t + plot_h}" stroke="#8fa1b0" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{pad_l - 6}" y="{pad_t + 4}" text-anchor="end" '
        f'font-size="10">{ymax}</text>'
    )
    parts.append(
        f'<text x="{pad_l - 6}" y="{pad_t + plot_h + 4}" text-anchor="end" '
        'font-size="10">0</text>'
    )
    tick_step = max(1, n // 6)
    for i in range(0, n, tick_step):
        parts.append(
            f'<text x="{_fmt(x_at(i))}" y="{height - 16}" text-anchor="middle" '
            f'font-size="9">{html.escape(dates[i][5:])}</text>'
        )
    for idx, (name, vals) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        if n == 1:
            parts.append(
                f'<circle cx="{_fmt(x_at(0))}" cy="{_fmt(y_at(vals[0]))}" r="3" '
                f'fill="{color}"/>'
            )
        else:
            points = " ".join(
                f"{_fmt(x_at(i))},{_fmt(y_at(v))}" for i, v in enumerate(vals)
            )
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                'stroke-width="1.6"/>'
            )
        lx = pad_l + 8 + idx * 110
        parts.append(
            f'<rect x="{lx}" y="{height - 10}" width="10" height="3" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{lx + 14}" y="{height - 6}" font-size="9">{html.escape(name)}</text>'
        )
    parts.append("</svg>")
    return "".join(parts)


def _svg_bar_chart(labels: list[str], values: list[float],
                   width: int = 640, height: int = 240, fmt=_fmt) -> str:
    pad_l, pad_r, pad_t, pad_b = 10, 10, 10, 10
    plot_w = width - pad_l - pad_r
    row_h = (height - pad_t - pad_b) / max(1, len(labels))
    vmax = max(values) if values and max(values) > 0 else 1.0
    label_w = 180
    parts = [
        f'<svg viewBox="0 0 {width} {height}" role="img" class="chart-svg" '
        f'xmlns="http://www.w3.org/2000/svg">'
    ]
    for i, (label, value) in enumerate(zip(labels, values)):
        y = pad_t + i * row_h
        bar_w = (plot_w - label_w - 50) * (value / vmax)
        color = _PALETTE[i % len(_PALETTE)]
        shown = label if len(label) <= 26 else label[:25] + "…"
        parts.append(
            f'<text x="{pad_l + label_w - 6}" y="{_fmt(y + row_h * 0.65)}" '
            f'text-anchor="end" font-size="10">{html.escape(shown)}</text>'
        )
        parts.append(
            f'<rect x="{pad_l + label_w}" y="{_fmt(y + row_h * 0.2)}" '
            f'width="{_fmt(max(1.0, bar_w))}" height="{_fmt(row_h * 0.6)}" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(pad_l + label_w + max(1.0, bar_w) + 4)}" '
            f'y="{_fmt(y + row_h * 0.65)}" font-size="10">{fmt(value)}</text>'
        )
    parts.append("</svg>")
    return "".join(parts)


def _chart_html(chart: dict) -> str:
    kind = chart.get("kind", "")
    if kind == "stance_series":
        series = {
            name: chart[name]
            for name in ("supportive", "opposed", "neutral", "unclear")
        }
        svg = _svg_line_chart(chart["dates"], series)
        caption = "Daily stance counts / 日別スタンス件数"
    elif kind == "topic_weights":
        svg = _svg_bar_chart(
            chart["labels"], chart["weights"], fmt=lambda v: f"{v:.3f}"
        )
        caption = "Topic weight distribution / トピック比率"
    elif kind == "chat_themes":
        svg = _svg_bar_chart(
            chart["labels"], [float(c) for c in chart["counts"]],
            fmt=lambda v: str(int(v)),
        )
        caption = "Question themes / 質問テーマ件数"
    else:
        return ""
    return (
        f'<figure class="chart">{svg}'
        f"<figcaption>{html.escape(caption)}</figcaption></figure>"
    )


def _paragraphs(text: str) -> str:
    blocks = [b.strip() for b in text.split("\n\n") if b.strip()]
    return "".join(f"<p>{html.escape(b)}</p>" for b in blocks)


def render_html(report: Report) -> str:
    """Render the full bilingual report; output uses \\n newlines only."""
    window = (
        f"{format_timestamp(report.window[0])[:10]} – "
        f"{format_timestamp(report.window[1])[:10]}"
    )
    out: list[str] = []
    out.append("<!doctype html>")
    out.append('<html lang="ja">')
    out.append("<head>")
    out.append('<meta charset="utf-8"/>')
    out.append(f"<title>Vaccine Communication Report {html.escape(report.id)}</title>")
    out.append(f"<style>{_CSS}</style>")
    out.append("</head>")
    out.append("<body>")
    out.append("<main>")
    out.append('<header class="report">')
    out.append("<h1>ワクチン情報分析レポート / Vaccine Communication Report</h1>")
    out.append(
        f'<div class="meta">Report {html.escape(report.id)} · Window {window} · '
        f"Generated {format_timestamp(report.generated_at)}</div>"
    )
    out.append("</header>")

    out.append('<nav class="toc"><ol>')
    for section in report.sections:
        title = " / ".join(
            section.title[lang] for lang in report.languages if lang in section.title
        )
        out.append(
            f'<li><a href="#{html.escape(section.key)}">{html.escape(title)}</a></li>'
        )
    out.append("</ol></nav>")

    for section in report.sections:
        out.append(
            f'<section class="report-section" id="{html.escape(section.key)}">'
        )
        title = " / ".join(
            section.title[lang] for lang in report.languages if lang in section.title
        )
        out.append(f"<h2>{html.escape(title)}</h2>")
        for notice in section.notices:
            out.append(f'<div class="notice">{html.escape(notice)}</div>')
        for lang in report.languages:
            body = section.body.get(lang, "")
            if not body:
                continue
            out.append('<div class="body-block">')
            out.append(f'<span class="lang-label">{html.escape(lang)}</span>')
            out.append(_paragraphs(body))
            out.append("</div>")
        for chart in section.charts:
            out.append(_chart_html(chart))
        if section.references:
            out.append('<div class="references"><strong>References</strong><ol>')
            for ref in section.references:
                out.append(f"<li>{html.escape(ref.display)}</li>")
            out.append("</ol></div>")
        out.append("</section>")

    out.append("</main>")
    out.append("</body>")
    out.append("</html>")
    return "\n".join(out) + "\n"
