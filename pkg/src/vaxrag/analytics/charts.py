"""Chart-data builders consumed by the SVG renderer and the web UI."""

from __future__ import annotations

from .lda import TopicModel
from .stance import Stance, StanceSeries


def chart_series(series: StanceSeries) -> dict:
    """Aligned per-stance count arrays over sorted dates."""
    if not series.days:
        raise ValueError("empty stance series")
    dates = sorted(series.days)
    data: dict = {"dates": dates}
    for stance in Stance:
        data[stance.value] = [series.days[d][stance.value] for d in dates]
    return data


def chart_topics(model: TopicModel, labels: list[str]) -> dict:
    """Aggregate topic weights (mean theta per topic); weights sum to 1."""
    if len(labels) != model.k:
        raise ValueError(f"need {model.k} labels, got {len(labels)}")
    weights = model.theta.mean(axis=0)
    return {"labels": list(labels), "weights": [float(w) for w in weights]}
