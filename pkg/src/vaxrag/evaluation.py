"""Rubric-based judge harness for chat turns, conversations, and report sections.

An LLM judge receives the material, the rubric descriptors, and a schema
that only admits integer scores 0..5 per dimension; persistent schema
failures leave dimensions unscored rather than inventing numbers.  The
harness is read-only: nothing it does writes to any collection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

from . import llm
from .agent import ConversationState, Response
from .errors import SchemaError
from .report.analyzers import SectionDoc

SINGLE_TURN_DIMENSIONS = ("relevance", "routing", "reference", "correctness", "identity")
MULTI_TURN_DIMENSIONS = ("context_memory", "topic_centering", "identity")
REPORT_TEXT_DIMENSIONS = ("completeness", "correctness_report", "helpfulness")
REFERENCE_DIMENSIONS = ("reference_validity", "citation_correctness")

SCALE_MIN, SCALE_MAX = 0, 5


@dataclass(frozen=True)
class RubricDimension:
    name: str
    descriptor: str


def load_rubric() -> dict[str, RubricDimension]:
    """Rubric descriptors ship as data in prompts/rubric_dimensions.txt."""
    rubric = {}
    for line in llm.load_prompt("rubric_dimensions").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, descriptor = line.partition("|")
        rubric[name.strip()] = RubricDimension(name.strip(), descriptor.strip())
    return rubric


_RUBRIC = None


def rubric() -> dict[str, RubricDimension]:
    global _RUBRIC
    if _RUBRIC is None:
        _RUBRIC = load_rubric()
    return _RUBRIC


@dataclass
class EvalResult:
    target_id: str
    scores: dict[str, int] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)
    judge: str = "scripted"

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "scores": dict(self.scores),
            "notes": dict(self.notes),
            "judge": self.judge,
        }


def _score_schema(dimensions: tuple[str, ...]) -> dict:
    per_dim = {
        name: {"type": "integer", "minimum": SCALE_MIN, "maximum": SCALE_MAX}
        for name in dimensions
    }
    return {
        "type": "object",
        "properties": {
            "scores": {
                "type": "object",
                "properties": per_dim,
                "required": list(dimensions),
                "additionalProperties": False,
            },
            "notes": {"type": "object"},
        },
        "required": ["scores"],
    }


def _judge(provider, target_id: str, dimensions: tuple[str, ...], material: str,
           judge_tag: str) -> EvalResult:
    block = "\n".join(f"- {name}: {rubric()[name].descriptor}" for name in dimensions)
    prompt = llm.render_prompt("judge_scores", dimensions_block=block, material=material)
    req = llm.ChatRequest(
        messages=[llm.ChatMessage("user", prompt)],
        response_schema=_score_schema(dimensions),
    )
    result = EvalResult(target_id=target_id, judge=judge_tag)
    try:
        reply = llm.complete_structured(provider, req)
    except SchemaError:
        return result  # all dimensions left unscored
    for name in dimensions:
        result.scores[name] = int(reply["scores"][name])
        note = (reply.get("notes") or {}).get(name, "")
        if note:
            result.notes[name] = str(note)
    return result


def _render_response(response: Response) -> str:
    refs = "\n".join(f"[{r.n}] {r.display}" for r in response.references) or "(none)"
    tools = ", ".join(i.tool for i in response.trace.iterations)
    return (
        f"Answer:\n{response.text}\n\nReferences:\n{refs}\n\n"
        f"Tools used (in order): {tools}"
    )


def eval_single_turn(turn: dict, provider, judge_tag: str = "scripted") -> EvalResult:
    """Judge one question/answer exchange on the five single-turn dimensions.

    ``turn`` needs: target_id, question, response (with trace for routing).
    """
    response: Response = turn["response"]
    if not response.trace.iterations:
        raise ValueError("turn has no trace; routing cannot be judged")
    material = f"Question:\n{turn['question']}\n\n{_render_response(response)}"
    return _judge(provider, turn["target_id"], SINGLE_TURN_DIMENSIONS, material, judge_tag)


def eval_multi_turn(conv: ConversationState, provider,
                    judge_tag: str = "scripted") -> EvalResult:
    """Judge a whole conversation on the three multi-turn dimensions."""
    if len(conv.turns) < 2:
        raise ValueError("multi-turn evaluation requires at least 2 turns")
    lines = []
    for turn in conv.turns:
        lines.append(f"User: {turn.user_text}")
        lines.append(f"Assistant: {turn.response.text}")
    return _judge(
        provider, conv.session_id, MULTI_TURN_DIMENSIONS, "\n".join(lines), judge_tag
    )


def eval_report_section(section: SectionDoc, sources: list[str], provider,
                        judge_tag: str = "scripted") -> EvalResult:
    """Judge one report section (with its source documents) on the text dimensions."""
    body = "\n\n".join(v for v in section.body.values() if v)
    if not body.strip():
        raise ValueError("section body is empty")
    sources_block = "\n".join(f"- {s}" for s in sources) or "(none provided)"
    material = (
        f"Section ({section.key}):\n{body}\n\nSource documents:\n{sources_block}"
    )
    return _judge(provider, section.key, REPORT_TEXT_DIMENSIONS, material, judge_tag)


def eval_report_references(section: SectionDoc, store, provider,
                           judge_tag: str = "scripted") -> EvalResult:
    """Reference validity is mechanical; citation correctness is judged.

    validity = round(5 * resolvable/total), no LLM involved.
    """
    total = len(section.references)
    dangling = [
        r.doc_id
        for r in section.references
        if not any(store.has(c, r.doc_id) for c in _collections())
    ]
    proportion = 1.0 if total == 0 else (total - len(dangling)) / total
    validity = round(5 * proportion)

    body = "\n\n".join(v for v in section.body.values() if v)
    refs = "\n".join(f"[{r.n}] {r.display}" for r in section.references) or "(none)"
    material = (
        f"Section text:\n{body}\n\nCitations:\n{refs}\n\n"
        "Judge whether the citations support the claims at their markers."
    )
    result = _judge(
        provider, section.key, ("citation_correctness",), material, judge_tag
    )
    result.scores["reference_validity"] = validity
    if dangling:
        result.notes["reference_validity"] = f"dangling: {', '.join(dangling)}"
    return result


def _collections():
    from .corpus import CollectionId

    return CollectionId


def compute_mad(llm_scores: list[float], human_scores: list[float]) -> float:
    """Mean absolute difference between judge and (per-item mean) human scores."""
    if len(llm_scores) != len(human_scores):
        raise ValueError("score lists must have equal length")
    if not llm_scores:
        raise ValueError("score lists must be nonempty")
    return sum(abs(a - b) for a, b in zip(llm_scores, human_scores)) / len(llm_scores)


@dataclass
class AggregateStats:
    per_dimension: dict[str, dict]  # name -> {mean, std, n}
    overall_mean: float
    n_results: int

    def to_dict(self) -> dict:
        return {
            "per_dimension": {k: dict(v) for k, v in self.per_dimension.items()},
            "overall_mean": self.overall_mean,
            "n_results": self.n_results,
        }

    def format_table(self) -> str:
        lines = [f"{'Dimension':<22}{'Mean ± Std':>14}{'n':>6}"]
        for name, row in self.per_dimension.items():
            lines.append(
                f"{name:<22}{row['mean']:.2f} ± {row['std']:.2f}".ljust(36)
                + f"{row['n']:>6}"
            )
        lines.append(f"{'Overall Average':<22}{self.overall_mean:.2f}")
        return "\n".join(lines)


def aggregate(results: list[EvalResult]) -> AggregateStats:
    """Per-dimension mean and population std over scored entries.

    Unscored dimensions are excluded from n; the overall average is the mean
    of the per-dimension means.
    """
    if not results:
        raise ValueError("no results to aggregate")
    buckets: dict[str, list[int]] = {}
    for result in results:
        for name, score in result.scores.items():
            buckets.setdefault(name, []).append(score)
    per_dimension = {}
    for name in sorted(buckets):
        scores = buckets[name]
        mean = sum(scores) / len(scores)
        std = math.sqrt(sum((s - mean) ** 2 for s in scores) / len(scores))
        per_dimension[name] = {"mean": mean, "std": std, "n": len(scores)}
    overall = sum(row["mean"] for row in per_dimension.values()) / len(per_dimension)
    return AggregateStats(
        per_dimension=per_dimension, overall_mean=overall, n_results=len(results)
    )


def write_scores_csv(results: list[EvalResult], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target_id", "dimension", "score"])
        for result in results:
            for name, score in sorted(result.scores.items()):
                writer.writerow([result.target_id, name, score])


def write_aggregates_json(stats: AggregateStats, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
