"""Inline citation markers: extraction, validation, and repair.

A finished text carries markers ``[1] [2] ...`` that must map one-to-one
onto its ordered reference list (bijection), with numbering contiguous from
1.  Drafts coming out of an LLM may cite evidence indices that do not exist
or skip numbers; :func:`repair_draft` drops dangling markers and renumbers
the survivors by first appearance so the invariant always holds on output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_MARKER_RE = re.compile(r"\[(\d+)\]")


@dataclass
class Reference:
    n: int
    doc_id: str
    display: str

    def to_dict(self) -> dict:
        return {"n": self.n, "doc_id": self.doc_id, "display": self.display}


def extract_markers(text: str) -> list[int]:
    """All marker numbers in order of appearance (with repeats)."""
    return [int(m) for m in _MARKER_RE.findall(text)]


def repair_draft(text: str, evidence_ids: list[str]) -> tuple[str, list[int], bool]:
    """Normalize a draft against the 1-based evidence list it cited.

    Returns (repaired_text, used_evidence_indices, had_dangling) where the
    n-th surviving marker ``[n]`` refers to evidence_ids[used[n-1]-1].
    Markers outside 1..len(evidence_ids) are dropped from the text and set
    the dangling flag; renumbering alone is normalization, not damage.
    """
    order: list[int] = []          # evidence indices by first appearance
    renumber: dict[int, int] = {}  # evidence index -> new marker
    had_dangling = False

    def replace(match: re.Match) -> str:
        nonlocal had_dangling
        idx = int(match.group(1))
        if idx < 1 or idx > len(evidence_ids):
            had_dangling = True
            return ""
        if idx not in renumber:
            order.append(idx)
            renumber[idx] = len(order)
        return f"[{renumber[idx]}]"

    new_text = _MARKER_RE.sub(replace, text)
    if had_dangling:
        new_text = re.sub(r" {2,}", " ", new_text)
        new_text = re.sub(r" +([.,。、])", r"\1", new_text)
    return new_text, order, had_dangling


def validate_bijection(text: str, references: list[Reference]) -> list[str]:
    """Check marker set == {1..len(references)}; return violation messages."""
    violations = []
    markers = set(extract_markers(text))
    expected = set(range(1, len(references) + 1))
    for n in sorted(markers - expected):
        violations.append(f"marker [{n}] has no reference")
    for n in sorted(expected - markers):
        violations.append(f"reference {n} is never cited")
    numbers = [ref.n for ref in references]
    if numbers != sorted(set(numbers)) or (numbers and numbers != list(range(1, len(numbers) + 1))):
        violations.append("reference numbering is not contiguous from 1")
    return violations
