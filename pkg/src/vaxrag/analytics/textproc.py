"""Tokenization contract with a script-aware shipping fallback.

Production deployments may plug a real morphological analyzer; the fallback
needs no dictionary and handles mixed Japanese/Latin text deterministically:
NFKC-normalize and lowercase, emit contiguous Latin/digit runs as single
tokens, and emit kana/kanji runs as character bigrams.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Callable

STOPWORDS = frozenset(
    """a an and are as at be by for from has in is it of on or that the to was
    with です ます した して いる ある この その それ から まで など"""
    .split()
)


def _is_word_char(ch: str) -> bool:
    return ch.isascii() and (ch.isalnum())


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return (
        0x3040 <= code <= 0x30FF      # hiragana + katakana
        or 0x4E00 <= code <= 0x9FFF   # CJK ideographs
        or 0x3400 <= code <= 0x4DBF
        or code == 0x30FC             # long-vowel mark
    )


def tokenize(text: str) -> list[str]:
    """Deterministic fallback tokenizer; never yields empty tokens."""
    if not text:
        return []
    text = unicodedata.normalize("NFKC", text).lower()
    tokens: list[str] = []
    word_run: list[str] = []
    cjk_run: list[str] = []

    def flush_word():
        if word_run:
            tokens.append("".join(word_run))
            word_run.clear()

    def flush_cjk():
        run = "".join(cjk_run)
        cjk_run.clear()
        if len(run) == 1:
            tokens.append(run)
        else:
            tokens.extend(run[i:i + 2] for i in range(len(run) - 1))

    for ch in text:
        if _is_word_char(ch):
            flush_cjk()
            word_run.append(ch)
        elif _is_cjk(ch):
            flush_word()
            cjk_run.append(ch)
        else:
            flush_word()
            flush_cjk()
    flush_word()
    flush_cjk()

    return [t for t in tokens if t and t not in STOPWORDS]


@dataclass
class TokenizerContract:
    """Pluggable tokenizer; the shipping default is :func:`tokenize`."""

    tokenize: Callable[[str], list[str]] = tokenize
    name: str = "script-aware-fallback"
