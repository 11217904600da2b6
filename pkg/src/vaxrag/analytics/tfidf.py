"""TF-IDF weighting; used for vocabulary selection ahead of topic modeling."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyCorpusError


@dataclass
class TfIdfModel:
    vocabulary: dict[str, int]  # term -> column index
    idf: np.ndarray
    doc_count: int

    def idf_of(self, term: str) -> float:
        return float(self.idf[self.vocabulary[term]])


def build_tfidf(docs_tokens: list[list[str]], min_df: int = 2) -> TfIdfModel:
    """idf[t] = ln(N / df_t) over terms with document frequency >= min_df."""
    if not docs_tokens:
        raise EmptyCorpusError("need at least one document")
    n_docs = len(docs_tokens)
    df: Counter[str] = Counter()
    for tokens in docs_tokens:
        df.update(set(tokens))
    terms = sorted(t for t, count in df.items() if count >= min_df)
    vocabulary = {t: i for i, t in enumerate(terms)}
    idf = np.array([math.log(n_docs / df[t]) for t in terms], dtype=np.float64)
    return TfIdfModel(vocabulary=vocabulary, idf=idf, doc_count=n_docs)


def select_vocabulary(
    model: TfIdfModel, docs_tokens: list[list[str]], top_m: int = 2000
) -> list[str]:
    """Top-m terms by max per-document tf*idf; ties break lexicographically.

    This is the interface between weighting and topic modeling: selection
    here, raw counts downstream.
    """
    best = np.zeros(len(model.vocabulary), dtype=np.float64)
    for tokens in docs_tokens:
        counts = Counter(tokens)
        for term, tf in counts.items():
            idx = model.vocabulary.get(term)
            if idx is not None:
                score = tf * model.idf[idx]
                if score > best[idx]:
                    best[idx] = score
    terms = sorted(model.vocabulary, key=lambda t: (-best[model.vocabulary[t]], t))
    return terms[:top_m]
