"""Topic modeling by collapsed Gibbs sampling with LLM topic labeling.

Collapsed Gibbs (rather than variational inference) keeps the sampler a few
arrays of integer counts whose conservation we can assert sweep by sweep.
All randomness comes from one seeded generator driven outside the kernel,
so a (corpus, params, seed) triple always reproduces bit-identical phi and
theta regardless of the kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels, llm
from ..errors import EmptyCorpusError, EmptyDocError, KTooLargeError, SchemaError

DEFAULT_K = 8
DEFAULT_BETA = 0.01
DEFAULT_ITERS = 200


def default_alpha(k: int) -> float:
    return 50.0 / k


@dataclass
class TopicModel:
    k: int
    phi: np.ndarray    # (K, V) topic-word distributions, rows sum to 1
    theta: np.ndarray  # (N, K) doc-topic distributions, rows sum to 1
    vocab: list[str]
    seed: int
    alpha: float
    beta: float
    iters: int


def _encode(docs_tokens: list[list[str]], vocab: list[str] | None):
    if vocab is None:
        vocab = sorted({t for tokens in docs_tokens for t in tokens})
    term_index = {t: i for i, t in enumerate(vocab)}
    encoded = []
    for n, tokens in enumerate(docs_tokens):
        ids = [term_index[t] for t in tokens if t in term_index]
        if not ids:
            raise EmptyDocError(f"document {n} is empty after vocabulary filtering")
        encoded.append(ids)
    return encoded, vocab


def train_lda(
    docs_tokens: list[list[str]],
    k: int = DEFAULT_K,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    vocab: list[str] | None = None,
    validate: bool = False,
) -> TopicModel:
    """Fit K topics over bag-of-words documents.

    ``vocab`` restricts the vocabulary (tokens outside it are dropped); with
    ``validate`` the count bookkeeping is checked after every sweep.
    """
    if not docs_tokens:
        raise EmptyCorpusError("need at least one document")
    if k < 2:
        raise ValueError("k must be >= 2")
    encoded, vocab = _encode(docs_tokens, vocab)
    n_docs = len(encoded)
    n_words = len(vocab)
    if k > n_words:
        raise KTooLargeError(f"k={k} exceeds vocabulary size {n_words}")
    if alpha is None:
        alpha = default_alpha(k)

    doc_ids = np.concatenate(
        [np.full(len(ids), d, dtype=np.int64) for d, ids in enumerate(encoded)]
    )
    word_ids = np.concatenate([np.asarray(ids, dtype=np.int64) for ids in encoded])
    n_tokens = word_ids.shape[0]
    doc_lengths = np.bincount(doc_ids, minlength=n_docs)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=n_tokens, dtype=np.int64)

    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, n_words), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    np.add.at(n_k, z, 1)

    cum = np.empty(k, dtype=np.float64)
    kernels.warmup()
    for _ in range(iters):
        uniforms = rng.random(n_tokens)
        kernels.gibbs_sweep(
            doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, uniforms, cum
        )
        if validate:
            _check_counts(n_dk, n_kw, n_k, doc_lengths, n_tokens)

    phi = (n_kw + beta).astype(np.float64)
    phi /= phi.sum(axis=1, keepdims=True)
    theta = (n_dk + alpha).astype(np.float64)
    theta /= theta.sum(axis=1, keepdims=True)
    return TopicModel(
        k=k, phi=phi, theta=theta, vocab=list(vocab),
        seed=seed, alpha=alpha, beta=beta, iters=iters,
    )


def _check_counts(n_dk, n_kw, n_k, doc_lengths, n_tokens):
    """Conservation asserts: assignments neither appear nor vanish."""
    assert (n_dk >= 0).all() and (n_kw >= 0).all() and (n_k >= 0).all()
    assert (n_dk.sum(axis=1) == doc_lengths).all(), "doc-topic counts drifted"
    assert n_kw.sum() == n_tokens, "topic-word counts drifted"
    assert (n_kw.sum(axis=1) == n_k).all(), "topic totals drifted"


def top_keywords(model: TopicModel, k_topic: int, n: int = 10) -> list[str]:
    """The n highest-probability terms of one topic; ties break lexicographically."""
    if not 0 <= k_topic < model.k:
        raise IndexError(f"topic {k_topic} out of range 0..{model.k - 1}")
    row = model.phi[k_topic]
    order = sorted(range(len(model.vocab)), key=lambda w: (-row[w], model.vocab[w]))
    return [model.vocab[w] for w in order[:n]]


_LABELS_SCHEMA = {
    "type": "object",
    "properties": {"labels": {"type": "array", "items": {"type": "string"}}},
    "required": ["labels"],
}


def fallback_label(k_topic: int, keywords: list[str]) -> str:
    return f"Topic {k_topic}: " + "/".join(keywords[:3])


def label_topics(model: TopicModel, keywords_per_topic: list[list[str]], provider) -> list[str]:
    """One short label per topic via the LLM, with a deterministic fallback."""
    block = "\n".join(
        f"topic {i}: {', '.join(words)}" for i, words in enumerate(keywords_per_topic)
    )
    prompt = llm.render_prompt("topic_labels", keywords_block=block)
    req = llm.ChatRequest(
        messages=[llm.ChatMessage("user", prompt)], response_schema=_LABELS_SCHEMA
    )
    try:
        labels = llm.complete_structured(provider, req)["labels"]
    except SchemaError:
        labels = []
    out = []
    for i, keywords in enumerate(keywords_per_topic):
        if i < len(labels) and labels[i].strip():
            out.append(labels[i].strip())
        else:
            out.append(fallback_label(i, keywords))
    return out
