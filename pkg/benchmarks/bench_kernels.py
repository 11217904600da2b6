"""Benchmark the numba kernel path against the pure-Python/NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py [--docs 500] [--doc-len 40] [--k 8]

Covers the one genuinely hot inner loop (the collapsed-Gibbs sweep) on both
backends, and reports exact-search throughput for context (search stays on
BLAS matmul on purpose; a hand loop cannot beat it there).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vaxrag import kernels


def build_problem(n_docs: int, doc_len: int, k: int, v: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    doc_ids = np.repeat(np.arange(n_docs, dtype=np.int64), doc_len)
    word_ids = rng.integers(0, v, size=n_docs * doc_len, dtype=np.int64)
    z = rng.integers(0, k, size=n_docs * doc_len, dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, v), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    np.add.at(n_k, z, 1)
    return doc_ids, word_ids, z, n_dk, n_kw, n_k


def time_backend(backend, name: str, args, sweeps: int, k: int) -> float:
    doc_ids, word_ids, z, n_dk, n_kw, n_k = [np.copy(a) for a in args]
    cum = np.empty(k)
    rng = np.random.default_rng(1)
    # one untimed sweep to absorb JIT compilation
    backend(doc_ids, word_ids, z, n_dk, n_kw, n_k, 0.5, 0.01,
            rng.random(doc_ids.shape[0]), cum)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        backend(doc_ids, word_ids, z, n_dk, n_kw, n_k, 0.5, 0.01,
                rng.random(doc_ids.shape[0]), cum)
    elapsed = time.perf_counter() - t0
    tokens = sweeps * doc_ids.shape[0]
    print(f"  {name:<18} {elapsed:8.3f} s   {tokens / elapsed / 1e6:8.2f} M tokens/s")
    return elapsed


def bench_gibbs(n_docs: int, doc_len: int, k: int, v: int, sweeps: int):
    print(f"collapsed Gibbs sweep: {n_docs} docs x {doc_len} tokens, "
          f"K={k}, V={v}, {sweeps} sweeps")
    args = build_problem(n_docs, doc_len, k, v)
    t_py = time_backend(kernels.gibbs_sweep_python, "python fallback", args, sweeps, k)
    if kernels.gibbs_sweep_numba is not None:
        t_nb = time_backend(kernels.gibbs_sweep_numba, "numba @njit", args, sweeps, k)
        print(f"  speedup: {t_py / t_nb:.1f}x")
    else:
        print("  numba not installed; fallback only")


def bench_search(n: int = 10_000, dim: int = 32, queries: int = 200):
    print(f"\nexact cosine top-k (BLAS matmul + lexsort): n={n}, D={dim}")
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(n, dim))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    ids = np.asarray([f"doc-{i:06d}" for i in range(n)])
    qs = rng.normal(size=(queries, dim))
    qs /= np.linalg.norm(qs, axis=1, keepdims=True)
    t0 = time.perf_counter()
    for q in qs:
        scores = matrix @ q
        np.lexsort((ids, -scores))[:10]
    elapsed = time.perf_counter() - t0
    print(f"  {queries} queries in {elapsed:.3f} s "
          f"({queries / elapsed:.0f} queries/s)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=500)
    parser.add_argument("--doc-len", type=int, default=40)
    parser.add_argument("--k", type=int, default=8)
    parser.add_argument("--vocab", type=int, default=1000)
    parser.add_argument("--sweeps", type=int, default=50)
    opts = parser.parse_args()
    print(f"selected backend: {kernels.GIBBS_BACKEND} "
          "(set VAXRAG_NUMBA=0 to force the fallback)\n")
    bench_gibbs(opts.docs, opts.doc_len, opts.k, opts.vocab, opts.sweeps)
    bench_search()


if __name__ == "__main__":
    main()
