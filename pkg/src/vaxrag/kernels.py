"""Hot numeric kernels: numba-compiled by default, pure NumPy/Python fallback.

Set ``VAXRAG_NUMBA=0`` (before import) to force the fallback path.  Both
backends execute the same source with the same sequential floating-point
order, so results are bit-identical either way; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np


def _gibbs_sweep_impl(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, uniforms, cum):
    """One collapsed-Gibbs sweep over every token, updating counts in place.

    ``uniforms`` holds one pre-drawn U(0,1) per token; keeping the RNG outside
    the kernel is what makes the numba and fallback paths interchangeable.
    The conditional for token i with doc d, word w is

        p(k) ∝ (n_kw[k,w] + beta) / (n_k[k] + V*beta) * (n_dk[d,k] + alpha)

    with all counts excluding token i itself.
    """
    K = n_kw.shape[0]
    V = n_kw.shape[1]
    vbeta = V * beta
    for i in range(doc_ids.shape[0]):
        d = doc_ids[i]
        w = word_ids[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1

        total = 0.0
        for t in range(K):
            total += (n_kw[t, w] + beta) / (n_k[t] + vbeta) * (n_dk[d, t] + alpha)
            cum[t] = total

        target = uniforms[i] * total
        new_k = K - 1
        for t in range(K):
            if cum[t] > target:
                new_k = t
                break

        z[i] = new_k
        n_dk[d, new_k] += 1
        n_kw[new_k, w] += 1
        n_k[new_k] += 1


def _env_wants_numba() -> bool:
    return os.environ.get("VAXRAG_NUMBA", "1").lower() not in ("0", "false", "no")


gibbs_sweep_python = _gibbs_sweep_impl
gibbs_sweep_numba = None

try:
    import numba

    # fastmath stays off: reassociation would break cross-backend bit equality
    gibbs_sweep_numba = numba.njit(cache=True, fastmath=False)(_gibbs_sweep_impl)
except ImportError:
    pass

if gibbs_sweep_numba is not None and _env_wants_numba():
    gibbs_sweep = gibbs_sweep_numba
    GIBBS_BACKEND = "numba"
else:
    gibbs_sweep = gibbs_sweep_python
    GIBBS_BACKEND = "python"


def warmup() -> None:
    """Trigger JIT compilation ahead of timing-sensitive callers."""
    if GIBBS_BACKEND != "numba":
        return
    n = 4
    n_dk = np.array([[n, 0]], dtype=np.int64)
    n_kw = np.vstack([np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64)])
    n_k = np.array([n, 0], dtype=np.int64)
    gibbs_sweep(
        np.zeros(n, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        np.zeros(n, dtype=np.int64),
        n_dk,
        n_kw,
        n_k,
        0.5,
        0.01,
        np.full(n, 0.5),
        np.empty(2),
    )
