"""Pure-Python (numpy) scoring kernel, used when the compiled one is absent.

Must stay operation-for-operation identical to ``_bm25_kernel.pyx`` so both
backends produce bit-identical scores.
"""

import numpy as np


def accumulate_term(scores, doc_idx, tfs, idf_weight, k1_plus1, denom):
    """Add one query term's contribution to ``scores`` in place.

    ``doc_idx`` holds each posting's document index (unique within a term),
    ``tfs`` the matching term frequencies, and ``denom`` the precomputed
    per-document length normalization k1*(1 - b + b*len/avg_len).
    """
    scores[doc_idx] += idf_weight * tfs * k1_plus1 / (tfs + denom[doc_idx])


def batch_accumulate(scores, postings, denom, k1_plus1):
    """Score a whole query: ``postings`` is a list of (doc_idx, tfs, idf_weight)."""
    for doc_idx, tfs, idf_weight in postings:
        accumulate_term(scores, doc_idx, tfs, idf_weight, k1_plus1, denom)
    return scores


def self_check() -> bool:
    """Tiny smoke test used by the benchmark to validate a backend handle."""
    scores = np.zeros(2)
    accumulate_term(scores, np.array([1], dtype=np.int32),
                    np.array([2.0]), 1.0, 2.2, np.array([1.0, 1.0]))
    return scores[1] > 0
