# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernel: postings accumulation for ranked retrieval.

Keep the arithmetic identical to ``_bm25_py.accumulate_term`` so the two
backends return bit-identical scores.
"""

import numpy as np


def accumulate_term(double[::1] scores, int[::1] doc_idx, double[::1] tfs,
                    double idf_weight, double k1_plus1, double[::1] denom):
    """Add one query term's contribution to ``scores`` in place."""
    cdef Py_ssize_t j, i
    cdef double tf
    for j in range(doc_idx.shape[0]):
        i = doc_idx[j]
        tf = tfs[j]
        scores[i] += idf_weight * tf * k1_plus1 / (tf + denom[i])


def batch_accumulate(scores, postings, double[::1] denom, double k1_plus1):
    """Score a whole query: ``postings`` is a list of (doc_idx, tfs, idf_weight)."""
    for doc_idx, tfs, idf_weight in postings:
        accumulate_term(scores, doc_idx, tfs, idf_weight, k1_plus1, denom)
    return scores


def self_check():
    """Tiny smoke test used by the benchmark to validate a backend handle."""
    scores = np.zeros(2)
    accumulate_term(scores, np.array([1], dtype=np.int32),
                    np.array([2.0]), 1.0, 2.2, np.array([1.0, 1.0]))
    return scores[1] > 0
