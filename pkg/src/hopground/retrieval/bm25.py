"""Okapi BM25 inverted index over a local corpus.

The scoring hot loop runs in a compiled Cython kernel when the extension
built; otherwise a numpy fallback with identical arithmetic is selected at
import.  Set ``HOPGROUND_PURE_PYTHON=1`` to force the fallback, or call
``use_backend()`` to switch explicitly (the benchmark does).

Documents are indexed over ``title + body`` and stored sorted by id, which
makes retrieval results independent of corpus input order.  Repeated query
terms contribute once per occurrence.
"""

from __future__ import annotations

import math
import os
import pickle
import re
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import Document
from ..errors import DuplicateDocId, EmptyCorpus, EmptyQuery
from . import _bm25_py

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+")  # Unicode alphanumeric runs

_BACKENDS = {"python": _bm25_py}
try:  # pragma: no cover - exercised only when the extension built
    if not os.environ.get("HOPGROUND_PURE_PYTHON"):
        from . import _bm25_kernel
        _BACKENDS["cython"] = _bm25_kernel
except ImportError:
    pass

_active = _BACKENDS.get("cython", _bm25_py)


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return "cython" if _active is _BACKENDS.get("cython") else "python"


def use_backend(name: str) -> None:
    """Switch the scoring kernel ('python' or 'cython')."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = _BACKENDS[name]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def _doc_text(doc: Document) -> str:
    return f"{doc.title} {doc.body}" if doc.title else doc.body


class CorpusIndex:
    """Immutable-after-build inverted index; concurrent retrieval is safe."""

    def __init__(self, documents: Sequence[Document],
                 k1: float = DEFAULT_K1, b: float = DEFAULT_B):
        if k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0 <= b <= 1:
            raise ValueError("b must be in [0, 1]")
        self.k1 = k1
        self.b = b
        # id-sorted storage keeps scoring and tie-breaks permutation-invariant
        self.documents: tuple[Document, ...] = tuple(
            sorted(documents, key=lambda d: d.id))
        self.doc_ids: tuple[str, ...] = tuple(d.id for d in self.documents)

        n_docs = len(self.documents)
        doc_lengths = np.zeros(n_docs, dtype=np.float64)
        term_hits: dict[str, list[tuple[int, int]]] = {}
        for i, doc in enumerate(self.documents):
            tokens = tokenize(_doc_text(doc))
            doc_lengths[i] = len(tokens)
            for term, tf in Counter(tokens).items():
                term_hits.setdefault(term, []).append((i, tf))

        self.doc_lengths = doc_lengths
        self.avg_doc_length = float(doc_lengths.mean())
        # k1*(1 - b + b*len/avg) precomputed once; the kernels only add tf.
        # A corpus with no tokens at all has no postings either, so the
        # normalization divisor only needs to be finite.
        divisor = self.avg_doc_length if self.avg_doc_length > 0 else 1.0
        self._denom = k1 * (1.0 - b + b * doc_lengths / divisor)

        self.postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self.idf: dict[str, float] = {}
        for term, hits in term_hits.items():
            idx = np.array([h[0] for h in hits], dtype=np.int32)
            tfs = np.array([h[1] for h in hits], dtype=np.float64)
            self.postings[term] = (idx, tfs)
            df = len(hits)
            self.idf[term] = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)

    def __len__(self) -> int:
        return len(self.documents)

    def scores(self, query: str) -> np.ndarray:
        """BM25 score of every document for ``query`` (0 for no overlap)."""
        terms = tokenize(query)
        if not terms:
            raise EmptyQuery(f"query tokenizes to zero terms: {query!r}")
        out = np.zeros(len(self.documents), dtype=np.float64)
        k1_plus1 = self.k1 + 1.0
        for term, qtf in Counter(terms).items():
            hit = self.postings.get(term)
            if hit is None:
                continue
            idx, tfs = hit
            _active.accumulate_term(out, idx, tfs, self.idf[term] * qtf,
                                    k1_plus1, self._denom)
        return out


def build_index(corpus: Sequence[Document], k1: float = DEFAULT_K1,
                b: float = DEFAULT_B) -> CorpusIndex:
    """Index a corpus; ids must be unique and the corpus non-empty."""
    if not corpus:
        raise EmptyCorpus("cannot index an empty corpus")
    seen: set[str] = set()
    for doc in corpus:
        if doc.id in seen:
            raise DuplicateDocId(doc.id)
        seen.add(doc.id)
    return CorpusIndex(corpus, k1=k1, b=b)


def retrieve(index: CorpusIndex, query: str, top_k: int = 10) -> list[Document]:
    """Top ``top_k`` documents by descending score, ranks set from 1.

    Zero-score documents are excluded; ties break by ascending doc id.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    scores = index.scores(query)
    candidates = np.flatnonzero(scores > 0.0)
    if candidates.size == 0:
        return []
    # candidates are already in ascending-id order; a stable sort on -score
    # therefore breaks ties by ascending id
    order = candidates[np.argsort(-scores[candidates], kind="stable")]
    ranked = order[:top_k]
    return [index.documents[i].with_rank(rank)
            for rank, i in enumerate(ranked, start=1)]


_CACHE_MAGIC = "hopground-bm25-cache-v1"


def save_index(index: CorpusIndex, path: str | Path) -> None:
    """Persist the index as a binary cache file."""
    payload = {
        "magic": _CACHE_MAGIC,
        "k1": index.k1,
        "b": index.b,
        "documents": [d.to_dict() for d in index.documents],
        "doc_lengths": index.doc_lengths,
        "avg_doc_length": index.avg_doc_length,
        "postings": index.postings,
        "idf": index.idf,
    }
    with open(path, "wb") as f:
        pickle.dump(payload, f, protocol=pickle.HIGHEST_PROTOCOL)


def load_index(path: str | Path) -> CorpusIndex:
    """Load a cache written by :func:`save_index`."""
    with open(path, "rb") as f:
        payload = pickle.load(f)
    if payload.get("magic") != _CACHE_MAGIC:
        raise ValueError(f"{path}: not a hopground index cache")
    index = CorpusIndex.__new__(CorpusIndex)
    index.k1 = payload["k1"]
    index.b = payload["b"]
    index.documents = tuple(Document.from_dict(d) for d in payload["documents"])
    index.doc_ids = tuple(d.id for d in index.documents)
    index.doc_lengths = payload["doc_lengths"]
    index.avg_doc_length = payload["avg_doc_length"]
    index._denom = index.k1 * (1.0 - index.b
                               + index.b * index.doc_lengths / index.avg_doc_length)
    index.postings = payload["postings"]
    index.idf = payload["idf"]
    return index
