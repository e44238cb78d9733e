#!/usr/bin/env python3
"""Benchmark the BM25 scoring backends: compiled kernel vs numpy fallback.

Builds a synthetic corpus, runs the same query set through each backend,
checks the rankings agree, and reports timings.

    python benchmarks/bench_bm25.py --docs 20000 --queries 200
"""

import argparse
import random
import time

from hopground.core import Document
from hopground.retrieval import (available_backends, build_index, retrieve,
                                 use_backend)

WORD_STEMS = [
    "river", "festival", "capital", "mountain", "reef", "desert", "prize",
    "butterfly", "respiration", "journal", "documentary", "museum", "essay",
    "物理", "histoire", "carbon", "oxygen", "monarch", "city", "island",
]


def synthetic_corpus(n_docs: int, seed: int) -> list[Document]:
    rng = random.Random(seed)
    vocabulary = [f"{stem}{i}" for stem in WORD_STEMS for i in range(60)]
    docs = []
    for d in range(n_docs):
        length = rng.randint(20, 120)
        # Zipf-ish skew: low indices picked far more often
        words = [vocabulary[min(int(rng.expovariate(1 / 80)), len(vocabulary) - 1)]
                 for _ in range(length)]
        docs.append(Document(id=f"doc{d:06d}", title=f"Synthetic {d}",
                             body=" ".join(words)))
    return docs


def synthetic_queries(n_queries: int, seed: int) -> list[str]:
    rng = random.Random(seed + 1)
    vocabulary = [f"{stem}{i}" for stem in WORD_STEMS for i in range(30)]
    return [" ".join(rng.choices(vocabulary, k=rng.randint(2, 6)))
            for _ in range(n_queries)]


def run_backend(backend: str, index, queries, top_k: int):
    use_backend(backend)
    rankings = []
    started = time.perf_counter()
    for query in queries:
        rankings.append(tuple(d.id for d in retrieve(index, query, top_k)))
    elapsed = time.perf_counter() - started
    return elapsed, rankings


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=20000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--top-k", type=int, default=10)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args()

    print(f"building index over {args.docs} synthetic documents ...")
    corpus = synthetic_corpus(args.docs, args.seed)
    build_start = time.perf_counter()
    index = build_index(corpus)
    print(f"  built in {time.perf_counter() - build_start:.2f} s "
          f"({len(index.postings)} terms)")

    queries = synthetic_queries(args.queries, args.seed)
    backends = available_backends()
    results = {}
    for backend in backends:
        elapsed, rankings = run_backend(backend, index, queries, args.top_k)
        results[backend] = (elapsed, rankings)
        per_query = 1000.0 * elapsed / len(queries)
        print(f"  {backend:<7} {elapsed:8.3f} s total   {per_query:8.3f} ms/query")

    if len(backends) == 2:
        py_time, py_rankings = results["python"]
        cy_time, cy_rankings = results["cython"]
        agree = py_rankings == cy_rankings
        print(f"  rankings identical: {agree}")
        if not agree:
            raise SystemExit("backend rankings diverge")
        print(f"  speedup (python/cython): {py_time / cy_time:.2f}x")
    else:
        print("  compiled kernel not built; benchmarked the fallback only")


if __name__ == "__main__":
    main()
