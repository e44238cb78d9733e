import json
import random

import numpy as np
import pytest

from hopground.core import Document
from hopground.errors import (DuplicateDocId, EmptyCorpus, EmptyQuery,
                              MalformedDataset, MalformedResponse,
                              TransportError)
from hopground.retrieval import (available_backends, build_index, load_corpus,
                                 load_index, retrieve, retrieve_external,
                                 save_index, tokenize, use_backend)
from hopground.retrieval import bm25

import oracles
from helpers import StubServer

QUERIES = [
    "longest river in the world",
    "annual film festival held in France",
    "capital city of Egypt near the Nile",
    "Nobel Prize physics",
    "carbon dioxide oxygen water",
]

# rankings frozen from the exhaustive-scoring oracle over corpus20.jsonl
EXPECTED_RANKINGS = {
    QUERIES[0]: ["d03", "d01", "d15", "d02", "d19", "d13", "d12", "d04", "d06", "d05"],
    QUERIES[1]: ["d05", "d04", "d14", "d06", "d01", "d03", "d12", "d15", "d13", "d19"],
    QUERIES[2]: ["d15", "d03", "d13", "d14", "d17", "d12", "d11", "d20", "d18", "d05"],
    QUERIES[3]: ["d12", "d10"],
    QUERIES[4]: ["d08", "d07", "d09", "d02"],
}


@pytest.fixture(scope="module")
def corpus(fixtures_dir):
    return load_corpus(fixtures_dir / "corpus20.jsonl")


@pytest.fixture(scope="module")
def index(corpus):
    return build_index(corpus)


class TestTokenize:
    def test_splits_on_non_alphanumeric_runs(self):
        assert tokenize("Hello, world! x2") == ["hello", "world", "x2"]

    def test_underscore_is_a_separator(self):
        assert tokenize("a_b") == ["a", "b"]

    def test_unicode_text(self):
        assert tokenize("Dvořák's œuvre") == ["dvořák", "s", "œuvre"]


class TestBuildIndex:
    def test_avg_doc_length(self):
        index = build_index([Document(id="1", title="", body="a b"),
                             Document(id="2", title="", body="b c")])
        assert index.avg_doc_length == 2.0

    def test_duplicate_ids(self):
        docs = [Document(id="1", title="", body="a"),
                Document(id="1", title="", body="b")]
        with pytest.raises(DuplicateDocId):
            build_index(docs)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_index([])

    def test_postings_match_term_count_oracle(self, corpus, index):
        by_id = {doc.id: doc for doc in corpus}
        expected: dict[str, dict[str, int]] = {}
        for doc in corpus:
            text = f"{doc.title} {doc.body}" if doc.title else doc.body
            for term, count in oracles.term_counts(text).items():
                expected.setdefault(term, {})[doc.id] = count
        actual: dict[str, dict[str, int]] = {}
        for term, (idx, tfs) in index.postings.items():
            actual[term] = {index.doc_ids[i]: int(tf)
                            for i, tf in zip(idx, tfs)}
        assert actual == expected
        assert by_id.keys() == set(index.doc_ids)

    def test_validates_parameters(self, corpus):
        with pytest.raises(ValueError):
            build_index(corpus, k1=0)
        with pytest.raises(ValueError):
            build_index(corpus, b=1.5)

    def test_tokenless_corpus_builds_and_retrieves_nothing(self):
        # bodies that tokenize to zero terms must not poison the index
        index = build_index([Document(id="a", title="", body="!!!"),
                             Document(id="b", title="", body="---")])
        assert retrieve(index, "anything", top_k=5) == []


class TestRetrieve:
    def test_no_term_overlap_returns_empty(self, index):
        assert retrieve(index, "zyzzyva quux", top_k=5) == []

    def test_single_doc_corpus(self):
        doc = Document(id="only", title="", body="the quick brown fox")
        index = build_index([doc])
        results = retrieve(index, "the quick brown fox", top_k=3)
        assert [d.id for d in results] == ["only"]
        assert results[0].rank == 1

    @pytest.mark.parametrize("query", QUERIES)
    def test_matches_exhaustive_oracle(self, corpus, index, query):
        got = [d.id for d in retrieve(index, query, top_k=10)]
        assert got == oracles.bm25_rank(corpus, query, 10)
        assert got == EXPECTED_RANKINGS[query]

    def test_zero_score_docs_never_appear(self, corpus, index):
        for query in QUERIES:
            returned = {d.id for d in retrieve(index, query, top_k=20)}
            query_terms = set(tokenize(query))
            for doc in corpus:
                text = f"{doc.title} {doc.body}"
                if not query_terms & set(tokenize(text)):
                    assert doc.id not in returned

    def test_ranks_are_positional(self, index):
        results = retrieve(index, "carbon dioxide oxygen water", top_k=10)
        assert [d.rank for d in results] == list(range(1, len(results) + 1))

    def test_scores_descend_with_rank(self, index):
        for query in QUERIES:
            scores = index.scores(query)
            by_id = {doc_id: scores[i] for i, doc_id in enumerate(index.doc_ids)}
            results = retrieve(index, query, top_k=10)
            for first, second in zip(results, results[1:]):
                assert by_id[first.id] >= by_id[second.id]

    def test_tie_break_ascending_id(self):
        # identical documents score identically; ids decide the order
        docs = [Document(id=name, title="", body="same words here")
                for name in ("zeta", "alpha", "mid")]
        index = build_index(docs)
        got = [d.id for d in retrieve(index, "same words", top_k=3)]
        assert got == ["alpha", "mid", "zeta"]

    def test_top_k_truncates(self, index):
        assert len(retrieve(index, "the", top_k=3)) == 3

    def test_permutation_invariance(self, corpus):
        shuffled = list(corpus)
        random.Random(7).shuffle(shuffled)
        base = build_index(corpus)
        permuted = build_index(shuffled)
        for query in QUERIES:
            assert ([d.id for d in retrieve(base, query, 10)]
                    == [d.id for d in retrieve(permuted, query, 10)])

    def test_retrieval_is_deterministic(self, index):
        runs = [[d.id for d in retrieve(index, "river africa", 10)]
                for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]

    def test_empty_query(self, index):
        with pytest.raises(EmptyQuery):
            retrieve(index, "!!! ---", top_k=5)

    def test_rejects_bad_top_k(self, index):
        with pytest.raises(ValueError):
            retrieve(index, "river", top_k=0)

    def test_repeated_query_terms_add_weight(self):
        docs = [Document(id="r", title="", body="river river bank"),
                Document(id="b", title="", body="bank bank river")]
        index = build_index(docs)
        single = index.scores("river bank")
        doubled = index.scores("river river bank")
        r = index.doc_ids.index("r")
        assert doubled[r] > single[r]


@pytest.mark.skipif("cython" not in available_backends(),
                    reason="compiled kernel not built")
class TestBackendParity:
    def test_identical_scores_and_rankings(self, corpus):
        index = build_index(corpus)
        results = {}
        for backend in ("python", "cython"):
            use_backend(backend)
            try:
                results[backend] = {
                    q: (index.scores(q).copy(),
                        [d.id for d in retrieve(index, q, 10)])
                    for q in QUERIES
                }
            finally:
                use_backend("cython")
        for query in QUERIES:
            py_scores, py_rank = results["python"][query]
            cy_scores, cy_rank = results["cython"][query]
            assert py_rank == cy_rank
            np.testing.assert_array_equal(py_scores, cy_scores)

    def test_use_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            use_backend("fortran")


class TestIndexCache:
    def test_save_then_load_preserves_retrieval(self, index, tmp_path):
        cache = tmp_path / "index.bin"
        save_index(index, cache)
        reloaded = load_index(cache)
        for query in QUERIES:
            assert ([d.id for d in retrieve(index, query, 10)]
                    == [d.id for d in retrieve(reloaded, query, 10)])

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "bogus.bin"
        import pickle
        path.write_bytes(pickle.dumps({"magic": "nope"}))
        with pytest.raises(ValueError):
            load_index(path)


class TestLoadCorpus:
    def test_reports_line_numbers(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "body": "x"}\nnot json\n', encoding="utf-8")
        with pytest.raises(MalformedDataset) as err:
            load_corpus(path)
        assert err.value.line == 2

    def test_missing_body_is_malformed(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "title": "t"}\n', encoding="utf-8")
        with pytest.raises(MalformedDataset):
            load_corpus(path)


@pytest.fixture()
def stub():
    server = StubServer()
    yield server
    server.close()


def _results(n):
    return {"results": [{"id": f"r{i}", "title": f"T{i}", "body": f"body {i}",
                         "score": 1.0 / (i + 1)} for i in range(n)]}


class TestExternalRetriever:
    def test_passthrough_ordering(self, stub):
        stub.queue(200, _results(3))
        docs = retrieve_external(stub.url, "anything", top_k=10)
        assert [d.id for d in docs] == ["r0", "r1", "r2"]
        assert [d.rank for d in docs] == [1, 2, 3]
        assert stub.requests[0] == {"query": "anything", "top_k": 10}

    def test_invalid_json(self, stub):
        stub.queue(200, "this is not json")
        with pytest.raises(MalformedResponse):
            retrieve_external(stub.url, "q", top_k=5)

    def test_missing_results_key(self, stub):
        stub.queue(200, {"docs": []})
        with pytest.raises(MalformedResponse):
            retrieve_external(stub.url, "q", top_k=5)

    def test_truncates_to_top_k(self, stub):
        stub.queue(200, _results(15))
        docs = retrieve_external(stub.url, "q", top_k=10)
        assert len(docs) == 10

    def test_http_error(self, stub):
        stub.queue(502, {"error": "bad gateway"})
        with pytest.raises(TransportError):
            retrieve_external(stub.url, "q", top_k=5)
