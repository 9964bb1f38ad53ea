import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_tfidf, central_diff, rel_error
from udatext.corpus import TokenizedDoc
from udatext.errors import ContractError
from udatext.features import (EmbeddingMatrix, LayerFeatures, SkipGramConfig, Vocabulary, build_vocab,
                              compute_tfidf, doc_vector, load_embeddings, select_layers,
                              sgns_pair_loss_grad, tfidf_vectors, train_skipgram, write_embeddings)
from udatext.features.layers import load_layer_features
from udatext.features.skipgram import init_vectors


def docs_of(*texts):
    return [TokenizedDoc(str(i), t.split()) for i, t in enumerate(texts)]


class TestVocab:
    def test_min_count_filters(self):
        assert build_vocab(docs_of("a a b"), 2).tokens == ("a",)

    def test_count_then_lexical_order(self):
        v = build_vocab(docs_of("a b", "b c"), 1)
        assert v.index == {"b": 0, "a": 1, "c": 2}

    def test_nothing_retained(self):
        with pytest.raises(ContractError):
            build_vocab(docs_of("a"), 2)

    def test_empty_corpus(self):
        with pytest.raises(ContractError):
            build_vocab([], 1)


class TestTfIdf:
    def test_examples(self):
        docs = docs_of("gato come peixe", "cachorro come osso")
        table = compute_tfidf(docs)
        assert table.score("come", docs[0]) == 0.0
        assert table.score("gato", docs[0]) == pytest.approx(math.log(2) / 3, abs=1e-12)
        assert round(table.score("gato", docs[0]), 5) == 0.23105

    def test_single_doc_idf_zero(self):
        table = compute_tfidf(docs_of("a b a"))
        assert table.idf("a") == 0.0 and table.idf("b") == 0.0

    def test_unknown_token(self):
        with pytest.raises(ContractError, match="unknown token"):
            compute_tfidf(docs_of("a")).idf("zzz")

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=50), min_size=1, max_size=10))
    def test_matches_counting_oracle(self, corpus):
        table = compute_tfidf(corpus)
        for (w, j), expected in brute_tfidf(corpus).items():
            assert abs(table.score(w, corpus[j]) - expected) <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=8), min_size=2, max_size=10))
    def test_idf_decreases_with_df(self, corpus):
        table = compute_tfidf(corpus)
        for w1 in table.df:
            assert 1 <= table.df[w1] <= table.doc_count
            assert (table.idf(w1) == 0.0) == (table.df[w1] == table.doc_count)
            for w2 in table.df:
                if table.df[w1] < table.df[w2]:
                    assert table.idf(w1) > table.idf(w2)

    def test_persist_round_trip(self, tmp_path):
        table = compute_tfidf(docs_of("a b", "b c c"))
        table.save(tmp_path / "t.json")
        assert type(table).load(tmp_path / "t.json") == table

    def test_vectors_are_unit_rows(self):
        docs = docs_of("a b", "b c c", "b")
        table = compute_tfidf(docs)
        X = tfidf_vectors(docs, table.vocabulary(), table)
        np.testing.assert_allclose(np.linalg.norm(X[:2], axis=1), 1.0)
        assert not X[2].any()      # "b" is in every doc


class TestSgnsPair:
    def test_orthogonal_no_negatives(self):
        loss, *_ = sgns_pair_loss_grad(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.zeros((0, 2)))
        assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_zero_vectors_one_negative(self):
        loss, *_ = sgns_pair_loss_grad(np.zeros(3), np.zeros(3), np.zeros((1, 3)))
        assert loss == pytest.approx(2 * math.log(2), abs=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients_match_finite_differences(self, seed):
        r = np.random.default_rng(seed)
        v, u, neg = r.normal(size=5), r.normal(size=5), r.normal(size=(3, 5))
        _, gv, gu, gn = sgns_pair_loss_grad(v, u, neg)
        f = lambda: sgns_pair_loss_grad(v, u, neg)[0]  # noqa: E731
        assert rel_error(gv, central_diff(f, v)) <= 1e-4
        assert rel_error(gu, central_diff(f, u)) <= 1e-4
        assert rel_error(gn, central_diff(f, neg)) <= 1e-4


def shared_context_corpus():
    """x1 and x2 always appear between the same neighbours; y never does."""
    docs = []
    for i in range(60):
        mid = "x1" if i % 2 else "x2"
        docs.append(TokenizedDoc(f"s{i}", ["a", "b", mid, "c", "d"]))
        docs.append(TokenizedDoc(f"t{i}", ["e", "f", "y", "g", "h"]))
    return docs


def cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestSkipGram:
    def test_reference_defaults(self):
        cfg = SkipGramConfig()
        assert (cfg.dim, cfg.window, cfg.min_count) == (600, 10, 5)

    def test_zero_epochs_returns_init(self):
        cfg = SkipGramConfig(dim=8, window=2, min_count=1, epochs=0, seed=9)
        emb = train_skipgram(shared_context_corpus(), cfg)
        init, _ = init_vectors(len(emb.vocab), 8, 9)
        np.testing.assert_array_equal(emb.vectors, init.astype(np.float32))
        assert np.abs(emb.vectors).max() <= 0.5 / 8

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_shared_contexts_pull_vectors_together(self, seed):
        cfg = SkipGramConfig(dim=16, window=2, min_count=1, epochs=10, lr=0.05, seed=seed)
        emb = train_skipgram(shared_context_corpus(), cfg)
        assert cosine(emb["x1"], emb["x2"]) > cosine(emb["x1"], emb["y"])

    def test_bit_deterministic_and_seed_sensitive(self):
        cfg = SkipGramConfig(dim=8, window=2, min_count=1, epochs=2, seed=5)
        a = train_skipgram(shared_context_corpus(), cfg)
        b = train_skipgram(shared_context_corpus(), cfg)
        c = train_skipgram(shared_context_corpus(), SkipGramConfig(dim=8, window=2, min_count=1, epochs=0, seed=6))
        d = train_skipgram(shared_context_corpus(), SkipGramConfig(dim=8, window=2, min_count=1, epochs=0, seed=5))
        np.testing.assert_array_equal(a.vectors, b.vectors)
        assert not np.array_equal(c.vectors, d.vectors)

    @pytest.mark.parametrize("field, value", [("dim", 0), ("window", 0), ("negatives", 0), ("lr", 0.0),
                                              ("epochs", -1)])
    def test_invalid_config(self, field, value):
        with pytest.raises(ContractError):
            train_skipgram(shared_context_corpus(), SkipGramConfig(**{field: value, "min_count": 1}))


def tiny_embeddings():
    vocab = Vocabulary(("a", "b", "c"), {"a": 3, "b": 2, "c": 1})
    vecs = np.array([[1.0, 2.0], [3.0, -4.0], [0.1, 1 / 3]], dtype=np.float32)
    return EmbeddingMatrix(vocab, vecs)


class TestDocVector:
    def test_single_token(self):
        np.testing.assert_array_equal(doc_vector(["b"], tiny_embeddings()), [3.0, -4.0])

    def test_midpoint(self):
        np.testing.assert_allclose(doc_vector(["a", "b"], tiny_embeddings()), [2.0, -1.0])

    def test_oov_and_empty(self):
        emb = tiny_embeddings()
        assert not doc_vector(["zz", "yy"], emb).any()
        assert not doc_vector([], emb).any()

    @given(st.lists(st.sampled_from(["a", "b", "c", "oov"]), min_size=1, max_size=12), st.randoms())
    def test_permutation_and_duplication_invariant(self, tokens, random):
        emb = tiny_embeddings()
        base = doc_vector(tokens, emb)
        shuffled = list(tokens)
        random.shuffle(shuffled)
        np.testing.assert_allclose(doc_vector(shuffled, emb), base, atol=1e-12)
        np.testing.assert_allclose(doc_vector(tokens + tokens, emb), base, atol=1e-12)


class TestEmbeddingFile:
    def test_round_trip_bitwise(self, tmp_path):
        r = np.random.default_rng(0)
        vocab = Vocabulary(tuple(f"t{i}" for i in range(50)), {f"t{i}": 1 for i in range(50)})
        emb = EmbeddingMatrix(vocab, r.normal(size=(50, 7)).astype(np.float32))
        write_embeddings(emb, tmp_path / "e.txt")
        back = load_embeddings(tmp_path / "e.txt")
        assert back.vocab.tokens == vocab.tokens
        np.testing.assert_array_equal(back.vectors, emb.vectors)

    def test_trained_model_round_trip(self, tmp_path):
        emb = train_skipgram(shared_context_corpus(), SkipGramConfig(dim=6, window=2, min_count=1, epochs=1))
        write_embeddings(emb, tmp_path / "e.txt")
        back = load_embeddings(tmp_path / "e.txt")
        for doc in shared_context_corpus()[:10]:
            np.testing.assert_array_equal(doc_vector(doc, back), doc_vector(doc, emb))

    def test_count_mismatch(self, tmp_path):
        (tmp_path / "e.txt").write_text("2 3\na 1 2 3\nb 1 2 3\nc 1 2 3\n")
        with pytest.raises(ContractError):
            load_embeddings(tmp_path / "e.txt")

    def test_non_numeric_line_number(self, tmp_path):
        (tmp_path / "e.txt").write_text("2 2\na 1 2\nb 1 x\n")
        with pytest.raises(ContractError, match="line 3"):
            load_embeddings(tmp_path / "e.txt")


class TestLayers:
    def layers(self, n, d=768):
        return LayerFeatures("doc", np.arange(n * d, dtype=float).reshape(n, d))

    def test_concat_last4(self):
        f = self.layers(12)
        out = select_layers(f, "concat4")
        assert out.shape == (3072,)
        np.testing.assert_array_equal(out[:768], f.layers[8])
        np.testing.assert_array_equal(out[-768:], f.layers[11])

    def test_first_and_last(self):
        f = self.layers(12)
        np.testing.assert_array_equal(select_layers(f, "last"), f.layers[11])
        np.testing.assert_array_equal(select_layers(f, "first"), f.layers[0])

    def test_default_is_last(self):
        f = self.layers(3, 4)
        np.testing.assert_array_equal(select_layers(f), f.layers[-1])

    def test_concat_needs_four(self):
        with pytest.raises(ContractError):
            select_layers(self.layers(2, 4), "concat4")

    def test_load(self, tmp_path):
        (tmp_path / "l.jsonl").write_text('{"id": "a", "layers": [[1, 2], [3, 4]]}\n{"id": "b", "layers": [[1], [2, 3]]}\n')
        with pytest.raises(ContractError, match="line 2"):
            load_layer_features(tmp_path / "l.jsonl")
