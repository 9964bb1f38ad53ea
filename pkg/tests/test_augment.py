import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import replay_tfidf_replace
from udatext.augment import (AugmentConfig, HttpTranslator, MockTranslator, augment_dataset,
                             augmentation_pairs, back_translate, replacement_pool, tfidf_replace)
from udatext.corpus import Dataset, TokenizedDoc
from udatext.errors import ContractError, TranslatorError
from udatext.features import compute_tfidf

CORPUS_TEXTS = [
    "o juiz julgou a demanda de consumo",
    "a demanda foi arquivada pelo juiz",
    "o consumidor abriu a reclamação",
    "a empresa negou a cobrança indevida",
    "o processo de cobrança foi julgado",
    "a reclamação sobre consumo foi aceita",
]


def corpus():
    labels = ["A", "A", "B", "B", "A", "B"]
    return Dataset([TokenizedDoc(f"d{i}", t.split(), y) for i, (t, y) in enumerate(zip(CORPUS_TEXTS, labels))],
                   ["A", "B"])


@pytest.fixture
def setup():
    ds = corpus()
    table = compute_tfidf(ds.docs)
    return ds, table, table.vocabulary()


class TestTfIdfReplace:
    def test_p_max_zero_is_identity(self, setup):
        ds, table, vocab = setup
        for doc in ds.docs:
            out = tfidf_replace(doc, table, vocab, AugmentConfig(p_max=0.0, seed=3))
            assert out.tokens == doc.tokens and out.label == doc.label
            assert out.id == doc.id + "#aug"

    def test_equal_scores_unchanged(self):
        docs = [TokenizedDoc("x", ["a", "b", "c"]), TokenizedDoc("y", ["d", "e", "f"])]
        table = compute_tfidf(docs)
        out = tfidf_replace(docs[0], table, table.vocabulary(), AugmentConfig(p_max=1.0))
        assert out.tokens == docs[0].tokens

    @pytest.mark.parametrize("seed", range(10))
    def test_replay_oracle(self, setup, seed):
        # document frequencies 2, 3, 4, 6, 1 once this doc joins the corpus
        doc = TokenizedDoc("five", ["pelo", "juiz", "foi", "a", "novo"])
        ds, _, _ = setup
        table = compute_tfidf(ds.docs + [doc])
        vocab = table.vocabulary()
        pool = replacement_pool(table, vocab, 0.5)
        cfg = AugmentConfig(p_max=0.9, pool_fraction=0.5, seed=seed)
        scores = table.doc_scores(doc.tokens)
        assert len(set(scores)) == 5
        expected = replay_tfidf_replace(doc.tokens, scores, pool, 0.9, seed, doc.id)
        assert list(tfidf_replace(doc, table, vocab, cfg).tokens) == expected

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 5), st.integers(0, 10**6), st.floats(0.0, 1.0))
    def test_length_label_and_max_position(self, doc_idx, seed, p_max):
        ds = corpus()
        table = compute_tfidf(ds.docs)
        doc = ds.docs[doc_idx]
        out = tfidf_replace(doc, table, table.vocabulary(), AugmentConfig(p_max=p_max, seed=seed))
        assert len(out.tokens) == len(doc.tokens) and out.label == doc.label
        scores = table.doc_scores(doc.tokens)
        top = max(scores)
        for i, s in enumerate(scores):
            if s == top:
                assert out.tokens[i] == doc.tokens[i]

    def test_pool_is_lowest_idf(self, setup):
        _, table, vocab = setup
        pool = replacement_pool(table, vocab, 0.5)
        assert len(pool) == -(-len(vocab) // 2)
        cutoff = max(table.idf(t) for t in pool)
        assert all(table.idf(t) >= cutoff for t in vocab.tokens if t not in pool)

    def test_bad_config(self):
        with pytest.raises(ContractError):
            AugmentConfig(p_max=1.5)
        with pytest.raises(ContractError):
            AugmentConfig(pool_fraction=0.0)


class TestBackTranslate:
    def test_identity_mock(self, setup):
        ds, _, _ = setup
        out = back_translate(ds.docs, MockTranslator())
        assert [d.tokens for d in out] == [d.tokens for d in ds.docs]
        assert [d.id for d in out] == [d.id + "#bt" for d in ds.docs]

    def test_word_maps(self):
        mock = MockTranslator({"demanda": "complaint"}, {"complaint": "reclamação"})
        out = back_translate([TokenizedDoc("d", ["a", "demanda"], "A")], mock)
        assert out[0].tokens == ("a", "reclamação")

    def test_output_is_renormalized(self):
        mock = MockTranslator({"x": "Visit"}, {"Visit": "Veja http://a.b 2021"})
        out = back_translate([TokenizedDoc("d", ["x"])], mock)
        assert out[0].tokens == ("veja", "URL", "0")

    def test_order_and_labels_with_threads(self):
        docs = [TokenizedDoc(f"d{i}", [f"w{i}"], "A" if i % 2 else "B") for i in range(10)]
        out = back_translate(docs, MockTranslator(), max_workers=4)
        assert [d.label for d in out] == [d.label for d in docs]
        assert [d.id for d in out] == [f"d{i}#bt" for i in range(10)]

    def test_failure_carries_doc_id(self):
        class Broken:
            def translate(self, text, s, t):
                if "bad" in text:
                    raise RuntimeError("boom")
                return text
        with pytest.raises(TranslatorError) as exc:
            back_translate([TokenizedDoc("ok", ["fine"]), TokenizedDoc("d7", ["bad"])], Broken())
        assert exc.value.doc_id == "d7"


class TestAugmentDataset:
    def test_doubles_and_preserves_classes(self, setup):
        ds, table, vocab = setup
        out = augment_dataset(ds, "tfidf-replace", table=table, vocab=vocab)
        assert len(out) == 2 * len(ds)
        assert out.docs[:len(ds)] == ds.docs
        assert {c: 2 * n for c, n in ds.class_counts().items()} == out.class_counts()
        pairs = augmentation_pairs(ds, out)
        assert pairs[0] == {"id": "d0", "aug_id": "d0#aug"}

    def test_3500_docs(self):
        docs = [TokenizedDoc(f"d{i}", ["w", f"t{i % 7}"], f"c{i % 50}") for i in range(3500)]
        ds = Dataset(docs, [f"c{k}" for k in range(50)])
        out = augment_dataset(ds, "back-translate", translator=MockTranslator())
        assert len(out) == 7000

    def test_empty(self):
        assert len(augment_dataset(Dataset([], ["A"]), "back-translate", translator=MockTranslator())) == 0

    def test_deterministic(self, setup):
        ds, table, vocab = setup
        cfg = AugmentConfig(p_max=0.8, seed=11)
        a = augment_dataset(ds, "tfidf-replace", table=table, vocab=vocab, cfg=cfg)
        b = augment_dataset(ds, "tfidf-replace", table=table, vocab=vocab, cfg=cfg)
        assert a.docs == b.docs

    def test_missing_dependencies(self, setup):
        ds, _, _ = setup
        with pytest.raises(ContractError):
            augment_dataset(ds, "tfidf-replace")
        with pytest.raises(ContractError):
            augment_dataset(ds, "back-translate")


class _StubTranslator(BaseHTTPRequestHandler):
    fail = False

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.fail:
            self.send_response(503)
            self.end_headers()
            return
        self.server.seen.append((body, self.headers.get("Authorization")))
        out = json.dumps({"translatedText": body["q"].upper() if body["target"] == "en" else body["q"].lower()})
        data = out.encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    def start(fail=False):
        handler = type("H", (_StubTranslator,), {"fail": fail})
        server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        server.seen = []
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return server
    servers = []
    yield start
    for s in servers:
        s.shutdown()
        s.server_close()


class TestHttpTranslator:
    def test_round_trip_and_key(self, stub_server):
        server = stub_server()
        tr = HttpTranslator(f"http://127.0.0.1:{server.server_address[1]}/", key="secret", timeout=5)
        out = back_translate([TokenizedDoc("d", ["olá", "mundo"])], tr)
        assert out[0].tokens == ("olá", "mundo")
        (first, auth), (second, _) = server.seen
        assert first == {"q": "olá mundo", "source": "pt", "target": "en"}
        assert second["source"] == "en" and second["target"] == "pt"
        assert auth == "Bearer secret"

    def test_non_2xx_is_error(self, stub_server):
        server = stub_server(fail=True)
        tr = HttpTranslator(f"http://127.0.0.1:{server.server_address[1]}/", timeout=5)
        with pytest.raises(TranslatorError, match="503"):
            back_translate([TokenizedDoc("d9", ["x"])], tr)

    def test_unreachable(self):
        tr = HttpTranslator("http://127.0.0.1:9/", timeout=1)
        with pytest.raises(TranslatorError):
            tr.translate("x", "pt", "en")
