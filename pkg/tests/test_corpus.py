import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udatext.corpus import (Dataset, SplitSpec, TokenizedDoc, from_texts, load_dataset, normalize_text,
                            preprocess, save_dataset, stratified_split, tokenize)
from udatext.errors import ContractError

URL_PAT = re.compile(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S+", re.IGNORECASE)
EMAIL_PAT = re.compile(r"[^\s@]+@[^\s@]+\.[^\s@]+")


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write((r if isinstance(r, str) else json.dumps(r, ensure_ascii=False)) + "\n")
    return path


class TestNormalize:
    @pytest.mark.parametrize("raw, expected", [
        ("Visite https://mp.br AGORA", "visite URL agora"),
        ("Contato: joao@mp.br", "contato: EMAIL"),
        ("ano 2019, processo 12345", "ano 0, processo 0"),
        ("", ""),
        ("veja www.mp.br/x?a=1 hoje", "veja URL hoje"),
        ("Ação JUDICIAL", "ação judicial"),
    ])
    def test_examples(self, raw, expected):
        assert normalize_text(raw) == expected

    def test_email_needs_dot_in_domain(self):
        assert normalize_text("user@localhost") == "user@localhost"

    def test_sentinels_survive_a_second_pass(self):
        once = normalize_text("Mail a@b.com or visit http://x.y/z 42")
        assert normalize_text(once) == once
        assert once == "mail EMAIL or visit URL 0"

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.sampled_from(list("abAB019 .:/@-_wéÉ") + ["http://", "www.", "URL", "EMAIL"]),
                    max_size=30).map("".join))
    def test_output_invariants(self, text):
        out = normalize_text(text)
        assert not URL_PAT.search(out)
        assert not EMAIL_PAT.search(out)
        assert not re.search(r"[1-9]|00", out)
        for tok in tokenize(out):
            if tok not in ("URL", "EMAIL"):
                assert tok == tok.lower()
        assert normalize_text(out) == out


class TestTokenize:
    @pytest.mark.parametrize("text, tokens", [
        ("visite URL agora", ["visite", "URL", "agora"]),
        ("contato: EMAIL", ["contato", ":", "EMAIL"]),
        ("", []),
        ("a,b  c!?", ["a", ",", "b", "c", "!", "?"]),
    ])
    def test_examples(self, text, tokens):
        assert tokenize(text) == tokens

    @given(st.text(max_size=80))
    def test_no_empty_or_whitespace_tokens(self, text):
        for tok in preprocess(text):
            assert tok and not any(ch.isspace() for ch in tok)


class TestLoadDataset:
    def test_two_labels(self, tmp_path):
        p = write_jsonl(tmp_path / "d.jsonl", [{"id": "1", "text": "x y", "label": "A"},
                                               {"id": "2", "text": "z", "label": "B"}])
        ds = load_dataset(p)
        assert ds.classes == ("A", "B") and len(ds) == 2

    def test_unlabeled_admitted_when_allowed(self, tmp_path):
        p = write_jsonl(tmp_path / "d.jsonl", [{"id": "1", "text": "x y", "label": None}])
        ds = load_dataset(p, require_labels=False)
        assert ds.docs[0].label is None
        with pytest.raises(ContractError, match="no label"):
            load_dataset(p, require_labels=True)

    def test_duplicate_id_named(self, tmp_path):
        p = write_jsonl(tmp_path / "d.jsonl", [{"id": "dup", "text": "a", "label": "A"},
                                               {"id": "dup", "text": "b", "label": "A"}])
        with pytest.raises(ContractError, match="'dup'"):
            load_dataset(p)

    def test_malformed_line_number(self, tmp_path):
        p = write_jsonl(tmp_path / "d.jsonl", [{"id": "1", "text": "a", "label": "A"}, "{not json"])
        with pytest.raises(ContractError, match="line 2"):
            load_dataset(p)

    def test_blank_text_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "d.jsonl", [{"id": "1", "text": "   ", "label": "A"}])
        with pytest.raises(ContractError, match="empty text"):
            load_dataset(p)

    def test_save_load_round_trip_does_not_renormalize(self, tmp_path):
        ds = from_texts(["Veja http://a.b HOJE 2020"], labels=["A"], ids=["d1"])
        save_dataset(ds, tmp_path / "t.jsonl")
        back = load_dataset(tmp_path / "t.jsonl")
        assert back.docs == ds.docs
        assert back.docs[0].tokens == ("veja", "URL", "hoje", "0")


def grid_dataset(n_classes, per_class):
    docs = [TokenizedDoc(f"c{k}-{i}", ["w"], f"c{k}") for k in range(n_classes) for i in range(per_class)]
    return Dataset(docs, [f"c{k}" for k in range(n_classes)])


class TestSplit:
    def test_fifty_classes(self):
        tr, va, te = stratified_split(grid_dataset(50, 130), SplitSpec((70, 30, 30), seed=4))
        assert (len(tr), len(va), len(te)) == (3500, 1500, 1500)
        for part, n in ((tr, 70), (va, 30), (te, 30)):
            assert set(part.class_counts().values()) == {n}

    def test_small(self):
        parts = stratified_split(grid_dataset(2, 10), SplitSpec((6, 2, 2)))
        assert [len(p) for p in parts] == [12, 4, 4]

    def test_infeasible_names_every_class(self):
        with pytest.raises(ContractError) as exc:
            stratified_split(grid_dataset(2, 5), SplitSpec((6, 0, 0)))
        assert "c0" in str(exc.value) and "c1" in str(exc.value)

    def test_per_class_mapping(self):
        parts = stratified_split(grid_dataset(2, 10), SplitSpec({"c0": (1, 1, 1), "c1": (5, 0, 2)}))
        assert [p.class_counts() for p in parts] == [{"c0": 1, "c1": 5}, {"c0": 1, "c1": 0}, {"c0": 1, "c1": 2}]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(3, 12), st.integers(0, 2**32 - 1))
    def test_partition_and_determinism(self, k, per, seed):
        ds = grid_dataset(k, per)
        spec = SplitSpec((per // 3, per // 3, per // 3), seed)
        a = stratified_split(ds, spec)
        b = stratified_split(ds, spec)
        ids = [d.id for p in a for d in p.docs]
        assert len(ids) == len(set(ids))
        assert [[d.id for d in p.docs] for p in a] == [[d.id for d in p.docs] for p in b]
        for p in a:
            assert set(p.class_counts().values()) == {per // 3}
