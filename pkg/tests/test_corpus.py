import json
import tempfile
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrilabel.corpus import (
    Corpus,
    Document,
    LabelSpec,
    load_corpus,
    load_label_specs,
    query_text,
    save_corpus,
    save_label_specs,
    tokenize,
    tokenizer_rules,
)
from retrilabel.errors import BadLabelSpec, DuplicateId, EmptyText, MalformedRecord


class TestTokenize:
    def test_golden_cases_from_frozen_rules(self):
        for case in tokenizer_rules()["golden"]:
            assert tokenize(case["text"]) == case["tokens"], case["text"]

    def test_hyphen_splitting(self):
        assert tokenize("Graph-based HIV models") == ["graph", "based", "hiv", "models"]

    def test_short_and_stopword_tokens_dropped(self):
        assert tokenize("a I x") == []

    def test_case_folding_and_punctuation(self):
        assert tokenize("Insulin, insulin; INSULIN.") == ["insulin"] * 3

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_token_shape_invariants(self, text):
        tokens = tokenize(text)
        for tok in tokens:
            assert len(tok) >= 2
            assert tok == tok.lower()
            assert not any(ch.isspace() for ch in tok)

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_deterministic_and_idempotent_on_joined_output(self, text):
        tokens = tokenize(text)
        assert tokenize(text) == tokens
        assert tokenize(" ".join(tokens)) == tokens


class TestLoadCorpus:
    def _write(self, tmp_path, lines):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_two_records_in_file_order(self, tmp_path):
        path = self._write(tmp_path, [
            json.dumps({"id": "a", "text": "first doc"}),
            json.dumps({"id": "b", "text": "second doc"}),
        ])
        docs = load_corpus(path)
        assert [d.id for d in docs] == ["a", "b"]

    def test_duplicate_id_rejected(self, tmp_path):
        path = self._write(tmp_path, [
            json.dumps({"id": "a", "text": "x y"}),
            json.dumps({"id": "a", "text": "z w"}),
        ])
        with pytest.raises(DuplicateId):
            load_corpus(path)

    def test_empty_text_rejected(self, tmp_path):
        path = self._write(tmp_path, [json.dumps({"id": "a", "text": "   "})])
        with pytest.raises(EmptyText):
            load_corpus(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = self._write(tmp_path, [
            json.dumps({"id": "a", "text": "fine"}),
            "{not json",
        ])
        with pytest.raises(MalformedRecord) as err:
            load_corpus(path)
        assert err.value.line_no == 2

    def test_missing_fields_rejected(self, tmp_path):
        path = self._write(tmp_path, [json.dumps({"id": "a"})])
        with pytest.raises(MalformedRecord):
            load_corpus(path)

    def test_long_abstract_record(self, tmp_path):
        # Abstracts in the hundreds of tokens must ingest unchanged.
        text = " ".join(f"token{i}" for i in range(254))
        path = self._write(tmp_path, [json.dumps({"id": "m1", "text": text})])
        docs = load_corpus(path)
        assert docs[0].text == text
        assert len(tokenize(docs[0].text)) == 254

    def test_gold_label_rides_along(self, tmp_path):
        path = self._write(tmp_path, [json.dumps({"id": "a", "text": "x y", "label": 3})])
        assert load_corpus(path)[0].gold_label == 3

    @given(records=st.dictionaries(
        st.text(min_size=1, max_size=20),
        st.text(min_size=1, max_size=80).filter(lambda s: s.strip()),
        min_size=1, max_size=20,
    ))
    @settings(max_examples=50)
    def test_save_load_roundtrip(self, records):
        docs = [Document(i, t) for i, t in records.items()]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "corpus.jsonl"
            save_corpus(docs, path)
            loaded = load_corpus(path)
        assert [(d.id, d.text) for d in loaded] == [(d.id, d.text) for d in docs]


class TestLabelSpec:
    def test_query_text_name_only(self):
        assert query_text(LabelSpec(0, "Diabetes")) == "Diabetes"

    def test_query_text_with_expansions(self):
        spec = LabelSpec(0, "Diabetes", ["insulin", "glucose"])
        assert query_text(spec) == "Diabetes insulin glucose"

    def test_query_text_multiword_name(self):
        assert query_text(LabelSpec(0, "Game Theory", ["player"])) == "Game Theory player"

    def test_expansion_duplicating_name_token_rejected(self):
        with pytest.raises(BadLabelSpec):
            LabelSpec(0, "Game Theory", ["theory"])

    def test_duplicate_expansions_rejected(self):
        with pytest.raises(BadLabelSpec):
            LabelSpec(0, "Diabetes", ["insulin", "insulin"])

    def test_empty_name_rejected(self):
        with pytest.raises(BadLabelSpec):
            LabelSpec(0, "  ")

    def test_with_expansion_keeps_invariant(self):
        spec = LabelSpec(0, "Number Theory").with_expansion("prime")
        assert spec.expansions == ["prime"]
        assert not set(spec.expansions) & set(tokenize(spec.name))

    def test_load_specs_requires_contiguous_ids(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        path.write_text(
            json.dumps({"class_id": 0, "name": "alpha"}) + "\n"
            + json.dumps({"class_id": 2, "name": "beta"}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(BadLabelSpec):
            load_label_specs(path)

    def test_specs_roundtrip_with_expansions(self, tmp_path):
        specs = [LabelSpec(0, "alpha", ["extra"]), LabelSpec(1, "beta")]
        path = tmp_path / "labels.jsonl"
        save_label_specs(specs, path)
        assert load_label_specs(path) == specs


class TestCorpusContainer:
    def test_tokens_cached_and_stable(self):
        corpus = Corpus([Document("a", "Insulin and glucose")])
        first = corpus.tokens_of("a")
        assert first == ["insulin", "glucose"]
        assert corpus.tokens_of("a") is first

    def test_gold_labels_partial(self):
        corpus = Corpus([
            Document("a", "x y", gold_label=1),
            Document("b", "z w"),
        ])
        assert corpus.gold_labels() == {"a": 1}
