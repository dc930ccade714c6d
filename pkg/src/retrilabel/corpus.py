"""Corpus and label-name ingestion, tokenization, and query assembly."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import BadLabelSpec, DuplicateId, EmptyText, MalformedRecord

__all__ = [
    "Document",
    "TokenizedDocument",
    "LabelSpec",
    "Corpus",
    "tokenize",
    "query_text",
    "load_corpus",
    "save_corpus",
    "load_label_specs",
    "save_label_specs",
    "tokenizer_rules",
]

# Maximal runs of Unicode alphanumerics; underscore is a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenizer_rules() -> dict:
    """Return the frozen tokenizer rule file (stopwords, golden cases)."""
    text = resources.files("retrilabel.data").joinpath("tokenizer_spec.json").read_text("utf-8")
    return json.loads(text)


_RULES = tokenizer_rules()
_STOPWORDS = frozenset(_RULES["stopwords"])
_MIN_LEN = int(_RULES["min_token_length"])


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word tokens.

    Tokens are maximal alphanumeric runs, lowercased; tokens shorter than
    two characters and tokens in the built-in English stopword list are
    dropped. Deterministic; empty input yields an empty list.
    """
    out = []
    for run in _TOKEN_RE.findall(text):
        tok = run.lower()
        if len(tok) < _MIN_LEN or tok in _STOPWORDS:
            continue
        out.append(tok)
    return out


@dataclass
class Document:
    """One corpus record. ``gold_label`` is held out for evaluation only."""

    id: str
    text: str
    gold_label: int | None = None


@dataclass
class TokenizedDocument:
    id: str
    tokens: list[str]


@dataclass
class LabelSpec:
    """A class's id, original label name, and accumulated expansion words."""

    class_id: int
    name: str
    expansions: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise BadLabelSpec(f"class {self.class_id}: empty label name")
        seen = set(tokenize(self.name))
        for word in self.expansions:
            if word in seen:
                raise BadLabelSpec(
                    f"class {self.class_id}: expansion {word!r} duplicates the query"
                )
            seen.add(word)

    def query_tokens(self) -> set[str]:
        """Token set of the current query (name tokens plus expansions)."""
        return set(tokenize(self.name)) | set(self.expansions)

    def with_expansion(self, word: str) -> "LabelSpec":
        """Return a copy with one more expansion word appended."""
        return LabelSpec(self.class_id, self.name, [*self.expansions, word])


def query_text(spec: LabelSpec) -> str:
    """The retrieval query: label name followed by expansions, space-joined."""
    return " ".join([spec.name, *spec.expansions])


def load_corpus(path) -> list[Document]:
    """Read a JSON Lines corpus: {"id": str, "text": str, "label": int?}.

    Documents are returned in file order. Raises MalformedRecord,
    DuplicateId, or EmptyText on contract violations.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise MalformedRecord(line_no, "record needs 'id' and 'text' fields")
            doc_id, text = rec["id"], rec["text"]
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise MalformedRecord(line_no, "'id' and 'text' must be strings")
            label = rec.get("label")
            if label is not None and not isinstance(label, int):
                raise MalformedRecord(line_no, "'label' must be an integer")
            if doc_id in seen:
                raise DuplicateId(doc_id)
            if not text.strip():
                raise EmptyText(doc_id)
            seen.add(doc_id)
            docs.append(Document(doc_id, text, label))
    return docs


def save_corpus(docs: list[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {"id": doc.id, "text": doc.text}
            if doc.gold_label is not None:
                rec["label"] = doc.gold_label
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_label_specs(path) -> list[LabelSpec]:
    """Read a JSON Lines label-spec file: {"class_id": int, "name": str}.

    class_ids must be exactly 0..C-1 (any file order). An optional
    "expansions" list is accepted so expanded specs round-trip.
    """
    specs: list[LabelSpec] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if not isinstance(rec, dict) or "class_id" not in rec or "name" not in rec:
                raise MalformedRecord(line_no, "record needs 'class_id' and 'name' fields")
            if not isinstance(rec["class_id"], int) or not isinstance(rec["name"], str):
                raise MalformedRecord(line_no, "'class_id' must be int, 'name' str")
            expansions = rec.get("expansions", [])
            if not isinstance(expansions, list) or any(not isinstance(w, str) for w in expansions):
                raise MalformedRecord(line_no, "'expansions' must be a list of strings")
            specs.append(LabelSpec(rec["class_id"], rec["name"], list(expansions)))
    ids = sorted(s.class_id for s in specs)
    if ids != list(range(len(specs))):
        raise BadLabelSpec(f"class_ids must be exactly 0..C-1 with no gaps, got {ids}")
    specs.sort(key=lambda s: s.class_id)
    return specs


def save_label_specs(specs: list[LabelSpec], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for spec in sorted(specs, key=lambda s: s.class_id):
            rec = {"class_id": spec.class_id, "name": spec.name}
            if spec.expansions:
                rec["expansions"] = list(spec.expansions)
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


class Corpus:
    """Immutable document collection with cached tokenization.

    Read-only after construction; safe for concurrent readers.
    """

    def __init__(self, documents: list[Document]):
        self.documents = list(documents)
        self.by_id = {d.id: d for d in self.documents}
        if len(self.by_id) != len(self.documents):
            raise DuplicateId("corpus contains repeated ids")
        self._token_cache: dict[str, list[str]] = {}

    @classmethod
    def load(cls, path) -> "Corpus":
        return cls(load_corpus(path))

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def tokens_of(self, doc_id: str) -> list[str]:
        toks = self._token_cache.get(doc_id)
        if toks is None:
            toks = tokenize(self.by_id[doc_id].text)
            self._token_cache[doc_id] = toks
        return toks

    def tokenized(self, doc_id: str) -> TokenizedDocument:
        return TokenizedDocument(doc_id, self.tokens_of(doc_id))

    def gold_labels(self) -> dict[str, int]:
        """Map of id -> gold label for the documents that carry one."""
        return {d.id: d.gold_label for d in self.documents if d.gold_label is not None}
