"""Dense retrieval: score label-name queries against document vectors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import LabelSpec, query_text
from .errors import DimensionMismatch, NoKnownTokens
from .store import EmbeddingStore

__all__ = [
    "RetrievalResult",
    "PseudoLabelSet",
    "top_k",
    "retrieve_all",
    "dedup_assign",
]


@dataclass
class RetrievalResult:
    """Per-class hit list, descending by score (ties: ascending doc id)."""

    class_id: int
    hits: list[tuple[str, float]]


@dataclass
class PseudoLabelSet:
    """Document-id -> (class_id, relevance score), one class per document."""

    assignments: dict[str, tuple[int, float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.assignments)

    def labels(self) -> dict[str, int]:
        return {doc_id: cls for doc_id, (cls, _) in self.assignments.items()}

    def dump_jsonl(self, path) -> None:
        """Audit dump, sorted by document id for deterministic output."""
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id in sorted(self.assignments):
                cls, score = self.assignments[doc_id]
                fh.write(json.dumps(
                    {"id": doc_id, "class_id": cls, "score": score}
                ) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "PseudoLabelSet":
        assignments: dict[str, tuple[int, float]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                assignments[rec["id"]] = (int(rec["class_id"]), float(rec["score"]))
        return cls(assignments)


def top_k(store: EmbeddingStore, query_vec: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Exact top-k documents by dot-product relevance.

    Returns min(k, n) hits sorted by descending score; equal scores are
    ordered by ascending document id so results are deterministic and
    independent of storage order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (store.dim,):
        raise DimensionMismatch(store.dim, int(q.size), context="query vector")
    matrix = store.doc_matrix()
    if matrix.shape[0] == 0:
        return []
    scores = matrix @ q
    order = np.lexsort((store.id_rank(), -scores))
    ids = store.doc_ids
    return [(ids[i], float(scores[i])) for i in order[: min(k, len(ids))]]


def retrieve_all(store: EmbeddingStore, specs: list[LabelSpec], k: int) -> list[RetrievalResult]:
    """One hit list per class, in class_id order."""
    results = []
    for spec in sorted(specs, key=lambda s: s.class_id):
        try:
            qvec = store.embed_query(query_text(spec), space="doc")
        except NoKnownTokens as exc:
            raise NoKnownTokens(exc.query, class_id=spec.class_id) from exc
        results.append(RetrievalResult(spec.class_id, top_k(store, qvec, k)))
    return results


def dedup_assign(results: list[RetrievalResult]) -> PseudoLabelSet:
    """Union the per-class hits into single-label assignments.

    A document retrieved by several classes goes to the class where its
    score is highest; score ties go to the lowest class_id.
    """
    assignments: dict[str, tuple[int, float]] = {}
    for result in sorted(results, key=lambda r: r.class_id):
        for doc_id, score in result.hits:
            prev = assignments.get(doc_id)
            if prev is None or score > prev[1]:
                assignments[doc_id] = (result.class_id, score)
    return PseudoLabelSet(assignments)
