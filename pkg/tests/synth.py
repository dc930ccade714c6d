"""Synthetic cluster corpora with controlled embedding geometry.

Documents are bags of per-class signature tokens plus shared filler
words; document vectors are Gaussian clusters whose centroids are
orthonormal, and word vectors sit near their class centroid with a
word-specific offset. Retrieval with a single label name is therefore
good but imperfect, and averaging several signature words (what the
expansion stage learns to do) tightens the query toward the centroid.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from retrilabel.corpus import Corpus, Document, LabelSpec
from retrilabel.store import EmbeddingStore, write_vectors


@dataclass
class ClusterWorld:
    corpus: Corpus
    specs: list[LabelSpec]
    store: EmbeddingStore
    sig_tokens: dict[int, list[str]]
    within_std: float
    min_centroid_dist: float


def make_cluster_world(
    num_classes: int = 4,
    docs_per_class: int = 250,
    dim: int = 32,
    sig_per_class: int = 10,
    n_filler: int = 30,
    within_std: float = 0.26,
    word_offset_std: float = 0.35,
    cross_token_rate: float = 0.02,
    seed: int = 13,
) -> ClusterWorld:
    rng = np.random.default_rng(seed)
    letters = string.ascii_lowercase
    sig_tokens = {
        c: [f"sig{c}{letters[i]}" for i in range(sig_per_class)]
        for c in range(num_classes)
    }
    filler = [f"filler{i:02d}" for i in range(n_filler)]

    def orthonormal(n):
        mat = rng.standard_normal((max(n, dim), dim))
        q, _ = np.linalg.qr(mat.T)
        return q.T[:n]

    doc_centroids = orthonormal(num_classes)
    sem_centroids = orthonormal(num_classes)
    dists = [
        float(np.linalg.norm(doc_centroids[a] - doc_centroids[b]))
        for a in range(num_classes) for b in range(a + 1, num_classes)
    ]
    min_dist = min(dists)
    assert min_dist >= 4 * within_std, "clusters are not separated enough"

    doc_word_vectors: dict[str, np.ndarray] = {}
    sem_word_vectors: dict[str, np.ndarray] = {}
    for c in range(num_classes):
        for tok in sig_tokens[c]:
            doc_word_vectors[tok] = (
                doc_centroids[c] + word_offset_std * rng.standard_normal(dim)
            ).astype(np.float32)
            sem_word_vectors[tok] = (
                sem_centroids[c] + 0.2 * rng.standard_normal(dim)
            ).astype(np.float32)
    for tok in filler:
        direction = rng.standard_normal(dim)
        doc_word_vectors[tok] = (0.3 * direction / np.linalg.norm(direction)).astype(np.float32)
        sem_dir = rng.standard_normal(dim)
        sem_word_vectors[tok] = (sem_dir / np.linalg.norm(sem_dir)).astype(np.float32)

    documents = []
    doc_vectors: dict[str, np.ndarray] = {}
    for c in range(num_classes):
        for i in range(docs_per_class):
            doc_id = f"d{c:02d}-{i:04d}"
            n_sig = int(rng.integers(8, 13))
            toks = list(rng.choice(sig_tokens[c], size=n_sig))
            toks += list(rng.choice(filler, size=int(rng.integers(3, 7))))
            if rng.random() < cross_token_rate:
                other = int(rng.integers(num_classes))
                toks.append(str(rng.choice(sig_tokens[other])))
            rng.shuffle(toks)
            documents.append(Document(doc_id, " ".join(toks), gold_label=c))
            doc_vectors[doc_id] = (
                doc_centroids[c] + within_std * rng.standard_normal(dim)
            ).astype(np.float32)

    specs = [LabelSpec(c, sig_tokens[c][0]) for c in range(num_classes)]
    store = EmbeddingStore(dim, doc_vectors, doc_word_vectors, sem_word_vectors)
    return ClusterWorld(
        corpus=Corpus(documents),
        specs=specs,
        store=store,
        sig_tokens=sig_tokens,
        within_std=within_std,
        min_centroid_dist=min_dist,
    )


def write_world(world: ClusterWorld, root: Path) -> dict[str, Path]:
    """Serialize a world to the on-disk formats the CLI consumes."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": root / "corpus.jsonl",
        "label_specs": root / "label_specs.jsonl",
        "doc_vectors": root / "docs.wndr",
        "word_vectors": root / "words.wndr",
        "sem_vectors": root / "sem.wndr",
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for doc in world.corpus:
            rec = {"id": doc.id, "text": doc.text}
            if doc.gold_label is not None:
                rec["label"] = doc.gold_label
            fh.write(json.dumps(rec) + "\n")
    with open(paths["label_specs"], "w", encoding="utf-8") as fh:
        for spec in world.specs:
            fh.write(json.dumps({"class_id": spec.class_id, "name": spec.name}) + "\n")
    store = world.store
    write_vectors(paths["doc_vectors"], store.doc_vectors, store.dim)
    write_vectors(paths["word_vectors"], store.doc_word_vectors, store.dim)
    write_vectors(paths["sem_vectors"], store.sem_word_vectors, store.dim)
    return paths


def random_store(rng, n_docs: int, dim: int, n_words: int = 0) -> EmbeddingStore:
    """Unstructured random store for oracle-equivalence tests."""
    doc_vectors = {
        f"doc{i:03d}": rng.standard_normal(dim).astype(np.float32)
        for i in range(n_docs)
    }
    words = {
        f"w{i:02d}": rng.standard_normal(dim).astype(np.float32)
        for i in range(n_words)
    }
    sem = {
        f"w{i:02d}": rng.standard_normal(dim).astype(np.float32)
        for i in range(n_words)
    }
    return EmbeddingStore(dim, doc_vectors, words, sem)
