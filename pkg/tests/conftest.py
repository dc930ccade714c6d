import numpy as np
import pytest

from retrilabel.corpus import Corpus, Document, LabelSpec
from retrilabel.store import EmbeddingStore

from synth import make_cluster_world


@pytest.fixture(scope="session")
def small_world():
    """Light 4-class cluster world shared by read-only tests."""
    return make_cluster_world(num_classes=4, docs_per_class=40, dim=16, seed=11)


@pytest.fixture()
def toy_store():
    """Hand-built store: 3 axis-aligned docs, dim 4."""
    dim = 4
    doc_vectors = {
        "a": np.eye(dim, dtype=np.float32)[0],
        "b": np.eye(dim, dtype=np.float32)[1],
        "c": np.eye(dim, dtype=np.float32)[2],
    }
    words = {
        "alpha": np.eye(dim, dtype=np.float32)[0],
        "beta": np.eye(dim, dtype=np.float32)[1],
    }
    sem = {
        "alpha": np.eye(dim, dtype=np.float32)[0],
        "beta": np.eye(dim, dtype=np.float32)[1],
    }
    return EmbeddingStore(dim, doc_vectors, words, sem)


@pytest.fixture()
def toy_corpus():
    return Corpus([
        Document("a", "alpha words here", gold_label=0),
        Document("b", "beta words here", gold_label=1),
        Document("c", "gamma words here", gold_label=1),
    ])


@pytest.fixture()
def toy_specs():
    return [LabelSpec(0, "alpha"), LabelSpec(1, "beta")]
