"""Embedding tables, the WNDR vector-file format, and query composition.

The store holds three tables that share one dimension: document vectors
(retrieval space), per-word vectors in the same retrieval space (used to
compose query vectors), and per-word vectors in the semantic space used
for keyword scoring. Vectors are stored as little-endian float32; all
score arithmetic is done in float64.
"""

from __future__ import annotations

import json
import re
import shlex
import struct
import subprocess

import numpy as np

from .corpus import Corpus, tokenize
from .errors import (
    CorruptHeader,
    DimensionMismatch,
    EmbedderFailure,
    MissingDocVector,
    NoKnownTokens,
    NonFiniteVector,
    ZeroNorm,
)

__all__ = [
    "EmbeddingStore",
    "ExternalEmbedder",
    "cosine",
    "load_store",
    "read_vectors",
    "write_vectors",
]

MAGIC = b"WNDR1\n"
_HEADER_RE = re.compile(rb"^dim=(\d+) count=(\d+)$")
_U16_MAX = 0xFFFF


def write_vectors(path, vectors: dict[str, np.ndarray], dim: int) -> None:
    """Write one key->vector table in the WNDR binary format."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"dim={dim} count={len(vectors)}\n".encode("ascii"))
        for key, vec in vectors.items():
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise DimensionMismatch(dim, int(arr.size), context=key)
            kb = key.encode("utf-8")
            if len(kb) > _U16_MAX:
                raise ValueError(f"key too long for WNDR record: {key[:32]!r}...")
            fh.write(struct.pack("<H", len(kb)))
            fh.write(kb)
            fh.write(arr.tobytes())


def read_vectors(path) -> tuple[int, dict[str, np.ndarray]]:
    """Read a WNDR file back into (dim, key->float32 vector)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise CorruptHeader(f"{path}: bad magic bytes")
    nl = data.find(b"\n", len(MAGIC))
    if nl < 0:
        raise CorruptHeader(f"{path}: missing header line")
    m = _HEADER_RE.match(data[len(MAGIC):nl])
    if not m:
        raise CorruptHeader(f"{path}: unparseable header")
    dim, count = int(m.group(1)), int(m.group(2))
    vectors: dict[str, np.ndarray] = {}
    pos = nl + 1
    rec_bytes = 4 * dim
    for _ in range(count):
        if pos + 2 > len(data):
            raise CorruptHeader(f"{path}: truncated record header")
        (klen,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + klen + rec_bytes > len(data):
            raise CorruptHeader(f"{path}: truncated payload")
        key = data[pos:pos + klen].decode("utf-8")
        pos += klen
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).copy()
        pos += rec_bytes
        if not np.all(np.isfinite(vec)):
            raise NonFiniteVector(key)
        vectors[key] = vec
    return dim, vectors


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(a.size, b.size, context="cosine")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < 1e-12 or nb < 1e-12:
        raise ZeroNorm(f"cosine undefined for norms ({na:.3g}, {nb:.3g})")
    return float(np.dot(a, b) / (na * nb))


class ExternalEmbedder:
    """Client for the line-protocol embedder child process.

    The child reads one JSON object {"text": str} per line on stdin and
    writes {"vector": [floats]} per line on stdout, flushed per line.
    A nonzero exit or malformed response raises EmbedderFailure.
    """

    def __init__(self, command: str | list[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise EmbedderFailure(f"cannot start embedder {self.command!r}: {exc}") from exc
        return self._proc

    def embed(self, text: str) -> np.ndarray:
        proc = self._ensure_started()
        try:
            proc.stdin.write(json.dumps({"text": text}, ensure_ascii=False) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise EmbedderFailure(f"embedder pipe failed: {exc}") from exc
        if not line:
            code = proc.wait()
            raise EmbedderFailure(f"embedder exited with status {code} before responding")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EmbedderFailure(f"unparseable embedder response: {line[:80]!r}") from exc
        if "vector" not in resp:
            raise EmbedderFailure(f"embedder error response: {resp}")
        return np.asarray(resp["vector"], dtype=np.float64)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EmbeddingStore:
    """Three dimension-consistent embedding tables, immutable after load."""

    def __init__(
        self,
        dim: int,
        doc_vectors: dict[str, np.ndarray],
        doc_word_vectors: dict[str, np.ndarray],
        sem_word_vectors: dict[str, np.ndarray],
        query_embedder: ExternalEmbedder | None = None,
        sem_embedder: ExternalEmbedder | None = None,
    ):
        self.dim = int(dim)
        self.doc_vectors = {k: self._check(k, v) for k, v in doc_vectors.items()}
        self.doc_word_vectors = {k: self._check(k, v) for k, v in doc_word_vectors.items()}
        self.sem_word_vectors = {k: self._check(k, v) for k, v in sem_word_vectors.items()}
        self.query_embedder = query_embedder
        self.sem_embedder = sem_embedder
        self._doc_ids: list[str] = list(self.doc_vectors)
        self._matrix: np.ndarray | None = None
        self._id_rank: np.ndarray | None = None

    def _check(self, key: str, vec) -> np.ndarray:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(self.dim, int(arr.size), context=key)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteVector(key)
        return arr

    @property
    def doc_ids(self) -> list[str]:
        return self._doc_ids

    def doc_matrix(self) -> np.ndarray:
        """Documents stacked as a float64 (n, dim) matrix, in table order."""
        if self._matrix is None:
            self._matrix = np.stack(
                [self.doc_vectors[i] for i in self._doc_ids]
            ).astype(np.float64) if self._doc_ids else np.zeros((0, self.dim))
        return self._matrix

    def id_rank(self) -> np.ndarray:
        """Rank of each document id under ascending lexicographic order."""
        if self._id_rank is None:
            order = sorted(range(len(self._doc_ids)), key=self._doc_ids.__getitem__)
            rank = np.empty(len(order), dtype=np.int64)
            for r, idx in enumerate(order):
                rank[idx] = r
            self._id_rank = rank
        return self._id_rank

    def require_coverage(self, corpus: Corpus) -> None:
        """Every corpus document must have a vector; raised at bind time."""
        for doc_id in corpus.by_id:
            if doc_id not in self.doc_vectors:
                raise MissingDocVector(doc_id)

    def embed_query(self, query: str, space: str = "doc") -> np.ndarray:
        """Compose a query vector in the requested space.

        Default mode is the unweighted mean of the space's per-word vectors
        over the query's in-vocabulary tokens; if an external embedder is
        attached for the space, the full query text is sent to it instead.
        """
        if space == "doc":
            table, embedder = self.doc_word_vectors, self.query_embedder
        elif space == "sem":
            table, embedder = self.sem_word_vectors, self.sem_embedder
        else:
            raise ValueError(f"unknown embedding space {space!r}")
        if embedder is not None:
            vec = embedder.embed(query)
            if vec.shape != (self.dim,):
                raise DimensionMismatch(self.dim, int(vec.size), context="external embedder")
            return vec
        known = [table[t] for t in tokenize(query) if t in table]
        if not known:
            raise NoKnownTokens(query)
        return np.mean(np.asarray(known, dtype=np.float64), axis=0)


def load_store(
    doc_path,
    word_path,
    sem_path,
    query_embedder: ExternalEmbedder | None = None,
    sem_embedder: ExternalEmbedder | None = None,
) -> EmbeddingStore:
    """Load the three WNDR tables and verify dimension consistency."""
    dim, doc_vectors = read_vectors(doc_path)
    wdim, word_vectors = read_vectors(word_path)
    if wdim != dim:
        raise DimensionMismatch(dim, wdim, context=str(word_path))
    sdim, sem_vectors = read_vectors(sem_path)
    if sdim != dim:
        raise DimensionMismatch(dim, sdim, context=str(sem_path))
    return EmbeddingStore(
        dim, doc_vectors, word_vectors, sem_vectors,
        query_embedder=query_embedder, sem_embedder=sem_embedder,
    )
