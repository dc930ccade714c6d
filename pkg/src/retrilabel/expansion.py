"""Iterative label-name expansion from retrieved documents.

Each iteration scores candidate words two ways: a class-frequency score
computed over the currently retrieved documents, and a semantic-space
cosine against the label name. The two rankings are fused by summing
reciprocal ranks, the best word is appended to the label name, and the
corpus is re-retrieved with the enriched query.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, LabelSpec, query_text
from .errors import EmptyCandidatePool, InconsistentCounts, NoKnownTokens
from .retrieval import PseudoLabelSet, RetrievalResult, dedup_assign, retrieve_all
from .store import EmbeddingStore, cosine

__all__ = [
    "ClassTermStats",
    "KeywordCandidate",
    "ExpansionResult",
    "local_score",
    "global_score",
    "select_expansion",
    "run_expansion",
]

logger = logging.getLogger(__name__)


@dataclass
class ClassTermStats:
    """Token counts over one class's retrieved documents.

    ``tf`` is the raw token count, ``cnt`` the number of distinct
    retrieved documents containing the token.
    """

    class_id: int
    tf: dict[str, int]
    cnt: dict[str, int]
    total_tokens: int

    @classmethod
    def from_token_lists(cls, class_id: int, docs_tokens: list[list[str]]) -> "ClassTermStats":
        tf: Counter[str] = Counter()
        cnt: Counter[str] = Counter()
        for tokens in docs_tokens:
            tf.update(tokens)
            cnt.update(set(tokens))
        return cls(class_id, dict(tf), dict(cnt), sum(tf.values()))


@dataclass
class KeywordCandidate:
    token: str
    local_score: float
    global_score: float | None
    rank_local: int
    rank_global: int
    fused: float


@dataclass
class ExpansionResult:
    specs: list[LabelSpec]
    labels: PseudoLabelSet
    log: list[dict] = field(default_factory=list)
    final_results: list[RetrievalResult] = field(default_factory=list)


def local_score(
    stats: ClassTermStats,
    global_tf: dict[str, int],
    avg_tokens_per_class: float,
    alpha: float = 1.0,
) -> dict[str, float]:
    """Class-indicativeness of every token occurring in the class.

    score = tf_class^alpha * ln(1 + A / tf_all) * containing_doc_count,
    where tf_all counts the token across all retrieved documents and A is
    the average token count per class. Tokens absent from the class are
    omitted; scores are nonnegative.
    """
    if avg_tokens_per_class <= 0:
        raise ValueError("avg_tokens_per_class must be positive")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    scores: dict[str, float] = {}
    for token, tf_c in stats.tf.items():
        tf_all = global_tf.get(token, 0)
        if tf_all < tf_c:
            raise InconsistentCounts(token)
        scores[token] = (
            tf_c ** alpha
            * math.log(1.0 + avg_tokens_per_class / tf_all)
            * stats.cnt[token]
        )
    return scores


def global_score(
    store: EmbeddingStore,
    candidates: list[str],
    label_name: str,
) -> dict[str, float]:
    """Semantic-space cosine between each candidate word and the label name.

    Candidates without a semantic vector are dropped (their count is
    logged); the label name itself must be embeddable in semantic space.
    """
    try:
        label_vec = store.embed_query(label_name, space="sem")
    except NoKnownTokens:
        raise NoKnownTokens(label_name)
    scores: dict[str, float] = {}
    dropped = 0
    for token in candidates:
        vec = store.sem_word_vectors.get(token)
        if vec is None:
            dropped += 1
            continue
        scores[token] = cosine(vec, label_vec)
    if dropped:
        logger.warning(
            "global_score: dropped %d candidate(s) without semantic vectors for %r",
            dropped, label_name,
        )
    return scores


def _global_sort_key(scores: dict[str, float], token: str) -> tuple:
    g = scores.get(token)
    # Candidates with no semantic vector rank below every scored one.
    return (1, 0.0, token) if g is None else (0, -g, token)


def select_expansion(
    local: dict[str, float],
    global_scores: dict[str, float],
    spec: LabelSpec,
    m: int,
) -> KeywordCandidate:
    """Pick the next expansion word for one class.

    The pool is the top-m tokens by local score minus tokens already in
    the query; both rank lists order the pool by descending score with
    lexicographic ties, and the fused score is 1/rank_local +
    1/rank_global. Fused ties prefer the higher local score, then the
    lexicographically smaller token.
    """
    top_m = [t for t, _ in sorted(local.items(), key=lambda kv: (-kv[1], kv[0]))[:m]]
    excluded = spec.query_tokens()
    pool = [t for t in top_m if t not in excluded]
    if not pool:
        raise EmptyCandidatePool(spec.class_id)
    rank_local = {t: i + 1 for i, t in enumerate(pool)}
    rank_global = {
        t: i + 1
        for i, t in enumerate(sorted(pool, key=lambda t: _global_sort_key(global_scores, t)))
    }
    candidates = [
        KeywordCandidate(
            token=t,
            local_score=local[t],
            global_score=global_scores.get(t),
            rank_local=rank_local[t],
            rank_global=rank_global[t],
            fused=1.0 / rank_local[t] + 1.0 / rank_global[t],
        )
        for t in pool
    ]
    candidates.sort(key=lambda c: (-c.fused, -c.local_score, c.token))
    return candidates[0]


def _iteration_stats(
    corpus: Corpus, results: list[RetrievalResult]
) -> tuple[dict[int, ClassTermStats], dict[str, int], float]:
    """Per-class term stats, union-wide token counts, and the per-class
    average token count, all scoped to the retrieved documents."""
    stats: dict[int, ClassTermStats] = {}
    for result in results:
        docs_tokens = [corpus.tokens_of(doc_id) for doc_id, _ in result.hits]
        stats[result.class_id] = ClassTermStats.from_token_lists(result.class_id, docs_tokens)
    union_ids = {doc_id for result in results for doc_id, _ in result.hits}
    global_tf: Counter[str] = Counter()
    for doc_id in union_ids:
        global_tf.update(corpus.tokens_of(doc_id))
    avg = sum(s.total_tokens for s in stats.values()) / max(len(stats), 1)
    return stats, dict(global_tf), avg


def run_expansion(
    store: EmbeddingStore,
    corpus: Corpus,
    specs: list[LabelSpec],
    k: int = 100,
    m: int = 100,
    iterations: int = 5,
    alpha: float = 1.0,
    initial_results: list[RetrievalResult] | None = None,
) -> ExpansionResult:
    """Grow each label name by one word per iteration and re-retrieve.

    A class whose candidate pool empties out is skipped for that round
    with a warning; the pipeline continues. Returns the expanded specs
    and the pseudo-labels retrieved with the fully expanded queries.
    Input specs are not mutated.
    """
    specs = sorted(specs, key=lambda s: s.class_id)
    current = [LabelSpec(s.class_id, s.name, list(s.expansions)) for s in specs]
    results = initial_results if initial_results is not None else retrieve_all(store, current, k)
    log: list[dict] = []
    for it in range(1, iterations + 1):
        stats, global_tf, avg = _iteration_stats(corpus, results)
        if avg <= 0:
            logger.warning("expansion iteration %d: no tokens in retrieved documents", it)
            continue
        for i, spec in enumerate(current):
            local = local_score(stats[spec.class_id], global_tf, avg, alpha)
            top_m = [t for t, _ in sorted(local.items(), key=lambda kv: (-kv[1], kv[0]))[:m]]
            globals_ = global_score(store, top_m, query_text(spec))
            try:
                chosen = select_expansion(local, globals_, spec, m)
            except EmptyCandidatePool:
                logger.warning(
                    "expansion iteration %d: empty candidate pool for class %d, skipping",
                    it, spec.class_id,
                )
                continue
            current[i] = spec.with_expansion(chosen.token)
            log.append({
                "iter": it,
                "class_id": spec.class_id,
                "token": chosen.token,
                "local": chosen.local_score,
                "global": chosen.global_score,
                "fused": chosen.fused,
            })
        results = retrieve_all(store, current, k)
    return ExpansionResult(
        specs=current,
        labels=dedup_assign(results),
        log=log,
        final_results=results,
    )
