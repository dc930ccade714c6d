"""Acceptance suite: one test per primary acceptance criterion.

Each criterion prints a ``[ACCEPTANCE] <name>: PASS`` line when it holds
(run with ``pytest -s`` to see them); a failed assertion reports the
criterion through the normal pytest failure line.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from retrilabel.classifier import (
    LinearSoftmaxClassifier,
    TrainConfig,
    cross_entropy_loss_and_grad,
    self_train,
    train,
)
from retrilabel.corpus import Corpus, Document, LabelSpec
from retrilabel.errors import EmptyCandidatePool
from retrilabel.evaluation import f1_report
from retrilabel.expansion import local_score, select_expansion
from retrilabel.pipeline import PipelineConfig, run_pipeline
from retrilabel.retrieval import dedup_assign, retrieve_all, top_k
from retrilabel.store import EmbeddingStore

from oracles import brute_f1, brute_local_scores, brute_top_k
from synth import make_cluster_world, random_store, write_world
from test_classifier import numeric_gradient
from test_expansion import random_mini_corpus, stats_and_inputs

FIXTURES = Path(__file__).parent / "fixtures"


def _report(name: str) -> None:
    print(f"\n[ACCEPTANCE] {name}: PASS")


@pytest.fixture(scope="module")
def e2e_paths(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e_world")
    world = make_cluster_world()  # 4 classes, 250 docs/class, dim 32
    return write_world(world, root), world


def test_retrieval_oracle_equivalence():
    """Exact top_k equals brute-force dot-product argsort on 100 instances."""
    started = time.perf_counter()
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n_docs = int(rng.integers(5, 201))
        dim = int(rng.integers(2, 33))
        store = random_store(rng, n_docs=n_docs, dim=dim)
        query = rng.standard_normal(dim)
        k = int(rng.integers(1, n_docs + 5))
        expected = brute_top_k(
            {key: vec.astype(np.float64).tolist() for key, vec in store.doc_vectors.items()},
            query.tolist(), k,
        )
        got = top_k(store, query, k)
        assert [h[0] for h in got] == [e[0] for e in expected], f"seed {seed}"
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"retrieval oracle sweep took {elapsed:.2f}s"
    _report("retrieval oracle equivalence (100 instances, "
            f"{elapsed:.2f}s)")


def test_local_score_oracle_equivalence():
    """Class term weighting matches the extended-precision recount."""
    # Worked example: class docs ["a b a", "a c"] vs ["b b", "c"].
    class_docs = {1: [["a", "b", "a"], ["a", "c"]], 2: [["b", "b"], ["c"]]}
    stats, global_tf, avg = stats_and_inputs(class_docs)
    got = local_score(stats[1], global_tf, avg, alpha=1.0)
    oracle = brute_local_scores(class_docs, alpha=1.0)
    assert got["a"] == pytest.approx(oracle[1]["a"], rel=1e-9)
    assert got["a"] == pytest.approx(5.0839, abs=2e-4)
    assert got["a"] == pytest.approx(3 * math.log(1 + 4 / 3) * 2, rel=1e-12)

    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        class_docs = random_mini_corpus(rng)
        alpha = float(rng.uniform(0.5, 2.0))
        stats, global_tf, avg = stats_and_inputs(class_docs, alpha)
        oracle = brute_local_scores(class_docs, alpha)
        for cls in class_docs:
            got = local_score(stats[cls], global_tf, avg, alpha)
            assert set(got) == set(oracle[cls])
            for token, value in got.items():
                assert value == pytest.approx(oracle[cls][token], rel=1e-9), (
                    f"seed {seed} class {cls} token {token}"
                )
    _report("class term weighting oracle equivalence (50 corpora + worked example)")


def test_rank_fusion_depends_only_on_ranks():
    """Applying x -> x^3 + 7 to local scores never changes the selection."""
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 15))
        tokens = [f"tok{i:02d}" for i in range(n)]
        local = {t: float(rng.uniform(0, 50)) for t in tokens}
        globals_ = {t: float(rng.uniform(-1, 1)) for t in tokens}
        spec = LabelSpec(0, "labelname")
        m = int(rng.integers(1, n + 3))
        try:
            base = select_expansion(local, globals_, spec, m)
        except EmptyCandidatePool:
            continue
        warped = {t: v**3 + 7 for t, v in local.items()}
        assert select_expansion(warped, globals_, spec, m).token == base.token
        checked += 1
    _report("reciprocal-rank fusion is rank-only (100 candidate sets)")


def test_gradient_matches_finite_differences():
    """Analytic loss gradient vs central differences, 20 random instances."""
    rng = np.random.default_rng(123)
    for trial in range(20):
        n = int(rng.integers(3, 15))
        dim = int(rng.integers(2, 17))
        n_classes = int(rng.integers(2, 6))
        X = rng.standard_normal((n, dim))
        y = rng.integers(0, n_classes, size=n)
        weights = rng.standard_normal((n_classes, dim)) * 0.7
        bias = rng.standard_normal(n_classes) * 0.7
        l2 = float(rng.uniform(0, 0.2))
        _, gw, gb = cross_entropy_loss_and_grad(weights, bias, X, y, l2)
        nw, nb = numeric_gradient(weights, bias, X, y, l2)
        analytic = np.concatenate([gw.ravel(), gb])
        numeric = np.concatenate([nw.ravel(), nb])
        rel = np.linalg.norm(analytic - numeric) / max(
            np.linalg.norm(analytic), np.linalg.norm(numeric)
        )
        assert rel <= 1e-4, f"trial {trial}: relative error {rel:.2e}"
    _report("cross-entropy gradient check (20 instances, rel err <= 1e-4)")


def test_self_training_contract():
    """Hard round cap on adversarial inputs; 1% stop rule on the fixture."""
    # Adversarial: heavily overlapping random data, effectively no stop rule.
    rng = np.random.default_rng(55)
    for trial in range(5):
        n, dim, n_classes = 80, 5, 3
        X = rng.standard_normal((n, dim))
        y = rng.integers(0, n_classes, size=n)
        ids = [f"d{i}" for i in range(n)]
        store = EmbeddingStore(
            dim, {i: row.astype(np.float32) for i, row in zip(ids, X)}, {}, {},
        )
        corpus = Corpus([Document(i, "body text") for i in ids])
        cfg = TrainConfig(gamma=0.34, stop_frac=1e-9, max_st_rounds=6, epochs=25)
        model = LinearSoftmaxClassifier(
            epochs=25, seed=trial, num_classes=n_classes
        ).fit(X, y)
        result = self_train(model, store, corpus, cfg)
        assert result.rounds <= cfg.max_st_rounds

    # Stop rule against the committed fixture: halts at the first round
    # whose label-change fraction dips below 1%, well before the cap.
    fixture = json.loads((FIXTURES / "selftrain_history.json").read_text())
    params = fixture["instance"]
    world = make_cluster_world(
        num_classes=params["num_classes"], docs_per_class=params["docs_per_class"],
        dim=params["dim"], within_std=params["within_std"],
        word_offset_std=params["word_offset_std"], seed=params["seed"],
    )
    labels = dedup_assign(retrieve_all(world.store, world.specs, params["retrieval_k"]))
    cfg = TrainConfig(gamma=params["gamma"], stop_frac=params["stop_frac"],
                      max_st_rounds=params["max_st_rounds"])
    model = train(world.store, labels, cfg, seed=params["train_seed"],
                  num_classes=params["num_classes"])
    result = self_train(model, world.store, world.corpus, cfg)
    assert result.rounds == fixture["rounds"]
    assert result.rounds < cfg.max_st_rounds, "fixture must stop by rule, not cap"
    for got, expected in zip(result.history, fixture["history"]):
        assert got == pytest.approx(expected, abs=5e-3)
    assert all(frac >= cfg.stop_frac for frac in result.history[:-1])
    assert result.history[-1] < cfg.stop_frac
    _report("self-training terminates and stops at the 1% change rule")


def test_synthetic_end_to_end(e2e_paths, tmp_path):
    """Full pipeline at reference defaults reaches Macro-F1 >= 0.95."""
    paths, world = e2e_paths
    started = time.perf_counter()
    config = PipelineConfig(
        corpus=str(paths["corpus"]), label_specs=str(paths["label_specs"]),
        doc_vectors=str(paths["doc_vectors"]), word_vectors=str(paths["word_vectors"]),
        sem_vectors=str(paths["sem_vectors"]), output_dir=str(tmp_path / "run"),
        deterministic_output=True,
    )
    assert (config.k, config.m, config.gamma, config.iterations) == (100, 100, 0.8, 5)
    result = run_pipeline(config)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"end-to-end run took {elapsed:.1f}s"

    macro = {name: rep.macro_f1 for name, rep in result.metrics.items()}
    assert macro["final"] >= 0.95, f"final macro-F1 {macro['final']:.4f}"
    assert macro["stage2"] >= macro["stage1"], (
        f"stage2 {macro['stage2']:.4f} < stage1 {macro['stage1']:.4f}"
    )

    reference = json.loads((FIXTURES / "e2e_reference.json").read_text())
    for stage, expected in reference["metrics"].items():
        assert macro[stage] == pytest.approx(expected["macro_f1"], abs=0.02), stage
    assert (macro["stage2"] - macro["stage1"]) == pytest.approx(
        reference["stage2_minus_stage1_macro"], abs=0.04
    )

    # Expansion words must come from the right cluster's vocabulary.
    final_specs = result.pipeline.specs_
    for spec in final_specs:
        for word in spec.expansions:
            assert word in world.sig_tokens[spec.class_id]
    _report(
        "synthetic end-to-end (final macro-F1 "
        f"{macro['final']:.4f}, stage1 {macro['stage1']:.4f} -> "
        f"stage2 {macro['stage2']:.4f}, {elapsed:.1f}s)"
    )


def test_ablation_identity_and_determinism(e2e_paths, tmp_path):
    """T=0 & no self-training collapses to stage I; runs are byte-identical."""
    paths, _ = e2e_paths
    base = dict(
        corpus=str(paths["corpus"]), label_specs=str(paths["label_specs"]),
        doc_vectors=str(paths["doc_vectors"]), word_vectors=str(paths["word_vectors"]),
        sem_vectors=str(paths["sem_vectors"]), deterministic_output=True,
    )
    ablated = PipelineConfig(
        output_dir=str(tmp_path / "ablate"), iterations=0, max_st_rounds=0, **base,
    )
    result = run_pipeline(ablated)
    run_dir = result.run_dir
    assert (run_dir / "stage1_pseudo_labels.jsonl").read_bytes() == \
        (run_dir / "stage2_pseudo_labels.jsonl").read_bytes()
    assert (run_dir / "model_stage1.wndr").read_bytes() == \
        (run_dir / "model.wndr").read_bytes()
    assert (run_dir / "metrics_stage1.json").read_bytes() == \
        (run_dir / "metrics_final.json").read_bytes()
    assert (run_dir / "expansion_log.jsonl").read_bytes() == b""

    # A stage-I-only computation path must produce the same pseudo-labels.
    corpus = Corpus.load(paths["corpus"])
    from retrilabel.corpus import load_label_specs
    from retrilabel.store import load_store

    specs = load_label_specs(paths["label_specs"])
    store = load_store(paths["doc_vectors"], paths["word_vectors"], paths["sem_vectors"])
    stage1 = dedup_assign(retrieve_all(store, specs, ablated.k))
    standalone = tmp_path / "stage1_only.jsonl"
    stage1.dump_jsonl(standalone)
    assert standalone.read_bytes() == (run_dir / "stage1_pseudo_labels.jsonl").read_bytes()

    # Determinism: identical config/seed, different output roots.
    dirs = []
    for sub in ("detA", "detB"):
        cfg = PipelineConfig(output_dir=str(tmp_path / sub), **base)
        dirs.append(run_pipeline(cfg).run_dir)
    names_a = sorted(p.name for p in dirs[0].iterdir())
    names_b = sorted(p.name for p in dirs[1].iterdir())
    assert names_a == names_b
    for name in names_a:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name
    _report("ablation identity and byte-identical determinism")


def test_eval_oracle_equivalence():
    """Micro/macro F1 vs brute-force confusion counting, 100 random pairs."""
    rng = np.random.default_rng(99)
    for trial in range(100):
        n_classes = int(rng.integers(2, 7))
        n_docs = int(rng.integers(2, 80))
        ids = [f"d{i}" for i in range(n_docs)]
        gold = {i: int(rng.integers(n_classes)) for i in ids}
        pred = {i: int(rng.integers(n_classes)) for i in ids}
        report = f1_report(pred, gold, num_classes=n_classes)
        micro, macro, per_class, confusion = brute_f1(pred, gold, n_classes)
        assert report.micro_f1 == pytest.approx(micro, abs=1e-12), f"trial {trial}"
        assert report.macro_f1 == pytest.approx(macro, abs=1e-12), f"trial {trial}"
        assert report.per_class_f1 == pytest.approx(per_class, abs=1e-12)
        assert report.confusion == confusion
        accuracy = sum(pred[i] == gold[i] for i in ids) / n_docs
        assert report.micro_f1 == accuracy  # exact identity, no tolerance
    _report("evaluation oracle equivalence (100 instances, micro == accuracy)")
