"""End-to-end orchestration: retrieve, expand, train, self-train, report."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from sklearn.base import BaseEstimator

from .classifier import (
    TrainConfig,
    predict as predict_ids,
    save_model,
    self_train,
    train,
)
from .corpus import Corpus, LabelSpec, load_label_specs, save_label_specs
from .errors import ConfigError, RetrilabelError
from .evaluation import MetricsReport, f1_report, format_metrics_table
from .expansion import run_expansion
from .retrieval import dedup_assign, retrieve_all
from .store import EmbeddingStore, ExternalEmbedder, load_store

__all__ = [
    "PipelineConfig",
    "LabelNamePipeline",
    "PipelineResult",
    "StageFailure",
    "run_pipeline",
    "sweep",
]


class StageFailure(RetrilabelError):
    """Wraps the underlying error together with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass
class PipelineConfig:
    """Everything one run needs: input paths, outputs, and hyperparameters.

    Defaults follow the reference settings: k=100 retrieved documents and
    m=100 keyword candidates per class, confidence threshold gamma=0.8,
    five expansion iterations, and a 1% label-change stopping fraction.
    """

    corpus: str = ""
    label_specs: str = ""
    doc_vectors: str = ""
    word_vectors: str = ""
    sem_vectors: str = ""
    output_dir: str = "runs"
    k: int = 100
    m: int = 100
    gamma: float = 0.8
    alpha: float = 1.0
    iterations: int = 5
    learning_rate: float = 0.5
    epochs: int = 100
    l2: float = 1e-4
    batch_size: int = 32
    max_st_rounds: int = 10
    stop_frac: float = 0.01
    seed: int = 0
    external_embedder: str | None = None
    external_sem_embedder: str | None = None
    deterministic_output: bool = False

    def __post_init__(self):
        if self.k < 0 or self.m < 0 or self.iterations < 0:
            raise ConfigError("k, m, and iterations must be nonnegative")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, l2=self.l2,
            batch_size=self.batch_size, gamma=self.gamma,
            max_st_rounds=self.max_st_rounds, stop_frac=self.stop_frac,
        )

    def canonical_dict(self) -> dict:
        """Config content that identifies a run (output location excluded)."""
        data = dataclasses.asdict(self)
        data.pop("output_dir")
        data.pop("deterministic_output")
        return data

    def content_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


class LabelNamePipeline(BaseEstimator):
    """Estimator-style wrapper over the three-stage training scheme.

    fit() consumes a corpus, an embedding store, and the label specs;
    predict() labels documents with the final classifier. Hyperparameters
    are constructor arguments so the pipeline composes with get_params /
    set_params tooling (used by the sweep harness).
    """

    def __init__(self, k=100, m=100, gamma=0.8, alpha=1.0, iterations=5,
                 learning_rate=0.5, epochs=100, l2=1e-4, batch_size=32,
                 max_st_rounds=10, stop_frac=0.01, seed=0):
        self.k = k
        self.m = m
        self.gamma = gamma
        self.alpha = alpha
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.batch_size = batch_size
        self.max_st_rounds = max_st_rounds
        self.stop_frac = stop_frac
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, l2=self.l2,
            batch_size=self.batch_size, gamma=self.gamma,
            max_st_rounds=self.max_st_rounds, stop_frac=self.stop_frac,
        )

    def fit(self, corpus: Corpus, store: EmbeddingStore, specs: list[LabelSpec]):
        cfg = self._train_config()
        num_classes = len(specs)

        try:
            store.require_coverage(corpus)
        except Exception as exc:
            raise StageFailure("embed-store", exc) from exc

        try:
            stage1_results = retrieve_all(store, specs, self.k)
            self.stage1_labels_ = dedup_assign(stage1_results)
            self.model1_ = train(store, self.stage1_labels_, cfg,
                                 seed=self.seed, num_classes=num_classes)
        except StageFailure:
            raise
        except Exception as exc:
            raise StageFailure("retrieval", exc) from exc

        try:
            self.expansion_ = run_expansion(
                store, corpus, specs, k=self.k, m=self.m,
                iterations=self.iterations, alpha=self.alpha,
                initial_results=stage1_results,
            )
            self.specs_ = self.expansion_.specs
            self.stage2_labels_ = self.expansion_.labels
            self.model2_ = train(store, self.stage2_labels_, cfg,
                                 seed=self.seed, num_classes=num_classes)
        except Exception as exc:
            raise StageFailure("expansion", exc) from exc

        try:
            self.selftrain_ = self_train(self.model2_, store, corpus, cfg)
            self.final_model_ = self.selftrain_.model
        except Exception as exc:
            raise StageFailure("self-train", exc) from exc

        self.num_classes_ = num_classes
        self.corpus_ = corpus
        self.store_ = store
        gold = corpus.gold_labels()
        try:
            self.metrics_ = self._stage_metrics(gold) if gold else {}
        except Exception as exc:
            raise StageFailure("eval", exc) from exc
        return self

    def _stage_metrics(self, gold: dict[str, int]) -> dict[str, MetricsReport]:
        ids = sorted(gold)
        stages = (
            ("stage1", self.model1_), ("stage2", self.model2_), ("final", self.final_model_),
        )
        reports = {}
        for name, model in stages:
            pred = {i: c for i, (c, _) in zip(ids, predict_ids(model, self.store_, ids))}
            reports[name] = f1_report(pred, gold, num_classes=self.num_classes_)
        return reports

    def predict(self, ids: list[str] | None = None) -> dict[str, int]:
        if ids is None:
            ids = self.corpus_.ids
        return {i: c for i, (c, _) in zip(ids, predict_ids(self.final_model_, self.store_, ids))}


@dataclass
class PipelineResult:
    run_dir: Path
    config_hash: str
    metrics: dict[str, MetricsReport] = field(default_factory=dict)
    pipeline: LabelNamePipeline | None = None
    warnings: list[str] = field(default_factory=list)


def load_inputs(config: PipelineConfig) -> tuple[Corpus, list[LabelSpec], EmbeddingStore]:
    """Load the corpus, label specs, and embedding store named by a config."""
    try:
        corpus = Corpus.load(config.corpus)
        specs = load_label_specs(config.label_specs)
    except Exception as exc:
        raise StageFailure("corpus", exc) from exc
    try:
        store = load_store(
            config.doc_vectors, config.word_vectors, config.sem_vectors,
            query_embedder=(ExternalEmbedder(config.external_embedder)
                            if config.external_embedder else None),
            sem_embedder=(ExternalEmbedder(config.external_sem_embedder)
                          if config.external_sem_embedder else None),
        )
    except Exception as exc:
        raise StageFailure("embed-store", exc) from exc
    return corpus, specs, store


def _write_artifacts(run_dir: Path, config: PipelineConfig,
                     pipe: LabelNamePipeline) -> list[str]:
    warnings: list[str] = []
    pipe.stage1_labels_.dump_jsonl(run_dir / "stage1_pseudo_labels.jsonl")
    save_model(pipe.model1_, run_dir / "model_stage1.wndr")

    pipe.stage2_labels_.dump_jsonl(run_dir / "stage2_pseudo_labels.jsonl")
    save_label_specs(pipe.specs_, run_dir / "expanded_label_specs.jsonl")
    with open(run_dir / "expansion_log.jsonl", "w", encoding="utf-8") as fh:
        for row in pipe.expansion_.log:
            fh.write(json.dumps(row) + "\n")
    save_model(pipe.model2_, run_dir / "model_stage2.wndr")

    pipe.selftrain_.dump_report(run_dir / "self_train_report.jsonl")
    save_model(pipe.final_model_, run_dir / "model.wndr")
    if pipe.selftrain_.no_confident_stop:
        warnings.append("self-training stopped: no confident examples")

    for name, report in pipe.metrics_.items():
        report.dump_json(run_dir / f"metrics_{name}.json")
    if pipe.metrics_:
        with open(run_dir / "metrics.txt", "w", encoding="utf-8") as fh:
            fh.write(format_metrics_table(pipe.metrics_))

    manifest = {"config": config.canonical_dict(), "config_hash": config.content_hash()}
    if not config.deterministic_output:
        manifest["created_unix"] = time.time()
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return warnings


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run all three stages and write every artifact under the run dir.

    The run directory is named by a hash of the configuration content so
    distinct configurations never overwrite each other.
    """
    corpus, specs, store = load_inputs(config)
    pipe = LabelNamePipeline(
        k=config.k, m=config.m, gamma=config.gamma, alpha=config.alpha,
        iterations=config.iterations, learning_rate=config.learning_rate,
        epochs=config.epochs, l2=config.l2, batch_size=config.batch_size,
        max_st_rounds=config.max_st_rounds, stop_frac=config.stop_frac,
        seed=config.seed,
    )
    pipe.fit(corpus, store, specs)
    run_dir = Path(config.output_dir) / f"run-{config.content_hash()}"
    run_dir.mkdir(parents=True, exist_ok=True)
    warnings = _write_artifacts(run_dir, config, pipe)
    return PipelineResult(
        run_dir=run_dir, config_hash=config.content_hash(),
        metrics=pipe.metrics_, pipeline=pipe, warnings=warnings,
    )


def sweep(config: PipelineConfig, param: str, values: list) -> list[dict]:
    """Run the full pipeline once per parameter value, same seed.

    Failures for individual values are recorded and the sweep continues.
    Returns one row per value with the per-stage metrics or the error.
    """
    if param not in ("k", "gamma"):
        raise ConfigError(f"sweep parameter must be 'k' or 'gamma', got {param!r}")
    rows = []
    for value in values:
        try:
            cfg = dataclasses.replace(config, **{param: value})
            result = run_pipeline(cfg)
            rows.append({
                "param": param,
                "value": value,
                "run_dir": str(result.run_dir),
                "metrics": {n: r.to_dict() for n, r in result.metrics.items()},
            })
        except Exception as exc:
            rows.append({
                "param": param,
                "value": value,
                "error": f"{type(exc).__name__}: {exc}",
            })
    return rows
