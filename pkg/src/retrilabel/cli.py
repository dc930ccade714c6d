"""Command-line interface for the label-name classification pipeline.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 stage
failure. Failures print a machine-readable JSON object on stderr naming
the stage and the cause.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classifier import load_model, save_model, self_train, train
from .corpus import Corpus, load_label_specs, save_label_specs, tokenize
from .errors import ConfigError, DataError, IdSetMismatch
from .evaluation import f1_report, format_metrics_table, hard_match_pilot
from .expansion import run_expansion
from .pipeline import (
    PipelineConfig,
    StageFailure,
    load_inputs,
    run_pipeline,
    sweep,
)
from .retrieval import PseudoLabelSet, dedup_assign, retrieve_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4

_CONFIG_FLAGS = [
    ("--corpus", str, "corpus", "corpus JSONL file"),
    ("--label-specs", str, "label_specs", "label-spec JSONL file"),
    ("--doc-vectors", str, "doc_vectors", "document vector file (WNDR)"),
    ("--word-vectors", str, "word_vectors", "retrieval-space word vector file (WNDR)"),
    ("--sem-vectors", str, "sem_vectors", "semantic-space word vector file (WNDR)"),
    ("--output-dir", str, "output_dir", "directory for artifacts"),
    ("--k", int, "k", "retrieved documents per class"),
    ("--m", int, "m", "keyword candidates per class"),
    ("--gamma", float, "gamma", "self-training confidence threshold"),
    ("--alpha", float, "alpha", "exponent on the class term frequency"),
    ("--iterations", int, "iterations", "label-name expansion iterations"),
    ("--learning-rate", float, "learning_rate", "classifier learning rate"),
    ("--epochs", int, "epochs", "classifier training epochs"),
    ("--l2", float, "l2", "L2 penalty on classifier weights"),
    ("--batch-size", int, "batch_size", "classifier mini-batch size"),
    ("--max-st-rounds", int, "max_st_rounds", "self-training round cap"),
    ("--stop-frac", float, "stop_frac", "label-change fraction that stops self-training"),
    ("--seed", int, "seed", "random seed"),
    ("--external-embedder", str, "external_embedder",
     "command for a line-protocol query embedder (retrieval space)"),
    ("--external-sem-embedder", str, "external_sem_embedder",
     "command for a line-protocol embedder (semantic space)"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    for flag, typ, dest, help_text in _CONFIG_FLAGS:
        parser.add_argument(flag, type=typ, dest=dest, default=None, help=help_text)
    parser.add_argument(
        "--deterministic-output", dest="deterministic_output",
        action=argparse.BooleanOptionalAction, default=None,
        help="omit timestamps from artifacts so identical runs are byte-identical",
    )


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {dest: getattr(args, dest) for _, _, dest, _ in _CONFIG_FLAGS}
    overrides["deterministic_output"] = args.deterministic_output
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    try:
        return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _fail(stage: str, exc: Exception) -> int:
    cause = exc.cause if isinstance(exc, StageFailure) else exc
    stage = exc.stage if isinstance(exc, StageFailure) else stage
    payload = {"error": {
        "stage": stage,
        "type": type(cause).__name__,
        "message": str(cause),
    }}
    print(json.dumps(payload), file=sys.stderr)
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, (DataError, FileNotFoundError, OSError)):
        return EXIT_DATA
    return EXIT_STAGE


def _out_path(config: PipelineConfig, name: str) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _cmd_ingest(args) -> int:
    config = _build_config(args)
    corpus = Corpus.load(config.corpus)
    specs = load_label_specs(config.label_specs)
    token_counts = [len(tokenize(d.text)) for d in corpus]
    summary = {
        "documents": len(corpus),
        "classes": len(specs),
        "with_gold": len(corpus.gold_labels()),
        "avg_tokens_per_doc": (sum(token_counts) / len(corpus)) if len(corpus) else 0.0,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_retrieve(args) -> int:
    config = _build_config(args)
    corpus, specs, store = load_inputs(config)
    store.require_coverage(corpus)
    labels = dedup_assign(retrieve_all(store, specs, config.k))
    path = Path(args.out) if args.out else _out_path(config, "stage1_pseudo_labels.jsonl")
    path.parent.mkdir(parents=True, exist_ok=True)
    labels.dump_jsonl(path)
    print(json.dumps({"pseudo_labels": str(path), "assigned": len(labels)}))
    return EXIT_OK


def _cmd_expand(args) -> int:
    config = _build_config(args)
    corpus, specs, store = load_inputs(config)
    store.require_coverage(corpus)
    result = run_expansion(
        store, corpus, specs, k=config.k, m=config.m,
        iterations=config.iterations, alpha=config.alpha,
    )
    labels_path = _out_path(config, "stage2_pseudo_labels.jsonl")
    specs_path = _out_path(config, "expanded_label_specs.jsonl")
    log_path = _out_path(config, "expansion_log.jsonl")
    result.labels.dump_jsonl(labels_path)
    save_label_specs(result.specs, specs_path)
    with open(log_path, "w", encoding="utf-8") as fh:
        for row in result.log:
            fh.write(json.dumps(row) + "\n")
    print(json.dumps({
        "pseudo_labels": str(labels_path),
        "expanded_specs": str(specs_path),
        "log": str(log_path),
        "assigned": len(result.labels),
    }))
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _build_config(args)
    corpus, specs, store = load_inputs(config)
    labels_path = args.labels or _out_path(config, "stage2_pseudo_labels.jsonl")
    labels = PseudoLabelSet.load_jsonl(labels_path)
    model = train(store, labels, config.train_config(),
                  seed=config.seed, num_classes=len(specs))
    path = Path(args.out) if args.out else _out_path(config, "model.wndr")
    save_model(model, path)
    print(json.dumps({"model": str(path), "train_size": len(labels)}))
    return EXIT_OK


def _cmd_self_train(args) -> int:
    config = _build_config(args)
    corpus, specs, store = load_inputs(config)
    store.require_coverage(corpus)
    model = load_model(args.model)
    result = self_train(model, store, corpus, config.train_config())
    model_path = Path(args.out) if args.out else _out_path(config, "model_selftrained.wndr")
    report_path = _out_path(config, "self_train_report.jsonl")
    save_model(result.model, model_path)
    result.dump_report(report_path)
    print(json.dumps({
        "model": str(model_path),
        "report": str(report_path),
        "rounds": result.rounds,
        "stopped_early": result.stop_reason,
    }))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _build_config(args)
    corpus, specs, store = load_inputs(config)
    gold = corpus.gold_labels()
    if not gold:
        raise DataError("corpus carries no gold labels to evaluate against")
    if args.labels:
        dumped = PseudoLabelSet.load_jsonl(args.labels).labels()
        extra = set(dumped) - set(gold)
        if extra:
            raise IdSetMismatch(f"{len(extra)} labeled id(s) have no gold label")
        pred = dumped
        gold = {i: gold[i] for i in dumped}
    else:
        from .classifier import predict as predict_ids

        model = load_model(args.model)
        ids = sorted(gold)
        pred = {i: c for i, (c, _) in zip(ids, predict_ids(model, store, ids))}
    report = f1_report(pred, gold, num_classes=len(specs))
    if args.format == "table":
        print(format_metrics_table({"eval": report}), end="")
    else:
        print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_pilot(args) -> int:
    config = _build_config(args)
    corpus = Corpus.load(config.corpus)
    specs = load_label_specs(config.label_specs)
    gold = corpus.gold_labels()
    if not gold:
        raise DataError("corpus carries no gold labels for the pilot diagnostics")
    report = hard_match_pilot(corpus, specs, gold)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = _build_config(args)
    result = run_pipeline(config)
    summary = {
        "run_dir": str(result.run_dir),
        "config_hash": result.config_hash,
        "metrics": {n: {"micro_f1": r.micro_f1, "macro_f1": r.macro_f1}
                    for n, r in result.metrics.items()},
        "warnings": result.warnings,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    typ = int if args.param == "k" else float
    try:
        values = [typ(v) for v in args.values]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc
    rows = sweep(config, args.param, values)
    out = _out_path(config, f"sweep_{args.param}.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    header = (args.param, "macro_f1", "micro_f1", "status")
    lines = [header]
    for row in rows:
        if "error" in row:
            lines.append((str(row["value"]), "-", "-", row["error"]))
        else:
            final = row["metrics"].get("final", {})
            lines.append((
                str(row["value"]),
                f"{final.get('macro_f1', float('nan')):.4f}" if final else "-",
                f"{final.get('micro_f1', float('nan')):.4f}" if final else "-",
                "ok",
            ))
    widths = [max(len(r[i]) for r in lines) for i in range(4)]
    for row in lines:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrilabel",
        description="Classify an unlabeled corpus from class label names alone.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "ingest": (_cmd_ingest, "validate the corpus and label-spec files"),
        "retrieve": (_cmd_retrieve, "stage I: retrieve pseudo-labels with raw label names"),
        "expand": (_cmd_expand, "stage II: expand label names and re-retrieve"),
        "train": (_cmd_train, "train the classifier on a pseudo-label dump"),
        "self-train": (_cmd_self_train, "stage III: refine a model by self-training"),
        "evaluate": (_cmd_evaluate, "score a model or label dump against gold labels"),
        "pilot": (_cmd_pilot, "hard-match precision/coverage diagnostics"),
        "pipeline": (_cmd_pipeline, "run all three stages end to end"),
        "sweep": (_cmd_sweep, "run the pipeline across values of k or gamma"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        p.set_defaults(func=func)
        if name in ("retrieve", "train", "self-train"):
            p.add_argument("--out", default=None, help="output file path")
        if name == "train":
            p.add_argument("--labels", default=None, help="pseudo-label dump to train on")
        if name == "self-train":
            p.add_argument("--model", required=True, help="model file to refine")
        if name == "evaluate":
            group = p.add_mutually_exclusive_group(required=True)
            group.add_argument("--model", help="model file to score")
            group.add_argument("--labels", help="pseudo-label dump to score")
            p.add_argument("--format", choices=("json", "table"), default="json")
        if name == "sweep":
            p.add_argument("--param", choices=("k", "gamma"), required=True)
            p.add_argument("--values", nargs="*", default=[],
                           help="parameter values, one pipeline run each")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except StageFailure as exc:
        return _fail(exc.stage, exc)
    except ConfigError as exc:
        return _fail("config", exc)
    except Exception as exc:
        return _fail(args.command, exc)


if __name__ == "__main__":
    sys.exit(main())
