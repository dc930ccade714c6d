"""Classification metrics and the label-name hard-match diagnostics."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, LabelSpec, tokenize
from .errors import IdSetMismatch

__all__ = [
    "MetricsReport",
    "PilotReport",
    "f1_report",
    "hard_match_pilot",
    "format_metrics_table",
]


@dataclass
class MetricsReport:
    micro_f1: float
    macro_f1: float
    per_class_f1: list[float]
    confusion: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class_f1": self.per_class_f1,
            "confusion": self.confusion,
        }

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class PilotReport:
    precision: float
    coverage: float
    per_class_coverage: list[float]
    precision_defined: bool

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "coverage": self.coverage,
            "per_class_coverage": self.per_class_coverage,
            "precision_defined": self.precision_defined,
        }


def f1_report(
    pred: dict[str, int],
    gold: dict[str, int],
    num_classes: int | None = None,
) -> MetricsReport:
    """Micro/macro F1 and the confusion matrix over a shared id set.

    Rows of the confusion matrix are gold classes, columns predictions.
    Classes with no gold and no predicted documents contribute an F1 of 0
    to the macro average. For single-label predictions micro-F1 equals
    accuracy.
    """
    if set(pred) != set(gold):
        missing = set(gold) ^ set(pred)
        raise IdSetMismatch(f"prediction/gold id sets differ on {len(missing)} id(s)")
    if num_classes is None:
        if not gold:
            raise ValueError("num_classes is required for an empty id set")
        num_classes = max(max(gold.values()), max(pred.values())) + 1
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    for doc_id, g in gold.items():
        conf[g, pred[doc_id]] += 1
    tp = np.diag(conf).astype(np.float64)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    per_class = np.divide(2 * tp, denom, out=np.zeros(num_classes), where=denom > 0)
    n = conf.sum()
    micro = float(tp.sum() / n) if n else 0.0
    return MetricsReport(
        micro_f1=micro,
        macro_f1=float(per_class.mean()) if num_classes else 0.0,
        per_class_f1=[float(v) for v in per_class],
        confusion=conf.tolist(),
    )


def _contains_run(haystack: list[str], needle: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    first = needle[0]
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i] == first and haystack[i:i + len(needle)] == needle:
            return True
    return False


def hard_match_pilot(
    corpus: Corpus,
    specs: list[LabelSpec],
    gold: dict[str, int],
) -> PilotReport:
    """Diagnose how far literal label-name matching gets on this corpus.

    A document matches class c when the tokenized label name occurs as a
    contiguous token run in the tokenized text (a name whose tokens are
    all filtered out matches nothing). Coverage is the fraction of gold
    documents matched by at least one class. Documents matching several
    classes count toward coverage but are excluded from precision, which
    is the fraction of single-match documents whose matched class equals
    the gold label. If no document matches exactly one class, precision
    is reported as 0 with ``precision_defined`` False.
    """
    specs = sorted(specs, key=lambda s: s.class_id)
    name_tokens = {s.class_id: tokenize(s.name) for s in specs}
    n_classes = len(specs)
    matched_any = 0
    single_correct = 0
    single_total = 0
    class_hits = [0] * n_classes
    class_gold = [0] * n_classes
    for doc_id, gold_cls in gold.items():
        doc_tokens = corpus.tokens_of(doc_id)
        matches = [c for c, toks in name_tokens.items() if _contains_run(doc_tokens, toks)]
        if gold_cls < n_classes:
            class_gold[gold_cls] += 1
            if gold_cls in matches:
                class_hits[gold_cls] += 1
        if matches:
            matched_any += 1
        if len(matches) == 1:
            single_total += 1
            if matches[0] == gold_cls:
                single_correct += 1
    n = len(gold)
    coverage = matched_any / n if n else 0.0
    precision_defined = single_total > 0
    precision = single_correct / single_total if precision_defined else 0.0
    per_class = [
        class_hits[c] / class_gold[c] if class_gold[c] else 0.0
        for c in range(n_classes)
    ]
    return PilotReport(
        precision=precision,
        coverage=coverage,
        per_class_coverage=per_class,
        precision_defined=precision_defined,
    )


def format_metrics_table(reports: dict[str, MetricsReport]) -> str:
    """Aligned plain-text table, one row per report."""
    rows = [("stage", "micro_f1", "macro_f1")]
    for name, rep in reports.items():
        rows.append((name, f"{rep.micro_f1:.4f}", f"{rep.macro_f1:.4f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    return "\n".join(lines) + "\n"
