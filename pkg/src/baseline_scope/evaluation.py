"""Per-class metrics and error-analysis reports.

Overall precision/recall/F1 are unweighted (macro) means of the two
per-class values, with the baseline class as the positive class of the
confusion counts. The error report buckets each misclassified reference by
the failure patterns worth inspecting: dataset-style citations, future-work
mentions, shared citation sentences, and table-only mentions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .context import citation_sentence, extract_window, select_primary_mention
from .corpus import PaperDoc
from .features import FeatureVector, extract_feature_vector

CLASSES = ("baseline", "non_baseline")

# Raw (unstemmed, lowercased) context tokens that suggest a dataset citation.
DATASET_TOKENS = frozenset({"dataset", "datasets", "corpus", "corpora"})

ERROR_BUCKETS = ("dataset_suspect", "future_work_suspect", "shared_context_suspect",
                 "table_only_suspect", "other")


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def round2(value: float) -> float:
    """Half-up rounding to 2 decimals, for display only."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[str, dict[str, float]]
    overall: dict[str, float]
    confusion: dict[str, int]

    def to_dict(self) -> dict:
        return {"per_class": self.per_class, "overall": self.overall, "confusion": self.confusion}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{'class':<14} {'precision':>9} {'recall':>9} {'f1':>9}"]
        for cls in CLASSES + ("overall",):
            metrics = self.overall if cls == "overall" else self.per_class[cls]
            lines.append(f"{cls:<14} {round2(metrics['precision']):>9.2f} "
                         f"{round2(metrics['recall']):>9.2f} {round2(metrics['f1']):>9.2f}")
        c = self.confusion
        lines.append(f"confusion: tp={c['tp']} fp={c['fp']} fn={c['fn']} tn={c['tn']}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["class,precision,recall,f1"]
        for cls in CLASSES + ("overall",):
            metrics = self.overall if cls == "overall" else self.per_class[cls]
            lines.append(f"{cls},{metrics['precision']:.6f},{metrics['recall']:.6f},"
                         f"{metrics['f1']:.6f}")
        return "\n".join(lines) + "\n"


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> MetricsReport:
    per_class = {}
    for cls, (tp_c, fp_c, fn_c) in {
        "baseline": (tp, fp, fn),
        "non_baseline": (tn, fn, fp),
    }.items():
        precision = tp_c / (tp_c + fp_c) if tp_c + fp_c else 0.0
        recall = tp_c / (tp_c + fn_c) if tp_c + fn_c else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": _f1(precision, recall)}
    overall = {
        metric: (per_class["baseline"][metric] + per_class["non_baseline"][metric]) / 2
        for metric in ("precision", "recall", "f1")
    }
    return MetricsReport(per_class=per_class, overall=overall,
                         confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn})


def macro_overall(per_class_values: Sequence[tuple[float, float, float]]) -> tuple[float, float, float]:
    """Unweighted mean of per-class (precision, recall, f1) triples."""
    n = len(per_class_values)
    sums = [sum(v[i] for v in per_class_values) for i in range(3)]
    return tuple(s / n for s in sums)  # type: ignore[return-value]


def compute_metrics(gold: Sequence[str], predicted: Sequence[str]) -> MetricsReport:
    """Binary precision/recall/F1 per class plus their macro means."""
    if len(gold) != len(predicted):
        raise ValueError(f"gold and predicted lengths differ: {len(gold)} vs {len(predicted)}")
    if len(gold) == 0:
        raise ValueError("cannot compute metrics over an empty label set")
    for value in (*gold, *predicted):
        if value not in CLASSES:
            raise ValueError(f"unknown label {value!r}")
    tp = sum(1 for g, p in zip(gold, predicted) if g == "baseline" and p == "baseline")
    fp = sum(1 for g, p in zip(gold, predicted) if g == "non_baseline" and p == "baseline")
    fn = sum(1 for g, p in zip(gold, predicted) if g == "baseline" and p == "non_baseline")
    tn = sum(1 for g, p in zip(gold, predicted) if g == "non_baseline" and p == "non_baseline")
    return metrics_from_counts(tp, fp, fn, tn)


# ---------------------------------------------------------------------------
# Error analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorCase:
    paper_id: str
    ref_id: str
    error_type: str  # "false_positive" | "false_negative"
    section: str
    sentence: tuple[str, ...]
    features: FeatureVector
    buckets: tuple[str, ...]


def _error_buckets(doc: PaperDoc, ref_id: str) -> tuple[str, ...]:
    mentions = doc.mentions_of(ref_id)
    buckets = []

    primary = select_primary_mention(doc, ref_id)
    if primary is not None:
        window = extract_window(doc, primary)
        if any(token.lower() in DATASET_TOKENS for token in window.flat_tokens()):
            buckets.append("dataset_suspect")

    if any(doc.sections[m.section_index].category == "conclusion" for m in mentions):
        buckets.append("future_work_suspect")

    if primary is not None:
        spot = (primary.section_index, primary.paragraph_index, primary.sentence_index)
        sharers = {m.ref_id for m in doc.mentions
                   if (m.section_index, m.paragraph_index, m.sentence_index) == spot}
        if len(sharers) >= 2:
            buckets.append("shared_context_suspect")

    if mentions and all(m.in_table for m in mentions):
        buckets.append("table_only_suspect")

    return tuple(buckets) if buckets else ("other",)


def error_report(docs: Sequence[PaperDoc],
                 predictions: Mapping[tuple[str, str], str]) -> list[ErrorCase]:
    """Every misclassified labeled reference, tagged with its failure buckets."""
    cases = []
    for doc in docs:
        for ref in doc.references:
            if ref.label == "unlabeled":
                continue
            key = (doc.paper_id, ref.ref_id)
            if key not in predictions:
                raise ValueError(f"missing prediction for {key}")
            predicted = predictions[key]
            if predicted == ref.label:
                continue
            error_type = "false_positive" if predicted == "baseline" else "false_negative"
            primary = select_primary_mention(doc, ref.ref_id)
            section = (doc.sections[primary.section_index].category if primary else "")
            sentence = citation_sentence(doc, primary) if primary else ()
            cases.append(ErrorCase(
                paper_id=doc.paper_id,
                ref_id=ref.ref_id,
                error_type=error_type,
                section=section,
                sentence=sentence,
                features=extract_feature_vector(doc, ref.ref_id),
                buckets=_error_buckets(doc, ref.ref_id),
            ))
    return cases


def render_error_report_csv(cases: Sequence[ErrorCase]) -> str:
    lines = ["paper_id,ref_id,error_type,section,buckets,sentence,feature_vector"]
    for case in cases:
        sentence = " ".join(case.sentence).replace(",", ";")
        features = "|".join(f"{x:.6g}" for x in case.features.to_array())
        lines.append(f"{case.paper_id},{case.ref_id},{case.error_type},{case.section},"
                     f"{'|'.join(case.buckets)},{sentence},{features}")
    return "\n".join(lines) + "\n"


def render_error_report_text(cases: Sequence[ErrorCase]) -> str:
    if not cases:
        return "no prediction errors\n"
    blocks = []
    for case in cases:
        blocks.append("\n".join([
            f"{case.error_type}: paper={case.paper_id} ref={case.ref_id} section={case.section or '-'}",
            f"  buckets: {', '.join(case.buckets)}",
            f"  sentence: {' '.join(case.sentence) if case.sentence else '(no mention)'}",
            f"  section_counts={list(case.features.section_counts)} in_table={case.features.in_table} "
            f"citation_count_feature={case.features.citation_count_feature:.3f}",
        ]))
    return "\n".join(blocks) + "\n"
