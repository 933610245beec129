"""Naive section-based classifiers and corpus statistics.

The rule classifier marks every reference with at least one mention in a
named section (or in any table) as a baseline. Its per-section precision
and recall, along with year-bucket and section-distribution statistics,
give the non-learned reference points for the corpus.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

from .corpus import SECTION_CATEGORIES, PaperDoc

RULES = SECTION_CATEGORIES + ("table",)

DEFAULT_YEAR_BUCKETS = ((1980, 2000), (2001, 2005), (2006, 2010), (2011, 2015))


def section_rule_classifier(doc: PaperDoc, rule: str) -> dict[str, str]:
    """Predicted label per reference: baseline iff mentioned under the rule."""
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    hits = set()
    for mention in doc.mentions:
        if rule == "table":
            if mention.in_table:
                hits.add(mention.ref_id)
        elif doc.sections[mention.section_index].category == rule:
            hits.add(mention.ref_id)
    return {ref.ref_id: ("baseline" if ref.ref_id in hits else "non_baseline")
            for ref in doc.references}


def rule_precision_recall(docs: Sequence[PaperDoc], rule: str) -> tuple[float, float]:
    """Precision/recall of one naive rule over all labeled references."""
    tp = fp = fn = 0
    for doc in docs:
        predicted = section_rule_classifier(doc, rule)
        for ref in doc.references:
            if ref.label == "unlabeled":
                continue
            hit = predicted[ref.ref_id] == "baseline"
            if hit and ref.label == "baseline":
                tp += 1
            elif hit:
                fp += 1
            elif ref.label == "baseline":
                fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def naive_rule_table(docs: Sequence[PaperDoc]) -> dict[str, tuple[float, float]]:
    """Precision/recall for every section rule plus the table rule."""
    return {rule: rule_precision_recall(docs, rule) for rule in RULES}


def section_distribution(docs: Sequence[PaperDoc]) -> dict[str, dict[str, dict[str, int]]]:
    """Per section: labeled references mentioned there, total and exclusive.

    A reference is exclusive to a section when every one of its mentions
    falls under that single category. Bibliography-only references are not
    counted anywhere.
    """
    table = {
        category: {label: {"total": 0, "exclusive": 0} for label in ("baseline", "non_baseline")}
        for category in SECTION_CATEGORIES
    }
    for doc in docs:
        sections_of: dict[str, set[str]] = {}
        for mention in doc.mentions:
            category = doc.sections[mention.section_index].category
            sections_of.setdefault(mention.ref_id, set()).add(category)
        for ref in doc.references:
            if ref.label == "unlabeled" or ref.ref_id not in sections_of:
                continue
            seen = sections_of[ref.ref_id]
            for category in seen:
                table[category][ref.label]["total"] += 1
                if len(seen) == 1:
                    table[category][ref.label]["exclusive"] += 1
    return table


def corpus_summary(docs: Sequence[PaperDoc]) -> dict[str, int]:
    labels = Counter(ref.label for doc in docs for ref in doc.references)
    return {
        "papers": len(docs),
        "references": sum(len(doc.references) for doc in docs),
        "baselines": labels["baseline"],
        "non_baselines": labels["non_baseline"],
        "unlabeled": labels["unlabeled"],
    }


def corpus_stats(docs: Sequence[PaperDoc],
                 year_buckets: Sequence[tuple[int, int]] = DEFAULT_YEAR_BUCKETS,
                 ) -> tuple[list[dict], list[str]]:
    """Year-bucketed corpus statistics plus the papers no bucket covers.

    Buckets are inclusive (lo, hi) year ranges and must not overlap.
    """
    buckets = [tuple(b) for b in year_buckets]
    for i, (lo, hi) in enumerate(buckets):
        if lo > hi:
            raise ValueError(f"bucket {buckets[i]} has lo > hi")
        for lo2, hi2 in buckets[i + 1:]:
            if lo <= hi2 and lo2 <= hi:
                raise ValueError(f"year buckets {(lo, hi)} and {(lo2, hi2)} overlap")

    rows = []
    covered: set[str] = set()
    for lo, hi in buckets:
        members = [doc for doc in docs if lo <= doc.year <= hi]
        covered.update(doc.paper_id for doc in members)
        papers = len(members)
        references = sum(len(doc.references) for doc in members)
        baselines = sum(1 for doc in members for ref in doc.references if ref.label == "baseline")
        rows.append({
            "bucket": (lo, hi),
            "papers": papers,
            "references": references,
            "baselines": baselines,
            "mean_references_per_paper": references / papers if papers else 0.0,
            "mean_baselines_per_paper": baselines / papers if papers else 0.0,
        })
    excluded = [doc.paper_id for doc in docs if doc.paper_id not in covered]
    return rows, excluded


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_stats_csv(rows: Sequence[dict]) -> str:
    lines = ["bucket,papers,references,baselines,mean_references_per_paper,mean_baselines_per_paper"]
    for row in rows:
        lo, hi = row["bucket"]
        lines.append(f"{lo}-{hi},{row['papers']},{row['references']},{row['baselines']},"
                     f"{row['mean_references_per_paper']:.2f},{row['mean_baselines_per_paper']:.2f}")
    return "\n".join(lines) + "\n"


def render_distribution_csv(table: dict) -> str:
    lines = ["section,baseline_total,baseline_exclusive,non_baseline_total,non_baseline_exclusive"]
    for category in SECTION_CATEGORIES:
        cell = table[category]
        lines.append(f"{category},{cell['baseline']['total']},{cell['baseline']['exclusive']},"
                     f"{cell['non_baseline']['total']},{cell['non_baseline']['exclusive']}")
    return "\n".join(lines) + "\n"


def render_rule_table_csv(rules: dict[str, tuple[float, float]]) -> str:
    lines = ["rule,precision,recall"]
    for rule in RULES:
        precision, recall = rules[rule]
        lines.append(f"{rule},{precision:.3f},{recall:.3f}")
    return "\n".join(lines) + "\n"


def render_summary_csv(summary: dict[str, int]) -> str:
    keys = ("papers", "references", "baselines", "non_baselines", "unlabeled")
    return (",".join(keys) + "\n" + ",".join(str(summary[k]) for k in keys) + "\n")


def render_text_table(csv_text: str) -> str:
    """Align a small CSV into a fixed-width table for terminal reading."""
    rows = [line.split(",") for line in csv_text.strip().splitlines()]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
