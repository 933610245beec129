"""Document model, corpus I/O, paper filtering, splits, and agreement stats.

A corpus on disk is a directory with one JSON file per paper plus a
``manifest.json`` naming the paper files and the schema version. Papers
arrive pre-sentence-split and pre-tokenized; this package does not extract
text from PDFs.
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

SECTION_CATEGORIES = ("introduction", "related", "methods_results", "conclusion", "other")
LABELS = ("baseline", "non_baseline", "unlabeled")
SPLIT_TAGS = ("train", "dev", "test", "unassigned")

SCHEMA_VERSION = "baseline-corpus/1"
MANIFEST_NAME = "manifest.json"

# Papers whose title or venue contains one of these (case-insensitive
# substring match) are dropped: they rarely contain rigorous comparative
# evaluation. Matching is deliberately coarse and pinned by tests.
FILTER_KEYWORDS = (
    "short papers",
    "workshop",
    "demo",
    "tutorial",
    "poster",
    "project notes",
    "shared task",
    "doctoral consortium",
    "companion volume",
    "interactive presentation",
)

YEAR_MIN = 1900
YEAR_MAX = 2100


class CorpusError(Exception):
    """Base class for corpus loading/validation failures."""


class CorpusFormatError(CorpusError):
    """A paper record violates the corpus schema."""

    def __init__(self, paper_id: str, fieldname: str, message: str):
        self.paper_id = paper_id
        self.fieldname = fieldname
        super().__init__(f"paper {paper_id!r}, field {fieldname!r}: {message}")


class CorpusIntegrityError(CorpusError):
    """Cross-record consistency violation (dangling ids, bad indices, ...)."""


@dataclass(frozen=True)
class Reference:
    ref_id: str
    raw_string: str = ""
    cited_title: str = ""
    cited_year: int | None = None
    citation_count: int | None = None
    label: str = "unlabeled"


@dataclass(frozen=True)
class CitationMention:
    ref_id: str
    section_index: int
    paragraph_index: int
    sentence_index: int
    token_offset: int
    in_table: bool = False


@dataclass(frozen=True)
class Section:
    heading: str
    category: str
    # paragraphs -> sentences -> tokens
    paragraphs: tuple[tuple[tuple[str, ...], ...], ...]
    table_regions: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class PaperDoc:
    paper_id: str
    title: tuple[str, ...]
    abstract: tuple[str, ...]
    venue: str
    year: int
    sections: tuple[Section, ...]
    references: tuple[Reference, ...]
    mentions: tuple[CitationMention, ...]
    split_tag: str = "unassigned"

    def reference(self, ref_id: str) -> Reference:
        for ref in self.references:
            if ref.ref_id == ref_id:
                return ref
        raise CorpusIntegrityError(f"paper {self.paper_id!r}: unknown ref_id {ref_id!r}")

    def mentions_of(self, ref_id: str) -> list[CitationMention]:
        return [m for m in self.mentions if m.ref_id == ref_id]

    def sentence_at(self, mention: CitationMention) -> tuple[str, ...]:
        section = self.sections[mention.section_index]
        return section.paragraphs[mention.paragraph_index][mention.sentence_index]


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.70, 0.10, 0.20)
    seed: int = 0
    unit: str = "by_paper"

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise ValueError("split ratios must be nonnegative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(self.ratios)}")
        if self.unit != "by_paper":
            raise ValueError(f"unsupported split unit {self.unit!r}")


# ---------------------------------------------------------------------------
# Validation and (de)serialization
# ---------------------------------------------------------------------------


def _require(record: dict, key: str, types, paper_id: str, ctx: str = ""):
    name = f"{ctx}{key}" if ctx else key
    if key not in record:
        raise CorpusFormatError(paper_id, name, "missing")
    value = record[key]
    if not isinstance(value, types):
        raise CorpusFormatError(paper_id, name, f"expected {types}, got {type(value).__name__}")
    return value


def _token_seq(value, paper_id: str, fieldname: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise CorpusFormatError(paper_id, fieldname, "expected a list of token strings")
    return tuple(value)


def record_to_doc(record: dict) -> PaperDoc:
    """Build a validated PaperDoc from a parsed JSON record."""
    if not isinstance(record, dict):
        raise CorpusFormatError("<unknown>", "<root>", "paper record must be an object")
    paper_id = record.get("paper_id")
    if not isinstance(paper_id, str) or not paper_id:
        raise CorpusFormatError("<unknown>", "paper_id", "missing or not a string")

    title = _token_seq(_require(record, "title", list, paper_id), paper_id, "title")
    abstract = _token_seq(_require(record, "abstract", list, paper_id), paper_id, "abstract")
    venue = _require(record, "venue", str, paper_id)
    year = _require(record, "year", int, paper_id)
    if isinstance(year, bool) or not (YEAR_MIN <= year <= YEAR_MAX):
        raise CorpusFormatError(paper_id, "year", f"must be an integer in [{YEAR_MIN}, {YEAR_MAX}]")

    sections = []
    for si, sec in enumerate(_require(record, "sections", list, paper_id)):
        ctx = f"sections[{si}]."
        heading = _require(sec, "heading", str, paper_id, ctx)
        paragraphs = []
        for pi, para in enumerate(_require(sec, "paragraphs", list, paper_id, ctx)):
            if not isinstance(para, list):
                raise CorpusFormatError(paper_id, f"{ctx}paragraphs[{pi}]", "expected a list of sentences")
            paragraphs.append(tuple(
                _token_seq(sent, paper_id, f"{ctx}paragraphs[{pi}][{qi}]") for qi, sent in enumerate(para)
            ))
        category = sec.get("category")
        if category is None:
            from .sectionmap import categorize_heading

            category = categorize_heading(heading)
        elif category not in SECTION_CATEGORIES:
            raise CorpusFormatError(paper_id, f"{ctx}category", f"unknown category {category!r}")
        regions = []
        for ri, region in enumerate(sec.get("table_regions", [])):
            if (not isinstance(region, list) or len(region) != 2
                    or not all(isinstance(x, int) for x in region)):
                raise CorpusFormatError(paper_id, f"{ctx}table_regions[{ri}]", "expected [paragraph, sentence] pair")
            pi, qi = region
            if not (0 <= pi < len(paragraphs)) or not (0 <= qi < len(paragraphs[pi])):
                raise CorpusIntegrityError(
                    f"paper {paper_id!r}: table_region {region} in section {si} "
                    "does not address an existing sentence")
            regions.append((pi, qi))
        sections.append(Section(heading=heading, category=category,
                                paragraphs=tuple(paragraphs), table_regions=tuple(regions)))

    references = []
    seen_ids: set[str] = set()
    for ri, ref in enumerate(_require(record, "references", list, paper_id)):
        ctx = f"references[{ri}]."
        ref_id = _require(ref, "ref_id", str, paper_id, ctx)
        if ref_id in seen_ids:
            raise CorpusIntegrityError(f"paper {paper_id!r}: duplicate ref_id {ref_id!r}")
        seen_ids.add(ref_id)
        cited_year = ref.get("cited_year")
        if cited_year is not None and not isinstance(cited_year, int):
            raise CorpusFormatError(paper_id, f"{ctx}cited_year", "expected integer or null")
        count = ref.get("citation_count")
        if count is not None and (not isinstance(count, int) or count < 0):
            raise CorpusFormatError(paper_id, f"{ctx}citation_count", "expected nonnegative integer or null")
        label = ref.get("label", "unlabeled")
        if label not in LABELS:
            raise CorpusFormatError(paper_id, f"{ctx}label", f"unknown label {label!r}")
        references.append(Reference(
            ref_id=ref_id,
            raw_string=ref.get("raw_string", ""),
            cited_title=ref.get("cited_title", ""),
            cited_year=cited_year,
            citation_count=count,
            label=label,
        ))

    mentions = []
    for mi, men in enumerate(_require(record, "mentions", list, paper_id)):
        ctx = f"mentions[{mi}]."
        ref_id = _require(men, "ref_id", str, paper_id, ctx)
        if ref_id not in seen_ids:
            raise CorpusIntegrityError(
                f"paper {paper_id!r}: mention {mi} references unknown ref_id {ref_id!r}")
        si = _require(men, "section_index", int, paper_id, ctx)
        pi = _require(men, "paragraph_index", int, paper_id, ctx)
        qi = _require(men, "sentence_index", int, paper_id, ctx)
        off = _require(men, "token_offset", int, paper_id, ctx)
        if not (0 <= si < len(sections)):
            raise CorpusIntegrityError(f"paper {paper_id!r}: mention {mi} section_index out of range")
        section = sections[si]
        if not (0 <= pi < len(section.paragraphs)) or not (0 <= qi < len(section.paragraphs[pi])):
            raise CorpusIntegrityError(f"paper {paper_id!r}: mention {mi} paragraph/sentence out of range")
        sentence = section.paragraphs[pi][qi]
        if not (0 <= off < len(sentence)):
            raise CorpusIntegrityError(
                f"paper {paper_id!r}: mention {mi} token_offset {off} beyond sentence length {len(sentence)}")
        in_table = men.get("in_table", False)
        if not isinstance(in_table, bool):
            raise CorpusFormatError(paper_id, f"{ctx}in_table", "expected boolean")
        if in_table != ((pi, qi) in section.table_regions):
            raise CorpusIntegrityError(
                f"paper {paper_id!r}: mention {mi} in_table flag inconsistent with table_regions")
        mentions.append(CitationMention(ref_id=ref_id, section_index=si, paragraph_index=pi,
                                        sentence_index=qi, token_offset=off, in_table=in_table))

    labels_set = {r.label for r in references}
    if "unlabeled" in labels_set and labels_set != {"unlabeled"}:
        raise CorpusIntegrityError(
            f"paper {paper_id!r}: annotated papers must label every reference")

    split_tag = record.get("split_tag", "unassigned")
    if split_tag not in SPLIT_TAGS:
        raise CorpusFormatError(paper_id, "split_tag", f"unknown split tag {split_tag!r}")

    return PaperDoc(paper_id=paper_id, title=title, abstract=abstract, venue=venue, year=year,
                    sections=tuple(sections), references=tuple(references),
                    mentions=tuple(mentions), split_tag=split_tag)


def doc_to_record(doc: PaperDoc) -> dict:
    return {
        "paper_id": doc.paper_id,
        "title": list(doc.title),
        "abstract": list(doc.abstract),
        "venue": doc.venue,
        "year": doc.year,
        "sections": [
            {
                "heading": s.heading,
                "category": s.category,
                "paragraphs": [[list(sent) for sent in para] for para in s.paragraphs],
                "table_regions": [list(r) for r in s.table_regions],
            }
            for s in doc.sections
        ],
        "references": [
            {
                "ref_id": r.ref_id,
                "raw_string": r.raw_string,
                "cited_title": r.cited_title,
                "cited_year": r.cited_year,
                "citation_count": r.citation_count,
                "label": r.label,
            }
            for r in doc.references
        ],
        "mentions": [
            {
                "ref_id": m.ref_id,
                "section_index": m.section_index,
                "paragraph_index": m.paragraph_index,
                "sentence_index": m.sentence_index,
                "token_offset": m.token_offset,
                "in_table": m.in_table,
            }
            for m in doc.mentions
        ],
        "split_tag": doc.split_tag,
    }


def _dump_json(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def corpus_paper_paths(path: str | Path) -> list[Path]:
    """Paper files of a corpus directory, from the manifest when present."""
    root = Path(path)
    if not root.exists():
        raise CorpusError(f"corpus path {root} does not exist")
    manifest = root / MANIFEST_NAME
    if manifest.exists():
        try:
            data = json.loads(manifest.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorpusError(f"unreadable manifest {manifest}: {exc}") from exc
        version = data.get("schema")
        if version != SCHEMA_VERSION:
            raise CorpusError(f"unsupported corpus schema {version!r} (expected {SCHEMA_VERSION!r})")
        return [root / name for name in data.get("papers", [])]
    return sorted(p for p in root.glob("*.json") if p.name != MANIFEST_NAME)


def load_paper(path: str | Path) -> PaperDoc:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"unreadable paper file {path}: {exc}") from exc
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(Path(path).name, "<json>", str(exc)) from exc
    return record_to_doc(record)


def load_corpus(path: str | Path) -> list[PaperDoc]:
    """Load every paper of a corpus directory; abort on the first invalid one."""
    docs = []
    seen: set[str] = set()
    for paper_path in corpus_paper_paths(path):
        doc = load_paper(paper_path)
        if doc.paper_id in seen:
            raise CorpusIntegrityError(f"duplicate paper_id {doc.paper_id!r} in corpus")
        seen.add(doc.paper_id)
        docs.append(doc)
    return docs


def write_corpus(docs: Sequence[PaperDoc], path: str | Path) -> Path:
    """Write one JSON file per paper plus a manifest; returns the manifest path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    names = []
    for doc in docs:
        name = f"{doc.paper_id}.json"
        (root / name).write_text(_dump_json(doc_to_record(doc)), encoding="utf-8")
        names.append(name)
    manifest = root / MANIFEST_NAME
    manifest.write_text(_dump_json({"schema": SCHEMA_VERSION, "papers": names}), encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# Annotation overlay
# ---------------------------------------------------------------------------


def load_annotations(path: str | Path) -> list[tuple[str, str, str]]:
    """Read (paper_id, ref_id, label) triples, one tab-separated per line."""
    triples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusFormatError("<overlay>", f"line {lineno}", "expected paper_id<TAB>ref_id<TAB>label")
        paper_id, ref_id, label = parts
        if label not in ("baseline", "non_baseline"):
            raise CorpusFormatError(paper_id, f"line {lineno}", f"unknown label {label!r}")
        triples.append((paper_id, ref_id, label))
    return triples


def apply_annotations(docs: Sequence[PaperDoc], triples: Iterable[tuple[str, str, str]]) -> list[PaperDoc]:
    by_paper: dict[str, dict[str, str]] = {}
    for paper_id, ref_id, label in triples:
        by_paper.setdefault(paper_id, {})[ref_id] = label
    known = {d.paper_id for d in docs}
    for paper_id in by_paper:
        if paper_id not in known:
            raise CorpusIntegrityError(f"annotation overlay names unknown paper {paper_id!r}")
    out = []
    for doc in docs:
        overlay = by_paper.get(doc.paper_id)
        if not overlay:
            out.append(doc)
            continue
        ref_ids = {r.ref_id for r in doc.references}
        for ref_id in overlay:
            if ref_id not in ref_ids:
                raise CorpusIntegrityError(
                    f"annotation overlay names unknown ref {ref_id!r} in paper {doc.paper_id!r}")
        refs = tuple(
            dataclasses.replace(r, label=overlay.get(r.ref_id, r.label)) for r in doc.references
        )
        out.append(dataclasses.replace(doc, references=refs))
    return out


# ---------------------------------------------------------------------------
# Paper-type filter
# ---------------------------------------------------------------------------


def banned_keyword(doc: PaperDoc) -> str | None:
    """First filter keyword found in the paper's title or venue, if any."""
    haystack = " ".join(doc.title).lower() + "\n" + doc.venue.lower()
    for keyword in FILTER_KEYWORDS:
        if keyword in haystack:
            return keyword
    return None


def filter_papers(docs: Sequence[PaperDoc]) -> tuple[list[PaperDoc], list[PaperDoc]]:
    """Partition papers into (kept, discarded) by the title/venue keyword rule."""
    kept, discarded = [], []
    for doc in docs:
        (discarded if banned_keyword(doc) else kept).append(doc)
    return kept, discarded


# ---------------------------------------------------------------------------
# Dataset splits
# ---------------------------------------------------------------------------


def split_counts(n: int, ratios: Sequence[float]) -> list[int]:
    """Apportion n items to the ratios by largest remainder."""
    raw = [n * r for r in ratios]
    counts = [int(x) for x in raw]
    remainders = [x - c for x, c in zip(raw, counts)]
    for i in sorted(range(len(ratios)), key=lambda i: (-remainders[i], i))[: n - sum(counts)]:
        counts[i] += 1
    return counts


def assign_splits(docs: Sequence[PaperDoc], spec: SplitSpec) -> list[PaperDoc]:
    """Assign whole papers to train/dev/test, deterministically under the seed."""
    if len(docs) < 3:
        raise ValueError(f"need at least 3 papers to split, got {len(docs)}")
    for doc in docs:
        if doc.split_tag != "unassigned":
            raise ValueError(f"paper {doc.paper_id!r} already assigned to {doc.split_tag!r}")
    order = sorted(range(len(docs)), key=lambda i: docs[i].paper_id)
    random.Random(spec.seed).shuffle(order)
    counts = split_counts(len(docs), spec.ratios)
    tags = [""] * len(docs)
    cursor = 0
    for tag, count in zip(("train", "dev", "test"), counts):
        for i in order[cursor:cursor + count]:
            tags[i] = tag
        cursor += count
    return [dataclasses.replace(doc, split_tag=tag) for doc, tag in zip(docs, tags)]


def split_docs(docs: Sequence[PaperDoc]) -> dict[str, list[PaperDoc]]:
    out: dict[str, list[PaperDoc]] = {tag: [] for tag in SPLIT_TAGS}
    for doc in docs:
        out[doc.split_tag].append(doc)
    return out


# ---------------------------------------------------------------------------
# Inter-annotator agreement
# ---------------------------------------------------------------------------


def cohens_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Cohen's kappa between two label sequences of equal length."""
    if len(labels_a) != len(labels_b):
        raise ValueError(f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}")
    n = len(labels_a)
    if n == 0:
        raise ValueError("label sequences must be nonempty")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    expected = sum(count_a[k] * count_b.get(k, 0) for k in count_a) / (n * n)
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)
