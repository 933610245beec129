"""Shared builders for synthetic papers and corpora."""

from __future__ import annotations

import numpy as np
import pytest

from baseline_scope.corpus import (SECTION_CATEGORIES, CitationMention, PaperDoc, Reference,
                                   Section)

CATEGORY_HEADINGS = {
    "introduction": "1 Introduction",
    "related": "2 Related Work",
    "methods_results": "3 Experimental Results",
    "conclusion": "6 Conclusion",
    "other": "Appendix A",
}


class DocBuilder:
    """Accumulates mentions per section and emits a consistent PaperDoc.

    Each section has paragraph 0 for prose sentences and paragraph 1 for
    table rows (flagged as table regions). One sentence per mention.
    """

    def __init__(self, paper_id: str = "P1", title=("neural", "parsing"),
                 abstract=("we", "study", "parsing", "models"),
                 venue: str = "Proceedings of EMNLP", year: int = 2012):
        self.paper_id = paper_id
        self.title = tuple(title)
        self.abstract = tuple(abstract)
        self.venue = venue
        self.year = year
        self._prose: dict[str, list[tuple[str, ...]]] = {c: [] for c in SECTION_CATEGORIES}
        self._table: dict[str, list[tuple[str, ...]]] = {c: [] for c in SECTION_CATEGORIES}
        self._mentions: list[tuple[str, str, bool, int, int]] = []  # ref, cat, table, sent_idx, offset
        self._refs: dict[str, Reference] = {}

    def add_reference(self, ref_id: str, label: str = "unlabeled", citation_count=None,
                      cited_title: str = "", cited_year=None):
        self._refs[ref_id] = Reference(ref_id=ref_id, raw_string=f"[{ref_id}] reference string",
                                       cited_title=cited_title or f"cited paper {ref_id}",
                                       cited_year=cited_year, citation_count=citation_count,
                                       label=label)
        return self

    def mention(self, ref_id: str, category: str = "methods_results", in_table: bool = False,
                sentence: tuple[str, ...] | None = None, offset: int | None = None):
        if ref_id not in self._refs:
            self.add_reference(ref_id)
        if sentence is None:
            sentence = ("we", "compare", "against", ref_id, "here")
            offset = 3 if offset is None else offset
        elif offset is None:
            offset = 0
        store = self._table if in_table else self._prose
        store[category].append(tuple(sentence))
        self._mentions.append((ref_id, category, in_table, len(store[category]) - 1, offset))
        return self

    def prose(self, category: str, sentence: tuple[str, ...]):
        """Add a sentence with no mention in it."""
        self._prose[category].append(tuple(sentence))
        return self

    def build(self, split_tag: str = "unassigned") -> PaperDoc:
        categories = [c for c in SECTION_CATEGORIES if self._prose[c] or self._table[c]]
        if not categories:
            categories = ["methods_results"]
            self._prose["methods_results"].append(("nothing", "cited", "here"))
        sections = []
        section_index = {}
        for category in categories:
            paragraphs = [tuple(self._prose[category]) or (("placeholder",),)]
            regions = []
            if self._table[category]:
                paragraphs.append(tuple(self._table[category]))
                regions = [(1, i) for i in range(len(self._table[category]))]
            section_index[category] = len(sections)
            sections.append(Section(heading=CATEGORY_HEADINGS[category], category=category,
                                    paragraphs=tuple(paragraphs), table_regions=tuple(regions)))
        mentions = []
        for ref_id, category, in_table, sent_idx, offset in self._mentions:
            mentions.append(CitationMention(
                ref_id=ref_id, section_index=section_index[category],
                paragraph_index=1 if in_table else 0, sentence_index=sent_idx,
                token_offset=offset, in_table=in_table))
        return PaperDoc(paper_id=self.paper_id, title=self.title, abstract=self.abstract,
                        venue=self.venue, year=self.year, sections=tuple(sections),
                        references=tuple(self._refs.values()), mentions=tuple(mentions),
                        split_tag=split_tag)


def simple_labeled_doc(paper_id: str = "P1", year: int = 2012) -> PaperDoc:
    """Two baselines (one table-only), two non-baselines."""
    b = DocBuilder(paper_id=paper_id, year=year)
    b.add_reference("R1", "baseline", citation_count=120)
    b.add_reference("R2", "baseline", citation_count=3)
    b.add_reference("R3", "non_baseline", citation_count=15)
    b.add_reference("R4", "non_baseline")
    b.mention("R1", "introduction")
    b.mention("R1", "methods_results")
    b.mention("R2", "methods_results", in_table=True)
    b.mention("R3", "related")
    return b.build()


def labeled_fixture_corpus(n_papers: int = 20, seed: int = 7) -> list[PaperDoc]:
    """Deterministic labeled corpus with varied mention placements."""
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_papers):
        b = DocBuilder(paper_id=f"P{i:03d}", year=int(rng.integers(1995, 2016)))
        n_refs = int(rng.integers(3, 9))
        for j in range(n_refs):
            ref_id = f"R{j}"
            is_baseline = rng.random() < 0.3
            b.add_reference(ref_id, "baseline" if is_baseline else "non_baseline",
                            citation_count=int(rng.integers(0, 300)))
            n_mentions = int(rng.integers(0, 4)) if not is_baseline else int(rng.integers(1, 4))
            for _ in range(n_mentions):
                if is_baseline:
                    category = rng.choice(SECTION_CATEGORIES, p=[0.2, 0.1, 0.5, 0.05, 0.15])
                else:
                    category = rng.choice(SECTION_CATEGORIES, p=[0.25, 0.3, 0.2, 0.05, 0.2])
                in_table = bool(rng.random() < (0.25 if is_baseline else 0.03))
                b.mention(ref_id, str(category), in_table=in_table)
        docs.append(b.build())
    return docs


def separable_corpus(n_refs: int = 32, seed: int = 3) -> list[PaperDoc]:
    """References whose label is fully determined by the table flag."""
    rng = np.random.default_rng(seed)
    docs = []
    per_paper = 4
    for p in range(n_refs // per_paper):
        b = DocBuilder(paper_id=f"S{p:02d}", year=2014)
        for j in range(per_paper):
            ref_id = f"R{j}"
            in_table = (p * per_paper + j) % 2 == 0
            label = "baseline" if in_table else "non_baseline"
            b.add_reference(ref_id, label, citation_count=int(rng.integers(0, 50)))
            category = str(rng.choice(SECTION_CATEGORIES))
            b.mention(ref_id, category)
            if in_table:
                b.mention(ref_id, "methods_results", in_table=True)
        docs.append(b.build())
    return docs


@pytest.fixture
def builder():
    return DocBuilder


@pytest.fixture
def labeled_corpus():
    return labeled_fixture_corpus()
