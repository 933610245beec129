import numpy as np
import pytest

from baseline_scope.context import (PAD_TOKEN, WINDOW_COLS, WINDOW_ROWS, citation_sentence,
                                    extract_window, mention_flat_position,
                                    select_primary_mention, window_to_tsv)
from baseline_scope.corpus import (CitationMention, CorpusIntegrityError, PaperDoc, Reference,
                                   Section)
from conftest import DocBuilder


def para_doc(sentences, table_regions=()):
    section = Section(heading="3 Results", category="methods_results",
                      paragraphs=(tuple(tuple(s) for s in sentences),),
                      table_regions=tuple(table_regions))
    return PaperDoc(paper_id="PX", title=("t",), abstract=("a",), venue="v", year=2010,
                    sections=(section,), references=(Reference(ref_id="R1"),), mentions=())


def mention_at(sentence_index, offset=0, in_table=False):
    return CitationMention(ref_id="R1", section_index=0, paragraph_index=0,
                           sentence_index=sentence_index, token_offset=offset, in_table=in_table)


class TestExtractWindow:
    def test_short_paragraph_pads_tail_rows(self):
        doc = para_doc([["a", "b"], ["c", "R1"], ["d"]])
        window = extract_window(doc, mention_at(1, offset=1))
        assert (window.rows, window.cols) == (WINDOW_ROWS, WINDOW_COLS)
        assert window.citation_row == 1
        assert list(window.mask.any(axis=1)) == [True] * 3 + [False] * 7
        assert window.sentences[3] == tuple([PAD_TOKEN] * WINDOW_COLS)

    def test_long_sentence_pruned_to_width(self):
        tokens = [f"w{i}" for i in range(80)]
        doc = para_doc([tokens])
        window = extract_window(doc, mention_at(0, offset=2))
        assert window.sentences[0] == tuple(tokens[:50])
        assert window.mask[0].all()

    def test_centering_rule_on_long_paragraph(self):
        # 25 sentences named by index; mention in sentence 12 keeps 8..17 with 4 before it
        doc = para_doc([[f"s{i}", "x"] for i in range(25)])
        window = extract_window(doc, mention_at(12))
        firsts = [row[0] for row in window.sentences]
        assert firsts == [f"s{i}" for i in range(8, 18)]
        assert window.citation_row == 4

    def test_centering_shifts_at_paragraph_edges(self):
        doc = para_doc([[f"s{i}"] for i in range(25)])
        head = extract_window(doc, mention_at(1))
        assert [row[0] for row in head.sentences] == [f"s{i}" for i in range(10)]
        assert head.citation_row == 1
        tail = extract_window(doc, mention_at(23))
        assert [row[0] for row in tail.sentences] == [f"s{i}" for i in range(15, 25)]
        assert tail.citation_row == 8

    def test_shape_is_always_constant(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(1, 30))
            lengths = rng.integers(1, 90, size=n)
            doc = para_doc([[f"t{i}_{j}" for j in range(k)] for i, k in enumerate(lengths)])
            where = int(rng.integers(0, n))
            window = extract_window(doc, mention_at(where))
            assert (window.rows, window.cols) == (WINDOW_ROWS, WINDOW_COLS)
            assert window.mask[window.citation_row].any()

    def test_tokens_keep_source_order(self):
        rng = np.random.default_rng(1)
        n = 14
        doc = para_doc([[f"t{i}_{j}" for j in range(int(rng.integers(1, 70)))] for i in range(n)])
        window = extract_window(doc, mention_at(6))
        flat = window.flat_tokens()
        source = [t for sent in doc.sections[0].paragraphs[0] for t in sent]
        positions = [source.index(t) for t in flat]
        assert positions == sorted(positions)

    def test_table_mention_in_all_table_paragraph_keeps_single_row(self):
        doc = para_doc([["r1", "c"], ["R1", "93.4"], ["r3", "c"]],
                       table_regions=[(0, 0), (0, 1), (0, 2)])
        window = extract_window(doc, mention_at(1, in_table=True))
        assert window.citation_row == 0
        assert window.real_rows() == 1
        assert window.sentences[0][:2] == ("R1", "93.4")

    def test_table_mention_keeps_prose_neighbors(self):
        doc = para_doc([["prose", "before"], ["R1", "93.4"], ["prose", "after"], ["other", "row"]],
                       table_regions=[(0, 1), (0, 3)])
        window = extract_window(doc, mention_at(1, in_table=True))
        firsts = [row[0] for row in window.sentences[:3]]
        assert firsts == ["prose", "R1", "prose"]
        assert window.real_rows() == 3

    def test_prose_mention_skips_table_rows(self):
        doc = para_doc([["alpha"], ["R9", "0.81"], ["beta", "R1"]], table_regions=[(0, 1)])
        window = extract_window(doc, mention_at(2, offset=1))
        assert [row[0] for row in window.sentences[:2]] == ["alpha", "beta"]
        assert window.real_rows() == 2

    def test_bad_offset_is_integrity_error(self):
        doc = para_doc([["a", "b"]])
        with pytest.raises(CorpusIntegrityError, match="token_offset"):
            extract_window(doc, mention_at(0, offset=9))


class TestCitationSentence:
    def test_verbatim_projection(self):
        doc = para_doc([["a"], ["the", "cited", "R1", "method"]])
        assert citation_sentence(doc, mention_at(1, offset=2)) == ("the", "cited", "R1", "method")

    def test_two_mentions_two_sentences(self):
        doc = para_doc([["first", "R1"], ["second", "R1"]])
        first = citation_sentence(doc, mention_at(0, offset=1))
        second = citation_sentence(doc, mention_at(1, offset=1))
        assert first != second

    def test_offset_validation(self):
        doc = para_doc([["a", "b"]])
        with pytest.raises(CorpusIntegrityError):
            citation_sentence(doc, mention_at(0, offset=2))


class TestFlatPosition:
    def test_position_counts_prior_rows(self):
        doc = para_doc([["a", "b", "c"], ["d", "R1", "e"]])
        window = extract_window(doc, mention_at(1, offset=1))
        assert mention_flat_position(window, mention_at(1, offset=1)) == 4

    def test_offset_clamped_after_pruning(self):
        doc = para_doc([[f"w{i}" for i in range(80)]])
        window = extract_window(doc, mention_at(0, offset=79))
        assert mention_flat_position(window, mention_at(0, offset=79)) == 49


class TestPrimaryMention:
    def test_experimental_section_preferred(self):
        b = DocBuilder()
        b.mention("R1", "introduction")
        b.mention("R1", "methods_results")
        b.mention("R1", "conclusion")
        doc = b.build()
        primary = select_primary_mention(doc, "R1")
        assert doc.sections[primary.section_index].category == "methods_results"

    def test_priority_order_walk(self):
        order = ["conclusion", "introduction", "related", "other", "methods_results"]
        b = DocBuilder()
        for category in order:
            b.mention("R1", category)
        doc = b.build()
        expected = ["methods_results", "other", "related", "introduction", "conclusion"]
        remaining = list(doc.mentions)
        for want in expected:
            trimmed = PaperDoc(**{**doc.__dict__, "mentions": tuple(remaining)})
            primary = select_primary_mention(trimmed, "R1")
            assert doc.sections[primary.section_index].category == want
            remaining.remove(primary)

    def test_bibliography_only_is_none(self):
        b = DocBuilder()
        b.add_reference("R1")
        assert select_primary_mention(b.build(), "R1") is None


def test_window_to_tsv_shape():
    doc = para_doc([["a", "b"], ["c", "R1"]])
    text = window_to_tsv(extract_window(doc, mention_at(1, offset=1)))
    lines = text.splitlines()
    assert len(lines) == WINDOW_ROWS
    assert all(len(line.split("\t")) == WINDOW_COLS for line in lines)
