import json

import pytest
from hypothesis import given, strategies as st

from baseline_scope.corpus import SECTION_CATEGORIES
from baseline_scope.sectionmap import (KEYWORD_TABLE_VERSION, KeywordTable, categorize_heading,
                                       default_keyword_table, load_keyword_table)


# Headings with a single expected category, covering each keyword.
PINNED = [
    ("5 Experimental Results", "methods_results"),
    ("Acknowledgements", "other"),
    ("Conclusion and Future Work", "conclusion"),
    ("1 Introduction", "introduction"),
    ("Related Work", "related"),
    ("Background", "related"),
    ("Previous Work", "related"),
    ("A Case Study", "related"),
    ("Our Approach", "methods_results"),
    ("Model Architecture", "methods_results"),
    ("Empirical Comparison", "methods_results"),
    ("Evaluation", "methods_results"),
    ("Error Analysis", "methods_results"),
    ("Performance", "methods_results"),
    ("Discussion", "discussion_expected"),
    ("Future Work", "conclusion"),
    ("", "other"),
    ("References", "other"),
]


@pytest.mark.parametrize("heading,expected", [(h, e) for h, e in PINNED if e != "discussion_expected"])
def test_pinned_headings(heading, expected):
    assert categorize_heading(heading) == expected


def test_discussion_is_methods_results():
    assert categorize_heading("Discussion") == "methods_results"


class TestPriority:
    """Multi-keyword headings resolve by conclusion > introduction > related > methods."""

    def test_related_beats_methods(self):
        assert categorize_heading("Background Study of Results") == "related"

    def test_conclusion_beats_everything(self):
        assert categorize_heading("Conclusion: an Experimental Summary") == "conclusion"
        assert categorize_heading("Introduction and Conclusion") == "conclusion"

    def test_introduction_beats_related(self):
        assert categorize_heading("Introduction to Background") == "introduction"

    def test_enumerated_multi_hits(self):
        expectations = {
            ("conclusion", "introduction"): "conclusion",
            ("introduction", "related work"): "introduction",
            ("related work", "experiment"): "related",
            ("study", "result"): "related",
        }
        for keywords, expected in expectations.items():
            heading = " plus ".join(keywords)
            assert categorize_heading(heading) == expected, heading


@given(st.text(max_size=80))
def test_total_and_case_insensitive(heading):
    category = categorize_heading(heading)
    assert category in SECTION_CATEGORIES
    assert categorize_heading(heading.upper()) == category


@given(st.text(alphabet=" \t\nabcdefgh", max_size=40))
def test_whitespace_normalization_idempotent(heading):
    assert categorize_heading(heading) == categorize_heading(" ".join(heading.split()))


class TestKeywordTable:
    def test_default_table_content(self):
        table = default_keyword_table()
        assert table.version == KEYWORD_TABLE_VERSION
        assert table.keywords["introduction"] == ("introduction",)
        assert table.keywords["conclusion"] == ("conclusion", "future work")
        assert "architect" in table.keywords["methods_results"]
        assert len(table.keywords["methods_results"]) == 11

    def test_custom_table_extension(self, tmp_path):
        data = {
            "version": KEYWORD_TABLE_VERSION,
            "priority": ["conclusion", "introduction", "related", "methods_results"],
            "keywords": {
                "introduction": ["introduction", "overview"],
                "related": ["related work"],
                "methods_results": ["method"],
                "conclusion": ["conclusion"],
            },
        }
        path = tmp_path / "keywords.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        table = load_keyword_table(path)
        assert categorize_heading("System Overview", table) == "introduction"
        assert categorize_heading("System Overview") == "other"

    def test_bad_version_rejected(self):
        with pytest.raises(ValueError, match="version"):
            KeywordTable(version="nope/9", priority=("conclusion",),
                         keywords={"conclusion": ("conclusion",)})
