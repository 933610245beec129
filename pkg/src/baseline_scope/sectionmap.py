"""Map raw section headings to the five canonical section categories.

Headings are matched by case-insensitive substring against a small keyword
table (shipped as a versioned JSON config so deployments can extend it).
When a heading matches keywords of several categories, a fixed priority
order decides: conclusion > introduction > related > methods_results.
Anything unmatched is "other".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .corpus import SECTION_CATEGORIES

KEYWORD_TABLE_VERSION = "section-keywords/1"


@dataclass(frozen=True)
class KeywordTable:
    version: str
    priority: tuple[str, ...]
    keywords: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if self.version != KEYWORD_TABLE_VERSION:
            raise ValueError(f"unsupported keyword table version {self.version!r}")
        for category in self.priority:
            if category not in SECTION_CATEGORIES or category == "other":
                raise ValueError(f"invalid category {category!r} in priority list")
            if category not in self.keywords:
                raise ValueError(f"category {category!r} has no keyword list")


def load_keyword_table(path: str | Path | None = None) -> KeywordTable:
    """Load a keyword table from JSON; defaults to the packaged table."""
    if path is None:
        text = resources.files("baseline_scope").joinpath("data/section_keywords.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    return KeywordTable(
        version=data["version"],
        priority=tuple(data["priority"]),
        keywords={k: tuple(v) for k, v in data["keywords"].items()},
    )


@lru_cache(maxsize=1)
def default_keyword_table() -> KeywordTable:
    return load_keyword_table()


def categorize_heading(heading: str, table: KeywordTable | None = None) -> str:
    """Canonical section category for a heading; total over all strings."""
    if table is None:
        table = default_keyword_table()
    normalized = " ".join(heading.lower().split())
    for category in table.priority:
        if any(keyword in normalized for keyword in table.keywords[category]):
            return category
    return "other"
