"""Non-textual feature bundle for a reference.

Four signal families per reference: where it is mentioned (five section
counts plus a table flag), how close known cue words occur to its mentions
(45 proximity weights), and how often the cited paper is cited globally
(one transformed count). Together they form a 52-dimensional vector.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .context import ContextWindow, extract_window, mention_flat_position, select_primary_mention
from .corpus import SECTION_CATEGORIES, CitationMention, PaperDoc
from .stemming import porter_stem

# Stemmed cue words observed near baseline citations, in canonical order.
CUE_STEMS = (
    "among", "base", "origin", "precis", "modifi", "highest", "implement",
    "extend", "signific", "maximum", "metric", "higher", "experi", "baselin",
    "fscore", "strategi", "accord", "compar", "overal", "perform", "best",
    "previou", "model", "evalu", "correl", "recal", "result", "calcul",
    "standard", "stateoftheart", "achiev", "figur", "accuraci", "gold",
    "comparison", "method", "top", "yield", "procedur", "obtain",
    "outperform", "score", "significantli", "increas", "report",
)

CUE_COUNT = 45
FEATURE_DIM = 5 + 1 + CUE_COUNT + 1

COUNT_TRANSFORMS = ("log1p", "raw")


@dataclass(frozen=True)
class CueLexicon:
    stems: tuple[str, ...] = CUE_STEMS

    def __post_init__(self):
        if len(self.stems) != CUE_COUNT:
            raise ValueError(f"cue lexicon must hold {CUE_COUNT} stems, got {len(self.stems)}")
        if len(set(self.stems)) != len(self.stems):
            raise ValueError("cue lexicon contains duplicates")
        if any(s != s.lower() or not s for s in self.stems):
            raise ValueError("cue stems must be nonempty lowercase")

    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.stems)}

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.stems).encode("utf-8")).hexdigest()


def load_cue_lexicon(path: str | Path) -> CueLexicon:
    """Read a lexicon file: one stem per line, blank lines ignored."""
    stems = tuple(line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
                  if line.strip())
    return CueLexicon(stems=stems)


@lru_cache(maxsize=1)
def default_cue_lexicon() -> CueLexicon:
    return CueLexicon()


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Normalize a token (lowercase, drop non-alphanumerics) and stem it."""
    cleaned = "".join(ch for ch in token.lower() if ch.isalnum())
    return porter_stem(cleaned)


@dataclass(frozen=True)
class FeatureVector:
    section_counts: tuple[int, int, int, int, int]
    in_table: bool
    cue_weights: np.ndarray
    citation_count_feature: float

    def __post_init__(self):
        if len(self.section_counts) != 5 or any(c < 0 for c in self.section_counts):
            raise ValueError("section_counts must be 5 nonnegative integers")
        weights = np.asarray(self.cue_weights, dtype=np.float64)
        if weights.shape != (CUE_COUNT,):
            raise ValueError(f"cue_weights must have shape ({CUE_COUNT},)")
        if np.any(weights < 0) or np.any(weights > 1):
            raise ValueError("cue weights must lie in [0, 1]")
        if self.citation_count_feature < 0:
            raise ValueError("citation_count_feature must be nonnegative")
        object.__setattr__(self, "cue_weights", weights)

    def to_array(self) -> np.ndarray:
        """Flatten to the canonical 52-dim layout: 5 counts, table flag, 45 cues, count."""
        out = np.empty(FEATURE_DIM, dtype=np.float64)
        out[:5] = self.section_counts
        out[5] = 1.0 if self.in_table else 0.0
        out[6:6 + CUE_COUNT] = self.cue_weights
        out[-1] = self.citation_count_feature
        return out


def zero_feature_vector() -> FeatureVector:
    return FeatureVector((0, 0, 0, 0, 0), False, np.zeros(CUE_COUNT), 0.0)


def location_features(doc: PaperDoc, ref_id: str) -> tuple[tuple[int, ...], bool]:
    """Mention counts per section category and the any-table flag.

    Counts every mention, including table mentions, under its section's
    category; a reference cited only in a results table still counts toward
    that section.
    """
    doc.reference(ref_id)  # raises on unknown ref_id
    counts = [0] * 5
    in_table = False
    index = {category: i for i, category in enumerate(SECTION_CATEGORIES)}
    for mention in doc.mentions_of(ref_id):
        counts[index[doc.sections[mention.section_index].category]] += 1
        in_table = in_table or mention.in_table
    return tuple(counts), in_table


def cue_weights(window: ContextWindow, mention: CitationMention,
                lexicon: CueLexicon | None = None) -> np.ndarray:
    """Proximity weight 1/d for each cue stem present in the window.

    d is the token distance (floored at 1) between the cue occurrence and
    the citation mention, measured over the flattened unmasked token
    sequence; multiple occurrences keep the nearest one.
    """
    if lexicon is None:
        lexicon = default_cue_lexicon()
    index = lexicon.index()
    weights = np.zeros(CUE_COUNT, dtype=np.float64)
    center = mention_flat_position(window, mention)
    for pos, token in enumerate(window.flat_tokens()):
        slot = index.get(stem(token))
        if slot is None:
            continue
        weight = 1.0 / max(1, abs(pos - center))
        if weight > weights[slot]:
            weights[slot] = weight
    return weights


def citation_count_feature(count: int | None, transform: str = "log1p") -> float:
    """Scalar popularity feature from a global citation count; absent -> 0."""
    if transform not in COUNT_TRANSFORMS:
        raise ValueError(f"unknown count transform {transform!r}")
    if count is None:
        return 0.0
    if count < 0:
        raise ValueError("citation count must be nonnegative")
    return float(count) if transform == "raw" else math.log1p(count)


def extract_feature_vector(doc: PaperDoc, ref_id: str,
                           lexicon: CueLexicon | None = None,
                           count_transform: str = "log1p") -> FeatureVector:
    """Full feature bundle for one reference.

    Cue weights come from the context window of the reference's primary
    mention; bibliography-only references get all-zero cue weights.
    """
    counts, in_table = location_features(doc, ref_id)
    mention = select_primary_mention(doc, ref_id)
    if mention is None:
        cues = np.zeros(CUE_COUNT, dtype=np.float64)
    else:
        cues = cue_weights(extract_window(doc, mention), mention, lexicon)
    count = citation_count_feature(doc.reference(ref_id).citation_count, count_transform)
    return FeatureVector(counts, in_table, cues, count)
