"""Fixed-size citation context windows.

A context window is a 10x50 token grid (rows are sentences) extracted from
the paragraph holding a citation mention, centered on the citation sentence
with 4 sentences before and 5 after when the paragraph allows, shifted
toward the paragraph edge when it does not. Sentences are right-padded or
right-pruned to 50 tokens; missing rows are all-padding. Windows never
cross paragraph boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CitationMention, CorpusIntegrityError, PaperDoc

WINDOW_ROWS = 10
WINDOW_COLS = 50
PAD_TOKEN = "<pad>"

# Mention-selection priority for a reference cited more than once: baseline
# evidence concentrates in experiment-like sections.
MENTION_PRIORITY = ("methods_results", "other", "related", "introduction", "conclusion")


@dataclass(frozen=True)
class ContextWindow:
    sentences: tuple[tuple[str, ...], ...]
    mask: np.ndarray  # bool, same grid shape; True marks a real token
    citation_row: int

    @property
    def rows(self) -> int:
        return len(self.sentences)

    @property
    def cols(self) -> int:
        return len(self.sentences[0])

    def validate(self) -> None:
        rows, cols = self.rows, self.cols
        if self.mask.shape != (rows, cols) or self.mask.dtype != np.bool_:
            raise ValueError(f"mask must be boolean of shape {(rows, cols)}")
        if any(len(row) != cols for row in self.sentences):
            raise ValueError("ragged window rows")
        if not (0 <= self.citation_row < rows):
            raise ValueError(f"citation_row {self.citation_row} out of range")
        if not self.mask[self.citation_row].any():
            raise ValueError("citation row is fully masked")
        for i, row in enumerate(self.sentences):
            for j, token in enumerate(row):
                if not self.mask[i, j] and token != PAD_TOKEN:
                    raise ValueError(f"masked cell ({i},{j}) holds non-padding token {token!r}")

    def row_lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def real_rows(self) -> int:
        """Number of rows holding at least one real token."""
        return int((self.mask.any(axis=1)).sum())

    def flat_tokens(self) -> list[str]:
        """Unmasked tokens in reading order (rows top-down, left-right)."""
        out = []
        for i, row in enumerate(self.sentences):
            for j, token in enumerate(row):
                if self.mask[i, j]:
                    out.append(token)
        return out

    def flat_position(self, row: int, col: int) -> int:
        """Index of an unmasked cell within the flattened token sequence."""
        if not self.mask[row, col]:
            raise ValueError(f"cell ({row},{col}) is masked")
        return int(self.mask[:row].sum() + self.mask[row, :col].sum())


def _fit_sentence(tokens, cols: int) -> tuple[tuple[str, ...], np.ndarray]:
    kept = list(tokens[:cols])
    mask = np.zeros(cols, dtype=bool)
    mask[: len(kept)] = True
    kept.extend([PAD_TOKEN] * (cols - len(kept)))
    return tuple(kept), mask


def extract_window(doc: PaperDoc, mention: CitationMention,
                   rows: int = WINDOW_ROWS, cols: int = WINDOW_COLS) -> ContextWindow:
    """Extract the fixed-size context window around a citation mention.

    For a mention inside a table region, the other table rows of the
    paragraph are not prose context and are skipped; if nothing else
    remains, the window holds only the citation sentence row.
    """
    section = doc.sections[mention.section_index]
    try:
        paragraph = section.paragraphs[mention.paragraph_index]
        sentence = paragraph[mention.sentence_index]
    except IndexError as exc:
        raise CorpusIntegrityError(
            f"paper {doc.paper_id!r}: mention addresses a missing sentence") from exc
    if not (0 <= mention.token_offset < len(sentence)):
        raise CorpusIntegrityError(
            f"paper {doc.paper_id!r}: mention token_offset {mention.token_offset} "
            f"beyond sentence length {len(sentence)}")

    regions = set(section.table_regions)
    eligible = [
        q for q in range(len(paragraph))
        if q == mention.sentence_index or (mention.paragraph_index, q) not in regions
    ]
    center = eligible.index(mention.sentence_index)
    before = (rows - 1) // 2
    start = max(0, min(center - before, len(eligible) - rows))
    selected = eligible[start:start + rows]

    grid, mask_rows = [], []
    for q in selected:
        row, row_mask = _fit_sentence(paragraph[q], cols)
        grid.append(row)
        mask_rows.append(row_mask)
    while len(grid) < rows:
        grid.append(tuple([PAD_TOKEN] * cols))
        mask_rows.append(np.zeros(cols, dtype=bool))

    window = ContextWindow(sentences=tuple(grid), mask=np.stack(mask_rows),
                           citation_row=center - start)
    window.validate()
    return window


def citation_sentence(doc: PaperDoc, mention: CitationMention) -> tuple[str, ...]:
    """The exact (unpadded) sentence containing the mention."""
    try:
        sentence = doc.sentence_at(mention)
    except IndexError as exc:
        raise CorpusIntegrityError(
            f"paper {doc.paper_id!r}: mention addresses a missing sentence") from exc
    if not (0 <= mention.token_offset < len(sentence)):
        raise CorpusIntegrityError(
            f"paper {doc.paper_id!r}: mention token_offset {mention.token_offset} "
            f"beyond sentence length {len(sentence)}")
    return sentence


def mention_flat_position(window: ContextWindow, mention: CitationMention) -> int:
    """Flattened-sequence position of the mention's first token.

    The offset is clamped into the kept span when the citation sentence was
    pruned to the window width.
    """
    row = window.citation_row
    kept = int(window.mask[row].sum())
    col = min(mention.token_offset, kept - 1)
    return window.flat_position(row, col)


def select_primary_mention(doc: PaperDoc, ref_id: str) -> CitationMention | None:
    """The mention a multiply-cited reference is classified from.

    Picks the mention in the most experiment-like section category, then the
    earliest in document order; None for bibliography-only references.
    """
    mentions = doc.mentions_of(ref_id)
    if not mentions:
        return None
    rank = {category: i for i, category in enumerate(MENTION_PRIORITY)}

    def key(m: CitationMention):
        category = doc.sections[m.section_index].category
        return (rank[category], m.section_index, m.paragraph_index, m.sentence_index, m.token_offset)

    return min(mentions, key=key)


def window_to_tsv(window: ContextWindow) -> str:
    """Render a window as tab-separated token rows (padding shown verbatim)."""
    return "\n".join("\t".join(row) for row in window.sentences) + "\n"
