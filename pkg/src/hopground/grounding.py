"""Answer revision against retrieved documents, batch window by window.

Documents are grounded in rank-order windows of ``batch_size``.  The first
window that yields a citation ends the phase; if every window comes back
Empty (or there are no documents), the immediate answer is kept verbatim.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Sequence

from .core import (DecodingParams, Document, GroundingKind, GroundingOutcome,
                   Question)
from .errors import MalformedGrounding
from .llm import LlmClient
from .prompts import TemplateLibrary, render_grounding

EMPTY_KEYWORD = "empty"

REF_OPEN, REF_CLOSE = "<ref>", "</ref>"
REVISE_OPEN, REVISE_CLOSE = "<revise>", "</revise>"

_ANSWER_TRIM = string.whitespace + "."


@dataclass(frozen=True)
class BatchPlan:
    """Contiguous, disjoint 1-based index windows covering 1..n_docs."""

    batch_size: int
    windows: tuple[tuple[int, int], ...]  # inclusive (start, end) pairs


def plan_batches(n_docs: int, batch_size: int) -> BatchPlan:
    """Partition 1..n_docs into rank-order windows of ``batch_size``.

    Every window but the last has exactly ``batch_size`` documents;
    ``n_docs == 0`` yields an empty plan.
    """
    if n_docs < 0:
        raise ValueError("n_docs must be >= 0")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    windows = tuple((start, min(start + batch_size - 1, n_docs))
                    for start in range(1, n_docs + 1, batch_size))
    return BatchPlan(batch_size=batch_size, windows=windows)


def first_tag_span(text: str, open_tag: str, close_tag: str) -> str | None:
    """Content of the first ``open_tag``..``close_tag`` pair, else None."""
    start = text.find(open_tag)
    if start == -1:
        return None
    end = text.find(close_tag, start + len(open_tag))
    if end == -1:
        return None
    return text[start + len(open_tag):end]


def parse_grounding(text: str) -> GroundingOutcome:
    """Parse one grounding output into Cited or Empty.

    The first ``<ref>..</ref>`` pair wins; a span equal to "Empty"
    (case-insensitive) is the no-evidence signal.  Cited additionally needs
    a non-empty ``<revise>..</revise>`` span.  The revised answer is trimmed
    of surrounding whitespace and periods only.

    Raises ``MalformedGrounding`` for anything else.
    """
    ref_span = first_tag_span(text, REF_OPEN, REF_CLOSE)
    if ref_span is None:
        raise MalformedGrounding(f"no ref span in: {text[:120]!r}")
    citation = ref_span.strip()
    if citation.lower() == EMPTY_KEYWORD:
        return GroundingOutcome.empty(raw_text=text)
    if not citation:
        raise MalformedGrounding("ref span is blank")

    revise_span = first_tag_span(text, REVISE_OPEN, REVISE_CLOSE)
    if revise_span is None:
        raise MalformedGrounding(f"no revise span in: {text[:120]!r}")
    revised = revise_span.strip(_ANSWER_TRIM)
    if not revised:
        raise MalformedGrounding("revise span is blank")
    return GroundingOutcome(kind=GroundingKind.CITED, raw_text=text,
                            citation=citation, revised_answer=revised)


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def citation_in_documents(citation: str, docs: Sequence[Document]) -> bool:
    """Whitespace-normalized substring check against title+body."""
    needle = _normalize_ws(citation)
    return any(needle in _normalize_ws(f"{d.title} {d.body}") for d in docs)


def ground(llm: LlmClient, library: TemplateLibrary, question: Question,
           sub_question: str, immediate_answer: str, docs: Sequence[Document],
           batch_size: int, params: DecodingParams = DecodingParams(),
           strict_citation: bool = False) -> tuple[str, GroundingOutcome, int]:
    """Revise ``immediate_answer`` against ``docs`` using windowed grounding.

    Windows are visited strictly in order and iteration stops at the first
    Cited window.  A malformed reply is retried once and then treated as
    Empty for that window.  In strict mode a citation that is not a
    substring of its window's documents downgrades to Empty.

    Returns ``(revised_answer, outcome, batches_consumed)`` where
    ``batches_consumed`` counts windows sent to the model (a retry does not
    increment it).  When no window cites, the immediate answer is returned
    byte-for-byte unchanged.
    """
    plan = plan_batches(len(docs), batch_size)
    consumed = 0
    last_raw = ""
    for start, end in plan.windows:
        batch = docs[start - 1:end]
        messages = render_grounding(library, question, sub_question,
                                    immediate_answer, batch)
        outcome: GroundingOutcome | None = None
        for _ in range(2):  # one retry on a malformed reply
            completion = llm.complete(messages, params)
            last_raw = completion.text
            try:
                outcome = parse_grounding(completion.text)
                break
            except MalformedGrounding:
                outcome = None
        consumed += 1
        if outcome is None:
            outcome = GroundingOutcome.empty(raw_text=last_raw)
        if outcome.kind is GroundingKind.CITED:
            if strict_citation and not citation_in_documents(outcome.citation, batch):
                continue
            return outcome.revised_answer, outcome, consumed
    return immediate_answer, GroundingOutcome.empty(raw_text=last_raw), consumed
