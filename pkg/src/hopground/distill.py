"""Training-corpus synthesis for grounding distillation.

For each single-hop input question, a student model produces an immediate
answer, a teacher model revises it against the gold document hidden among
noise documents, and heuristic filters drop low-quality teacher outputs.
The kept (instruction, target) pairs form the instruction-tuning corpus.
"""

from __future__ import annotations

import json
import logging
import random
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .core import DecodingParams, Document, Question
from .errors import EmptyList, LlmError, MalformedDataset
from .evaluation import cover_em
from .grounding import (EMPTY_KEYWORD, REF_CLOSE, REF_OPEN, REVISE_CLOSE,
                        REVISE_OPEN, first_tag_span)
from .llm import ChatMessage, LlmClient
from .prompts import TemplateLibrary, render_synthesis_teacher

log = logging.getLogger(__name__)

DROP_EMPTY_EVIDENCE = "empty_evidence"
DROP_MISSING_REVISION = "missing_revision"
DROP_MISALIGNED = "misaligned"
DROP_LLM_ERROR = "llm_error"

DEFAULT_NOISE_DOCS = 9  # gold + 9 mirrors top-10 retrieval at inference

_ANSWER_TRIM = string.whitespace + "."


@dataclass(frozen=True)
class Verdict:
    keep: bool
    reason: str | None = None

    @classmethod
    def kept(cls) -> "Verdict":
        return cls(keep=True)

    @classmethod
    def drop(cls, reason: str) -> "Verdict":
        return cls(keep=False, reason=reason)


@dataclass(frozen=True)
class SynthesisInput:
    """One single-hop question with its gold document and noise documents."""

    question: Question
    gold_doc: Document
    noise_docs: tuple[Document, ...]

    def __post_init__(self):
        if len(self.question.gold_answers) != 1:
            raise ValueError("synthesis questions need exactly one gold answer")
        object.__setattr__(self, "noise_docs", tuple(self.noise_docs))

    @property
    def gold_answer(self) -> str:
        return self.question.gold_answers[0]


@dataclass(frozen=True)
class TrainingExample:
    """One synthesized pair: grounding instruction -> teacher trajectory."""

    instruction: str
    documents: tuple[Document, ...]
    immediate_answer: str
    target: str
    gold_doc_id: str
    gold_position: int  # 1-based slot of the gold document
    verdict: Verdict

    def to_dict(self, include_verdict: bool = False) -> dict[str, Any]:
        d: dict[str, Any] = {
            "instruction": self.instruction,
            "documents": [doc.to_dict() for doc in self.documents],
            "immediate_answer": self.immediate_answer,
            "target": self.target,
            "gold_doc_id": self.gold_doc_id,
            "gold_position": self.gold_position,
        }
        if include_verdict:
            d["verdict"] = "keep" if self.verdict.keep else "drop"
            d["drop_reason"] = self.verdict.reason
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrainingExample":
        verdict = (Verdict.kept() if d.get("verdict", "keep") == "keep"
                   else Verdict.drop(d.get("drop_reason") or "unknown"))
        return cls(
            instruction=d["instruction"],
            documents=tuple(Document.from_dict(x) for x in d["documents"]),
            immediate_answer=d["immediate_answer"],
            target=d["target"],
            gold_doc_id=d["gold_doc_id"],
            gold_position=d["gold_position"],
            verdict=verdict,
        )


def apply_filters(target: str, gold_answer: str, gold_doc: Document) -> Verdict:
    """Quality-filter one teacher output; first failing rule wins.

    Rules, in order: no usable evidence span (missing ref tags, blank, or
    the Empty signal); no usable revision span; revised answer fails
    cover-EM against the gold answer.  The gold document rides along for
    signature stability; alignment is checked against the gold answer.
    """
    ref_span = first_tag_span(target, REF_OPEN, REF_CLOSE)
    if ref_span is None or not ref_span.strip() \
            or ref_span.strip().lower() == EMPTY_KEYWORD:
        return Verdict.drop(DROP_EMPTY_EVIDENCE)
    revise_span = first_tag_span(target, REVISE_OPEN, REVISE_CLOSE)
    if revise_span is None or not revise_span.strip(_ANSWER_TRIM):
        return Verdict.drop(DROP_MISSING_REVISION)
    revised = revise_span.strip(_ANSWER_TRIM)
    if not cover_em(revised, [gold_answer]):
        return Verdict.drop(DROP_MISALIGNED)
    return Verdict.kept()


def place_gold(gold_doc: Document, noise_docs: Sequence[Document],
               position: int) -> tuple[Document, ...]:
    """Insert the gold document at a 1-based ``position`` among the noise."""
    if not 1 <= position <= len(noise_docs) + 1:
        raise ValueError("gold position out of range")
    docs = list(noise_docs)
    docs.insert(position - 1, gold_doc)
    return tuple(docs)


def synthesize_example(inp: SynthesisInput, student_llm: LlmClient,
                       teacher_llm: LlmClient, library: TemplateLibrary,
                       gold_position: int,
                       params: DecodingParams = DecodingParams(),
                       ) -> TrainingExample:
    """Synthesize one training example.

    The student sees the bare question; the teacher sees the grounding
    instruction over the shuffled document list.  LLM failures yield a
    Drop(llm_error) example rather than raising.
    """
    documents = place_gold(inp.gold_doc, inp.noise_docs, gold_position)

    immediate_answer = ""
    target = ""
    try:
        student_reply = student_llm.complete(
            [ChatMessage(role="user", content=inp.question.text)], params)
        immediate_answer = student_reply.text.strip()
        instruction = render_synthesis_teacher(
            library, inp.question.text, immediate_answer, documents)[0].content
        target = teacher_llm.complete(
            [ChatMessage(role="user", content=instruction)], params).text
        verdict = apply_filters(target, inp.gold_answer, inp.gold_doc)
    except LlmError as exc:
        log.warning("question %s: synthesis failed: %s", inp.question.id, exc)
        instruction = render_synthesis_teacher(
            library, inp.question.text, immediate_answer, documents)[0].content
        verdict = Verdict.drop(DROP_LLM_ERROR)

    return TrainingExample(
        instruction=instruction,
        documents=documents,
        immediate_answer=immediate_answer,
        target=target,
        gold_doc_id=inp.gold_doc.id,
        gold_position=gold_position,
        verdict=verdict,
    )


def synthesize_dataset(inputs: Sequence[SynthesisInput],
                       student_llm: LlmClient, teacher_llm: LlmClient,
                       library: TemplateLibrary, seed: int,
                       params: DecodingParams = DecodingParams(),
                       max_noise_docs: int = DEFAULT_NOISE_DOCS,
                       concurrency: int = 1,
                       progress: Callable[[int, int], None] | None = None,
                       ) -> list[TrainingExample]:
    """Synthesize the whole corpus; output order matches input order.

    Gold positions are drawn up front from one seeded RNG, so a fixed seed
    reproduces the corpus exactly (given scripted or temperature-0 models).
    """
    rng = random.Random(seed)
    trimmed = [replace(inp, noise_docs=inp.noise_docs[:max_noise_docs])
               for inp in inputs]
    positions = [rng.randint(1, len(inp.noise_docs) + 1) for inp in trimmed]

    def run_one(pair: tuple[SynthesisInput, int]) -> TrainingExample:
        inp, position = pair
        return synthesize_example(inp, student_llm, teacher_llm, library,
                                  position, params)

    jobs = list(zip(trimmed, positions))
    if concurrency == 1 or len(jobs) <= 1:
        examples = []
        for job in jobs:
            examples.append(run_one(job))
            if progress is not None:
                progress(len(examples), len(jobs))
        return examples
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        examples = list(pool.map(run_one, jobs))
    if progress is not None:
        progress(len(examples), len(jobs))
    return examples


def dataset_stats(examples: Sequence[TrainingExample]) -> dict[str, float]:
    """Corpus statistics in whitespace tokens, averaged to two decimals."""
    if not examples:
        raise EmptyList("no examples to describe")
    n = len(examples)

    def mean(values) -> float:
        return round(sum(values) / n, 2)

    return {
        "count": n,
        "avg_instruction_len": mean(len(e.instruction.split()) for e in examples),
        "avg_target_len": mean(len(e.target.split()) for e in examples),
        "avg_gold_docs": mean(1 if e.gold_doc_id else 0 for e in examples),
        "avg_gold_doc_len": mean(
            len(e.documents[e.gold_position - 1].body.split()) for e in examples),
    }


def emit_corpus(examples: Sequence[TrainingExample], path: str | Path,
                include_dropped: bool = False) -> int:
    """Write the corpus JSONL; Keep examples only unless ``include_dropped``.

    Returns the number of lines written.
    """
    written = 0
    with open(path, "w", encoding="utf-8") as f:
        for example in examples:
            if not example.verdict.keep and not include_dropped:
                continue
            f.write(json.dumps(example.to_dict(include_verdict=include_dropped),
                               ensure_ascii=False, separators=(",", ":")))
            f.write("\n")
            written += 1
    return written


def load_training_corpus(path: str | Path) -> list[TrainingExample]:
    """Reload an emitted corpus file."""
    examples = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                examples.append(TrainingExample.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedDataset(f"{path}: {exc}", line=line_no) from exc
    return examples


def load_synthesis_inputs(path: str | Path) -> list[SynthesisInput]:
    """Read synthesis inputs: JSONL of
    ``{id, question, answer, gold_doc: {...}, noise_docs: [...]}``."""
    inputs = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                question = Question(id=str(record["id"]),
                                    text=record["question"],
                                    gold_answers=(str(record["answer"]),))
                inputs.append(SynthesisInput(
                    question=question,
                    gold_doc=Document.from_dict(record["gold_doc"]),
                    noise_docs=tuple(Document.from_dict(d)
                                     for d in record.get("noise_docs", [])),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedDataset(f"{path}: {exc}", line=line_no) from exc
    return inputs
