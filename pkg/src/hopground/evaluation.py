"""Answer-accuracy metrics, the LLM judge, and benchmark dataset loading.

Metrics use SQuAD-style normalization (lowercase, strip ASCII punctuation,
drop the articles a/an/the, split on whitespace).  Accuracy is cover-EM:
1 when some gold answer's token sequence appears contiguously in the
prediction's tokens.  F1 is the token-multiset harmonic mean, maximized
over gold answers.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .core import DecodingParams, Question
from .errors import (EmptyRecords, MalformedDataset, MissingGold,
                     UnparseableVerdict)
from .llm import LlmClient
from .prompts import TemplateLibrary, render_judge

log = logging.getLogger(__name__)

DATASET_FORMATS = ("hotpotqa", "musique", "2wiki", "strategyqa", "generic")

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize(text: str) -> list[str]:
    """Normalize to comparison tokens: case, punctuation, articles."""
    text = text.lower().translate(_PUNCT_TABLE)
    text = _ARTICLES_RE.sub(" ", text)
    return text.split()


def _contains_subsequence(haystack: list[str], needle: list[str]) -> bool:
    if not needle:
        return True
    n = len(needle)
    return any(haystack[i:i + n] == needle
               for i in range(len(haystack) - n + 1))


def cover_em(prediction: str, gold_answers: Sequence[str]) -> int:
    """1 iff some normalized gold answer occurs contiguously in the
    normalized prediction."""
    if not gold_answers:
        raise MissingGold("cover_em needs at least one gold answer")
    pred_tokens = normalize(prediction)
    return int(any(_contains_subsequence(pred_tokens, normalize(g))
                   for g in gold_answers))


def _f1_single(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    shared = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if shared == 0:
        return 0.0
    precision = shared / len(pred_tokens)
    recall = shared / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction: str, gold_answers: Sequence[str]) -> float:
    """Best token-level F1 of the prediction over the gold answers."""
    if not gold_answers:
        raise MissingGold("token_f1 needs at least one gold answer")
    pred_tokens = normalize(prediction)
    return max(_f1_single(pred_tokens, normalize(g)) for g in gold_answers)


@dataclass(frozen=True)
class EvalRecord:
    question_id: str
    prediction: str
    gold_answers: tuple[str, ...]
    acc: int
    f1: float
    acc_judge: str | None = None  # "yes" / "no" when judged

    def __post_init__(self):
        if self.acc not in (0, 1):
            raise ValueError("acc must be 0 or 1")
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError("f1 must be in [0, 1]")


def judge(llm: LlmClient, library: TemplateLibrary, question: str,
          prediction: str, gold_answer: str,
          params: DecodingParams = DecodingParams()) -> str:
    """Ask the judge model whether the prediction implies the gold answer.

    The reply's first token decides: yes-prefix -> "yes", no-prefix -> "no".
    Anything else is retried once and then recorded as "no" with a warning.
    """
    messages = render_judge(library, question, prediction, gold_answer)
    last = ""
    for _ in range(2):
        last = llm.complete(messages, params).text
        try:
            return _parse_verdict(last)
        except UnparseableVerdict:
            continue
    log.warning("judge verdict unparseable, recording no: %r", last[:80])
    return "no"


def _parse_verdict(text: str) -> str:
    head = text.split(None, 1)
    first = head[0].lower() if head else ""
    if first.startswith("yes"):
        return "yes"
    if first.startswith("no"):
        return "no"
    raise UnparseableVerdict(f"verdict starts with neither yes nor no: {text[:80]!r}")


def score_prediction(question: Question, prediction: str) -> EvalRecord:
    """Metric-only record for one prediction against its question's golds."""
    golds = list(question.gold_answers)
    return EvalRecord(
        question_id=question.id,
        prediction=prediction,
        gold_answers=tuple(golds),
        acc=cover_em(prediction, golds),
        f1=token_f1(prediction, golds),
    )


def aggregate(records: Sequence[EvalRecord]) -> dict[str, float | None]:
    """Percentage means to two decimals; judge mean over judged records."""
    if not records:
        raise EmptyRecords("nothing to aggregate")
    acc = round(100.0 * sum(r.acc for r in records) / len(records), 2)
    f1 = round(100.0 * sum(r.f1 for r in records) / len(records), 2)
    judged = [r for r in records if r.acc_judge is not None]
    acc_judge = (round(100.0 * sum(r.acc_judge == "yes" for r in judged)
                       / len(judged), 2) if judged else None)
    return {"acc": acc, "f1": f1, "acc_judge": acc_judge}


# --- dataset loading ---

def _iter_records(path: str | Path):
    """Yield (line_no, record) from a JSONL file or a JSON array file."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedDataset(f"{path}: {exc}") from exc
        for i, record in enumerate(data, start=1):
            yield i, record
        return
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield line_no, json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedDataset(f"{path}: {exc}", line=line_no) from exc


def _gold_list(record: dict, line_no: int, path) -> list[str]:
    answer = record.get("answer")
    aliases = record.get("answer_aliases", [])
    golds = []
    if isinstance(answer, str) and answer.strip():
        golds.append(answer)
    golds.extend(a for a in aliases if isinstance(a, str) and a.strip())
    if not golds:
        raise MalformedDataset(f"{path}: record has no answer", line=line_no)
    return golds


def load_dataset(path: str | Path, format: str = "generic") -> list[Question]:
    """Load a benchmark file into questions with gold answers.

    generic is JSONL ``{id, question, answers: [...]}``; the named formats
    accept the public release layouts (JSON array or JSONL) and map
    StrategyQA's boolean labels to yes/no.
    """
    if format not in DATASET_FORMATS:
        raise ValueError(f"format must be one of {DATASET_FORMATS}")
    questions: list[Question] = []
    for line_no, record in _iter_records(path):
        try:
            if format == "generic":
                golds = record["answers"]
                if not isinstance(golds, list) or not golds:
                    raise KeyError("answers")
                q = Question(id=str(record["id"]), text=record["question"],
                             gold_answers=tuple(str(g) for g in golds))
            elif format == "strategyqa":
                label = record["answer"]
                if not isinstance(label, bool):
                    raise MalformedDataset(
                        f"{path}: strategyqa answer must be boolean", line=line_no)
                q = Question(id=str(record.get("qid") or record.get("id") or line_no),
                             text=record["question"],
                             gold_answers=("yes" if label else "no",))
            else:  # hotpotqa / musique / 2wiki
                q = Question(id=str(record.get("_id") or record.get("id") or line_no),
                             text=record["question"],
                             gold_answers=tuple(_gold_list(record, line_no, path)))
        except MalformedDataset:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDataset(f"{path}: bad record ({exc})", line=line_no) from exc
        questions.append(q)
    return questions


# --- report files ---

def write_records_csv(records: Sequence[EvalRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["question_id", "acc", "f1", "acc_judge"])
        for r in records:
            writer.writerow([r.question_id, r.acc, f"{r.f1:.4f}",
                             r.acc_judge if r.acc_judge is not None else ""])


def write_summary(summary: dict[str, Any], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, ensure_ascii=False)
        f.write("\n")
