"""Recover structured predictions from raw decoded text.

The target grammar is "<label>[ explanation: <text>]*".  Splitting on the
literal separator inverts the formatter exactly.  Extractive explanation
strings are aligned back to input spans by leftmost non-overlapping
substring search; strings with no match are spurious and dropped from
span-based scoring.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Example, Span, Task
from .formatter import EXPLANATION_SEP


class ParseError(ValueError):
    pass


class PredictionsError(ValueError):
    pass


@dataclass(frozen=True)
class ParsedPrediction:
    label: str
    explanations: tuple[str, ...]


@dataclass(frozen=True)
class AlignedPrediction:
    label: str
    matched: tuple[Span, ...]
    spurious: tuple[str, ...]


def parse_prediction(raw: str) -> ParsedPrediction:
    """Split raw decoder output into a label and ordered explanation strings."""
    if raw is None or raw.strip() == "":
        raise ParseError("prediction is empty")
    pieces = raw.split(EXPLANATION_SEP)
    label = pieces[0].strip()
    if not label:
        raise ParseError(f"no label before separator in {raw!r}")
    for piece in pieces[1:]:
        if piece == "":
            raise ParseError(f"empty explanation between separators in {raw!r}")
    return ParsedPrediction(label, tuple(pieces[1:]))


def align_spans(pred: ParsedPrediction, e: Example) -> AlignedPrediction:
    """Match explanation strings to input spans, leftmost first.

    Each string claims its leftmost occurrence (scanning segments in task
    order) that does not overlap an already-matched span; unmatched strings
    are reported as spurious, never silently dropped.
    """
    matched: list[Span] = []
    spurious: list[str] = []
    for text in pred.explanations:
        found = _find_leftmost(text, e, matched)
        if found is None:
            spurious.append(text)
        else:
            matched.append(found)
    order = {name: i for i, name in enumerate(e.task.segments)}
    matched.sort(key=lambda s: (order[s.segment], s.start))
    return AlignedPrediction(pred.label, tuple(matched), tuple(spurious))


def _find_leftmost(text: str, e: Example, taken: list[Span]) -> Span | None:
    if not text:
        return None
    for name in e.task.segments:
        seg = e.segments[name]
        start = 0
        while True:
            i = seg.find(text, start)
            if i < 0:
                break
            candidate = Span(name, i, i + len(text))
            if not any(candidate.overlaps(t) for t in taken):
                return candidate
            start = i + 1
    return None


def label_of(
    pred: ParsedPrediction, task: Task, choices: tuple[str, ...] | None = None
) -> str:
    """Canonicalize a predicted label; anything off the label set is "invalid".

    Matching is exact (case-sensitive) after trimming; for tasks without a
    fixed label set, pass the example's choices.
    """
    admissible = task.labels if task.labels is not None else (choices or ())
    label = pred.label.strip()
    return label if label in admissible else "invalid"


def load_predictions(path: str | Path) -> dict[str, str]:
    """Read a predictions JSONL file ({"id", "output"}) keyed by unique id."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise PredictionsError(f"line {line_no}: invalid JSON ({err.msg})") from None
            if "id" not in record or "output" not in record:
                raise PredictionsError(f"line {line_no}: needs id and output keys")
            if record["id"] in out:
                raise PredictionsError(f"line {line_no}: duplicate id {record['id']!r}")
            out[record["id"]] = record["output"]
    return out
