"""Domain model for labeled examples with optional explanations.

Examples live in JSONL files, one record per line:

    {"id": str,
     "segments": {name: str, ...},
     "choices": [str, ...]?,          # required when the task has no fixed label set
     "label": str,
     "explanations": [{"text": str} | {"segment": str, "start": int, "end": int}, ...]}

Character offsets are Unicode code-point offsets, never bytes.
All types are immutable values; every operation here is pure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Union


class CorpusError(ValueError):
    """Base class for corpus-level failures."""


class JsonlError(CorpusError):
    """A line of a JSONL file could not be decoded or lacks the record schema."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(CorpusError):
    """An example violates a type invariant. ``code`` names the violated field."""

    def __init__(self, code: str, message: str, example_id: str | None = None):
        prefix = f"example {example_id!r}: " if example_id else ""
        super().__init__(f"{prefix}{message}")
        self.code = code
        self.example_id = example_id


@dataclass(frozen=True)
class Task:
    """A task kind: id, ordered segment names, optional fixed label set.

    ``labels is None`` means the label must come from the example's own
    choices.  ``named_segments=False`` is the single-segment layout where the
    segment text directly follows the "<task>:" prefix.
    """

    name: str
    segments: tuple[str, ...]
    labels: tuple[str, ...] | None = None
    named_segments: bool = True

    def __post_init__(self):
        if not self.name:
            raise ValidationError("task", "task name must be non-empty")
        if not self.segments:
            raise ValidationError("task", "task needs at least one segment")
        if not self.named_segments and len(self.segments) != 1:
            raise ValidationError(
                "task", "unnamed-segment layout requires exactly one segment"
            )


SENTIMENT = Task("sentiment", ("review",), ("positive", "negative"), named_segments=False)
NLI = Task("nli", ("hypothesis", "premise"), ("entailment", "neutral", "contradiction"))
COSE = Task("cos_e", ("question",), None)
MULTIRC = Task("multirc", ("question", "answer", "paragraph"), ("True", "False"))

BUILTIN_TASKS = {t.name: t for t in (SENTIMENT, NLI, COSE, MULTIRC)}


def task_by_name(name: str) -> Task:
    try:
        return BUILTIN_TASKS[name]
    except KeyError:
        raise CorpusError(
            f"unknown task {name!r}; builtins are {sorted(BUILTIN_TASKS)}"
        ) from None


@dataclass(frozen=True)
class Span:
    """Character span [start, end) inside one named segment."""

    segment: str
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise ValidationError(
                "span_bounds", f"span needs 0 <= start < end, got [{self.start}, {self.end})"
            )

    def overlaps(self, other: "Span") -> bool:
        return (
            self.segment == other.segment
            and self.start < other.end
            and other.start < self.end
        )


@dataclass(frozen=True)
class Abstractive:
    """Free-text explanation."""

    text: str


@dataclass(frozen=True)
class Extractive:
    """Explanation that points at a span of the input."""

    span: Span


Explanation = Union[Abstractive, Extractive]


@dataclass(frozen=True)
class Example:
    """One labeled instance with optional explanations."""

    id: str
    task: Task
    segments: dict[str, str]
    label: str
    choices: tuple[str, ...] | None = None
    explanations: tuple[Explanation, ...] = ()

    @property
    def has_explanation(self) -> bool:
        return len(self.explanations) > 0

    def segment_text(self, name: str) -> str:
        return self.segments[name]

    def span_text(self, span: Span) -> str:
        return self.segments[span.segment][span.start : span.end]


def label_set(e: Example) -> tuple[str, ...]:
    """Admissible labels for this example: the task's set, or its choices."""
    if e.task.labels is not None:
        return e.task.labels
    return e.choices or ()


def validate_example(e: Example) -> None:
    """Raise ValidationError (with .code naming the field) on any invariant breach."""
    if not e.id:
        raise ValidationError("id", "id must be non-empty", e.id)

    expected = e.task.segments
    got = tuple(e.segments.keys())
    if got != expected:
        raise ValidationError(
            "segments",
            f"segments {got!r} do not match task segments {expected!r}",
            e.id,
        )
    for name, text in e.segments.items():
        if not isinstance(text, str):
            raise ValidationError("segments", f"segment {name!r} is not a string", e.id)

    if e.task.labels is None:
        if not e.choices:
            raise ValidationError(
                "choices", f"task {e.task.name!r} requires per-example choices", e.id
            )
    if e.choices is not None and not all(isinstance(c, str) and c for c in e.choices):
        raise ValidationError("choices", "choices must be non-empty strings", e.id)

    admissible = label_set(e)
    if e.label not in admissible:
        raise ValidationError(
            "label", f"label {e.label!r} not in {list(admissible)!r}", e.id
        )

    spans: list[Span] = []
    for exp in e.explanations:
        if isinstance(exp, Abstractive):
            if not exp.text:
                raise ValidationError("explanation_text", "abstractive text is empty", e.id)
            if "\n" in exp.text:
                raise ValidationError(
                    "explanation_text", "abstractive text contains a newline", e.id
                )
        elif isinstance(exp, Extractive):
            span = exp.span
            if span.segment not in e.segments:
                raise ValidationError(
                    "span_segment", f"span names unknown segment {span.segment!r}", e.id
                )
            seg_len = len(e.segments[span.segment])
            if span.end > seg_len:
                raise ValidationError(
                    "span_bounds",
                    f"span [{span.start}, {span.end}) exceeds segment "
                    f"{span.segment!r} length {seg_len}",
                    e.id,
                )
            for prev in spans:
                if span.overlaps(prev):
                    raise ValidationError(
                        "span_overlap",
                        f"spans [{prev.start}, {prev.end}) and "
                        f"[{span.start}, {span.end}) overlap in {span.segment!r}",
                        e.id,
                    )
            spans.append(span)
        else:
            raise ValidationError("explanation", f"unknown explanation {exp!r}", e.id)


def strip_explanations(e: Example) -> Example:
    return replace(e, explanations=())


# -- JSONL (de)serialization --


def example_from_record(record: dict, task: Task, line_no: int | None = None) -> Example:
    """Build and validate an Example from one decoded JSONL record."""

    def bad(msg: str):
        if line_no is not None:
            return JsonlError(line_no, msg)
        return CorpusError(msg)

    if not isinstance(record, dict):
        raise bad("record is not a JSON object")
    for key in ("id", "segments", "label"):
        if key not in record:
            raise bad(f"missing required key {key!r}")

    raw_exps = record.get("explanations", [])
    if not isinstance(raw_exps, list):
        raise bad('"explanations" must be a list')
    explanations: list[Explanation] = []
    for raw in raw_exps:
        if not isinstance(raw, dict):
            raise bad(f"explanation {raw!r} is not an object")
        if "text" in raw:
            explanations.append(Abstractive(raw["text"]))
        elif {"segment", "start", "end"} <= raw.keys():
            try:
                span = Span(raw["segment"], raw["start"], raw["end"])
            except ValidationError as err:
                raise bad(str(err)) from None
            explanations.append(Extractive(span))
        else:
            raise bad(f"explanation {raw!r} has neither text nor span keys")

    choices = record.get("choices")
    example = Example(
        id=record["id"],
        task=task,
        segments=dict(record["segments"]),
        label=record["label"],
        choices=tuple(choices) if choices is not None else None,
        explanations=tuple(explanations),
    )
    validate_example(example)
    return example


def example_to_record(e: Example) -> dict:
    record: dict = {"id": e.id, "segments": dict(e.segments)}
    if e.choices is not None:
        record["choices"] = list(e.choices)
    record["label"] = e.label
    record["explanations"] = [
        {"text": exp.text}
        if isinstance(exp, Abstractive)
        else {"segment": exp.span.segment, "start": exp.span.start, "end": exp.span.end}
        for exp in e.explanations
    ]
    return record


def load_examples(path: str | Path, task: Task) -> list[Example]:
    """Load a JSONL corpus; line order is preserved.

    Raises JsonlError with the 1-based line number on malformed lines and
    ValidationError (naming the field) on invariant violations.
    """
    examples = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise JsonlError(line_no, f"invalid JSON ({err.msg})") from None
            examples.append(example_from_record(record, task, line_no=line_no))
    return examples


def save_examples(path: str | Path, examples: Iterable[Example]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in examples:
            f.write(json.dumps(example_to_record(e), ensure_ascii=False) + "\n")
