"""Serialize examples into the explanation-aware text-to-text grammar.

Input side: an optional "explain " prefix, the task prefix, the segment
texts (each introduced by its keyword for multi-segment tasks), then any
choices, each introduced by "choice:".  Target side: the label, then one
" explanation: " separator per explanation.  Everything is joined by single
spaces so the grammar round-trips byte-exactly through the parser.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Abstractive, Example, Extractive

EXPLAIN_PREFIX = "explain "
EXPLANATION_SEP = " explanation: "
CHOICE_KEYWORD = "choice:"


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class FormattedPair:
    input_text: str
    target_text: str
    wants_explanation: bool


def format_input(e: Example, explain: bool) -> str:
    """The serialized input text, with or without the "explain " prefix.

    Usable on explanation-free examples too (inference-time explanation
    requests prepend "explain" regardless of annotation).
    """
    parts: list[str] = []
    if explain:
        parts.append("explain")
    if e.task.named_segments:
        parts.append(e.task.name)
        for name in e.task.segments:
            parts.append(name + ":")
            parts.append(e.segments[name])
    else:
        parts.append(e.task.name + ":")
        parts.append(e.segments[e.task.segments[0]])
    for choice in e.choices or ():
        parts.append(CHOICE_KEYWORD)
        parts.append(choice)
    return " ".join(p for p in parts if p != "")


def explanation_payload(e: Example, explanation) -> str:
    """The target-side text of one explanation (span text for extractive)."""
    if isinstance(explanation, Abstractive):
        text = explanation.text
    elif isinstance(explanation, Extractive):
        text = e.span_text(explanation.span)
    else:
        raise FormatError(f"unknown explanation {explanation!r}")
    if EXPLANATION_SEP in text:
        raise FormatError(
            f"example {e.id!r}: explanation text contains the reserved "
            f"separator {EXPLANATION_SEP!r} and cannot be serialized"
        )
    return text


def format_example(e: Example, with_explanation: bool) -> FormattedPair:
    """Serialize one example; requires annotations when with_explanation."""
    if with_explanation and not e.has_explanation:
        raise FormatError(
            f"example {e.id!r} has no explanations but with_explanation=True"
        )
    input_text = format_input(e, explain=with_explanation)
    target = e.label
    if with_explanation:
        payloads = [explanation_payload(e, exp) for exp in e.explanations]
        target = e.label + "".join(EXPLANATION_SEP + p for p in payloads)
        # Serialize-then-verify: adjacent payloads can fuse into a bogus
        # separator (e.g. one ending in " explanation:"); reject instead of
        # emitting a target the parser would split differently.
        if target.split(EXPLANATION_SEP) != [e.label] + payloads:
            raise FormatError(
                f"example {e.id!r}: explanation texts make the target ambiguous "
                f"around the {EXPLANATION_SEP!r} separator"
            )
    return FormattedPair(input_text, target, with_explanation)


def format_corpus(
    examples: Sequence[Example], policy: Sequence[bool]
) -> list[FormattedPair]:
    """format_example over a corpus with a per-example with/without flag."""
    if len(policy) != len(examples):
        raise FormatError(
            f"policy has {len(policy)} flags for {len(examples)} examples"
        )
    return [format_example(e, flag) for e, flag in zip(examples, policy)]


# -- pair files --


def write_pairs(path: str | Path, pairs: Iterable[FormattedPair], fmt: str = "jsonl") -> None:
    """Write pairs as JSONL ({"input", "target"}) or TSV, one pair per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if fmt == "jsonl":
            for p in pairs:
                f.write(
                    json.dumps(
                        {"input": p.input_text, "target": p.target_text},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        elif fmt == "tsv":
            for p in pairs:
                if "\t" in p.input_text or "\t" in p.target_text:
                    raise FormatError("text contains a tab; use the jsonl format")
                f.write(f"{p.input_text}\t{p.target_text}\n")
        else:
            raise FormatError(f"unknown pair format {fmt!r}")


def read_pairs(path: str | Path, fmt: str = "jsonl") -> list[FormattedPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if fmt == "jsonl":
                record = json.loads(line)
                inp, tgt = record["input"], record["target"]
            elif fmt == "tsv":
                inp, tgt = line.split("\t", 1)
            else:
                raise FormatError(f"unknown pair format {fmt!r}")
            pairs.append(FormattedPair(inp, tgt, inp.startswith(EXPLAIN_PREFIX)))
    return pairs
