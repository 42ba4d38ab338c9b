"""Quantitative scores: accuracy, corpus BLEU, token-level rationale F1, F1a.

BLEU follows the reference corpus scorer with "exp" smoothing and the
international tokenizer (space around every Unicode punctuation/symbol
character except punctuation sitting between digits).  Token F1 compares
per-token binary rationale masks built over a deterministic rule-based word
tokenizer: whitespace split, leading/trailing punctuation detached as
single-character tokens.  Scores computed here are comparable within the
toolkit; the rule-based tokenizer can drift slightly from NLP-pipeline
tokenizers used elsewhere.
"""
from __future__ import annotations

import functools
import json
import math
import re
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from .corpus import Example, Span

NGRAM_ORDER = 4


class MetricError(ValueError):
    pass


# -- tokenization --


@functools.lru_cache(maxsize=1)
def _intl_regexes():
    # One pass over the full code space; cached for the process lifetime.
    punct = "".join(
        chr(x) for x in range(sys.maxunicode) if unicodedata.category(chr(x)).startswith("P")
    )
    symbol = "".join(
        chr(x) for x in range(sys.maxunicode) if unicodedata.category(chr(x)).startswith("S")
    )
    nondigit_punct = re.compile(r"([^\d])([" + re.escape(punct) + r"])")
    punct_nondigit = re.compile(r"([" + re.escape(punct) + r"])([^\d])")
    symbols = re.compile("([" + re.escape(symbol) + "])")
    return nondigit_punct, punct_nondigit, symbols


def intl_tokenize(text: str) -> list[str]:
    """International BLEU tokenization: split out punctuation and symbols.

    Punctuation stays attached when both neighbors are digits (decimal and
    thousands separators), matching the reference scorer.
    """
    nondigit_punct, punct_nondigit, symbols = _intl_regexes()
    text = nondigit_punct.sub(r"\1 \2 ", text)
    text = punct_nondigit.sub(r" \1 \2", text)
    text = symbols.sub(r" \1 ", text)
    return text.split()


_WORD_RE = re.compile(r"\S+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def word_tokenize(text: str) -> list[tuple[str, int, int]]:
    """Rule-based word tokenizer with character offsets.

    Whitespace-separated chunks; leading and trailing punctuation characters
    become their own single-character tokens.
    """
    tokens: list[tuple[str, int, int]] = []
    for m in _WORD_RE.finditer(text):
        chunk, start, end = m.group(), m.start(), m.end()
        lead = 0
        while lead < len(chunk) and _is_punct(chunk[lead]):
            tokens.append((chunk[lead], start + lead, start + lead + 1))
            lead += 1
        trail: list[tuple[str, int, int]] = []
        k = len(chunk)
        while k > lead and _is_punct(chunk[k - 1]):
            trail.append((chunk[k - 1], start + k - 1, start + k))
            k -= 1
        if k > lead:
            tokens.append((chunk[lead:k], start + lead, start + k))
        tokens.extend(reversed(trail))
    return tokens


# -- token masks --


@dataclass(frozen=True)
class Token:
    text: str
    segment: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenMask:
    tokens: tuple[Token, ...]
    mask: tuple[bool, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.mask):
            raise MetricError(
                f"mask length {len(self.mask)} != token count {len(self.tokens)}"
            )


def tokenize_example(
    e: Example, tokenizer: Callable[[str], list[tuple[str, int, int]]] = word_tokenize
) -> tuple[Token, ...]:
    """Tokens over the concatenated input segments, in task segment order."""
    tokens: list[Token] = []
    for name in e.task.segments:
        for text, start, end in tokenizer(e.segments[name]):
            tokens.append(Token(text, name, start, end))
    return tuple(tokens)


def mask_from_spans(
    e: Example,
    spans: Sequence[Span],
    tokenizer: Callable[[str], list[tuple[str, int, int]]] = word_tokenize,
) -> TokenMask:
    """Mark every token whose character range intersects any of the spans."""
    for span in spans:
        if span.segment not in e.segments:
            raise MetricError(f"span names unknown segment {span.segment!r}")
        if span.end > len(e.segments[span.segment]):
            raise MetricError(
                f"span [{span.start}, {span.end}) exceeds segment {span.segment!r}"
            )
    tokens = tokenize_example(e, tokenizer)
    mask = tuple(
        any(
            t.segment == s.segment and t.start < s.end and s.start < t.end
            for s in spans
        )
        for t in tokens
    )
    return TokenMask(tokens, mask)


# -- scores --


def accuracy(preds: Sequence[str], golds: Sequence[str]) -> float:
    """Exact-match accuracy; the "invalid" sentinel never matches."""
    if len(preds) != len(golds):
        raise MetricError(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise MetricError("empty prediction list")
    hits = sum(1 for p, g in zip(preds, golds) if p == g and p != "invalid")
    return hits / len(preds)


def bleu(
    candidates: Sequence[str], references: Sequence[str], lowercase: bool = False
) -> float:
    """Corpus-level BLEU (0-100) with exp smoothing over intl tokenization.

    Clipped modified n-gram precisions for n=1..4; when an order's match
    count is zero the precision is smoothed to 1/(m * total) with m doubling
    at every such order; brevity penalty exp(1 - ref_len/cand_len) applies
    when the candidate side is shorter.
    """
    if len(candidates) != len(references):
        raise MetricError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise MetricError("empty candidate list")

    correct = [0] * NGRAM_ORDER
    total = [0] * NGRAM_ORDER
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        if lowercase:
            cand, ref = cand.lower(), ref.lower()
        cand_tokens = intl_tokenize(cand)
        ref_tokens = intl_tokenize(ref)
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        ref_ngrams = _ngrams(ref_tokens)
        for ngram, count in _ngrams(cand_tokens).items():
            n = len(ngram)
            correct[n - 1] += min(count, ref_ngrams.get(ngram, 0))
            total[n - 1] += count

    precisions = [0.0] * NGRAM_ORDER
    smooth = 1.0
    for n in range(NGRAM_ORDER):
        if total[n] == 0:
            break
        if correct[n] == 0:
            smooth *= 2
            precisions[n] = 100.0 / (smooth * total[n])
        else:
            precisions[n] = 100.0 * correct[n] / total[n]

    if cand_len == 0:
        brevity = 0.0
    elif cand_len < ref_len:
        brevity = math.exp(1 - ref_len / cand_len)
    else:
        brevity = 1.0
    log_sum = sum(math.log(p) if p > 0.0 else -9999999999 for p in precisions)
    # The score is mathematically <= 100; exp() can overshoot by a few ulps.
    return min(brevity * math.exp(log_sum / NGRAM_ORDER), 100.0)


def _ngrams(tokens: list[str]) -> Counter:
    grams: Counter = Counter()
    for n in range(1, NGRAM_ORDER + 1):
        for i in range(len(tokens) - n + 1):
            grams[tuple(tokens[i : i + n])] += 1
    return grams


def token_f1(pred: TokenMask, gold: TokenMask) -> float:
    """F1 over positionwise mask agreement; 1.0 when both masks are empty."""
    if pred.tokens != gold.tokens:
        raise MetricError("token streams differ; masks must share one tokenization")
    tp = sum(1 for p, g in zip(pred.mask, gold.mask) if p and g)
    fp = sum(1 for p, g in zip(pred.mask, gold.mask) if p and not g)
    fn = sum(1 for p, g in zip(pred.mask, gold.mask) if not p and g)
    return _f1(tp, fp, fn)


def f1a(preds: Sequence[bool], golds: Sequence[bool]) -> float:
    """Binary F1 with True as the positive class over the flat answer list."""
    if len(preds) != len(golds):
        raise MetricError(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise MetricError("empty prediction list")
    tp = sum(1 for p, g in zip(preds, golds) if p and g)
    fp = sum(1 for p, g in zip(preds, golds) if p and not g)
    fn = sum(1 for p, g in zip(preds, golds) if not p and g)
    return _f1(tp, fp, fn)


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


# -- reports --


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    n_examples: int
    n_spurious: int = 0
    bleu: float | None = None
    token_f1: float | None = None
    f1a: float | None = None
    lowercase_bleu: bool = False

    def __post_init__(self):
        for name in ("accuracy", "token_f1", "f1a"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise MetricError(f"{name} {value} outside [0, 1]")
        if self.bleu is not None and not 0.0 <= self.bleu <= 100.0:
            raise MetricError(f"bleu {self.bleu} outside [0, 100]")

    def to_json(self) -> str:
        payload = {
            "accuracy": self.accuracy,
            "bleu": self.bleu,
            "token_f1": self.token_f1,
            "f1a": self.f1a,
            "n_examples": self.n_examples,
            "n_spurious": self.n_spurious,
            "lowercase_bleu": self.lowercase_bleu,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_table(self) -> str:
        headers = ["Acc", "BLEU", "TF1", "F1a"]
        cells = [
            f"{self.accuracy:.3f}",
            "-" if self.bleu is None else f"{self.bleu:.1f}",
            "-" if self.token_f1 is None else f"{self.token_f1:.3f}",
            "-" if self.f1a is None else f"{self.f1a:.3f}",
        ]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row
