"""Shared strategies and fixtures."""
from __future__ import annotations

import re

from hypothesis import strategies as st

from explainkit.corpus import (
    COSE,
    MULTIRC,
    NLI,
    SENTIMENT,
    Abstractive,
    Example,
    Extractive,
    Span,
)

_WORD = st.text("abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=6)
_SPICY_WORD = st.text("abcdefghijklmnopqrstuvwxyz'!?,.", min_size=1, max_size=6)


@st.composite
def sentences(draw, min_words=1, max_words=8, spicy=False):
    words = draw(
        st.lists(_SPICY_WORD if spicy else _WORD, min_size=min_words, max_size=max_words)
    )
    return " ".join(words)


@st.composite
def word_spans(draw, segment_name: str, text: str, max_spans: int = 2):
    """Non-overlapping word-aligned spans inside one segment's text."""
    words = [(m.start(), m.end()) for m in re.finditer(r"\S+", text)]
    n = len(words)
    n_spans = draw(st.integers(1, min(max_spans, n)))
    # 2*n_spans strictly increasing word indices delimit disjoint windows.
    cuts = draw(
        st.lists(
            st.integers(0, n - 1), min_size=2 * n_spans, max_size=2 * n_spans
        ).map(sorted)
    )
    spans = []
    prev_end_word = -1
    for i in range(n_spans):
        a, b = cuts[2 * i], cuts[2 * i + 1]
        a = max(a, prev_end_word + 1)
        b = max(b, a)
        if b >= n:
            break
        spans.append(Span(segment_name, words[a][0], words[b][1]))
        prev_end_word = b
    if not spans:
        spans = [Span(segment_name, words[0][0], words[0][1])]
    return spans


@st.composite
def valid_examples(draw, task=None, explanation_kind=None):
    """Well-formed examples across the built-in tasks."""
    if task is None:
        task = draw(st.sampled_from([SENTIMENT, NLI, COSE, MULTIRC]))
    segments = {name: draw(sentences(spicy=True)) for name in task.segments}
    if task.labels is None:
        choices = tuple(
            draw(st.lists(_WORD, min_size=2, max_size=5, unique=True))
        )
        label = draw(st.sampled_from(choices))
    else:
        choices = None
        label = draw(st.sampled_from(task.labels))

    kind = explanation_kind or draw(
        st.sampled_from(["none", "abstractive", "extractive"])
    )
    if kind == "abstractive":
        explanations = tuple(
            Abstractive(t)
            for t in draw(st.lists(sentences(min_words=1, max_words=5), min_size=1, max_size=3))
        )
    elif kind == "extractive":
        seg = draw(st.sampled_from(task.segments))
        explanations = tuple(
            Extractive(s) for s in draw(word_spans(seg, segments[seg]))
        )
    else:
        explanations = ()

    return Example(
        id=draw(st.uuids()).hex,
        task=task,
        segments=segments,
        label=label,
        choices=choices,
        explanations=explanations,
    )
