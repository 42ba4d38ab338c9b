import pytest
from hypothesis import given, settings

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
from explainkit.formatter import (
    FormatError,
    format_corpus,
    format_example,
    format_input,
    read_pairs,
    write_pairs,
)
from tests.conftest import valid_examples

REVIEW = (
    "I went to see this movie with my husband, and we both thought the acting was terrible!"
)
MOVIE = Example(
    "r1",
    SENTIMENT,
    {"review": REVIEW},
    "negative",
    explanations=(Abstractive("the acting was terrible"),),
)


def test_sentiment_with_explanation_exact_strings():
    pair = format_example(MOVIE, True)
    assert pair.input_text == "explain sentiment: " + REVIEW
    assert pair.target_text == "negative explanation: the acting was terrible"
    assert pair.wants_explanation


def test_sentiment_without_explanation_exact_strings():
    pair = format_example(MOVIE, False)
    assert pair.input_text == "sentiment: " + REVIEW
    assert pair.target_text == "negative"
    assert not pair.wants_explanation


def test_two_extractive_spans_serialized_in_order():
    e = Example(
        "m1",
        MULTIRC,
        {"question": "why?", "answer": "because", "paragraph": "alpha beta gamma delta"},
        "True",
        explanations=(
            Extractive(Span("paragraph", 0, 5)),
            Extractive(Span("paragraph", 11, 16)),
        ),
    )
    pair = format_example(e, True)
    assert pair.target_text == "True explanation: alpha explanation: gamma"


def test_nli_layout_and_choices():
    e = Example(
        "n1",
        NLI,
        {"hypothesis": "a man naps", "premise": "a man bowls"},
        "contradiction",
        choices=("entailment", "neutral", "contradiction"),
    )
    assert (
        format_input(e, False)
        == "nli hypothesis: a man naps premise: a man bowls"
        " choice: entailment choice: neutral choice: contradiction"
    )


def test_cose_layout():
    e = Example(
        "q1",
        COSE,
        {"question": "Where can one obtain a bass fiddle?"},
        "music store",
        choices=("music store", "orchestra"),
    )
    assert format_input(e, True) == (
        "explain cos_e question: Where can one obtain a bass fiddle?"
        " choice: music store choice: orchestra"
    )


def test_with_explanation_requires_annotations():
    bare = Example("b", SENTIMENT, {"review": "fine"}, "positive")
    with pytest.raises(FormatError, match="no explanations"):
        format_example(bare, True)


def test_ambiguous_payload_rejected():
    e = Example(
        "a",
        SENTIMENT,
        {"review": "x"},
        "positive",
        explanations=(Abstractive("bad explanation: overlap"), Abstractive("tail")),
    )
    with pytest.raises(FormatError, match="separator"):
        format_example(e, True)
    # Adjacency fusion: first payload ends with " explanation:".
    e2 = Example(
        "a2",
        SENTIMENT,
        {"review": "x"},
        "positive",
        explanations=(Abstractive("x explanation:"), Abstractive("y")),
    )
    with pytest.raises(FormatError):
        format_example(e2, True)


def test_format_corpus_flag_counts():
    examples = [MOVIE] * 4
    pairs = format_corpus(examples, [True, False, True, False])
    assert sum(p.input_text.startswith("explain ") for p in pairs) == 2
    assert all(not p.target_text.startswith("explain") for p in pairs)
    all_plain = format_corpus(examples, [False] * 4)
    assert not any(p.input_text.startswith("explain") for p in all_plain)
    all_exp = format_corpus(examples, [True] * 4)
    assert all("explanation:" in p.target_text for p in all_exp)


@given(valid_examples())
@settings(max_examples=200)
def test_grammar_determinism_and_prefix_soundness(e):
    with_exp = e.has_explanation
    first = format_example(e, with_exp)
    second = format_example(e, with_exp)
    assert first == second
    assert first.input_text.startswith("explain ") == with_exp
    if not with_exp:
        assert first.target_text == e.label


@given(valid_examples(explanation_kind="extractive"))
@settings(max_examples=150)
def test_extractive_payloads_are_input_substrings(e):
    pair = format_example(e, True)
    for piece in pair.target_text.split(" explanation: ")[1:]:
        assert piece in pair.input_text


def test_pair_files_roundtrip(tmp_path):
    pairs = [format_example(MOVIE, True), format_example(MOVIE, False)]
    for fmt in ("jsonl", "tsv"):
        path = tmp_path / f"pairs.{fmt}"
        write_pairs(path, pairs, fmt=fmt)
        loaded = read_pairs(path, fmt=fmt)
        assert [(p.input_text, p.target_text) for p in loaded] == [
            (p.input_text, p.target_text) for p in pairs
        ]
        assert [p.wants_explanation for p in loaded] == [True, False]
