import pytest

from explainkit.corpus import Extractive, validate_example
from explainkit.formatter import format_example
from explainkit.synthgen import (
    DEFAULT_TRIGGERS,
    SynthError,
    SynthSpec,
    generate,
    rule_classifier,
)


def test_deterministic_under_seed():
    a = generate(SynthSpec(n_examples=50, seed=7))
    b = generate(SynthSpec(n_examples=50, seed=7))
    assert a == b
    c = generate(SynthSpec(n_examples=50, seed=8))
    assert a != c


def test_single_polarity_lexicon_rejected():
    with pytest.raises(SynthError):
        SynthSpec(n_examples=1, seed=0, triggers={"great": "positive"})


def test_overlapping_vocabularies_rejected():
    with pytest.raises(SynthError):
        SynthSpec(n_examples=1, seed=0, fillers=("terrible", "the"))


def test_impossible_lengths_rejected():
    with pytest.raises(SynthError):
        SynthSpec(n_examples=1, seed=0, length_range=(2, 2))
    with pytest.raises(SynthError):
        SynthSpec(n_examples=1, seed=0, length_range=(8, 4))


def test_only_positive_triggers_means_all_positive():
    triggers = {"great": "positive", "awful": "negative"}
    examples = generate(SynthSpec(n_examples=40, seed=3, triggers=triggers))
    flipped = [e for e in examples if e.label != rule_classifier(e.segments["review"], triggers)]
    assert flipped == []


def test_explanation_text_is_review_substring_and_three_words():
    for e in generate(SynthSpec(n_examples=100, seed=11)):
        (exp,) = e.explanations
        assert isinstance(exp, Extractive)
        window = e.span_text(exp.span)
        assert window in e.segments["review"]
        assert len(window.split()) == 3
        # The trigger is the middle word of the window.
        assert window.split()[1] in DEFAULT_TRIGGERS


def test_generated_examples_pass_corpus_validation():
    for e in generate(SynthSpec(n_examples=100, seed=5)):
        validate_example(e)
        pair = format_example(e, True)
        assert pair.target_text.startswith(e.label + " explanation: ")


def test_rule_classifier_is_exact_on_the_task():
    examples = generate(SynthSpec(n_examples=500, seed=1))
    assert all(
        rule_classifier(e.segments["review"]) == e.label for e in examples
    )


def test_label_distribution_tracks_lexicon_ratio():
    # Default lexicon is balanced 4/4: labels within 5% of half over 10k.
    examples = generate(SynthSpec(n_examples=10_000, seed=42))
    positive = sum(e.label == "positive" for e in examples) / len(examples)
    assert abs(positive - 0.5) < 0.05
