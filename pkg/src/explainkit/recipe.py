"""End-to-end recipe verification on the synthetic task.

Builds a mixed corpus (explanation-annotated + label-only), trains the toy
model, and measures the prefix-gated behavior on held-out items: inputs
without "explain" should decode to a bare label, inputs with it to a label
plus explanation, and the explanation should match the gold window exactly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from .corpus import Example
from .formatter import format_corpus, format_input
from .mixer import subsample_explanations
from .parser import ParseError, parse_prediction
from .synthgen import SynthSpec, generate
from .toyseq2seq import TrainConfig, ToyModel, decode_text, train_model


@dataclass(frozen=True)
class RecipeScores:
    label_acc_plain: float
    label_acc_explain: float
    prefix_gated: float
    explanation_exact: float
    final_loss: float
    train_seconds: float

    @property
    def label_acc(self) -> float:
        return min(self.label_acc_plain, self.label_acc_explain)


def gold_explanation_texts(e: Example) -> list[str]:
    from .formatter import explanation_payload

    return [explanation_payload(e, exp) for exp in e.explanations]


def evaluate_recipe(model: ToyModel, held_out: list[Example], max_len: int = 12) -> dict:
    """Decode every held-out item with and without the explain prefix."""
    n = len(held_out)
    label_plain = label_explain = gated = exact = 0
    for e in held_out:
        plain = _parse_or_none(decode_text(model, format_input(e, explain=False), max_len))
        explained = _parse_or_none(decode_text(model, format_input(e, explain=True), max_len))
        if plain and plain.label == e.label:
            label_plain += 1
        if explained and explained.label == e.label:
            label_explain += 1
        plain_has = bool(plain and plain.explanations)
        explain_has = bool(explained and explained.explanations)
        if not plain_has and explain_has:
            gated += 1
        if explained and list(explained.explanations) == gold_explanation_texts(e):
            exact += 1
    return {
        "label_acc_plain": label_plain / n,
        "label_acc_explain": label_explain / n,
        "prefix_gated": gated / n,
        "explanation_exact": exact / n,
    }


def _parse_or_none(raw: str):
    try:
        return parse_prediction(raw)
    except ParseError:
        return None


def run_recipe(
    n_train: int = 4000,
    n_keep: int = 2000,
    n_eval: int = 500,
    steps: int = 5000,
    lr: float = 0.5,
    d_model: int = 64,
    batch_size: int = 32,
    seed: int = 0,
    log_every: int = 0,
) -> tuple[ToyModel, list[Example], RecipeScores]:
    """Train one condition of the semi-supervised mixture and score it."""
    corpus = generate(SynthSpec(n_examples=n_train + n_eval, seed=seed))
    train_examples = subsample_explanations(corpus[:n_train], n_keep, seed=seed + 1)
    held_out = corpus[n_train:]
    pairs = format_corpus(train_examples, [e.has_explanation for e in train_examples])
    config = TrainConfig(
        steps=steps,
        batch_size=batch_size,
        learning_rate=lr,
        seed=seed,
        max_input_len=16,
        max_target_len=8,
        d_model=d_model,
    )
    started = time.time()
    model, losses = train_model(pairs, config, log_every=log_every)
    elapsed = time.time() - started
    metrics = evaluate_recipe(model, held_out)
    scores = RecipeScores(
        label_acc_plain=metrics["label_acc_plain"],
        label_acc_explain=metrics["label_acc_explain"],
        prefix_gated=metrics["prefix_gated"],
        explanation_exact=metrics["explanation_exact"],
        final_loss=losses[-1],
        train_seconds=elapsed,
    )
    return model, held_out, scores
