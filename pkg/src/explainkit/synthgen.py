"""Deterministic synthetic sentiment corpus with known rationales.

Each review is a sequence of neutral filler words with exactly one polarity
trigger embedded somewhere strictly inside it.  The label is the trigger's
polarity and the gold explanation is the 3-word window centered on the
trigger, stored as an extractive span (its covered text doubles as the
abstractive form).  A one-rule classifier that scans for trigger words is
exact on this task, so any model error is a model failure, not label noise.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Example, Extractive, Span, SENTIMENT


class SynthError(ValueError):
    pass


DEFAULT_FILLERS = (
    "the", "a", "movie", "film", "plot", "scene", "actor", "director",
    "camera", "score", "story", "screen", "audience", "ticket", "night",
    "evening", "theater", "popcorn", "sequel", "crew",
)

DEFAULT_TRIGGERS = {
    "superb": "positive",
    "wonderful": "positive",
    "delightful": "positive",
    "gripping": "positive",
    "terrible": "negative",
    "dreadful": "negative",
    "boring": "negative",
    "awful": "negative",
}


@dataclass(frozen=True)
class SynthSpec:
    n_examples: int
    seed: int
    fillers: tuple[str, ...] = DEFAULT_FILLERS
    triggers: dict | None = None
    length_range: tuple[int, int] = (5, 10)

    def __post_init__(self):
        if self.triggers is None:
            object.__setattr__(self, "triggers", dict(DEFAULT_TRIGGERS))
        if self.n_examples < 0:
            raise SynthError("n_examples must be >= 0")
        polarities = set(self.triggers.values())
        if not self.triggers or polarities != {"positive", "negative"}:
            raise SynthError("trigger lexicon needs words of both polarities")
        if set(self.fillers) & set(self.triggers):
            raise SynthError("filler and trigger vocabularies must be disjoint")
        lo, hi = self.length_range
        # A 3-word window needs the trigger strictly inside the review.
        if lo < 3 or lo > hi:
            raise SynthError(f"length range ({lo}, {hi}) cannot hold a 3-word window")


def generate(spec: SynthSpec) -> list[Example]:
    """Generate the corpus; bit-deterministic for a fixed seed."""
    rng = random.Random(spec.seed)
    trigger_words = sorted(spec.triggers)
    lo, hi = spec.length_range
    examples = []
    for i in range(spec.n_examples):
        length = rng.randint(lo, hi)
        words = [rng.choice(spec.fillers) for _ in range(length)]
        pos = rng.randint(1, length - 2)
        trigger = rng.choice(trigger_words)
        words[pos] = trigger
        text = " ".join(words)

        starts = []
        offset = 0
        for w in words:
            starts.append(offset)
            offset += len(w) + 1
        span = Span("review", starts[pos - 1], starts[pos + 1] + len(words[pos + 1]))

        examples.append(
            Example(
                id=f"synth-{i:05d}",
                task=SENTIMENT,
                segments={"review": text},
                label=spec.triggers[trigger],
                explanations=(Extractive(span),),
            )
        )
    return examples


def rule_classifier(text: str, triggers: dict | None = None) -> str | None:
    """Label a review by scanning for a trigger word; None when absent."""
    triggers = DEFAULT_TRIGGERS if triggers is None else triggers
    for word in text.split():
        if word in triggers:
            return triggers[word]
    return None
