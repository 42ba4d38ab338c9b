"""Training-mixture construction: subsampling annotations, concatenating
corpora under per-source explanation policies, and the cross-task rewrites
that align one task's serialization with another's.

Every operation is deterministic for a fixed seed; the seed is always an
explicit required argument, never drawn from system entropy.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import COSE, Example, Extractive, NLI, Task, strip_explanations
from .formatter import FormattedPair, format_corpus, format_input


class MixError(ValueError):
    pass


NLI_CHOICES = ("entailment", "neutral", "contradiction")

# Serialization-compatible stand-in task for rewritten multiple-choice
# examples: the question rides in the "premise" slot, label comes from the
# example's own choices.
NLI_FROM_CHOICES = Task("nli", ("premise",), None)


def subsample_explanations(
    examples: Sequence[Example], n_keep: int, seed: int
) -> list[Example]:
    """Keep explanations on exactly n_keep annotated examples, clear the rest.

    Labels, segment texts, and corpus order never change.
    """
    annotated = [i for i, e in enumerate(examples) if e.has_explanation]
    if n_keep > len(annotated):
        raise MixError(
            f"n_keep={n_keep} exceeds the {len(annotated)} annotated examples"
        )
    keep = set(random.Random(seed).sample(annotated, n_keep))
    return [
        e if i in keep or not e.has_explanation else strip_explanations(e)
        for i, e in enumerate(examples)
    ]


def request_explanations(examples: Sequence[Example]) -> list[str]:
    """Inference-time inputs with "explain " prepended to every example."""
    return [format_input(e, explain=True) for e in examples]


def rewrite_cose_as_nli(e: Example) -> Example:
    """Re-serialize a multiple-choice question under the nli prefix.

    The question segment is renamed premise; choices and label are untouched,
    so parsing the formatted target is unchanged.
    """
    if e.task != COSE:
        raise MixError(f"example {e.id!r} has task {e.task.name!r}, expected cos_e")
    explanations = tuple(
        replace(exp, span=replace(exp.span, segment="premise"))
        if isinstance(exp, Extractive) and exp.span.segment == "question"
        else exp
        for exp in e.explanations
    )
    return replace(
        e,
        task=NLI_FROM_CHOICES,
        segments={"premise": e.segments["question"]},
        explanations=explanations,
    )


def add_fixed_nli_choices(e: Example) -> Example:
    """Attach the three fixed entailment choices to an nli example (idempotent)."""
    if e.task != NLI:
        raise MixError(f"example {e.id!r} has task {e.task.name!r}, expected nli")
    return replace(e, choices=NLI_CHOICES)


REWRITES = {
    "cose_as_nli": rewrite_cose_as_nli,
    "nli_fixed_choices": add_fixed_nli_choices,
}


# -- star-rating binarization --

# The default maps high ratings to "positive".  The literal map (low ratings
# positive) is kept for strict reproduction of the transfer setup's wording,
# which inverts polarity relative to its own worked examples.
DEFAULT_STAR_POLARITY = {1: "negative", 2: "negative", 4: "positive", 5: "positive"}
LITERAL_STAR_POLARITY = {1: "positive", 2: "positive", 4: "negative", 5: "negative"}


def binarize_stars(star_rating: int, polarity_map: Mapping[int, str] | None = None) -> str | None:
    """Map a 1-5 star rating to a sentiment label; 3-star ratings are dropped."""
    if star_rating not in (1, 2, 3, 4, 5):
        raise MixError(f"star rating {star_rating!r} outside 1..5")
    if star_rating == 3:
        return None
    polarity_map = DEFAULT_STAR_POLARITY if polarity_map is None else polarity_map
    return polarity_map[star_rating]


# -- mixtures --


@dataclass(frozen=True)
class SourceSpec:
    corpus_id: str
    policy: str  # "all" | "none" | "keep"
    n_keep: int | None = None
    rewrite: str | None = None

    def __post_init__(self):
        if self.policy not in ("all", "none", "keep"):
            raise MixError(f"unknown policy {self.policy!r}")
        if self.policy == "keep" and (self.n_keep is None or self.n_keep < 0):
            raise MixError("policy keep requires a non-negative n_keep")
        if self.rewrite is not None and self.rewrite not in REWRITES:
            raise MixError(f"unknown rewrite {self.rewrite!r}")


@dataclass(frozen=True)
class MixtureSpec:
    sources: tuple[SourceSpec, ...]
    seed: int
    shuffle: bool = True


def build_mixture(
    spec: MixtureSpec, corpora: Mapping[str, Sequence[Example]]
) -> list[FormattedPair]:
    """Format each source under its policy, concatenate, optionally shuffle.

    Policies "all" and "keep" emit explanation-supervised pairs for annotated
    examples and plain pairs for the rest; "none" emits plain pairs only.
    The shuffled output is a permutation of the unshuffled one.
    """
    pairs: list[FormattedPair] = []
    for i, source in enumerate(spec.sources):
        if source.corpus_id not in corpora:
            raise MixError(f"source {source.corpus_id!r} not among the given corpora")
        examples = list(corpora[source.corpus_id])
        if source.rewrite is not None:
            examples = [REWRITES[source.rewrite](e) for e in examples]
        if source.policy == "none":
            policy = [False] * len(examples)
        else:
            if source.policy == "keep":
                # Per-source seed offset keeps draws independent across sources.
                examples = subsample_explanations(examples, source.n_keep, spec.seed + i)
            policy = [e.has_explanation for e in examples]
        pairs.extend(format_corpus(examples, policy))
    if spec.shuffle:
        random.Random(spec.seed).shuffle(pairs)
    return pairs


def mixture_spec_from_json(path: str | Path) -> tuple[MixtureSpec, dict[str, dict]]:
    """Load a declarative mixture config.

    Returns the spec plus {corpus_id: {"path": ..., "task": ...}} so callers
    can resolve and load the referenced corpus files.

    Config schema::

        {"seed": int, "shuffle": bool,
         "sources": [{"corpus": id, "path": file, "task": name,
                      "policy": "all"|"none"|"keep", "n_keep": int?,
                      "rewrite": name?}, ...]}
    """
    with open(path, "r", encoding="utf-8") as f:
        config = json.load(f)
    if "seed" not in config:
        raise MixError("mixture config requires an explicit seed")
    sources = []
    files: dict[str, dict] = {}
    for raw in config.get("sources", []):
        for key in ("corpus", "path", "task", "policy"):
            if key not in raw:
                raise MixError(f"mixture source missing key {key!r}: {raw!r}")
        sources.append(
            SourceSpec(
                corpus_id=raw["corpus"],
                policy=raw["policy"],
                n_keep=raw.get("n_keep"),
                rewrite=raw.get("rewrite"),
            )
        )
        known = files.setdefault(raw["corpus"], {"path": raw["path"], "task": raw["task"]})
        if known != {"path": raw["path"], "task": raw["task"]}:
            raise MixError(f"corpus id {raw['corpus']!r} bound to two different files")
    if not sources:
        raise MixError("mixture config has no sources")
    spec = MixtureSpec(
        sources=tuple(sources),
        seed=config["seed"],
        shuffle=config.get("shuffle", True),
    )
    return spec, files
