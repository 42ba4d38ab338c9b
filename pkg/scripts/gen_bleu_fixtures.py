#!/usr/bin/env python3
"""Generate frozen BLEU agreement fixtures.

The oracle below is a line-for-line port of the reference corpus BLEU
scorer (exp smoothing, international tokenization) so the fixture scores
are the reference implementation's outputs, independent of the package's
own scorer.  Run once; the output JSON is checked into tests/fixtures/ and
compared against explainkit.metrics.bleu at a 0.01-point tolerance.

Usage: python3 scripts/gen_bleu_fixtures.py [out.json]
"""
from __future__ import annotations

import json
import math
import random
import re
import sys
import unicodedata
from collections import Counter
from pathlib import Path

NGRAM_ORDER = 4


# -- reference oracle (ported verbatim from the public scorer) --


class _UnicodeRegex:
    def _property_chars(prefix):
        return "".join(
            chr(x) for x in range(sys.maxunicode) if unicodedata.category(chr(x)).startswith(prefix)
        )

    punctuation = _property_chars("P")
    nondigit_punct_re = re.compile(r"([^\d])([" + punctuation + r"])")
    punct_nondigit_re = re.compile(r"([" + punctuation + r"])([^\d])")
    symbol_re = re.compile("([" + _property_chars("S") + "])")


def _tokenize_international(string: str) -> str:
    string = _UnicodeRegex.nondigit_punct_re.sub(r"\1 \2 ", string)
    string = _UnicodeRegex.punct_nondigit_re.sub(r" \1 \2", string)
    string = _UnicodeRegex.symbol_re.sub(r" \1 ", string)
    return string.strip()


def _extract_ngrams(line: str) -> Counter:
    ngrams = Counter()
    tokens = line.split()
    for n in range(1, NGRAM_ORDER + 1):
        for i in range(0, len(tokens) - n + 1):
            ngrams[" ".join(tokens[i : i + n])] += 1
    return ngrams


def _my_log(num: float) -> float:
    if num == 0.0:
        return -9999999999
    return math.log(num)


def reference_corpus_bleu(sys_stream, ref_stream) -> float:
    sys_len = 0
    ref_len = 0
    correct = [0] * NGRAM_ORDER
    total = [0] * NGRAM_ORDER
    for output, ref in zip(sys_stream, ref_stream):
        output = _tokenize_international(output.rstrip())
        ref = _tokenize_international(ref.rstrip())
        sys_len += len(output.split())
        ref_len += len(ref.split())
        ref_ngrams = _extract_ngrams(ref)
        sys_ngrams = _extract_ngrams(output)
        for ngram in sys_ngrams.keys():
            n = len(ngram.split())
            correct[n - 1] += min(sys_ngrams[ngram], ref_ngrams.get(ngram, 0))
            total[n - 1] += sys_ngrams[ngram]

    precisions = [0.0] * NGRAM_ORDER
    smooth_mteval = 1.0
    for n in range(NGRAM_ORDER):
        if total[n] == 0:
            break
        if correct[n] == 0:
            smooth_mteval *= 2
            precisions[n] = 100.0 / (smooth_mteval * total[n])
        else:
            precisions[n] = 100.0 * correct[n] / total[n]

    brevity_penalty = 1.0
    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    return brevity_penalty * math.exp(sum(map(_my_log, precisions)) / NGRAM_ORDER)


# -- random corpus generation --

WORDS = (
    "the a an this that movie film acting plot was is were are not very quite "
    "good bad great terrible wonderful dull sharp slow fast story scene actor "
    "director script dialogue scenery lighting music score sound effect review "
    "thought felt saw watched loved hated enjoyed"
).split()

PUNCT = ["!", ".", ",", "?", ";", "'", '"', "-", "(", ")", "%", "$", "+"]


def random_sentence(rng: random.Random) -> str:
    n = rng.randint(1, 12)
    tokens = [rng.choice(WORDS) for _ in range(n)]
    # Sprinkle punctuation and digits so tokenization paths get exercised,
    # including digit-adjacent punctuation kept intact by the tokenizer.
    for _ in range(rng.randint(0, 3)):
        i = rng.randrange(len(tokens))
        mode = rng.random()
        if mode < 0.4:
            tokens[i] = tokens[i] + rng.choice(PUNCT)
        elif mode < 0.6:
            tokens[i] = rng.choice(PUNCT) + tokens[i]
        elif mode < 0.8:
            tokens[i] = str(rng.randint(0, 9999))
        else:
            tokens[i] = f"{rng.randint(1, 99)}{rng.choice(['.', ','])}{rng.randint(0, 99)}"
    return " ".join(tokens)


def mutate(sentence: str, rng: random.Random) -> str:
    tokens = sentence.split()
    out = []
    for t in tokens:
        roll = rng.random()
        if roll < 0.15:
            continue  # drop
        if roll < 0.3:
            out.append(rng.choice(WORDS))  # substitute
        else:
            out.append(t)
        if rng.random() < 0.1:
            out.append(rng.choice(WORDS))  # insert
    if not out:
        out = [rng.choice(WORDS)]
    return " ".join(out)


def main() -> None:
    out_path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/fixtures/bleu_cases.json")
    rng = random.Random(20240517)
    cases = []
    for case_no in range(100):
        n_pairs = rng.randint(1, 8)
        refs = [random_sentence(rng) for _ in range(n_pairs)]
        if case_no % 10 == 0:
            cands = list(refs)  # identical corpus: score must be 100
        else:
            cands = [mutate(r, rng) for r in refs]
        score = reference_corpus_bleu(cands, refs)
        cases.append({"candidates": cands, "references": refs, "score": score})

    # A couple of pinned single-pair cases used directly by unit tests.
    pinned = {
        "disjoint": reference_corpus_bleu(["a b c d"], ["e f g h"]),
        "exclaim": reference_corpus_bleu(
            ["the acting was terrible"], ["the acting was terrible!"]
        ),
    }

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps({"cases": cases, "pinned": pinned}, indent=1, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {len(cases)} corpus cases and {len(pinned)} pinned cases to {out_path}")
    print("pinned:", json.dumps(pinned, indent=2))


if __name__ == "__main__":
    main()
