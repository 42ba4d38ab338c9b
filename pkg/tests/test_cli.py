import json
from collections import Counter

import pytest

from explainkit.cli import main
from explainkit.corpus import SENTIMENT, load_examples, save_examples
from explainkit.formatter import read_pairs
from explainkit.synthgen import SynthSpec, generate

REVIEW = (
    "I went to see this movie with my husband, and we both thought the acting was terrible!"
)


@pytest.fixture
def movie_corpus(tmp_path):
    path = tmp_path / "movie.jsonl"
    path.write_text(
        json.dumps(
            {
                "id": "r1",
                "segments": {"review": REVIEW},
                "label": "negative",
                "explanations": [{"text": "the acting was terrible"}],
            }
        )
        + "\n",
        encoding="utf-8",
    )
    return path


def test_prepare_reproduces_worked_example(tmp_path, movie_corpus, capsys):
    out = tmp_path / "run"
    code = main(
        ["prepare", "--corpus", str(movie_corpus), "--task", "sentiment", "--out", str(out)]
    )
    assert code == 0
    (pair,) = read_pairs(out / "pairs.jsonl")
    assert pair.input_text == "explain sentiment: " + REVIEW
    assert pair.target_text == "negative explanation: the acting was terrible"
    assert (out / "resolved_config.json").exists()
    assert (out / "run_meta.json").exists()


def test_prepare_no_explanations_flag(tmp_path, movie_corpus):
    out = tmp_path / "run"
    main(
        [
            "prepare", "--corpus", str(movie_corpus), "--task", "sentiment",
            "--out", str(out), "--no-explanations",
        ]
    )
    pairs = read_pairs(out / "pairs.jsonl")
    assert not any(p.input_text.startswith("explain") for p in pairs)


def test_prepare_malformed_line_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{broken\n", encoding="utf-8")
    code = main(["prepare", "--corpus", str(bad), "--task", "sentiment", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "line 1" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    assert main(["prepare", "--corpus", "x"]) == 1
    assert main(["frobnicate"]) == 1


def test_synth_then_prepare_roundtrip(tmp_path):
    out = tmp_path / "synth"
    assert main(["synth", "--n", "25", "--seed", "4", "--out", str(out)]) == 0
    examples = load_examples(out / "corpus.jsonl", SENTIMENT)
    assert len(examples) == 25
    assert all(e.has_explanation for e in examples)


def test_mix_task_transfer_spec(tmp_path):
    nli_anno = tmp_path / "nli_anno.jsonl"
    nli_anno.write_text(
        "\n".join(
            json.dumps(
                {
                    "id": f"n{i}",
                    "segments": {"hypothesis": f"hyp {i}", "premise": f"prem {i}"},
                    "label": "neutral",
                    "explanations": [{"text": f"reason {i}"}],
                }
            )
            for i in range(6)
        )
        + "\n"
    )
    choice_qa = tmp_path / "choice_qa.jsonl"
    choice_qa.write_text(
        "\n".join(
            json.dumps(
                {
                    "id": f"q{i}",
                    "segments": {"question": f"question {i}"},
                    "choices": ["a", "b"],
                    "label": "a",
                    "explanations": [],
                }
            )
            for i in range(4)
        )
        + "\n"
    )
    spec = {
        "seed": 11,
        "shuffle": True,
        "sources": [
            {"corpus": "nli_anno", "path": str(nli_anno), "task": "nli", "policy": "all",
             "rewrite": "nli_fixed_choices"},
            {"corpus": "nli_anno", "path": str(nli_anno), "task": "nli", "policy": "none",
             "rewrite": "nli_fixed_choices"},
            {"corpus": "choice_qa", "path": str(choice_qa), "task": "cos_e", "policy": "none",
             "rewrite": "cose_as_nli"},
        ],
    }
    spec_path = tmp_path / "mix.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / "mixrun"
    assert main(["mix", "--spec", str(spec_path), "--out", str(out)]) == 0
    pairs = read_pairs(out / "mixture.jsonl")
    assert len(pairs) == 16
    assert sum(p.wants_explanation for p in pairs) == 6

    # A different seed permutes but preserves the multiset.
    spec["seed"] = 12
    spec_path.write_text(json.dumps(spec))
    out2 = tmp_path / "mixrun2"
    main(["mix", "--spec", str(spec_path), "--out", str(out2)])
    pairs2 = read_pairs(out2 / "mixture.jsonl")
    assert pairs != pairs2
    assert Counter(p.input_text for p in pairs) == Counter(p.input_text for p in pairs2)


def test_mix_keep_subsample_summary(tmp_path):
    corpus_path = tmp_path / "synth.jsonl"
    save_examples(corpus_path, generate(SynthSpec(n_examples=300, seed=2)))
    spec = {
        "seed": 5,
        "sources": [
            {"corpus": "s", "path": str(corpus_path), "task": "sentiment",
             "policy": "keep", "n_keep": 100}
        ],
    }
    spec_path = tmp_path / "mix.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / "mixrun"
    assert main(["mix", "--spec", str(spec_path), "--out", str(out)]) == 0
    meta = json.loads((out / "run_meta.json").read_text())
    assert meta["n_explained"] == 100
    pairs = read_pairs(out / "mixture.jsonl")
    assert sum(p.wants_explanation for p in pairs) == 100


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A tiny trained checkpoint shared by the decode/score tests."""
    root = tmp_path_factory.mktemp("pipeline")
    synth_out = root / "synth"
    main(["synth", "--n", "60", "--seed", "1", "--out", str(synth_out)])
    prep_out = root / "prep"
    main(
        ["prepare", "--corpus", str(synth_out / "corpus.jsonl"), "--task", "sentiment",
         "--out", str(prep_out)]
    )
    train_out = root / "train"
    code = main(
        ["train", "--pairs", str(prep_out / "pairs.jsonl"), "--out", str(train_out),
         "--steps", "60", "--batch-size", "8", "--lr", "0.5", "--seed", "3",
         "--d-model", "32"]
    )
    assert code == 0
    return root, synth_out / "corpus.jsonl", train_out / "model.ckpt"


def test_decode_emits_one_line_per_input(trained):
    root, corpus_path, ckpt = trained
    out = root / "dec"
    code = main(
        ["decode", "--checkpoint", str(ckpt), "--corpus", str(corpus_path),
         "--task", "sentiment", "--out", str(out), "--max-len", "8"]
    )
    assert code == 0
    lines = (out / "predictions.jsonl").read_text().splitlines()
    assert len(lines) == 60
    ids = [json.loads(l)["id"] for l in lines]
    assert len(set(ids)) == 60


def test_decode_beam_one_matches_greedy(trained):
    root, corpus_path, ckpt = trained
    greedy_out, beam_out = root / "g", root / "b"
    main(["decode", "--checkpoint", str(ckpt), "--corpus", str(corpus_path),
          "--task", "sentiment", "--out", str(greedy_out), "--max-len", "8"])
    main(["decode", "--checkpoint", str(ckpt), "--corpus", str(corpus_path),
          "--task", "sentiment", "--out", str(beam_out), "--max-len", "8",
          "--beam", "1"])
    assert (
        (greedy_out / "predictions.jsonl").read_bytes()
        == (beam_out / "predictions.jsonl").read_bytes()
    )


def test_score_gold_against_itself_is_perfect(trained, tmp_path, capsys):
    root, corpus_path, _ = trained
    examples = load_examples(corpus_path, SENTIMENT)
    preds = tmp_path / "gold_preds.jsonl"
    from explainkit.formatter import format_example

    with open(preds, "w", encoding="utf-8") as f:
        for e in examples:
            pair = format_example(e, True)
            f.write(json.dumps({"id": e.id, "output": pair.target_text}) + "\n")
    out = tmp_path / "score"
    code = main(
        ["score", "--predictions", str(preds), "--corpus", str(corpus_path),
         "--task", "sentiment", "--out", str(out)]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["accuracy"] == 1.0
    assert report["token_f1"] == 1.0
    assert report["n_spurious"] == 0
    table = (out / "report.txt").read_text()
    assert table.splitlines()[0].split() == ["Acc", "BLEU", "TF1", "F1a"]


def test_score_abstractive_gold_against_itself_bleu_100(tmp_path):
    corpus_path = tmp_path / "nli.jsonl"
    records = [
        {
            "id": f"n{i}",
            "segments": {"hypothesis": f"somebody naps {i}", "premise": f"somebody bowls {i}"},
            "label": "contradiction",
            "explanations": [{"text": f"napping and bowling cannot overlap {i}"}],
        }
        for i in range(5)
    ]
    corpus_path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    preds = tmp_path / "preds.jsonl"
    preds.write_text(
        "\n".join(
            json.dumps(
                {
                    "id": f"n{i}",
                    "output": "contradiction explanation: "
                    f"napping and bowling cannot overlap {i}",
                }
            )
            for i in range(5)
        )
        + "\n"
    )
    out = tmp_path / "score"
    assert main(
        ["score", "--predictions", str(preds), "--corpus", str(corpus_path),
         "--task", "nli", "--out", str(out)]
    ) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["accuracy"] == 1.0
    assert report["bleu"] == pytest.approx(100.0, abs=1e-9)
    assert report["token_f1"] is None


def test_score_missing_id_exits_2(trained, tmp_path, capsys):
    root, corpus_path, _ = trained
    preds = tmp_path / "short.jsonl"
    preds.write_text(json.dumps({"id": "synth-00000", "output": "positive"}) + "\n")
    out = tmp_path / "score"
    code = main(
        ["score", "--predictions", str(preds), "--corpus", str(corpus_path),
         "--task", "sentiment", "--out", str(out)]
    )
    assert code == 2
    assert "synth-00001" in capsys.readouterr().err


def test_train_is_reproducible_bytewise(tmp_path, movie_corpus):
    prep = tmp_path / "prep"
    main(["prepare", "--corpus", str(movie_corpus), "--task", "sentiment", "--out", str(prep)])
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(["train", "--pairs", str(prep / "pairs.jsonl"), "--out", str(out),
              "--steps", "5", "--batch-size", "1", "--lr", "0.1", "--seed", "7",
              "--d-model", "8"])
        outs.append((out / "model.ckpt").read_bytes())
    assert outs[0] == outs[1]
