"""Command-line surface: prepare, mix, synth, train, decode, score, serve.

Every run writes into an output directory: the resolved configuration
(resolved_config.json), the subcommand's outputs, and a run_meta.json that
is the only file allowed to carry timestamps.  Same flags + same seed give
byte-identical outputs.  Exit codes: 0 success, 1 usage, 2 data error,
3 internal failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import corpus, formatter, metrics, mixer, parser as parsing, synthgen, toyseq2seq
from .rating import RatingError
from .server import make_server

USAGE_EXIT = 1
DATA_EXIT = 2
INTERNAL_EXIT = 3

DATA_ERRORS = (
    corpus.CorpusError,
    formatter.FormatError,
    parsing.ParseError,
    parsing.PredictionsError,
    metrics.MetricError,
    mixer.MixError,
    synthgen.SynthError,
    toyseq2seq.ModelError,
    toyseq2seq.DivergenceError,
    RatingError,
    FileNotFoundError,
    json.JSONDecodeError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _start_run(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    (out / "resolved_config.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True, default=str) + "\n",
        encoding="utf-8",
    )
    return out


def _finish_run(out: Path, summary: dict) -> None:
    meta = {"finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), **summary}
    (out / "run_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# -- subcommands --


def cmd_prepare(args) -> int:
    out = _start_run(args)
    task = corpus.task_by_name(args.task)
    examples = corpus.load_examples(args.corpus, task)
    if args.no_explanations:
        policy = [False] * len(examples)
    else:
        policy = [e.has_explanation for e in examples]
    pairs = formatter.format_corpus(examples, policy)
    suffix = "tsv" if args.format == "tsv" else "jsonl"
    formatter.write_pairs(out / f"pairs.{suffix}", pairs, fmt=args.format)
    n_explained = sum(p.wants_explanation for p in pairs)
    _finish_run(out, {"n_pairs": len(pairs), "n_explained": n_explained})
    print(f"wrote {len(pairs)} pairs ({n_explained} with explanations) to {out}")
    return 0


def cmd_mix(args) -> int:
    out = _start_run(args)
    spec, files = mixer.mixture_spec_from_json(args.spec)
    corpora = {
        cid: corpus.load_examples(info["path"], corpus.task_by_name(info["task"]))
        for cid, info in files.items()
    }
    pairs = mixer.build_mixture(spec, corpora)
    suffix = "tsv" if args.format == "tsv" else "jsonl"
    formatter.write_pairs(out / f"mixture.{suffix}", pairs, fmt=args.format)
    n_explained = sum(p.wants_explanation for p in pairs)
    _finish_run(out, {"n_pairs": len(pairs), "n_explained": n_explained})
    print(f"wrote {len(pairs)} pairs ({n_explained} with explanations) to {out}")
    return 0


def cmd_synth(args) -> int:
    out = _start_run(args)
    spec = synthgen.SynthSpec(
        n_examples=args.n,
        seed=args.seed,
        length_range=(args.min_len, args.max_len),
    )
    examples = synthgen.generate(spec)
    corpus.save_examples(out / "corpus.jsonl", examples)
    _finish_run(out, {"n_examples": len(examples)})
    print(f"wrote {len(examples)} synthetic examples to {out}")
    return 0


def cmd_train(args) -> int:
    out = _start_run(args)
    pairs = formatter.read_pairs(args.pairs, fmt=args.format)
    config = toyseq2seq.TrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        max_input_len=args.max_input_len,
        max_target_len=args.max_target_len,
        d_model=args.d_model,
        min_count=args.min_count,
    )
    model, losses = toyseq2seq.train_model(pairs, config, log_every=args.log_every)
    toyseq2seq.save_model(model, out / "model.ckpt")
    _write_json(out / "losses.json", {"final": losses[-1], "history_tail": losses[-50:]})
    _finish_run(out, {"steps": args.steps, "final_loss": losses[-1]})
    print(f"trained {args.steps} steps, final loss {losses[-1]:.4f}; checkpoint in {out}")
    return 0


def cmd_decode(args) -> int:
    out = _start_run(args)
    model = toyseq2seq.load_model(args.checkpoint)
    if args.corpus:
        task = corpus.task_by_name(args.task)
        examples = corpus.load_examples(args.corpus, task)
        rows = [
            (e.id, formatter.format_input(e, explain=args.explain)) for e in examples
        ]
    else:
        pairs = formatter.read_pairs(args.pairs, fmt=args.format)
        rows = [(f"line-{i + 1:06d}", p.input_text) for i, p in enumerate(pairs)]
    with open(out / "predictions.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for row_id, text in rows:
            output = toyseq2seq.decode_text(model, text, args.max_len, args.beam)
            f.write(json.dumps({"id": row_id, "output": output}, ensure_ascii=False) + "\n")
    _finish_run(out, {"n_decoded": len(rows)})
    print(f"decoded {len(rows)} inputs to {out}")
    return 0


def cmd_score(args) -> int:
    out = _start_run(args)
    task = corpus.task_by_name(args.task)
    gold = corpus.load_examples(args.corpus, task)
    raw = parsing.load_predictions(args.predictions)
    missing = [e.id for e in gold if e.id not in raw]
    if missing:
        raise parsing.PredictionsError(
            f"missing predictions for ids: {', '.join(missing[:5])}"
            + ("..." if len(missing) > 5 else "")
        )

    labels, gold_labels = [], []
    bleu_cands: list[str] = []
    bleu_ref_lists: list[list[str]] = []
    tf1_scores: list[float] = []
    n_spurious = 0
    f1a_preds: list[bool] = []
    f1a_golds: list[bool] = []

    for e in gold:
        try:
            pred = parsing.parse_prediction(raw[e.id])
        except parsing.ParseError:
            pred = parsing.ParsedPrediction("invalid", ())
        label = parsing.label_of(pred, task, choices=e.choices)
        labels.append(label)
        gold_labels.append(e.label)
        if task == corpus.MULTIRC:
            f1a_preds.append(label == "True")
            f1a_golds.append(e.label == "True")

        abstractive = [x.text for x in e.explanations if isinstance(x, corpus.Abstractive)]
        extractive = [x.span for x in e.explanations if isinstance(x, corpus.Extractive)]
        if abstractive:
            bleu_cands.append(" ".join(pred.explanations))
            bleu_ref_lists.append(abstractive)
        if extractive:
            aligned = parsing.align_spans(pred, e)
            n_spurious += len(aligned.spurious)
            pred_mask = metrics.mask_from_spans(e, aligned.matched)
            gold_mask = metrics.mask_from_spans(e, extractive)
            tf1_scores.append(metrics.token_f1(pred_mask, gold_mask))

    bleu_score = None
    if bleu_cands:
        if args.bleu_all_refs:
            slots = max(len(refs) for refs in bleu_ref_lists)
            bleu_score = max(
                metrics.bleu(
                    bleu_cands,
                    [refs[min(i, len(refs) - 1)] for refs in bleu_ref_lists],
                    lowercase=args.lowercase_bleu,
                )
                for i in range(slots)
            )
        else:
            bleu_score = metrics.bleu(
                bleu_cands,
                [refs[0] for refs in bleu_ref_lists],
                lowercase=args.lowercase_bleu,
            )

    report = metrics.MetricReport(
        accuracy=metrics.accuracy(labels, gold_labels),
        n_examples=len(gold),
        n_spurious=n_spurious,
        bleu=bleu_score,
        token_f1=sum(tf1_scores) / len(tf1_scores) if tf1_scores else None,
        f1a=metrics.f1a(f1a_preds, f1a_golds) if f1a_preds else None,
        lowercase_bleu=args.lowercase_bleu,
    )
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.to_table() + "\n", encoding="utf-8")
    _finish_run(out, {"n_examples": len(gold)})
    print(report.to_table())
    return 0


def cmd_serve(args) -> int:
    with open(args.items, "r", encoding="utf-8") as f:
        payload = json.load(f)
    httpd, service = make_server(
        port=args.port, log_dir=args.log_dir, static_dir=args.static
    )
    if args.log_dir:
        resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
        (Path(args.log_dir) / "resolved_config.json").write_text(
            json.dumps(resolved, indent=2, sort_keys=True, default=str) + "\n",
            encoding="utf-8",
        )
    if not service.sessions:
        session_id = service.create_session(payload)
        print(f"created session {session_id}")
    else:
        print(f"replayed sessions: {', '.join(sorted(service.sessions))}")
    host, port = httpd.server_address[:2]
    print(f"rating service listening on http://{host}:{port}/")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def build_parser() -> _Parser:
    root = _Parser(prog="explainkit", description=__doc__)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="serialize a corpus into text-to-text pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-explanations", action="store_true")
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("mix", help="build a training mixture from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("synth", help="generate the synthetic sentiment corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-len", type=int, default=5)
    p.add_argument("--max-len", type=int, default=10)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the toy encoder-decoder")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--max-input-len", type=int, default=48)
    p.add_argument("--max-target-len", type=int, default=16)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--log-every", type=int, default=0)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="decode inputs with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--corpus")
    group.add_argument("--pairs")
    p.add_argument("--task", help="required with --corpus")
    p.add_argument("--explain", action="store_true", help="prepend the explain prefix")
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--max-len", type=int, default=32)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="score a predictions file against a gold corpus")
    p.add_argument("--predictions", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bleu-all-refs", action="store_true")
    p.add_argument("--lowercase-bleu", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="run the rating service")
    p.add_argument("--items", required=True, help="JSON file with items/checks/seed")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--log-dir", default=None)
    p.add_argument("--static", default=None, help="directory of UI assets served at /")
    p.set_defaults(func=cmd_serve)

    return root


def main(argv: list[str] | None = None) -> int:
    root = build_parser()
    try:
        args = root.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    if args.command == "decode" and args.corpus and not args.task:
        print("explainkit decode: error: --task is required with --corpus", file=sys.stderr)
        return USAGE_EXIT
    try:
        return args.func(args)
    except DATA_ERRORS as err:
        print(f"explainkit {args.command}: error: {err}", file=sys.stderr)
        return DATA_EXIT
    except Exception as err:  # pragma: no cover - defensive
        print(f"explainkit {args.command}: internal error: {err}", file=sys.stderr)
        return INTERNAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
