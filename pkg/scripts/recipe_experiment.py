#!/usr/bin/env python3
"""Train the toy model on a mixed synthetic corpus and report the
prefix-gated behavior: label-only output without "explain", label plus
explanation with it.

Usage: python3 scripts/recipe_experiment.py [--steps N] [--keep N] [--lr F]
       [--d-model N] [--n-train N] [--n-eval N] [--seed N] [--batch-size N]
"""
from __future__ import annotations

import argparse
from dataclasses import asdict

from explainkit.recipe import run_recipe


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=5000)
    ap.add_argument("--keep", type=int, default=2000)
    ap.add_argument("--n-train", type=int, default=4000)
    ap.add_argument("--n-eval", type=int, default=500)
    ap.add_argument("--lr", type=float, default=0.5)
    ap.add_argument("--d-model", type=int, default=64)
    ap.add_argument("--batch-size", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--log-every", type=int, default=500)
    args = ap.parse_args()

    _, _, scores = run_recipe(
        n_train=args.n_train,
        n_keep=args.keep,
        n_eval=args.n_eval,
        steps=args.steps,
        lr=args.lr,
        d_model=args.d_model,
        batch_size=args.batch_size,
        seed=args.seed,
        log_every=args.log_every,
    )
    for key, value in asdict(scores).items():
        print(f"{key:20s} {value:.4f}")
    print(f"{'label_acc':20s} {scores.label_acc:.4f}")


if __name__ == "__main__":
    main()
