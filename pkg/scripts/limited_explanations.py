#!/usr/bin/env python3
"""Sweep the number of retained explanation annotations (100%, 10%, 1%)
and print the accuracy/quality trend on the synthetic task.

Usage: python3 scripts/limited_explanations.py [--steps N] [--seed N]
"""
from __future__ import annotations

import argparse

from explainkit.recipe import run_recipe


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full", type=int, default=2000, help="annotated count at 100%%")
    args = ap.parse_args()

    print(f"{'kept':>6} {'label_acc':>10} {'gated':>7} {'exact':>7} {'train_s':>8}")
    for fraction in (1.0, 0.1, 0.01):
        kept = int(args.full * fraction)
        _, _, scores = run_recipe(
            n_keep=kept, steps=args.steps, seed=args.seed
        )
        print(
            f"{kept:>6} {scores.label_acc:>10.4f} {scores.prefix_gated:>7.4f} "
            f"{scores.explanation_exact:>7.4f} {scores.train_seconds:>8.1f}"
        )


if __name__ == "__main__":
    main()
