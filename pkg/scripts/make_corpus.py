#!/usr/bin/env python3
"""Generate synthetic test collections.

Two modes:
  fixture  - a small corpus + topics + qrels + thesaurus with a known
             expansion payoff (for demos and pipeline tests)
  large    - a Zipf-distributed corpus of arbitrary size plus matching
             topics (for indexing/ranking benchmarks)

Example:
    python scripts/make_corpus.py fixture --out data/ --seed 7
    python scripts/make_corpus.py large --out bench/ --docs 100000 --seed 42
"""

import argparse
import os
import random
import sys

from girit.corpus import write_corpus
from girit.retrieval import write_topics
from girit.synth import synth_experiment, synth_topics_for_vocab, write_large_corpus


def cmd_fixture(args):
    rng = random.Random(args.seed)
    exp = synth_experiment(rng, num_docs=args.docs, num_topics=args.topics)
    os.makedirs(args.out, exist_ok=True)
    write_corpus(exp.docs, os.path.join(args.out, "corpus.trec"))
    with open(os.path.join(args.out, "topics.txt"), "w", encoding="utf-8") as fh:
        write_topics(exp.topics, fh)
    with open(os.path.join(args.out, "qrels.txt"), "w", encoding="utf-8") as fh:
        fh.write(exp.qrels_text)
    with open(os.path.join(args.out, "thesaurus.tsv"), "w", encoding="utf-8") as fh:
        fh.write(exp.thesaurus_text)
    print(f"wrote {len(exp.docs)} docs, {len(exp.topics)} topics to {args.out}")


def cmd_large(args):
    os.makedirs(args.out, exist_ok=True)
    corpus_path = os.path.join(args.out, "corpus.trec")
    total = write_large_corpus(corpus_path, args.docs, seed=args.seed)
    with open(os.path.join(args.out, "topics.txt"), "w", encoding="utf-8") as fh:
        write_topics(synth_topics_for_vocab(args.seed, args.topics), fh)
    print(f"wrote {args.docs} docs ({total / 1e6:.1f}M tokens) to {corpus_path}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--docs", type=int, default=200)
    p.add_argument("--topics", type=int, default=8)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("large")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--docs", type=int, default=100_000)
    p.add_argument("--topics", type=int, default=50)
    p.set_defaults(func=cmd_large)

    args = parser.parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
