#!/usr/bin/env python3
"""Run the full before/after query-expansion experiment in one go.

Given a data directory containing corpus.trec, topics.txt, qrels.txt and
thesaurus.tsv (for instance from `scripts/make_corpus.py fixture`), this
drives: index -> run -> expand -> run -> eval x2 -> compare, and prints the
final comparison table.

    python scripts/make_corpus.py fixture --out data/
    python scripts/run_experiment.py --data data/ --work work/ --models all
"""

import argparse
import os
import sys

from girit.cli import main as girit


def sh(args):
    print("$ girit " + " ".join(args))
    code = girit(args)
    if code != 0:
        print(f"step failed with exit code {code}", file=sys.stderr)
        sys.exit(code)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="directory with corpus/topics/qrels/thesaurus")
    parser.add_argument("--work", required=True, help="output directory for index, runs, reports")
    parser.add_argument("--models", default="all")
    parser.add_argument("--fields", default="TD", choices=("T", "TD", "TDN"))
    parser.add_argument("--cutoff", type=int, default=1000)
    parser.add_argument("--tag", default="girit")
    args = parser.parse_args(argv)

    data = lambda name: os.path.join(args.data, name)
    work = lambda name: os.path.join(args.work, name)
    os.makedirs(args.work, exist_ok=True)

    sh(["index", "--corpus", data("corpus.trec"), "--index-dir", work("idx")])
    sh(["run", "--index-dir", work("idx"), "--topics", data("topics.txt"),
        "--fields", args.fields, "--models", args.models, "--cutoff", str(args.cutoff),
        "--output-dir", work("runs_before"), "--tag", args.tag])
    sh(["expand", "--topics", data("topics.txt"), "--thesaurus", data("thesaurus.tsv"),
        "--index-dir", work("idx"), "--fields", args.fields,
        "--output", work("topics.expanded.txt")])
    sh(["run", "--index-dir", work("idx"), "--topics", work("topics.expanded.txt"),
        "--fields", args.fields, "--models", args.models, "--cutoff", str(args.cutoff),
        "--output-dir", work("runs_after"), "--tag", args.tag])
    sh(["eval", "--runs", work("runs_before"), "--qrels", data("qrels.txt"),
        "--cutoff", str(args.cutoff), "--output-dir", work("eval_before")])
    sh(["eval", "--runs", work("runs_after"), "--qrels", data("qrels.txt"),
        "--cutoff", str(args.cutoff), "--output-dir", work("eval_after")])
    sh(["compare", "--before", work("eval_before"), "--after", work("eval_after"),
        "--output-dir", work("report")])
    print(f"\nreport: {work('report/comparison.txt')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
