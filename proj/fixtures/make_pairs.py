#!/usr/bin/env python3
"""Writes the pair-parity corpus used by the separability experiment.

Words come in two groups. A pair is "matched" when both words belong to the
same group. Each question holds one pair; its positive answer holds a pair with
the same matched/unmatched status and every negative a pair with the other
status. Every word occurs equally often in both statuses, so no single word
predicts relevance.
"""

import argparse
import random


def pair(rng, groups, matched):
    g1 = rng.randrange(2)
    g2 = g1 if matched else 1 - g1
    return rng.choice(groups[g1]), rng.choice(groups[g2])


def sentence(rng, groups, matched, fillers, max_fill):
    words = list(pair(rng, groups, matched))
    if fillers:
        before = [rng.choice(fillers) for _ in range(rng.randint(0, max_fill))]
        after = [rng.choice(fillers) for _ in range(rng.randint(0, max_fill))]
        words = before + words + after
    return " ".join(words)


def split(rng, groups, fillers, max_fill, count, negatives, prefix):
    rows = []
    for q in range(count):
        matched = rng.random() < 0.5
        question = sentence(rng, groups, matched, fillers, max_fill)
        cands = [(sentence(rng, groups, matched, fillers, max_fill), 1)]
        cands += [(sentence(rng, groups, not matched, fillers, max_fill), 0) for _ in range(negatives)]
        rng.shuffle(cands)
        for text, label in cands:
            rows.append(f"{prefix}{q:03d}\t{question}\t{text}\t{label}")
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--group-size", type=int, default=4)
    ap.add_argument("--train", type=int, default=60)
    ap.add_argument("--dev", type=int, default=40)
    ap.add_argument("--negatives", type=int, default=3)
    ap.add_argument("--fillers", type=int, default=0, help="size of the filler vocabulary")
    ap.add_argument("--max-fill", type=int, default=2, help="filler words on each side, at most")
    ap.add_argument("--out", default=".")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    groups = [[f"a{i}" for i in range(args.group_size)], [f"b{i}" for i in range(args.group_size)]]
    fillers = [f"f{i}" for i in range(args.fillers)]
    header = "question_id\tquestion\tanswer\tlabel"
    for name, count, prefix in (("train", args.train, "s"), ("dev", args.dev, "v")):
        rows = split(rng, groups, fillers, args.max_fill, count, args.negatives, prefix)
        with open(f"{args.out}/pairs_{name}.tsv", "w") as f:
            f.write(header + "\n" + "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
