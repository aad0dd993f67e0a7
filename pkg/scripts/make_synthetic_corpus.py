#!/usr/bin/env python3
"""Generate a procedural-texture HR corpus for desk-scale experiments.

Writes ``<out>/HR/tex_####.png``; pair it with ``dcrsr train-sam
data.root=<out>`` for a self-contained run with no external data.
"""

import argparse

from dcrsr.synthetic import make_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="corpus root directory (HR/ is created inside)")
    parser.add_argument("--count", type=int, default=64)
    parser.add_argument("--size", type=int, default=96)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    root = make_corpus(args.out, count=args.count, size=args.size, seed=args.seed)
    print(f"wrote {args.count} images of {args.size}x{args.size} under {root}/HR")


if __name__ == "__main__":
    main()
