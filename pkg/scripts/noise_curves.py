#!/usr/bin/env python3
"""Disagreement-under-noise curves for one function.

Sweeps epsilon and tabulates the sampled disagreement probability next to
the exhaustive value whenever the arity is small enough to enumerate.

  python scripts/noise_curves.py --family majority --n 5 --out maj5.csv
  python scripts/noise_curves.py --family bribed --k 4 --epsilons 0.02,0.1,0.3
"""
import argparse
import sys

from pivotal_lab.constructions import from_descriptor, schedule
from pivotal_lab.exact import DISAGREEMENT_CAP, exact_disagreement
from pivotal_lab.montecarlo import mc_disagreement
from pivotal_lab.output import config_digest, write_csv
from pivotal_lab.rng import RandomStream

HEADER = ["epsilon", "exact", "estimate", "stderr", "ci_lo", "ci_hi", "n_samples"]


def build(args):
    if args.family in ("tribes", "bribable", "bribed"):
        if args.k is None:
            sys.exit("tribes families need --k")
        l = args.l if args.l is not None else schedule([args.k])[0].l
        return from_descriptor({"family": args.family, "l": l, "k": args.k})
    if args.n is None:
        sys.exit(f"family {args.family} needs --n")
    return from_descriptor({"family": args.family, "n": args.n})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="majority",
                    choices=("tribes", "bribable", "bribed", "majority", "parity", "dictator"))
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--k", type=int, default=None)
    ap.add_argument("--l", type=int, default=None)
    ap.add_argument("--epsilons", default="0.02,0.05,0.1,0.2,0.35,0.5")
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None, help="CSV path (default: stdout)")
    args = ap.parse_args()

    f = build(args)
    epsilons = [float(tok) for tok in args.epsilons.split(",") if tok]
    base = RandomStream(args.seed)
    rows = []
    for idx, eps in enumerate(epsilons):
        est = mc_disagreement(
            f, eps, args.samples, base.offset(idx * args.samples), threads=args.threads
        )
        truth = exact_disagreement(f, eps) if f.n <= DISAGREEMENT_CAP else ""
        rows.append([eps, truth, est.point, est.stderr, est.ci_lo, est.ci_hi, est.n_samples])

    meta = {"seed": args.seed, "config": config_digest(vars(args) | {"script": "noise_curves"})}
    if args.out:
        write_csv(args.out, HEADER, rows, meta)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(",".join(HEADER))
        for row in rows:
            print(",".join(str(v) for v in row))


if __name__ == "__main__":
    main()
