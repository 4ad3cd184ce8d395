#!/usr/bin/env python3
"""Everything-at-once sweep along the growth schedule k = 2^j.

For each layout: the schedule numbers (l, q0, mu, a_n), the sampled tie
and two-sided-witness probabilities of the ternary rule, the mean count
of one-flip-short tribes, and the quiet-trajectory probability P[C=0] of
the bribed majority under rate-1 flip dynamics.

  python scripts/growth_sweep.py --j-start 8 --j-stop 12 --out-dir results/
"""
import argparse
import os

from pivotal_lab.constructions import bribed, pivotal_threshold, schedule
from pivotal_lab.dynamics import DynamicsConfig, volatility_trials
from pivotal_lab.montecarlo import mc_tribes_stats
from pivotal_lab.output import config_digest, write_csv
from pivotal_lab.rng import RandomStream

HEADER = [
    "j", "k", "l", "n", "q0", "mu", "a_n",
    "p_f_zero", "p_f_zero_stderr", "p_witness", "p_witness_stderr",
    "mean_u", "p_c0", "p_c0_stderr",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--j-start", type=int, default=8)
    ap.add_argument("--j-stop", type=int, default=12, help="inclusive")
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--duration", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", default=None, help="directory for the CSV (default: stdout)")
    args = ap.parse_args()

    j_values = list(range(args.j_start, args.j_stop + 1))
    entries = schedule([1 << j for j in j_values])
    base = RandomStream(args.seed)
    cfg = DynamicsConfig(duration=args.duration, trials=args.trials)
    stride = 0
    rows = []
    for j, entry in zip(j_values, entries):
        stats = mc_tribes_stats(
            entry.params, args.samples, base.offset(stride), threads=args.threads
        )
        stride += args.samples
        row = volatility_trials(bribed(entry.l, entry.k), cfg, base.offset(stride),
                                threads=args.threads)
        stride += args.trials
        rows.append([
            j, entry.k, entry.l, entry.params.n, entry.q0, entry.mu,
            pivotal_threshold(entry, "half-mean"),
            stats.p_f_zero.point, stats.p_f_zero.stderr,
            stats.p_witness.point, stats.p_witness.stderr,
            stats.mean_one_minus.point,
            row.p_c0.point, row.p_c0.stderr,
        ])
        print(f"j={j}: p_f_zero={stats.p_f_zero.point:.4f} p_c0={row.p_c0.point:.4f}")

    meta = {"seed": args.seed, "config": config_digest(vars(args) | {"script": "growth_sweep"})}
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, "growth_sweep.csv")
        write_csv(path, HEADER, rows, meta)
        print(f"wrote {path}")
    else:
        print(",".join(HEADER))
        for row in rows:
            print(",".join(str(v) for v in row))


if __name__ == "__main__":
    main()
