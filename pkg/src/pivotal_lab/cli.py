"""Command line front end.

Subcommands: exact (enumeration reports), mc (stream-seeded estimators),
dynamics (volatility trials), schedule (growth schedule table), reproduce
(canned verdict suites). A JSON --config file supplies defaults; explicit
flags win. Exit codes: 0 success, 1 runtime or verdict failure, 2 usage.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import exact as exact_mod
from . import reproduce as reproduce_mod
from .constructions import (
    ScheduleEntry,
    TribesParams,
    from_descriptor,
    pivotal_threshold,
    schedule,
)
from .core import BOOLEAN, TERNARY, ZERO_ONE, CODOMAIN_VALUES
from .dynamics import DynamicsConfig, volatility_curve
from .errors import UsageError
from .montecarlo import (
    mc_disagreement,
    mc_pivotal_count,
    mc_stability_sandwich,
    mc_tribes_stats,
)
from .output import config_digest, format_value, write_csv, write_json
from .rng import RandomStream

_FAMILY_CHOICES = ("tribes", "bribable", "bribed", "majority", "parity", "dictator", "constant")


def _threads_default() -> int:
    env = os.environ.get("PIVOTAL_LAB_THREADS")
    if env is None:
        return 1
    try:
        val = int(env)
    except ValueError:
        raise UsageError(f"PIVOTAL_LAB_THREADS must be an integer, got {env!r}")
    if val < 1:
        raise UsageError(f"PIVOTAL_LAB_THREADS must be >= 1, got {val}")
    return val


def _add_common(sub, with_format=True):
    sub.add_argument("--seed", type=int, default=None, help="64-bit base seed")
    sub.add_argument("--threads", type=int, default=None, help="worker threads (results identical)")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    if with_format:
        sub.add_argument("--format", choices=("csv", "json"), default=None)
    sub.add_argument("--config", default=None, help="JSON file of option defaults")


def _add_family(sub):
    sub.add_argument("--family", choices=_FAMILY_CHOICES, default=None)
    sub.add_argument("--l", type=int, default=None, help="tribe size (derived from k if omitted)")
    sub.add_argument("--k", type=int, default=None, help="tribe count")
    sub.add_argument("--n", type=int, default=None, help="arity for majority/parity/dictator/constant")
    sub.add_argument("--index", type=int, default=None, help="dictator coordinate")
    sub.add_argument("--value", type=int, default=None, help="constant value")
    sub.add_argument("--tie-rule", choices=("plus", "error"), default=None)


def _apply_config(args: argparse.Namespace):
    """Fill None-valued options from the JSON config file, then from the
    subcommand's hard defaults. Explicit flags always win; unknown config
    keys are usage errors."""
    reserved = {"func", "_defaults", "command", "config"}
    known = {key for key in vars(args) if key not in reserved}
    config = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}")
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = {key for key in config if key.replace("-", "_") not in known}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    hard = dict(getattr(args, "_defaults", {}))
    for key in known:
        if getattr(args, key) is None:
            cfg_key = key if key in config else key.replace("_", "-")
            if cfg_key in config:
                setattr(args, key, config[cfg_key])
            elif key in hard:
                setattr(args, key, hard[key])
    return args


def _resolve_l(args) -> int:
    if args.l is not None:
        return args.l
    if args.k is None:
        raise UsageError("tribes families need --k (and optionally --l)")
    return schedule([args.k])[0].l


def _build_function(args):
    """Function plus the (family, k, l, n) label used in output rows."""
    family = args.family
    if family is None:
        raise UsageError("missing --family")
    if family in ("tribes", "bribable", "bribed"):
        if args.k is None:
            raise UsageError(f"family {family} needs --k")
        l = _resolve_l(args)
        desc = {"family": family, "l": l, "k": args.k}
        if family == "bribed" and args.tie_rule:
            desc["tie_rule"] = args.tie_rule
        f = from_descriptor(desc)
        return f, {"family": family, "k": args.k, "l": l, "n": f.n}
    if args.n is None:
        raise UsageError(f"family {family} needs --n")
    desc = {"family": family, "n": args.n}
    if family == "majority" and args.tie_rule:
        desc["tie_rule"] = args.tie_rule
    if family == "dictator" and args.index is not None:
        desc["index"] = args.index
    if family == "constant":
        desc["value"] = args.value if args.value is not None else 1
    f = from_descriptor(desc)
    return f, {"family": family, "k": "", "l": "", "n": f.n}


def _emit_rows(args, header, rows, meta, json_payload=None):
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.out and str(args.out).endswith(".json") else "csv"
    if fmt == "csv":
        if args.out:
            write_csv(args.out, header, rows, meta)
        else:
            print(",".join(header))
            for row in rows:
                print(",".join(format_value(v) for v in row))
    else:
        payload = json_payload
        if payload is None:
            payload = {"rows": [dict(zip(header, row)) for row in rows]}
        if args.out:
            write_json(args.out, payload, meta)
        else:
            print(json.dumps({"meta": meta, **payload}, indent=2, sort_keys=True, default=str))
    return 0


def cmd_exact(args) -> int:
    f, label = _build_function(args)
    report = args.report
    meta = {"seed": "", "config": config_digest({"cmd": "exact", **label, "report": report})}
    if report == "spectrum":
        table = exact_mod.spectrum(f)
        rows = [[f"{mask:#x}", coef] for mask, coef in table.nonzero()]
        return _emit_rows(args, ["mask", "coefficient"], rows, meta)
    if report == "influences":
        counts = exact_mod.influence_counts(f)
        total = 1 << f.n
        rows = [[i, int(c) / total, int(c)] for i, c in enumerate(counts)]
        return _emit_rows(args, ["coordinate", "influence", "count"], rows, meta)
    if report == "pivotal-law":
        law = exact_mod.pivotal_law(f)
        rows = []
        for vi, v in enumerate(law.values):
            for size in range(law.n + 1):
                cnt = int(law.counts[vi, size])
                if cnt:
                    rows.append([v, size, cnt, cnt / law.total])
            rows.append([v, "any", int(law.counts[vi].sum()), float(law.value_prob(v))])
        rows.append(["any", "mean", "", float(law.mean_size())])
        return _emit_rows(args, ["value", "size", "count", "probability"], rows, meta)
    if report == "disagreement":
        if args.epsilon is None:
            raise UsageError("disagreement report needs --epsilon")
        val = exact_mod.exact_disagreement(f, args.epsilon)
        rows = [[args.epsilon, val]]
        return _emit_rows(args, ["epsilon", "disagreement"], rows, meta)
    if report == "prob":
        rows = [
            [v, float(exact_mod.exact_prob_rational(f, v))]
            for v in CODOMAIN_VALUES[f.codomain]
        ]
        return _emit_rows(args, ["value", "probability"], rows, meta)
    if report == "summary":
        rows = [
            ["n", f.n],
            ["codomain", f.codomain],
        ]
        for v in CODOMAIN_VALUES[f.codomain]:
            rows.append([f"p_value_{v}", float(exact_mod.exact_prob_rational(f, v))])
        law = exact_mod.pivotal_law(f)
        rows.append(["mean_pivotal_size", float(law.mean_size())])
        rows.append(["total_influence", float(exact_mod.influences(f).sum())])
        return _emit_rows(args, ["quantity", "value"], rows, meta)
    raise UsageError(f"unknown report {args.report!r}")


def _estimate_row(label, p, epsilon, quantity, est):
    return [
        label["family"], label["k"], label["l"], p, epsilon, quantity,
        est.point, est.stderr, est.ci_lo, est.ci_hi, est.n_samples, est.seed,
    ]


_MC_HEADER = [
    "family", "k", "l", "p", "epsilon", "quantity",
    "estimate", "stderr", "ci_lo", "ci_hi", "n_samples", "seed",
]


def cmd_mc(args) -> int:
    base = RandomStream(args.seed, 0)
    meta_cfg = {
        "cmd": "mc", "family": args.family, "k": args.k, "l": args.l, "n": args.n,
        "quantity": args.quantity, "epsilon": args.epsilon, "p": args.p,
        "samples": args.samples, "method": args.method, "thresholds": args.thresholds,
    }
    meta = {"seed": args.seed, "config": config_digest(meta_cfg)}
    quantity = args.quantity
    thresholds = ()
    if args.thresholds:
        thresholds = tuple(int(tok) for tok in str(args.thresholds).split(",") if tok != "")
    rows = []
    if quantity == "disagreement":
        f, label = _build_function(args)
        if args.epsilon is None:
            raise UsageError("disagreement needs --epsilon")
        est = mc_disagreement(
            f, args.epsilon, args.samples, base, p=args.p, threads=args.threads
        )
        rows.append(_estimate_row(label, args.p, args.epsilon, "disagreement", est))
    elif quantity == "pivotal-count":
        f, label = _build_function(args)
        res = mc_pivotal_count(f, args.samples, base, p=args.p, threads=args.threads)
        rows.append(_estimate_row(label, args.p, "", "mean-pivotal-size", res.mean_size))
        for size, cnt in res.histogram().items():
            rows.append(
                [label["family"], label["k"], label["l"], args.p, "", f"p-size-{size}",
                 cnt / res.n_samples, "", "", "", res.n_samples, args.seed]
            )
    elif quantity == "sandwich":
        if args.k is None:
            raise UsageError("sandwich runs on the tribes layout; needs --k")
        l = _resolve_l(args)
        params = TribesParams(l, args.k)
        if args.epsilon is None:
            raise UsageError("sandwich needs --epsilon")
        res = mc_stability_sandwich(
            params, args.epsilon, args.samples, base, p=args.p, threads=args.threads
        )
        label = {"family": "bribed", "k": args.k, "l": l}
        rows.append(_estimate_row(label, args.p, args.epsilon, "p-bribed-diff", res.p_bribed_diff))
        rows.append(_estimate_row(label, args.p, args.epsilon, "p-majority-diff", res.p_majority_diff))
        rows.append(_estimate_row(label, args.p, args.epsilon, "p-ternary-active", res.p_ternary_active))
        rows.append(
            [label["family"], label["k"], label["l"], args.p, args.epsilon, "sandwich-holds",
             float(res.holds), "", "", "", res.p_bribed_diff.n_samples, args.seed]
        )
    elif quantity in ("tribes-stats", "p-f-zero", "witness", "mean-u", "u-tail"):
        if args.k is None:
            raise UsageError(f"quantity {quantity} runs on the tribes layout; needs --k")
        l = _resolve_l(args)
        params = TribesParams(l, args.k)
        label = {"family": "bribable", "k": args.k, "l": l}
        stats = mc_tribes_stats(
            params, args.samples, base, p=args.p, thresholds=thresholds,
            method=args.method, threads=args.threads,
        )
        named = {
            "p-f-zero": stats.p_f_zero,
            "witness": stats.p_witness,
            "witness-strict": stats.p_witness_strict,
            "both-full": stats.p_both_full,
            "mean-u": stats.mean_one_minus,
        }
        if quantity == "tribes-stats":
            for qname, est in named.items():
                rows.append(_estimate_row(label, args.p, "", qname, est))
            for a, est in stats.tail_one_minus.items():
                rows.append(_estimate_row(label, args.p, "", f"u-tail-{a}", est))
        elif quantity == "u-tail":
            if not thresholds:
                raise UsageError("u-tail needs --thresholds")
            for a, est in stats.tail_one_minus.items():
                rows.append(_estimate_row(label, args.p, "", f"u-tail-{a}", est))
        else:
            rows.append(_estimate_row(label, args.p, "", quantity, named[quantity]))
    else:
        raise UsageError(f"unknown quantity {quantity!r}")
    return _emit_rows(args, _MC_HEADER, rows, meta)


def cmd_dynamics(args) -> int:
    base = RandomStream(args.seed, 0)
    cfg = DynamicsConfig(
        duration=args.duration, semantics=args.semantics, p=args.p,
        trials=args.trials, verify=args.verify,
    )
    if args.k_list:
        k_values = [int(tok) for tok in str(args.k_list).split(",") if tok != ""]
    elif args.k is not None:
        k_values = [args.k]
    else:
        k_values = []
    functions = []
    labels = []
    if args.family in ("tribes", "bribable", "bribed"):
        if not k_values:
            raise UsageError(f"family {args.family} needs --k or --k-list")
        for k in k_values:
            l = args.l if args.l is not None else schedule([k])[0].l
            functions.append(from_descriptor({"family": args.family, "l": l, "k": k}))
            labels.append({"family": args.family, "k": k, "l": l})
    else:
        f, label = _build_function(args)
        functions.append(f)
        labels.append(label)
    report = volatility_curve(functions, cfg, base, threads=args.threads)
    rows = []
    for label, row in zip(labels, report.rows):
        rows.append(
            [label["family"], label["k"], label["l"], row.n, cfg.semantics, cfg.duration,
             cfg.trials, row.p_c0.point, row.p_c0.stderr, row.mean_changes,
             row.q50, row.q90, args.seed]
        )
    meta = {"seed": args.seed, "config": config_digest({
        "cmd": "dynamics", "family": args.family, "k_values": k_values, "l": args.l,
        "semantics": cfg.semantics, "duration": cfg.duration, "trials": cfg.trials,
    })}
    header = ["family", "k", "l", "n", "semantics", "duration", "trials",
              "p_c0", "stderr", "mean_C", "q50", "q90", "seed"]
    return _emit_rows(args, header, rows, meta)


def cmd_schedule(args) -> int:
    if args.k_list:
        k_values = [int(tok) for tok in str(args.k_list).split(",") if tok != ""]
    elif args.j_range:
        parts = str(args.j_range).split(":")
        if len(parts) not in (2, 3):
            raise UsageError("--j-range takes start:stop[:step] (stop inclusive)")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        k_values = [1 << j for j in range(start, stop + 1, step)]
    else:
        raise UsageError("schedule needs --k-list or --j-range")
    entries = schedule(k_values, rounding=args.rounding)
    rows = []
    for entry in entries:
        a_n = pivotal_threshold(entry, args.threshold_rule, args.threshold_value)
        rows.append([entry.index, entry.k, entry.l, entry.q0, entry.mu, a_n])
    meta = {"seed": "", "config": config_digest({
        "cmd": "schedule", "k_values": k_values, "rounding": args.rounding,
        "rule": args.threshold_rule, "value": args.threshold_value,
    })}
    payload = {
        "rows": [
            {"n_index": e.index, "k": e.k, "l": e.l, "q0": e.q0, "mu": e.mu,
             "a_n": pivotal_threshold(e, args.threshold_rule, args.threshold_value),
             "flags": list(e.flags)}
            for e in entries
        ]
    }
    return _emit_rows(args, ["n_index", "k", "l", "q0", "mu", "a_n"], rows, meta, payload)


def cmd_reproduce(args) -> int:
    overrides = None
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    names = sorted(reproduce_mod.SUITES) if args.suite == "all" else [args.suite]
    all_ok = True
    for name in names:
        result = reproduce_mod.run_suite(
            name, seed=args.seed, threads=args.threads,
            out_dir=args.out_dir, overrides=overrides,
        )
        print("\n".join(result.summary_lines()))
        all_ok = all_ok and result.passed
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivotal-lab",
        description="Noise stability, pivotal sets, and volatility of tribes-built functions.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_exact = subs.add_parser("exact", help="exhaustive-enumeration reports")
    _add_family(p_exact)
    p_exact.add_argument(
        "--report",
        choices=("summary", "pivotal-law", "spectrum", "influences", "disagreement", "prob"),
        default=None,
    )
    p_exact.add_argument("--epsilon", type=float, default=None)
    _add_common(p_exact)
    p_exact.set_defaults(func=cmd_exact, _defaults={"report": "summary", "seed": 0, "threads": None, "format": None})

    p_mc = subs.add_parser("mc", help="Monte Carlo estimators")
    _add_family(p_mc)
    p_mc.add_argument(
        "--quantity",
        choices=("disagreement", "tribes-stats", "p-f-zero", "witness", "mean-u",
                 "u-tail", "pivotal-count", "sandwich"),
        default=None,
    )
    p_mc.add_argument("--epsilon", type=float, default=None)
    p_mc.add_argument("--p", type=float, default=None)
    p_mc.add_argument("--samples", type=int, default=None)
    p_mc.add_argument("--method", choices=("histogram", "bits"), default=None)
    p_mc.add_argument("--thresholds", default=None, help="comma-separated tail thresholds")
    _add_common(p_mc)
    p_mc.set_defaults(func=cmd_mc, _defaults={
        "quantity": "tribes-stats", "p": 0.5, "samples": 10_000, "method": "histogram",
        "seed": 0, "threads": None, "format": None,
    })

    p_dyn = subs.add_parser("dynamics", help="volatility trials")
    _add_family(p_dyn)
    p_dyn.add_argument("--k-list", default=None, help="comma-separated tribe counts")
    p_dyn.add_argument("--duration", type=float, default=None)
    p_dyn.add_argument("--semantics", choices=("flip", "resample"), default=None)
    p_dyn.add_argument("--p", type=float, default=None)
    p_dyn.add_argument("--trials", type=int, default=None)
    p_dyn.add_argument("--verify", action="store_true")
    _add_common(p_dyn)
    p_dyn.set_defaults(func=cmd_dynamics, _defaults={
        "family": "bribed", "duration": 1.0, "semantics": "flip", "p": 0.5,
        "trials": 1000, "seed": 0, "threads": None, "format": None,
    })

    p_sched = subs.add_parser("schedule", help="growth schedule table")
    p_sched.add_argument("--k-list", default=None)
    p_sched.add_argument("--j-range", default=None, help="start:stop[:step] powers of two")
    p_sched.add_argument("--rounding", choices=("ceil", "round"), default=None)
    p_sched.add_argument("--threshold-rule", choices=("half-mean", "sqrt-mean", "explicit"), default=None)
    p_sched.add_argument("--threshold-value", type=int, default=None)
    _add_common(p_sched)
    p_sched.set_defaults(func=cmd_schedule, _defaults={
        "rounding": "ceil", "threshold_rule": "half-mean", "seed": 0,
        "threads": None, "format": None,
    })

    p_rep = subs.add_parser("reproduce", help="canned verdict suites")
    p_rep.add_argument("suite", choices=tuple(sorted(reproduce_mod.SUITES)) + ("all",))
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--threads", type=int, default=None)
    p_rep.add_argument("--out-dir", default=None)
    p_rep.add_argument("--config", default=None, help="JSON file of suite overrides")
    p_rep.set_defaults(func=cmd_reproduce, _defaults={"seed": reproduce_mod.DEFAULT_SEED, "threads": None})

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.func is not cmd_reproduce:
            _apply_config(args)
        else:
            # reproduce repurposes --config for suite overrides
            for key, val in dict(getattr(args, "_defaults", {})).items():
                if getattr(args, key, None) is None:
                    setattr(args, key, val)
        if getattr(args, "threads", None) is None:
            args.threads = _threads_default()
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures distinct from usage mistakes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
