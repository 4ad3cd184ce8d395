"""Canned experiment suites with pass/fail verdicts.

Each suite checks one cluster of claims at desk scale and writes a data
CSV plus a verdict JSON when given an output directory. All randomness is
stream-addressed from the suite seed, so outputs are byte-identical across
reruns and thread counts.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact
from .constructions import (
    ConstantFunction,
    Dictator,
    Majority,
    Parity,
    TribesParams,
    bribable,
    bribed,
    from_descriptor,
    pivotal_threshold,
    pm1_of,
    schedule,
    tribes,
    tribes_generators,
)
from .core import check_invariance, check_monotone
from .dynamics import DynamicsConfig, pivotal_bound_check, volatility_curve
from .errors import UsageError
from .montecarlo import (
    mc_disagreement,
    mc_stability_sandwich,
    mc_tribes_stats,
)
from .output import config_digest, write_csv, write_json
from .rng import RandomStream

DEFAULT_SEED = 1729


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class SuiteResult:
    suite: str
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary_lines(self) -> list:
        lines = [f"suite {self.suite} seed={self.seed}"]
        for c in self.checks:
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        lines.append(f"  => {'PASS' if self.passed else 'FAIL'}")
        return lines


def _emit(result: SuiteResult, out_dir, header, rows, config: dict):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    meta = {"seed": result.seed, "config": config_digest(config)}
    write_csv(os.path.join(out_dir, f"{result.suite}.csv"), header, rows, meta)
    write_json(
        os.path.join(out_dir, f"{result.suite}_verdict.json"),
        {
            "suite": result.suite,
            "passed": result.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in result.checks
            ],
        },
        meta,
    )


def _grid(max_l: int, max_k: int, max_n: int):
    return [
        TribesParams(l, k)
        for l in range(1, max_l + 1)
        for k in range(1, max_k + 1)
        if l * k <= max_n
    ]


def _all_layouts(max_n: int):
    return [
        TribesParams(l, k)
        for l in range(1, max_n + 1)
        for k in range(1, max_n // l + 1)
    ]


def suite_bribable(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Exact laws, the conditional sandwich, and structural checks for the
    tribes constructions."""
    opts = dict(overrides or {})
    grid_n = int(opts.pop("grid_n", 20))
    sandwich_n = int(opts.pop("sandwich_n", 18))
    structure_n = int(opts.pop("structure_n", 16))
    if opts:
        raise UsageError(f"unknown overrides for bribable suite: {sorted(opts)}")
    checks = []
    rows = []

    grid = _grid(4, 5, grid_n)
    bad_blocked = []
    bad_mean = []
    for params in grid:
        stats = exact.exact_tribes_stats(params)
        closed = exact.tribes_blocked_closed_form(params)
        mean_closed = exact.pivotal_tribe_mean_closed_form(params)
        if stats.p_blocked != closed:
            bad_blocked.append((params.l, params.k))
        if stats.mean_x != mean_closed:
            bad_mean.append((params.l, params.k))
        rows.append(
            [
                "law", params.l, params.k, float(stats.p_blocked), float(closed),
                float(stats.mean_x), float(mean_closed),
                stats.p_blocked == closed and stats.mean_x == mean_closed,
            ]
        )
    checks.append(
        Check(
            "blocked-probability-closed-form",
            not bad_blocked,
            f"{len(grid)} layouts exact-rational equal"
            if not bad_blocked
            else f"mismatch at {bad_blocked}",
        )
    )
    checks.append(
        Check(
            "pivotal-tribe-mean-closed-form",
            not bad_mean,
            f"{len(grid)} layouts exact" if not bad_mean else f"mismatch at {bad_mean}",
        )
    )

    bad_sw = []
    for params in _all_layouts(sandwich_n):
        stats = exact.exact_tribes_stats(params)
        lo, mid, hi = stats.mean_x_unblocked, stats.mean_x, stats.mean_x_blocked
        ok = lo <= mid <= hi
        if not ok:
            bad_sw.append((params.l, params.k))
        rows.append(["sandwich", params.l, params.k, float(lo), float(mid), float(hi), "", ok])
    checks.append(
        Check(
            "conditional-sandwich",
            not bad_sw,
            f"all layouts with n <= {sandwich_n}" if not bad_sw else f"violated at {bad_sw}",
        )
    )

    bad_struct = []
    for params in _all_layouts(structure_n):
        gens = tribes_generators(params)
        for f in (tribes(params.l, params.k), bribable(params.l, params.k), bribed(params.l, params.k)):
            mono = check_monotone(f)
            inv = check_invariance(f, gens)
            ok = mono.monotone and inv.invariant and inv.transitive
            if not ok:
                bad_struct.append((type(f).__name__, params.l, params.k))
        rows.append(["structure", params.l, params.k, "", "", "", "", not bad_struct])
    checks.append(
        Check(
            "monotone-invariant-transitive",
            not bad_struct,
            f"all layouts with n <= {structure_n}" if not bad_struct else f"failed: {bad_struct[:4]}",
        )
    )

    result = SuiteResult("bribable", seed, checks)
    _emit(
        result, out_dir,
        ["kind", "l", "k", "value_a", "value_b", "value_c", "value_d", "ok"],
        rows,
        {"suite": "bribable", "grid_n": grid_n, "sandwich_n": sandwich_n, "structure_n": structure_n},
    )
    return result


def _battery():
    return [
        ("dictator", Dictator(3, 0)),
        ("parity-4", Parity(4)),
        ("majority-3", Majority(3)),
        ("majority-5", Majority(5)),
        ("tribes-2-2", pm1_of(tribes(2, 2))),
        ("tribes-2-3", pm1_of(tribes(2, 3))),
        ("bribed-2-2", bribed(2, 2)),
    ]


def suite_marginals(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Pivotal-set vs spectral-sample marginals, orders 1 and 2."""
    opts = dict(overrides or {})
    tol = float(opts.pop("tol", 1e-10))
    if opts:
        raise UsageError(f"unknown overrides for marginals suite: {sorted(opts)}")
    checks = []
    rows = []
    for name, f in _battery():
        d1 = float(np.abs(exact.spectral_marginals(f, 1) - exact.pivotal_marginals(f, 1)).max())
        d2 = float(np.abs(exact.spectral_marginals(f, 2) - exact.pivotal_marginals(f, 2)).max())
        ok = d1 <= tol and d2 <= tol
        rows.append([name, f.n, d1, d2, ok])
        checks.append(Check(f"marginals-{name}", ok, f"order-1 dev {d1:.2e}, order-2 dev {d2:.2e}"))
    result = SuiteResult("marginals", seed, checks)
    _emit(result, out_dir, ["function", "n", "dev_order1", "dev_order2", "ok"], rows,
          {"suite": "marginals", "tol": tol})
    return result


def suite_stability(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Monte Carlo estimates against exact values, plus interval calibration."""
    opts = dict(overrides or {})
    n_samples = int(opts.pop("samples", 100_000))
    coverage_runs = int(opts.pop("coverage_runs", 100))
    coverage_samples = int(opts.pop("coverage_samples", 10_000))
    if opts:
        raise UsageError(f"unknown overrides for stability suite: {sorted(opts)}")
    base = RandomStream(seed, 0)
    stride = 0
    checks = []
    rows = []

    functions = [
        ("majority-3", Majority(3)),
        ("parity-4", Parity(4)),
        ("tribes-3-4", tribes(3, 4)),
        ("bribed-2-3", bribed(2, 3)),
    ]
    epsilons = (0.05, 0.2, 0.5)
    bad = []
    for name, f in functions:
        for eps in epsilons:
            truth = exact.exact_disagreement(f, eps)
            est = mc_disagreement(f, eps, n_samples, base.offset(stride), threads=threads)
            stride += n_samples
            ok = est.compatible(truth)
            if not ok:
                bad.append((name, eps))
            rows.append(["disagreement", name, eps, est.point, truth, est.stderr, ok])
    checks.append(
        Check(
            "mc-disagreement-vs-exact",
            not bad,
            f"{len(functions) * len(epsilons)} runs within 4 stderr" if not bad else f"off at {bad}",
        )
    )

    layouts = [TribesParams(2, 3), TribesParams(3, 4), TribesParams(2, 8)]
    bad = []
    for params in layouts:
        truth_zero = float(exact.bribable_zero_closed_form(params))
        truth_mean = float(exact.pivotal_tribe_mean_closed_form(params))
        for method in ("histogram", "bits"):
            stats = mc_tribes_stats(
                params, n_samples, base.offset(stride), method=method, threads=threads
            )
            stride += n_samples
            ok = stats.p_f_zero.compatible(truth_zero) and stats.mean_one_minus.compatible(truth_mean)
            if not ok:
                bad.append((params.l, params.k, method))
            rows.append(
                ["tribes-stats", f"{method}-{params.l}-{params.k}", "", stats.p_f_zero.point,
                 truth_zero, stats.p_f_zero.stderr, ok]
            )
    checks.append(
        Check(
            "mc-tribes-stats-vs-exact",
            not bad,
            f"{2 * len(layouts)} runs within 4 stderr" if not bad else f"off at {bad}",
        )
    )

    truth = exact.exact_disagreement(Majority(3), 0.2)
    hits = 0
    for r in range(coverage_runs):
        est = mc_disagreement(
            Majority(3), 0.2, coverage_samples, base.offset(stride), threads=threads
        )
        stride += coverage_samples
        hits += est.ci_lo <= truth <= est.ci_hi
        rows.append(["coverage", f"run-{r}", 0.2, est.point, truth, est.stderr,
                     est.ci_lo <= truth <= est.ci_hi])
    checks.append(
        Check(
            "wilson-coverage",
            hits >= int(0.9 * coverage_runs),
            f"{hits}/{coverage_runs} intervals covered the exact value",
        )
    )

    result = SuiteResult("stability", seed, checks)
    _emit(result, out_dir, ["kind", "case", "epsilon", "estimate", "exact", "stderr", "ok"], rows,
          {"suite": "stability", "samples": n_samples, "coverage_runs": coverage_runs,
           "coverage_samples": coverage_samples})
    return result


def suite_pivotal_abundance(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Blocked-probability and witness trends along the growth schedule."""
    opts = dict(overrides or {})
    n_samples = int(opts.pop("samples", 100_000))
    j_values = list(opts.pop("j_values", (10, 12, 14, 16, 18)))
    if opts:
        raise UsageError(f"unknown overrides for pivotal-abundance suite: {sorted(opts)}")
    entries = schedule([1 << j for j in j_values])
    base = RandomStream(seed, 0)
    results = []
    for idx, entry in enumerate(entries):
        stats = mc_tribes_stats(
            entry.params, n_samples, base.offset(idx * n_samples), threads=threads
        )
        results.append((entry, stats))
    rows = [
        [entry.k, entry.l, stats.p_f_zero.point, stats.p_f_zero.stderr,
         stats.p_witness.point, stats.p_witness.stderr,
         stats.mean_one_minus.point, entry.mu, stats.p_f_zero.n_samples]
        for entry, stats in results
    ]
    checks = []

    def trend(label, points):
        """No significant decrease anywhere; significant overall increase."""
        ok = True
        msgs = []
        for (pa, ea), (pb, eb) in zip(points, points[1:]):
            slack = 4.0 * math.hypot(ea, eb)
            if pb < pa - slack:
                ok = False
                msgs.append(f"significant drop {pa:.4f} -> {pb:.4f}")
        first, last = points[0], points[-1]
        sep = last[0] - first[0]
        need = 4.0 * math.hypot(first[1], last[1])
        if sep <= need:
            ok = False
            msgs.append(f"overall rise {sep:.4f} <= 4 sigma {need:.4f}")
        detail = f"rise {sep:.4f} > {need:.4f}" if ok else "; ".join(msgs)
        return Check(label, ok, detail)

    checks.append(
        trend("p-f-zero-trend", [(s.p_f_zero.point, s.p_f_zero.stderr) for _, s in results])
    )
    checks.append(
        trend("witness-trend", [(s.p_witness.point, s.p_witness.stderr) for _, s in results])
    )
    bad = []
    for entry, stats in results:
        rel = stats.mean_one_minus.stderr / entry.mu
        ratio = stats.mean_one_minus.point / entry.mu
        if not (1.0 - 4.0 * rel <= ratio <= 1.0 + 4.0 * rel):
            bad.append((entry.k, ratio))
    checks.append(
        Check(
            "mean-near-mu",
            not bad,
            "mean(one-flip-short tribes)/mu within 4 relative stderr at every point"
            if not bad
            else f"off at {bad}",
        )
    )
    result = SuiteResult("pivotal-abundance", seed, checks)
    _emit(result, out_dir,
          ["k", "l", "p_f_zero", "p_f_zero_stderr", "p_witness", "p_witness_stderr",
           "mean_one_minus", "mu", "n_samples"],
          rows, {"suite": "pivotal-abundance", "samples": n_samples, "j_values": j_values})
    return result


def suite_sandwich(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Coupled noise-stability comparison at one large layout."""
    opts = dict(overrides or {})
    n_samples = int(opts.pop("samples", 100_000))
    j = int(opts.pop("j", 14))
    epsilons = tuple(opts.pop("epsilons", (0.01, 0.05, 0.1)))
    if opts:
        raise UsageError(f"unknown overrides for sandwich suite: {sorted(opts)}")
    entry = schedule([1 << j])[0]
    base = RandomStream(seed, 0)
    checks = []
    rows = []
    for idx, eps in enumerate(epsilons):
        res = mc_stability_sandwich(
            entry.params, eps, n_samples, base.offset(idx * n_samples), threads=threads
        )
        rows.append(
            [entry.k, entry.l, eps, res.p_bribed_diff.point, res.p_majority_diff.point,
             res.p_ternary_active.point, res.combined_stderr, res.holds]
        )
        checks.append(
            Check(
                f"sandwich-eps-{eps}",
                res.holds,
                f"{res.p_bribed_diff.point:.4f} <= {res.p_majority_diff.point:.4f}"
                f" + {res.p_ternary_active.point:.4f} + 4 sigma (margin {res.margin:.4f})",
            )
        )
    result = SuiteResult("sandwich", seed, checks)
    _emit(result, out_dir,
          ["k", "l", "epsilon", "p_bribed_diff", "p_majority_diff", "p_ternary_active",
           "combined_stderr", "holds"],
          rows, {"suite": "sandwich", "samples": n_samples, "j": j, "epsilons": list(epsilons)})
    return result


def suite_volatility(seed, threads, out_dir, overrides=None) -> SuiteResult:
    """Output-change counts of the dynamics: calibration laws, the bribed
    sweep, and the pivotal tail bound."""
    opts = dict(overrides or {})
    calib_trials = int(opts.pop("calibration_trials", 100_000))
    sweep_trials = int(opts.pop("sweep_trials", 10_000))
    bound_trials = int(opts.pop("bound_trials", 4_000))
    bound_samples = int(opts.pop("bound_samples", 100_000))
    j_values = list(opts.pop("j_values", (10, 12, 14)))
    family = opts.pop("family", "bribed")
    if opts:
        raise UsageError(f"unknown overrides for volatility suite: {sorted(opts)}")
    base = RandomStream(seed, 0)
    checks = []
    rows = []

    cfg = DynamicsConfig(trials=calib_trials)
    dict_row = volatility_curve([Dictator(1)], cfg, base, threads).rows[0]
    truth = math.exp(-1.0)
    checks.append(
        Check(
            "dictator-exp-minus-one",
            dict_row.p_c0.compatible(truth),
            f"p_c0 {dict_row.p_c0.point:.5f} vs exp(-1) {truth:.5f}",
        )
    )
    rows.append(["dictator", 1, "", dict_row.p_c0.point, dict_row.p_c0.stderr,
                 dict_row.mean_changes, dict_row.q50, dict_row.q90])

    par_row = volatility_curve([Parity(16)], cfg, base.offset(calib_trials), threads).rows[0]
    par_se = math.sqrt(16.0 / calib_trials)  # changes ~ Poisson(n), so Var = n
    par_ok = abs(par_row.mean_changes - 16.0) <= 4.0 * par_se
    checks.append(
        Check("parity-mean-changes", par_ok, f"mean {par_row.mean_changes:.4f} vs 16")
    )
    rows.append(["parity", 16, "", par_row.p_c0.point, par_row.p_c0.stderr,
                 par_row.mean_changes, par_row.q50, par_row.q90])

    entries = schedule([1 << j for j in j_values])
    if family == "bribed":
        sweep_fns = [bribed(e.l, e.k) for e in entries]
    elif family in ("tribes", "bribable"):
        sweep_fns = [from_descriptor({"family": family, "l": e.l, "k": e.k}) for e in entries]
    elif family == "constant":
        # negative control: its p_c0 column sits at 1, so the sweep check fails
        sweep_fns = [ConstantFunction(e.params.n, 1) for e in entries]
    else:
        sweep_fns = [from_descriptor({"family": family, "n": e.params.n}) for e in entries]
    sweep = volatility_curve(
        sweep_fns, DynamicsConfig(trials=sweep_trials), base.offset(2 * calib_trials), threads
    )
    for entry, row in zip(entries, sweep.rows):
        rows.append([family, row.n, entry.k, row.p_c0.point, row.p_c0.stderr,
                     row.mean_changes, row.q50, row.q90])
    first, last = sweep.rows[0].p_c0, sweep.rows[-1].p_c0
    sep = first.point - last.point
    need = 4.0 * math.hypot(first.stderr, last.stderr)
    checks.append(
        Check(
            "sweep-p-c0-decreasing",
            sweep.p_c0_decreasing and sep > need,
            f"p_c0 {[round(r.p_c0.point, 4) for r in sweep.rows]}, endpoint gap "
            f"{sep:.4f} > 4 sigma {need:.4f}",
        )
    )

    entry = schedule([1 << 14])[0]
    a_n = pivotal_threshold(entry, "half-mean")
    bound = pivotal_bound_check(
        entry.params,
        a_n,
        DynamicsConfig(trials=bound_trials),
        base.offset(2 * calib_trials + len(entries) * sweep_trials),
        n_samples=bound_samples,
        threads=threads,
    )
    checks.append(
        Check(
            "pivotal-tail-bound",
            bound.holds,
            f"p_c0 {bound.p_c0.point:.4f} <= bound {bound.bound:.4f} (a_n={a_n}, "
            f"eps_hat {bound.eps_hat:.3f})",
        )
    )
    rows.append(["bound-check", entry.params.n, entry.k, bound.p_c0.point, bound.p_c0.stderr,
                 bound.bound, a_n, ""])

    result = SuiteResult("volatility", seed, checks)
    _emit(result, out_dir,
          ["family", "n", "k", "p_c0", "p_c0_stderr", "mean_or_bound", "q50_or_a", "q90"],
          rows,
          {"suite": "volatility", "calibration_trials": calib_trials,
           "sweep_trials": sweep_trials, "bound_trials": bound_trials,
           "bound_samples": bound_samples, "j_values": j_values, "family": family})
    return result


SUITES = {
    "bribable": suite_bribable,
    "marginals": suite_marginals,
    "stability": suite_stability,
    "pivotal-abundance": suite_pivotal_abundance,
    "sandwich": suite_sandwich,
    "volatility": suite_volatility,
}


def run_suite(name, seed=DEFAULT_SEED, threads=1, out_dir=None, overrides=None) -> SuiteResult:
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed, threads, out_dir, overrides)
