"""Acceptance gate: the ten headline checks at their stated scales.

Every test runs (at most once per session, cached) one of the canned
verdict suites at the default seed and asserts its named checks; a
one-line pass/fail per criterion lands in the terminal summary. The
suites pin their own scales (grids, sample counts, schedules), so this
module only needs to read the verdicts.
"""

import pytest

from pivotal_lab.reproduce import DEFAULT_SEED, run_suite

SUITE_NAMES = (
    "bribable",
    "marginals",
    "stability",
    "pivotal-abundance",
    "sandwich",
    "volatility",
)


@pytest.fixture(scope="session")
def suite(tmp_path_factory):
    cache = {}
    dirs = {}

    def get(name, threads=1):
        key = (name, threads)
        if key not in cache:
            if threads not in dirs:
                dirs[threads] = tmp_path_factory.mktemp(f"suites-t{threads}")
            cache[key] = run_suite(
                name, seed=DEFAULT_SEED, threads=threads, out_dir=str(dirs[threads])
            )
        return cache[key], dirs[threads]

    return get


def _check(result, name):
    for c in result.checks:
        if c.name == name:
            return c
    raise AssertionError(f"suite {result.suite} has no check named {name!r}")


def test_criterion_01_blocked_probability_exact(suite, criterion):
    # exhaustive P[no unanimous tribe] equals (1 - 2^-l)^k as exact
    # rationals on the full l <= 4, k <= 5, lk <= 20 grid
    res, _ = suite("bribable")
    c = _check(res, "blocked-probability-closed-form")
    criterion(1, "exact blocked probability closed form", c.passed, c.detail)
    assert c.passed, c.detail


def test_criterion_02_pivotal_tribe_mean_exact(suite, criterion):
    # exhaustive E[#one-flip-short tribes] equals k*l*2^-l exactly
    res, _ = suite("bribable")
    c = _check(res, "pivotal-tribe-mean-closed-form")
    criterion(2, "exact pivotal-tribe mean closed form", c.passed, c.detail)
    assert c.passed, c.detail


def test_criterion_03_conditional_sandwich_exact(suite, criterion):
    # E[X | unblocked] <= E[X] <= E[X | blocked], exact rationals, lk <= 18
    res, _ = suite("bribable")
    c = _check(res, "conditional-sandwich")
    criterion(3, "conditional pivotal-tribe sandwich", c.passed, c.detail)
    assert c.passed, c.detail


def test_criterion_04_monotone_invariant_transitive(suite, criterion):
    # all edges monotone; invariance under the generator pair with a full
    # coordinate orbit, for all three constructions, lk <= 16
    res, _ = suite("bribable")
    c = _check(res, "monotone-invariant-transitive")
    criterion(4, "monotonicity, invariance, transitivity", c.passed, c.detail)
    assert c.passed, c.detail


def test_criterion_05_marginal_coincidence(suite, criterion):
    res, _ = suite("marginals")
    detail = f"{len(res.checks)} battery members, orders 1 and 2 within 1e-10"
    if not res.passed:
        detail = "; ".join(f"{c.name}: {c.detail}" for c in res.checks if not c.passed)
    criterion(5, "pivotal vs spectral membership marginals", res.passed, detail)
    assert res.passed, detail


def test_criterion_06_mc_matches_exact(suite, criterion):
    res, _ = suite("stability")
    names = ("mc-disagreement-vs-exact", "mc-tribes-stats-vs-exact", "wilson-coverage")
    checks = [_check(res, n) for n in names]
    ok = all(c.passed for c in checks)
    coverage = _check(res, "wilson-coverage").detail
    criterion(6, "MC estimates within 4 stderr of exact; interval coverage", ok, coverage)
    assert ok, [f"{c.name}: {c.detail}" for c in checks if not c.passed]


def test_criterion_07_bribability_trend(suite, criterion):
    res, _ = suite("pivotal-abundance")
    names = ("p-f-zero-trend", "witness-trend", "mean-near-mu")
    checks = [_check(res, n) for n in names]
    ok = all(c.passed for c in checks)
    detail = _check(res, "p-f-zero-trend").detail
    criterion(7, "tie and two-sided-witness probabilities rise along the schedule", ok, detail)
    assert ok, [f"{c.name}: {c.detail}" for c in checks if not c.passed]


def test_criterion_08_stability_sandwich(suite, criterion):
    res, _ = suite("sandwich")
    ok = res.passed
    detail = "; ".join(c.detail for c in res.checks)
    criterion(8, "coupled stability sandwich at the j=14 layout", ok, detail)
    assert ok, detail


def test_criterion_09_volatility(suite, criterion):
    res, _ = suite("volatility")
    names = (
        "dictator-exp-minus-one",
        "parity-mean-changes",
        "sweep-p-c0-decreasing",
        "pivotal-tail-bound",
    )
    checks = [_check(res, n) for n in names]
    ok = all(c.passed for c in checks)
    detail = _check(res, "sweep-p-c0-decreasing").detail
    criterion(9, "volatility calibrations, decreasing quiet probability, tail bound", ok, detail)
    assert ok, [f"{c.name}: {c.detail}" for c in checks if not c.passed]


def test_criterion_10_thread_count_reproducibility(suite, criterion):
    mismatches = []
    compared = 0
    for name in SUITE_NAMES:
        _, dir1 = suite(name, threads=1)
        _, dir2 = suite(name, threads=2)
        for suffix in (".csv", "_verdict.json"):
            fname = f"{name}{suffix}"
            a = (dir1 / fname).read_bytes()
            b = (dir2 / fname).read_bytes()
            compared += 1
            if a != b:
                mismatches.append(fname)
    ok = not mismatches and compared == 2 * len(SUITE_NAMES)
    detail = (
        f"{compared} files byte-identical (threads 1 vs 2)"
        if ok
        else f"differs: {mismatches}"
    )
    criterion(10, "byte-identical suite outputs across thread counts", ok, detail)
    assert ok, detail
