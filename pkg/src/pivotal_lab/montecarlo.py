"""Monte Carlo estimators with per-sample random streams.

Sample s of any estimator here uses stream ``base.offset(s)``, so tallies
are integers that do not depend on how the sample range is split across
workers; estimates are bit-for-bit reproducible for any thread count.

Large tribe layouts are sampled through per-tribe sufficient statistics:
one multinomial draw over per-tribe minus-counts replaces the n individual
coordinates. The output law is identical to bit-level sampling (the tribes
are exchangeable and only their counts matter), which method='bits'
cross-checks at small n.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bitops import popcount, random_code
from .constructions import TribesParams
from .core import EvaluableFunction
from .errors import UsageError
from .rng import RandomStream

Z95 = 1.959963984540054

_BLOCK = 8192


@dataclass(frozen=True)
class Estimate:
    """A point estimate with its 95% interval and stream provenance."""

    point: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    kind: str  # "probability" | "mean"
    seed: int
    stream_first: int
    stream_last: int

    @classmethod
    def probability(cls, successes: int, n_samples: int, base: RandomStream) -> "Estimate":
        """Binomial tally with a Wilson score interval (never leaves [0,1])."""
        if not 0 <= successes <= n_samples:
            raise UsageError(f"tally {successes} out of range for {n_samples} samples")
        phat = successes / n_samples
        stderr = math.sqrt(phat * (1.0 - phat) / n_samples)
        z2 = Z95 * Z95
        denom = 1.0 + z2 / n_samples
        center = (phat + z2 / (2 * n_samples)) / denom
        half = (Z95 / denom) * math.sqrt(
            phat * (1.0 - phat) / n_samples + z2 / (4.0 * n_samples * n_samples)
        )
        lo = 0.0 if successes == 0 else max(0.0, center - half)
        hi = 1.0 if successes == n_samples else min(1.0, center + half)
        return cls(
            phat, stderr, lo, hi,
            n_samples, "probability", base.seed, base.stream, base.stream + n_samples - 1,
        )

    @classmethod
    def mean_of(cls, total, total_sq, n_samples: int, base: RandomStream) -> "Estimate":
        """Sample mean with a normal interval; totals may be exact ints."""
        mean = total / n_samples
        if n_samples > 1:
            var = (total_sq - total * total / n_samples) / (n_samples - 1)
            stderr = math.sqrt(max(0.0, var) / n_samples)
        else:
            stderr = float("inf")
        return cls(
            float(mean), stderr, float(mean) - Z95 * stderr, float(mean) + Z95 * stderr,
            n_samples, "mean", base.seed, base.stream, base.stream + n_samples - 1,
        )

    def compatible(self, truth: float, slack: float = 4.0) -> bool:
        """|point - truth| within slack * stderr (slack sigma rule)."""
        if self.stderr == 0:
            return self.point == truth
        return abs(self.point - truth) <= slack * self.stderr


def _blocks(n_samples: int, block: int = _BLOCK):
    return [(s, min(s + block, n_samples)) for s in range(0, n_samples, block)]


def _map_blocks(fn, n_samples: int, threads: int):
    """Run fn(start, stop) over fixed blocks, merged in block order.

    The block layout is independent of the thread count, and fn must
    depend only on (start, stop), so the merged result is too.
    """
    spans = _blocks(n_samples)
    if threads <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


def _check_samples(n_samples: int):
    if n_samples < 1:
        raise UsageError(f"need at least one sample, got {n_samples}")


def mc_disagreement(
    f: EvaluableFunction,
    epsilon: float,
    n_samples: int,
    base: RandomStream,
    p: float = 0.5,
    threads: int = 1,
) -> Estimate:
    """Estimate P[f(c) != f(c')] for an epsilon-noisy copy c' of c.

    Per sample: draw c, the resample mask, then fresh signs, all from the
    sample's own stream.
    """
    if not 0 <= epsilon <= 1:
        raise UsageError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    _check_samples(n_samples)
    n = f.n
    if n > 64:
        raise UsageError("sampling estimator works on packed codes, n <= 64")
    full = (1 << n) - 1

    def run(start, stop):
        tally = 0
        for s in range(start, stop):
            gen = base.offset(s).generator()
            code = random_code(gen, n, p)
            mask_bits = gen.random(n) < epsilon
            mask = 0
            for i in range(n):
                if mask_bits[i]:
                    mask |= 1 << i
            fresh = random_code(gen, n, p)
            noisy = (code & ~mask) | (fresh & mask)
            if f.evaluate_code(code) != f.evaluate_code(noisy):
                tally += 1
        return tally

    total = sum(_map_blocks(run, n_samples, threads))
    return Estimate.probability(total, n_samples, base)


def _minus_count_pmf(l: int, p: float) -> np.ndarray:
    """Law of the number of -1 coordinates in one tribe of size l."""
    m = np.arange(l + 1)
    pmf = np.array([math.comb(l, int(mm)) for mm in m], dtype=np.float64)
    pmf *= (1.0 - p) ** m * p ** (l - m)
    return pmf / pmf.sum()


@dataclass(frozen=True)
class TribesSampleArrays:
    """Per-sample tribe statistics (one entry per sample).

    full_plus / full_minus count unanimous tribes; one_minus / one_plus
    count tribes a single flip from unanimity; minus_total is the number
    of -1 coordinates overall.
    """

    params: TribesParams
    p: float
    method: str
    base: RandomStream
    full_plus: np.ndarray
    full_minus: np.ndarray
    one_minus: np.ndarray
    one_plus: np.ndarray
    minus_total: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.full_plus)

    def f_values(self) -> np.ndarray:
        """Ternary construction value per sample."""
        return np.sign(self.full_plus).astype(np.int8) - np.sign(self.full_minus).astype(np.int8)

    def maj_signs(self) -> np.ndarray:
        """Ternary sign of the coordinate sum per sample."""
        total = self.params.n - 2 * self.minus_total.astype(np.int64)
        return np.sign(total).astype(np.int8)


def sample_tribes_records(
    params: TribesParams,
    n_samples: int,
    base: RandomStream,
    p: float = 0.5,
    method: str = "histogram",
    threads: int = 1,
) -> TribesSampleArrays:
    """Draw per-sample tribe statistics.

    method='histogram' draws, for each sample, one multinomial over the
    (l+1) per-tribe minus-counts; cost is O(l) per sample regardless of k.
    method='bits' draws all k tribe words (p = 1/2 only) and reduces them;
    same law, kept as a cross-check and for code-level consumers.
    """
    _check_samples(n_samples)
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    l, k = params.l, params.k
    if l > 63:
        raise UsageError(f"tribe size {l} too large for packed sampling")
    if method not in ("histogram", "bits"):
        raise UsageError(f"unknown sampling method {method!r}")
    if method == "bits" and p != 0.5:
        raise UsageError("bit-level sampling draws raw words and needs p = 1/2")
    pmf = _minus_count_pmf(l, p)

    def run(start, stop):
        m = stop - start
        fp = np.empty(m, dtype=np.int64)
        fm = np.empty(m, dtype=np.int64)
        om = np.empty(m, dtype=np.int64)
        op = np.empty(m, dtype=np.int64)
        mt = np.empty(m, dtype=np.int64)
        weights = np.arange(l + 1, dtype=np.int64)
        if method == "histogram":
            for s in range(m):
                gen = base.offset(start + s).generator()
                hist = gen.multinomial(k, pmf)
                fp[s] = hist[0]
                fm[s] = hist[l]
                om[s] = hist[1] if l >= 1 else 0
                op[s] = hist[l - 1] if l >= 1 else 0
                mt[s] = int(np.dot(hist, weights))
        else:
            mask = (1 << l) - 1
            for s in range(m):
                gen = base.offset(start + s).generator()
                words = gen.bit_generator.random_raw(k) & np.uint64(mask)
                pc = popcount(words).astype(np.int64)
                fp[s] = int(np.count_nonzero(pc == l))
                fm[s] = int(np.count_nonzero(pc == 0))
                om[s] = int(np.count_nonzero(pc == l - 1))
                op[s] = int(np.count_nonzero(pc == 1))
                mt[s] = int(k * l - pc.sum())
        return fp, fm, om, op, mt

    parts = _map_blocks(run, n_samples, threads)
    cols = [np.concatenate([part[j] for part in parts]) for j in range(5)]
    return TribesSampleArrays(params, p, method, base, *cols)


@dataclass(frozen=True)
class TribesStatsResult:
    """Aggregated tribe-level estimates for the ternary construction."""

    params: TribesParams
    p: float
    method: str
    p_f_zero: Estimate
    p_witness: Estimate          # f = 0 and both near-unanimity directions present
    p_witness_strict: Estimate   # no unanimous tribe at all, both directions present
    p_both_full: Estimate        # unanimous tribes on both sides at once
    mean_one_minus: Estimate
    tail_one_minus: dict         # a -> Estimate of P[one_minus > a]
    crosstab: np.ndarray         # (f value -1/0/+1) x (maj sign -1/0/+1) counts

    @property
    def n_samples(self) -> int:
        return self.p_f_zero.n_samples


def mc_tribes_stats(
    params: TribesParams,
    n_samples: int,
    base: RandomStream,
    p: float = 0.5,
    thresholds: tuple = (),
    method: str = "histogram",
    threads: int = 1,
    records: Optional[TribesSampleArrays] = None,
) -> TribesStatsResult:
    """Sample the ternary construction's tribe statistics and aggregate.

    The witness event {f = 0, one_minus > 0, one_plus > 0} exhibits, on
    the no-unanimity part, coordinates pivotal in both directions; its
    strict variant conditions unanimity away entirely.
    """
    if records is None:
        records = sample_tribes_records(params, n_samples, base, p, method, threads)
    else:
        base = records.base
    f_vals = records.f_values()
    maj = records.maj_signs()
    f_zero = f_vals == 0
    has_both_near = (records.one_minus > 0) & (records.one_plus > 0)
    no_full = (records.full_plus == 0) & (records.full_minus == 0)
    n = records.n_samples
    crosstab = np.zeros((3, 3), dtype=np.int64)
    for fi, fv in enumerate((-1, 0, 1)):
        for mi, mv in enumerate((-1, 0, 1)):
            crosstab[fi, mi] = int(np.count_nonzero((f_vals == fv) & (maj == mv)))
    one_minus = records.one_minus
    tails = {
        int(a): Estimate.probability(int(np.count_nonzero(one_minus > a)), n, base)
        for a in thresholds
    }
    return TribesStatsResult(
        params=params,
        p=records.p,
        method=records.method,
        p_f_zero=Estimate.probability(int(np.count_nonzero(f_zero)), n, base),
        p_witness=Estimate.probability(int(np.count_nonzero(f_zero & has_both_near)), n, base),
        p_witness_strict=Estimate.probability(
            int(np.count_nonzero(no_full & has_both_near)), n, base
        ),
        p_both_full=Estimate.probability(
            int(np.count_nonzero((records.full_plus > 0) & (records.full_minus > 0))), n, base
        ),
        mean_one_minus=Estimate.mean_of(
            int(one_minus.sum()), int(np.dot(one_minus, one_minus)), n, base
        ),
        tail_one_minus=tails,
        crosstab=crosstab,
    )


@dataclass(frozen=True)
class PivotalCountResult:
    """Sampled law of the pivotal-set size, split by function value."""

    f_descriptor: dict
    n_samples: int
    by_value: dict  # value -> {size: count}
    mean_size: Estimate

    def histogram(self) -> dict:
        out = {}
        for sizes in self.by_value.values():
            for m, cnt in sizes.items():
                out[m] = out.get(m, 0) + cnt
        return dict(sorted(out.items()))


def mc_pivotal_count(
    f: EvaluableFunction,
    n_samples: int,
    base: RandomStream,
    p: float = 0.5,
    threads: int = 1,
) -> PivotalCountResult:
    """Sample |pivotal set| by brute single-flip scans at random points."""
    _check_samples(n_samples)
    n = f.n
    if n > 64:
        raise UsageError("pivotal count sampling works on packed codes, n <= 64")

    def run(start, stop):
        local: dict = {}
        tot = 0
        tot_sq = 0
        for s in range(start, stop):
            gen = base.offset(s).generator()
            code = random_code(gen, n, p)
            v = f.evaluate_code(code)
            cnt = 0
            for i in range(n):
                if f.evaluate_code(code ^ (1 << i)) != v:
                    cnt += 1
            local.setdefault(v, {})
            local[v][cnt] = local[v].get(cnt, 0) + 1
            tot += cnt
            tot_sq += cnt * cnt
        return local, tot, tot_sq

    parts = _map_blocks(run, n_samples, threads)
    by_value: dict = {}
    tot = 0
    tot_sq = 0
    for local, t, tsq in parts:
        tot += t
        tot_sq += tsq
        for v, sizes in local.items():
            tgt = by_value.setdefault(v, {})
            for m, cnt in sizes.items():
                tgt[m] = tgt.get(m, 0) + cnt
    by_value = {v: dict(sorted(sizes.items())) for v, sizes in sorted(by_value.items())}
    try:
        desc = f.descriptor()
    except UsageError:
        desc = {"family": type(f).__name__}
    return PivotalCountResult(
        desc, n_samples, by_value, Estimate.mean_of(tot, tot_sq, n_samples, base)
    )


def _pair_pmf(l: int, epsilon: float, p: float) -> np.ndarray:
    """Joint law of (plus-count before, plus-count after noise) in one tribe.

    A +1 coordinate stays +1 with probability 1 - epsilon (1 - p); a -1
    coordinate turns +1 with probability epsilon p. Given a plus-count a,
    the after-count is Binomial(a, keep) + Binomial(l - a, gain).
    """
    keep = 1.0 - epsilon * (1.0 - p)
    gain = epsilon * p
    a_pmf = _minus_count_pmf(l, 1.0 - p)  # plus-count law: swap roles of the sides
    out = np.zeros((l + 1, l + 1), dtype=np.float64)
    for a in range(l + 1):
        stay = np.array([math.comb(a, j) for j in range(a + 1)], dtype=np.float64)
        stay *= keep ** np.arange(a + 1) * (1.0 - keep) ** (a - np.arange(a + 1))
        up = np.array([math.comb(l - a, j) for j in range(l - a + 1)], dtype=np.float64)
        up *= gain ** np.arange(l - a + 1) * (1.0 - gain) ** (l - a - np.arange(l - a + 1))
        out[a, :] = a_pmf[a] * np.convolve(stay, up)
    return out


@dataclass(frozen=True)
class SandwichResult:
    """Coupled noise-disagreement comparison of the bribed rule against
    its majority base plus the ternary activity term."""

    params: TribesParams
    epsilon: float
    p: float
    p_bribed_diff: Estimate
    p_majority_diff: Estimate
    p_ternary_active: Estimate
    holds: bool
    margin: float

    @property
    def bound(self) -> float:
        return self.p_majority_diff.point + self.p_ternary_active.point

    @property
    def combined_stderr(self) -> float:
        return math.sqrt(
            self.p_bribed_diff.stderr ** 2
            + self.p_majority_diff.stderr ** 2
            + self.p_ternary_active.stderr ** 2
        )


def mc_stability_sandwich(
    params: TribesParams,
    epsilon: float,
    n_samples: int,
    base: RandomStream,
    p: float = 0.5,
    threads: int = 1,
) -> SandwichResult:
    """Check P[g != g'] <= P[Maj != Maj'] + P[f or f' speaks] on coupled pairs.

    g follows the ternary f when it speaks and majority otherwise, so on
    every sample path 1[g != g'] <= 1[Maj != Maj'] + 1[f != 0 or f' != 0];
    the estimates inherit the inequality up to sampling noise. Each sample
    draws one multinomial over the (l+1)^2 joint per-tribe plus-counts
    before/after noise.
    """
    if not 0 <= epsilon <= 1:
        raise UsageError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    _check_samples(n_samples)
    l, k, n = params.l, params.k, params.n
    pair = _pair_pmf(l, epsilon, p).reshape(-1)
    cells = l + 1
    a_of = np.repeat(np.arange(cells, dtype=np.int64), cells)
    b_of = np.tile(np.arange(cells, dtype=np.int64), cells)
    a_full = (a_of == l).astype(np.int64)
    a_empty = (a_of == 0).astype(np.int64)
    b_full = (b_of == l).astype(np.int64)
    b_empty = (b_of == 0).astype(np.int64)

    def run(start, stop):
        d_g = d_maj = active = 0
        for s in range(start, stop):
            gen = base.offset(s).generator()
            hist = gen.multinomial(k, pair)
            fp_a = int(np.dot(hist, a_full))
            fm_a = int(np.dot(hist, a_empty))
            fp_b = int(np.dot(hist, b_full))
            fm_b = int(np.dot(hist, b_empty))
            plus_a = int(np.dot(hist, a_of))
            plus_b = int(np.dot(hist, b_of))
            maj_a = 1 if 2 * plus_a >= n else -1
            maj_b = 1 if 2 * plus_b >= n else -1
            f_a = (fp_a > 0) - (fm_a > 0)
            f_b = (fp_b > 0) - (fm_b > 0)
            g_a = f_a if f_a != 0 else maj_a
            g_b = f_b if f_b != 0 else maj_b
            d_g += g_a != g_b
            d_maj += maj_a != maj_b
            active += (f_a != 0) or (f_b != 0)
        return d_g, d_maj, active

    parts = _map_blocks(run, n_samples, threads)
    d_g = sum(part[0] for part in parts)
    d_maj = sum(part[1] for part in parts)
    active = sum(part[2] for part in parts)
    est_g = Estimate.probability(d_g, n_samples, base)
    est_maj = Estimate.probability(d_maj, n_samples, base)
    est_act = Estimate.probability(active, n_samples, base)
    combined = math.sqrt(est_g.stderr ** 2 + est_maj.stderr ** 2 + est_act.stderr ** 2)
    slack = 4.0 * combined
    margin = est_maj.point + est_act.point + slack - est_g.point
    return SandwichResult(
        params, epsilon, p, est_g, est_maj, est_act, holds=margin >= 0, margin=margin
    )
