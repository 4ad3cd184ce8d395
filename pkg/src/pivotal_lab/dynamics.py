"""Continuous-time dynamics on the hypercube and output volatility.

Each coordinate carries an independent rate-1 Poisson clock over a window
[0, duration]. Under 'flip' semantics a ringing clock flips the
coordinate (uniform stationary measure); under 'resample' it redraws the
sign with P[+1] = p (product measure stationary). We count the number of
output changes C of a function along the trajectory; a family is volatile
when P[C = 0] -> 0 as the layout grows.

Superposing the clocks, a trajectory is: N ~ Poisson(n * duration) events,
each at a uniform coordinate (and, for resample, a fresh sign). Event
times are never needed, only their order, so they are not drawn.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .bitops import random_bits
from .constructions import (
    Bribed,
    BribableTribes,
    ConstantFunction,
    Dictator,
    Majority,
    Parity,
    ScheduleEntry,
    Tribes,
    TribesParams,
)
from .core import Configuration, EvaluableFunction
from .errors import UsageError
from .montecarlo import Estimate, _blocks
from .rng import RandomStream


@dataclass(frozen=True)
class DynamicsConfig:
    duration: float = 1.0
    semantics: str = "flip"  # 'flip' | 'resample'
    p: float = 0.5
    trials: int = 1000
    verify: bool = False  # recompute the value from scratch at the end

    def __post_init__(self):
        if self.duration <= 0:
            raise UsageError(f"duration must be positive, got {self.duration}")
        if self.semantics not in ("flip", "resample"):
            raise UsageError(f"unknown semantics {self.semantics!r}")
        if not 0 < self.p < 1:
            raise UsageError(f"p must lie strictly between 0 and 1, got {self.p}")
        if self.semantics == "flip" and self.p != 0.5:
            raise UsageError("flip semantics is stationary only at p = 1/2")
        if self.trials < 1:
            raise UsageError(f"need at least one trial, got {self.trials}")


@dataclass(frozen=True)
class TrajectoryResult:
    changes: int
    n_events: int
    initial_value: int
    final_value: int


class IncrementalSession:
    """Evaluate a function along single-coordinate updates in O(1) each.

    Generic fallback recomputes from the packed code; families with
    structure override. State lives in plain arrays so the tribes family
    can hand the whole event batch to a compiled kernel.
    """

    def __init__(self, f: EvaluableFunction, bits: np.ndarray):
        self.f = f
        self.bits = bits.copy()
        self.value = f.eval_bits(self.bits)

    def apply(self, i: int, new_bit: int) -> int:
        if self.bits[i] != new_bit:
            self.bits[i] = new_bit
            self.value = self.f.eval_bits(self.bits)
        return self.value

    def run(self, coords: np.ndarray, new_bits: Optional[np.ndarray]) -> TrajectoryResult:
        initial = self.value
        changes = 0
        for e in range(coords.shape[0]):
            i = int(coords[e])
            nb = int(new_bits[e]) if new_bits is not None else 1 - int(self.bits[i])
            before = self.value
            if self.apply(i, nb) != before:
                changes += 1
        return TrajectoryResult(changes, len(coords), initial, self.value)


class ParitySession(IncrementalSession):
    """Every actual bit change toggles the output."""

    def __init__(self, f: Parity, bits: np.ndarray):
        self.f = f
        self.bits = bits.copy()
        self.value = f.eval_bits(self.bits)

    def apply(self, i: int, new_bit: int) -> int:
        if self.bits[i] != new_bit:
            self.bits[i] = new_bit
            self.value = -self.value
        return self.value


class DictatorSession(IncrementalSession):
    def __init__(self, f: Dictator, bits: np.ndarray):
        self.f = f
        self.bits = bits.copy()
        self.value = f.eval_bits(self.bits)

    def apply(self, i: int, new_bit: int) -> int:
        self.bits[i] = new_bit
        if i == self.f.index:
            self.value = 2 * int(new_bit) - 1
        return self.value


class ConstantSession(IncrementalSession):
    def __init__(self, f: ConstantFunction, bits: np.ndarray):
        self.f = f
        self.bits = bits.copy()
        self.value = f.value

    def apply(self, i: int, new_bit: int) -> int:
        self.bits[i] = new_bit
        return self.value


class TribesFamilySession(IncrementalSession):
    """Tribes, ternary, bribed, and plain majority under one state layout:
    per-tribe plus-counts plus the global total."""

    _MODES = {Tribes: 0, BribableTribes: 1, Bribed: 2, Majority: 3}

    def __init__(self, f: EvaluableFunction, bits: np.ndarray, params: TribesParams, mode: int):
        self.f = f
        self.params = params
        self.mode = mode
        self.bits = bits.astype(np.uint8).copy()
        self.tribe_plus = (
            self.bits.reshape(params.k, params.l).sum(axis=1).astype(np.int64)
        )
        self.value = self._current()

    def _current(self) -> int:
        full_plus = int(np.count_nonzero(self.tribe_plus == self.params.l))
        full_minus = int(np.count_nonzero(self.tribe_plus == 0))
        total = 2 * int(self.tribe_plus.sum()) - self.params.n
        return _kernels._tribes_value(self.mode, full_plus, full_minus, total)

    def apply(self, i: int, new_bit: int) -> int:
        if self.bits[i] != new_bit:
            self.bits[i] = new_bit
            self.tribe_plus[i // self.params.l] += 1 if new_bit else -1
            self.value = self._current()
        return self.value

    def run(self, coords: np.ndarray, new_bits: Optional[np.ndarray]) -> TrajectoryResult:
        resample = new_bits is not None
        if new_bits is None:
            new_bits = np.empty(0, dtype=np.uint8)
        kernel = _kernels.tribes_chain if _kernels.HAVE_NUMBA else _kernels.tribes_chain_py
        changes, initial, final = kernel(
            self.bits,
            self.tribe_plus,
            coords,
            new_bits,
            resample,
            self.params.l,
            self.mode,
        )
        self.value = int(final)
        return TrajectoryResult(int(changes), len(coords), int(initial), int(final))


def make_session(f: EvaluableFunction, bits: np.ndarray) -> IncrementalSession:
    """Pick the cheapest session that can track f incrementally."""
    if isinstance(f, Tribes):
        return TribesFamilySession(f, bits, f.params, 0)
    if isinstance(f, BribableTribes):
        return TribesFamilySession(f, bits, f.params, 1)
    if isinstance(f, Bribed) and isinstance(f.f, BribableTribes) and isinstance(f.h, Majority):
        if f.h.tie_rule != "plus":
            return IncrementalSession(f, bits)
        return TribesFamilySession(f, bits, f.f.params, 2)
    if isinstance(f, Majority) and f.tie_rule == "plus":
        return TribesFamilySession(f, bits, TribesParams(f.n, 1), 3)
    if isinstance(f, Parity):
        return ParitySession(f, bits)
    if isinstance(f, Dictator):
        return DictatorSession(f, bits)
    if isinstance(f, ConstantFunction):
        return ConstantSession(f, bits)
    return IncrementalSession(f, bits)


def simulate_trajectory(
    f: EvaluableFunction, cfg: DynamicsConfig, stream: RandomStream
) -> TrajectoryResult:
    """One trajectory over [0, duration]; draws, in order: the initial
    configuration, the event count, event coordinates, resample signs."""
    gen = stream.generator()
    n = f.n
    bits = random_bits(gen, n, cfg.p if cfg.semantics == "resample" else 0.5)
    session = make_session(f, bits)
    n_events = int(gen.poisson(n * cfg.duration))
    coords = gen.integers(0, n, size=n_events, dtype=np.int64)
    new_bits = (
        random_bits(gen, n_events, cfg.p) if cfg.semantics == "resample" and n_events else None
    )
    result = session.run(coords, new_bits)
    if cfg.verify:
        fresh = f.eval_bits(session.bits)
        if fresh != result.final_value:
            raise RuntimeError(
                f"incremental session drifted: tracked {result.final_value}, got {fresh}"
            )
    return result


@dataclass(frozen=True)
class VolatilityRow:
    """Volatility summary of one function over a trial ensemble."""

    descriptor: dict
    n: int
    trials: int
    duration: float
    semantics: str
    p_c0: Estimate
    mean_changes: float
    q50: int
    q90: int
    histogram: dict
    stream_base: int


@dataclass(frozen=True)
class VolatilityReport:
    rows: list
    seed: int
    p_c0_decreasing: bool  # strictly, in point estimates, along the rows


def _histogram_quantile(hist: dict, trials: int, q: float) -> int:
    target = q * trials
    run = 0
    for c in sorted(hist):
        run += hist[c]
        if run >= target:
            return int(c)
    return int(max(hist) if hist else 0)


def volatility_trials(
    f: EvaluableFunction,
    cfg: DynamicsConfig,
    base: RandomStream,
    threads: int = 1,
) -> VolatilityRow:
    """Run cfg.trials independent trajectories; trial t uses stream
    base + t, so the ensemble is reproducible under any thread split."""

    def run(start, stop):
        hist: dict = {}
        zero = 0
        total = 0
        for t in range(start, stop):
            res = simulate_trajectory(f, cfg, base.offset(t))
            hist[res.changes] = hist.get(res.changes, 0) + 1
            zero += res.changes == 0
            total += res.changes
        return hist, zero, total

    spans = _blocks(cfg.trials, 1024)
    if threads <= 1 or len(spans) <= 1:
        parts = [run(a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: run(*ab), spans))
    hist: dict = {}
    zero = 0
    total = 0
    for h, z, tt in parts:
        zero += z
        total += tt
        for c, cnt in h.items():
            hist[c] = hist.get(c, 0) + cnt
    try:
        desc = f.descriptor()
    except UsageError:
        desc = {"family": type(f).__name__}
    return VolatilityRow(
        descriptor=desc,
        n=f.n,
        trials=cfg.trials,
        duration=cfg.duration,
        semantics=cfg.semantics,
        p_c0=Estimate.probability(zero, cfg.trials, base),
        mean_changes=total / cfg.trials,
        q50=_histogram_quantile(hist, cfg.trials, 0.5),
        q90=_histogram_quantile(hist, cfg.trials, 0.9),
        histogram=dict(sorted(hist.items())),
        stream_base=base.stream,
    )


def volatility_curve(
    functions: list,
    cfg: DynamicsConfig,
    base: RandomStream,
    threads: int = 1,
) -> VolatilityReport:
    """Volatility rows for a list of functions, advancing the stream base
    by cfg.trials per row."""
    rows = []
    for idx, f in enumerate(functions):
        rows.append(volatility_trials(f, cfg, base.offset(idx * cfg.trials), threads))
    decreasing = all(
        rows[i + 1].p_c0.point < rows[i].p_c0.point for i in range(len(rows) - 1)
    )
    return VolatilityReport(rows, base.seed, decreasing)


@dataclass(frozen=True)
class BoundCheckResult:
    """Empirical check of P[C = 0] <= eps + exp(-(1 - eps) a) with
    eps^2 an upper confidence bound on P[|pivotal set| <= a]."""

    params: TribesParams
    a_n: int
    p_c0: Estimate
    p_small_pivotal: Estimate
    eps_hat: float
    bound: float
    holds: bool
    margin: float


def pivotal_bound_check(
    params: TribesParams,
    a_n: int,
    cfg: DynamicsConfig,
    base: RandomStream,
    n_samples: int = 100_000,
    threads: int = 1,
) -> BoundCheckResult:
    """Check the volatility bound for the bribed majority at one layout.

    The pivotal-set size of the bribed rule is bounded below by the count
    of tribes one flip from unanimity on the side the majority opposes
    (each such flip makes the ternary function speak against the current
    output), provided no tribe is unanimous; unanimity itself is counted
    as a small pivotal set, making the tail estimate conservative.
    """
    if a_n < 0:
        raise UsageError(f"threshold must be >= 0, got {a_n}")
    from .constructions import bribed  # local import to keep module deps one-way
    from .montecarlo import sample_tribes_records

    g = bribed(params.l, params.k)
    row = volatility_trials(g, cfg, base, threads)
    records = sample_tribes_records(
        params, n_samples, base.offset(cfg.trials), cfg.p, "histogram", threads
    )
    maj_plus = records.maj_signs() >= 0  # ties follow the plus rule
    lower = np.where(maj_plus, records.one_plus, records.one_minus)
    unanimous = (records.full_plus > 0) | (records.full_minus > 0)
    small = unanimous | (lower <= a_n)
    est_small = Estimate.probability(int(np.count_nonzero(small)), n_samples, base.offset(cfg.trials))
    eps_hat = math.sqrt(min(1.0, est_small.point + 4.0 * est_small.stderr))
    bound = min(1.0, eps_hat + math.exp(-(1.0 - eps_hat) * a_n))
    slack = 4.0 * row.p_c0.stderr
    margin = bound + slack - row.p_c0.point
    return BoundCheckResult(
        params=params,
        a_n=a_n,
        p_c0=row.p_c0,
        p_small_pivotal=est_small,
        eps_hat=eps_hat,
        bound=bound,
        holds=margin >= 0,
        margin=margin,
    )
