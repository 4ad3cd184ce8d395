"""Exhaustive-enumeration engine: truth tables, Walsh spectra, exact
probabilities, influences, pivotal-set laws, and closed-form tribe counts.

Everything here is deterministic. Probabilities at p = 1/2 are dyadic
rationals and are exposed as Fractions where exactness matters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .bitops import popcount
from .constructions import TribesParams, Tribes, tribes_record_from_code
from .core import BOOLEAN, EvaluableFunction
from .errors import ExhaustiveCapError, UsageError

TABLE_CAP = 24
INFLUENCE_CAP = 22
LAW_CAP = 20
DISAGREEMENT_CAP = 20
SPECTRAL_PAIR_CAP = 16
DIRECT_PAIR_CAP = 12


@dataclass(frozen=True)
class TruthTable:
    n: int
    values: np.ndarray  # int8, index = configuration code


def truth_table(f: EvaluableFunction, cap: int = TABLE_CAP) -> TruthTable:
    if f.n > cap:
        raise ExhaustiveCapError("truth_table", f.n, cap)
    return TruthTable(f.n, f.values_table(cap=cap))


@dataclass(frozen=True)
class SpectrumTable:
    """Walsh coefficients indexed by subset mask: coefficient(S) is the
    mean of f times the sign character of S."""

    n: int
    coefficients: np.ndarray  # float64, index = subset mask

    def coefficient(self, mask: int) -> float:
        return float(self.coefficients[mask])

    def parseval(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients))

    def nonzero(self, tol: float = 1e-12):
        idx = np.nonzero(np.abs(self.coefficients) > tol)[0]
        return [(int(m), float(self.coefficients[m])) for m in idx]


def _fwht(values: np.ndarray) -> np.ndarray:
    """In-place style fast transform: out[S] = sum_m values[m] * (-1)^|S & m|."""
    a = values.astype(np.float64).copy()
    h = 1
    while h < len(a):
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bot = a[:, 0, :] - a[:, 1, :]
        a[:, 0, :] = top
        a[:, 1, :] = bot
        a = a.reshape(-1)
        h *= 2
    return a


def wht(table: TruthTable) -> SpectrumTable:
    """Walsh spectrum of a table under the sign convention bit set <=> +1.

    The transform's (-1)^|S & m| kernel counts set bits, i.e. +1
    coordinates, so each coefficient picks up a (-1)^|S| correction to
    match the character prod_{i in S} c_i.
    """
    n = table.n
    transformed = _fwht(table.values)
    masks = np.arange(1 << n, dtype=np.uint64)
    sign = 1.0 - 2.0 * (popcount(masks) & np.uint64(1)).astype(np.float64)
    return SpectrumTable(n, sign * transformed / (1 << n))


def spectrum(f: EvaluableFunction, cap: int = TABLE_CAP) -> SpectrumTable:
    return wht(truth_table(f, cap=cap))


def exact_prob(f: EvaluableFunction, value: int, p: float = 0.5, cap: int = TABLE_CAP) -> float:
    """P[f = value] under the product measure with per-coordinate P[+1] = p."""
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    table = truth_table(f, cap=cap)
    hits = np.nonzero(table.values == value)[0].astype(np.uint64)
    if p == 0.5:
        return hits.size / (1 << f.n)
    plus = popcount(hits).astype(np.float64)
    return float(np.sum(p ** plus * (1 - p) ** (f.n - plus)))


def exact_prob_rational(f: EvaluableFunction, value: int, cap: int = TABLE_CAP) -> Fraction:
    """P[f = value] at p = 1/2 as an exact dyadic rational."""
    table = truth_table(f, cap=cap)
    return Fraction(int(np.count_nonzero(table.values == value)), 1 << f.n)


def _indicator_spectra(table: TruthTable) -> dict:
    out = {}
    for v in (-1, 0, 1):
        ind = (table.values == v).astype(np.float64)
        if ind.any():
            out[v] = wht(TruthTable(table.n, ind)).coefficients
    return out


def exact_noise_joint(f: EvaluableFunction, epsilon: float, cap: int = DISAGREEMENT_CAP) -> dict:
    """Joint law P[f(c) = v, f(c') = w] for c' an epsilon-noisy copy of c.

    Works through indicator spectra: the noise operator damps the mask-S
    coefficient by (1 - epsilon)^|S|, so the joint probability is the
    damped inner product of the two indicator spectra. p = 1/2 only.
    """
    if not 0 <= epsilon <= 1:
        raise UsageError(f"epsilon must lie in [0, 1], got {epsilon}")
    if f.n > cap:
        raise ExhaustiveCapError("exact_noise_joint", f.n, cap)
    table = truth_table(f, cap=cap)
    spectra = _indicator_spectra(table)
    damp = (1.0 - epsilon) ** popcount(np.arange(1 << f.n, dtype=np.uint64)).astype(np.float64)
    joint = {}
    for v, sv in spectra.items():
        for w, sw in spectra.items():
            joint[(v, w)] = float(np.sum(damp * sv * sw))
    return joint


def exact_disagreement(
    f: EvaluableFunction, epsilon: float, p: float = 0.5, cap: int = DISAGREEMENT_CAP
) -> float:
    """P[f(c) != f(c')] for an epsilon-noisy copy, exactly (p = 1/2 only)."""
    if p != 0.5:
        raise UsageError("exact disagreement is implemented for p = 1/2 only")
    joint = exact_noise_joint(f, epsilon, cap=cap)
    return float(sum(prob for (v, w), prob in joint.items() if v != w))


def exact_disagreement_direct(
    f: EvaluableFunction, epsilon: float, cap: int = DIRECT_PAIR_CAP
) -> float:
    """Same quantity by brute pair enumeration; an independent oracle.

    A coordinate disagrees with its noisy copy with probability epsilon/2,
    so the pair (c, c') lands on codes at Hamming distance d with weight
    2^-n (eps/2)^d (1 - eps/2)^(n - d).
    """
    if f.n > cap:
        raise ExhaustiveCapError("exact_disagreement_direct", f.n, cap)
    table = truth_table(f, cap=cap)
    n = f.n
    codes = np.arange(1 << n, dtype=np.uint64)
    dist = popcount(codes[:, None] ^ codes[None, :]).astype(np.float64)
    half = epsilon / 2.0
    weight = half ** dist * (1.0 - half) ** (n - dist)
    differ = table.values[:, None] != table.values[None, :]
    return float(np.sum(weight[differ]) / (1 << n))


def influence_counts(f: EvaluableFunction, cap: int = INFLUENCE_CAP) -> np.ndarray:
    """Per coordinate, the number of codes where flipping it changes f."""
    if f.n > cap:
        raise ExhaustiveCapError("influences", f.n, cap)
    values = truth_table(f, cap=cap).values
    counts = np.empty(f.n, dtype=np.int64)
    for i in range(f.n):
        cube = values.reshape(-1, 2, 1 << i)
        counts[i] = 2 * int(np.count_nonzero(cube[:, 0, :] != cube[:, 1, :]))
    return counts


def influences(f: EvaluableFunction, cap: int = INFLUENCE_CAP) -> np.ndarray:
    """Influence of each coordinate: P[flipping it changes f]."""
    return influence_counts(f, cap=cap) / float(1 << f.n)


def pivotal_count_table(f: EvaluableFunction, cap: int = LAW_CAP) -> np.ndarray:
    """|pivotal set| at every code, as an int16 table."""
    if f.n > cap:
        raise ExhaustiveCapError("pivotal_count_table", f.n, cap)
    values = truth_table(f, cap=cap).values
    counts = np.zeros(1 << f.n, dtype=np.int16)
    for i in range(f.n):
        cube = values.reshape(-1, 2, 1 << i)
        differs = (cube[:, 0, :] != cube[:, 1, :]).astype(np.int16)
        both_ends = counts.reshape(-1, 2, 1 << i)
        both_ends[:, 0, :] += differs
        both_ends[:, 1, :] += differs
    return counts


@dataclass(frozen=True)
class PivotalLaw:
    """Exact joint law of (f value, pivotal-set size) at p = 1/2.

    counts[vi, m] is the number of codes with value values[vi] and pivotal
    count m; all probabilities derived from it are exact Fractions.
    """

    n: int
    values: tuple
    counts: np.ndarray  # int64, shape (len(values), n + 1)

    @property
    def total(self) -> int:
        return 1 << self.n

    def _row(self, value: int) -> np.ndarray:
        if value not in self.values:
            raise UsageError(f"conditioning event f = {value} has probability zero")
        return self.counts[self.values.index(value)]

    def prob(self, value: int, size: int) -> Fraction:
        return Fraction(int(self._row(value)[size]), self.total)

    def value_prob(self, value: int) -> Fraction:
        return Fraction(int(self._row(value).sum()), self.total)

    def size_marginal(self) -> list:
        sums = self.counts.sum(axis=0)
        return [Fraction(int(c), self.total) for c in sums]

    def mean_size(self, value: Optional[int] = None) -> Fraction:
        sizes = np.arange(self.n + 1, dtype=np.int64)
        if value is None:
            num = int((self.counts.sum(axis=0) * sizes).sum())
            den = self.total
        else:
            row = self._row(value)
            num = int((row * sizes).sum())
            den = int(row.sum())
        return Fraction(num, den)

    def tail(self, a: int, value: Optional[int] = None) -> Fraction:
        """P[|pivotal set| > a], optionally conditioned on the value."""
        if value is None:
            row = self.counts.sum(axis=0)
            den = self.total
        else:
            row = self._row(value)
            den = int(row.sum())
        return Fraction(int(row[a + 1 :].sum()), den)


def pivotal_law(f: EvaluableFunction, cap: int = LAW_CAP) -> PivotalLaw:
    if f.n > cap:
        raise ExhaustiveCapError("pivotal_law", f.n, cap)
    table = truth_table(f, cap=cap)
    sizes = pivotal_count_table(f, cap=cap)
    values = tuple(int(v) for v in np.unique(table.values))
    counts = np.zeros((len(values), f.n + 1), dtype=np.int64)
    for vi, v in enumerate(values):
        sel = sizes[table.values == v]
        binc = np.bincount(sel, minlength=f.n + 1)
        counts[vi] = binc
    return PivotalLaw(f.n, values, counts)


def spectral_marginals(f: EvaluableFunction, order: int = 1, cap: int = SPECTRAL_PAIR_CAP):
    """Spectral-sample membership marginals.

    Draws of the spectral sample pick mask S with probability
    coefficient(S)^2 (Parseval makes this a law for +-1 valued f). Order 1
    returns P[i in S] per coordinate; order 2 the matrix P[{i, j} <= S].
    """
    if f.n > cap:
        raise ExhaustiveCapError("spectral_marginals", f.n, cap)
    if f.codomain != BOOLEAN:
        raise UsageError("spectral marginals need a +-1 valued function")
    if order not in (1, 2):
        raise UsageError(f"order must be 1 or 2, got {order}")
    weights = spectrum(f, cap=cap).coefficients ** 2
    masks = np.arange(1 << f.n, dtype=np.uint64)
    member = [((masks >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(f.n)]
    if order == 1:
        return np.array([weights[member[i]].sum() for i in range(f.n)])
    out = np.empty((f.n, f.n))
    for i in range(f.n):
        for j in range(i, f.n):
            both = float(weights[member[i] & member[j]].sum())
            out[i, j] = out[j, i] = both
    return out


def pivotal_marginals(f: EvaluableFunction, order: int = 1, cap: int = SPECTRAL_PAIR_CAP):
    """Pivotal-set membership marginals by enumeration, matching
    spectral_marginals order for order."""
    if f.n > cap:
        raise ExhaustiveCapError("pivotal_marginals", f.n, cap)
    if order not in (1, 2):
        raise UsageError(f"order must be 1 or 2, got {order}")
    values = truth_table(f, cap=cap).values
    total = 1 << f.n
    member = np.empty((total, f.n), dtype=np.int64)
    codes = np.arange(total, dtype=np.int64)
    for i in range(f.n):
        member[:, i] = values != values[codes ^ (1 << i)]
    if order == 1:
        return member.sum(axis=0) / total
    return (member.T @ member) / total


@dataclass(frozen=True)
class TribesExactStats:
    """Exhaustive tribe-level statistics at p = 1/2; all ratios exact.

    blocked means no tribe is unanimously +1 (the event conditioning the
    pivotal-tribe sandwich); x is the number of tribes with exactly one -1.
    """

    params: TribesParams
    count_blocked: int
    count_f_zero: int
    x_sum: int
    x_sum_blocked: int
    x_sum_unblocked: int

    @property
    def total(self) -> int:
        return 1 << self.params.n

    @property
    def p_blocked(self) -> Fraction:
        return Fraction(self.count_blocked, self.total)

    @property
    def p_f_zero(self) -> Fraction:
        return Fraction(self.count_f_zero, self.total)

    @property
    def mean_x(self) -> Fraction:
        return Fraction(self.x_sum, self.total)

    @property
    def mean_x_blocked(self) -> Fraction:
        return Fraction(self.x_sum_blocked, self.count_blocked)

    @property
    def mean_x_unblocked(self) -> Fraction:
        return Fraction(self.x_sum_unblocked, self.total - self.count_blocked)


def exact_tribes_stats(params: TribesParams, cap: int = LAW_CAP) -> TribesExactStats:
    """Enumerate all configurations of a tribes layout and tally the
    unanimity and near-unanimity counts."""
    n, l, k = params.n, params.l, params.k
    if n > cap:
        raise ExhaustiveCapError("exact_tribes_stats", n, cap)
    codes = np.arange(1 << n, dtype=np.uint64)
    mask = np.uint64((1 << l) - 1)
    full_plus = np.zeros(len(codes), dtype=bool)
    full_minus = np.zeros(len(codes), dtype=bool)
    x = np.zeros(len(codes), dtype=np.int32)
    for t in range(k):
        pc = popcount((codes >> np.uint64(t * l)) & mask)
        full_plus |= pc == l
        full_minus |= pc == 0
        x += (pc == l - 1)
    blocked = ~full_plus
    f_zero = blocked ^ full_minus  # f = 0 iff neither or both sides unanimous
    return TribesExactStats(
        params,
        count_blocked=int(blocked.sum()),
        count_f_zero=int(np.count_nonzero(f_zero)),
        x_sum=int(x.sum(dtype=np.int64)),
        x_sum_blocked=int(x[blocked].sum(dtype=np.int64)),
        x_sum_unblocked=int(x[full_plus].sum(dtype=np.int64)),
    )


def tribes_blocked_closed_form(params: TribesParams) -> Fraction:
    """P[no unanimous +1 tribe] = (1 - 2^-l)^k, exactly."""
    return Fraction((1 << params.l) - 1, 1 << params.l) ** params.k


def bribable_zero_closed_form(params: TribesParams) -> Fraction:
    """P[f = 0] for the ternary construction, exactly.

    f = 0 iff unanimous +1 and unanimous -1 tribes are both present or
    both absent. With A = "some +1 tribe", B = "some -1 tribe":
    P[A and B] + P[not A and not B] = 1 - P[no A] - P[no B] + 2 P[neither],
    and tribe independence gives each term as a product.
    """
    l, k = params.l, params.k
    p_side = Fraction(1, 1 << l)  # one tribe unanimous on a fixed side
    p_no_plus = (1 - p_side) ** k
    p_no_minus = (1 - p_side) ** k
    p_neither = (1 - 2 * p_side) ** k
    return 1 - p_no_plus - p_no_minus + 2 * p_neither


def pivotal_tribe_mean_closed_form(params: TribesParams, p: Optional[Fraction] = None) -> Fraction:
    """E[#tribes with exactly one -1] = k * l * (1-p) * p^(l-1)."""
    if p is None:
        p = Fraction(1, 2)
    return params.k * params.l * (1 - p) * p ** (params.l - 1)


def binomial_tail(k: int, p: Fraction, a: int) -> Fraction:
    """P[Binomial(k, p) > a], exactly (sums whichever side is shorter)."""
    p = Fraction(p)
    if a < 0:
        return Fraction(1)
    if a >= k:
        return Fraction(0)

    def mass(lo, hi):
        return sum(
            Fraction(math.comb(k, m)) * p ** m * (1 - p) ** (k - m)
            for m in range(lo, hi + 1)
        )

    if a + 1 <= k - a:
        return 1 - mass(0, a)
    return mass(a + 1, k)
