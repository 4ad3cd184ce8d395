"""Tribes-built function families, their symmetry generators, and the
growth schedule that keeps the pivotal-tribe count diverging while the
all-tribes-blocked probability tends to one."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bitops import popcount
from .core import (
    BOOLEAN,
    TERNARY,
    ZERO_ONE,
    Configuration,
    EvaluableFunction,
    Permutation,
)
from .errors import UsageError

_U64_CAP = 63  # vectorized uint64 code paths stay below this arity


@dataclass(frozen=True)
class TribesParams:
    """k blocks ("tribes") of l coordinates each; n = l * k."""

    l: int
    k: int

    def __post_init__(self):
        if self.l < 1 or self.k < 1:
            raise UsageError(f"tribes need l >= 1 and k >= 1, got l={self.l}, k={self.k}")

    @property
    def n(self) -> int:
        return self.l * self.k

    def tribe_of(self, i: int) -> int:
        return i // self.l

    def members(self, t: int) -> range:
        return range(t * self.l, (t + 1) * self.l)


class Tribes(EvaluableFunction):
    """1 iff some tribe is unanimously +1, else 0."""

    codomain = ZERO_ONE
    monotone_hint = True

    def __init__(self, params: TribesParams):
        self.params = params
        self.n = params.n
        self._mask = (1 << params.l) - 1

    def evaluate_code(self, code: int) -> int:
        l, mask = self.params.l, self._mask
        for t in range(self.params.k):
            if (code >> (t * l)) & mask == mask:
                return 1
        return 0

    def eval_bits(self, bits: np.ndarray) -> int:
        counts = bits.reshape(self.params.k, self.params.l).sum(axis=1)
        return int((counts == self.params.l).any())

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        if self.n > _U64_CAP:
            return super().eval_codes(codes)
        codes = np.asarray(codes, dtype=np.uint64)
        mask = np.uint64(self._mask)
        hit = np.zeros(codes.shape, dtype=bool)
        for t in range(self.params.k):
            hit |= (codes >> np.uint64(t * self.params.l)) & mask == mask
        return hit.astype(np.int8)

    def descriptor(self) -> dict:
        return {"family": "tribes", "l": self.params.l, "k": self.params.k}

    def __repr__(self):
        return f"Tribes(l={self.params.l}, k={self.params.k})"


class BribableTribes(EvaluableFunction):
    """T(c) - T(-c) for T = Tribes: +1/-1 when exactly one side has a
    unanimous tribe, 0 when neither or both do."""

    codomain = TERNARY
    monotone_hint = True

    def __init__(self, params: TribesParams):
        self.params = params
        self.n = params.n
        self.tribes = Tribes(params)
        self._full = (1 << params.n) - 1

    def evaluate_code(self, code: int) -> int:
        return self.tribes.evaluate_code(code) - self.tribes.evaluate_code(code ^ self._full)

    def eval_bits(self, bits: np.ndarray) -> int:
        counts = bits.reshape(self.params.k, self.params.l).sum(axis=1)
        plus = int((counts == self.params.l).any())
        minus = int((counts == 0).any())
        return plus - minus

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        if self.n > _U64_CAP:
            return super().eval_codes(codes)
        codes = np.asarray(codes, dtype=np.uint64)
        flipped = codes ^ np.uint64(self._full)
        return self.tribes.eval_codes(codes) - self.tribes.eval_codes(flipped)

    def descriptor(self) -> dict:
        return {"family": "bribable", "l": self.params.l, "k": self.params.k}

    def __repr__(self):
        return f"BribableTribes(l={self.params.l}, k={self.params.k})"


class Majority(EvaluableFunction):
    """Sign of the coordinate sum. Ties (even n) go to +1 under
    tie_rule='plus'; tie_rule='error' insists on odd n at construction."""

    codomain = BOOLEAN
    monotone_hint = True

    def __init__(self, n: int, tie_rule: str = "plus"):
        if n < 1:
            raise UsageError(f"majority needs n >= 1, got {n}")
        if tie_rule not in ("plus", "error"):
            raise UsageError(f"unknown tie_rule {tie_rule!r}")
        if tie_rule == "error" and n % 2 == 0:
            raise UsageError("tie_rule='error' requires odd arity")
        self.n = n
        self.tie_rule = tie_rule

    def evaluate_code(self, code: int) -> int:
        return 1 if 2 * code.bit_count() >= self.n else -1

    def eval_bits(self, bits: np.ndarray) -> int:
        return 1 if 2 * int(bits.sum()) >= self.n else -1

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        if self.n > _U64_CAP:
            return super().eval_codes(codes)
        counts = popcount(np.asarray(codes, dtype=np.uint64))
        return np.where(2 * counts.astype(np.int64) >= self.n, 1, -1).astype(np.int8)

    def descriptor(self) -> dict:
        return {"family": "majority", "n": self.n, "tie_rule": self.tie_rule}

    def __repr__(self):
        return f"Majority(n={self.n}, tie_rule={self.tie_rule!r})"


class Bribed(EvaluableFunction):
    """Follow the ternary function when it speaks, the base rule when it
    abstains: g(c) = f(c) if f(c) != 0 else h(c)."""

    codomain = BOOLEAN

    def __init__(self, h: EvaluableFunction, f: EvaluableFunction):
        if h.n != f.n:
            raise UsageError(f"arity mismatch: base {h.n} vs ternary {f.n}")
        if h.codomain != BOOLEAN:
            raise UsageError("base rule must be Boolean valued")
        self.n = h.n
        self.h = h
        self.f = f
        self.monotone_hint = h.monotone_hint and f.monotone_hint

    def evaluate_code(self, code: int) -> int:
        v = self.f.evaluate_code(code)
        return v if v != 0 else self.h.evaluate_code(code)

    def eval_bits(self, bits: np.ndarray) -> int:
        v = self.f.eval_bits(bits)
        return v if v != 0 else self.h.eval_bits(bits)

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        fv = np.asarray(self.f.eval_codes(codes))
        hv = np.asarray(self.h.eval_codes(codes))
        return np.where(fv != 0, fv, hv).astype(np.int8)

    def descriptor(self) -> dict:
        return {"family": "bribed", "base": self.h.descriptor(), "ternary": self.f.descriptor()}

    def __repr__(self):
        return f"Bribed(h={self.h!r}, f={self.f!r})"


class Dictator(EvaluableFunction):
    codomain = BOOLEAN
    monotone_hint = True

    def __init__(self, n: int, index: int = 0):
        if not 0 <= index < n:
            raise UsageError(f"dictator index {index} out of range for n = {n}")
        self.n = n
        self.index = index

    def evaluate_code(self, code: int) -> int:
        return 1 if (code >> self.index) & 1 else -1

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.uint64)
        bit = (codes >> np.uint64(self.index)) & np.uint64(1)
        return (2 * bit.astype(np.int8) - 1)

    def descriptor(self) -> dict:
        return {"family": "dictator", "n": self.n, "index": self.index}


class Parity(EvaluableFunction):
    """+1 iff the number of -1 coordinates is even."""

    codomain = BOOLEAN

    def __init__(self, n: int):
        if n < 1:
            raise UsageError(f"parity needs n >= 1, got {n}")
        self.n = n

    def evaluate_code(self, code: int) -> int:
        return 1 if (self.n - code.bit_count()) % 2 == 0 else -1

    def eval_bits(self, bits: np.ndarray) -> int:
        return 1 if (self.n - int(bits.sum())) % 2 == 0 else -1

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        if self.n > _U64_CAP:
            return super().eval_codes(codes)
        minus = self.n - popcount(np.asarray(codes, dtype=np.uint64)).astype(np.int64)
        return (1 - 2 * (minus & 1)).astype(np.int8)

    def descriptor(self) -> dict:
        return {"family": "parity", "n": self.n}


class ConstantFunction(EvaluableFunction):
    monotone_hint = True

    def __init__(self, n: int, value: int = 1):
        if value not in (-1, 0, 1):
            raise UsageError(f"constant value must be in -1/0/+1, got {value}")
        self.n = n
        self.value = value
        self.codomain = TERNARY if value == 0 else BOOLEAN

    def evaluate_code(self, code: int) -> int:
        return self.value

    def eval_bits(self, bits: np.ndarray) -> int:
        return self.value

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        return np.full(len(codes), self.value, dtype=np.int8)

    def descriptor(self) -> dict:
        return {"family": "constant", "n": self.n, "value": self.value}


class SignOfZeroOne(EvaluableFunction):
    """Recode a {0,1}-valued function onto {-1,+1} (2f - 1). Pivotal sets
    are unchanged; spectral identities that need +-1 values apply."""

    codomain = BOOLEAN

    def __init__(self, inner: EvaluableFunction):
        if inner.codomain != ZERO_ONE:
            raise UsageError("sign recode expects a zero-one valued function")
        self.inner = inner
        self.n = inner.n
        self.monotone_hint = inner.monotone_hint

    def evaluate_code(self, code: int) -> int:
        return 2 * self.inner.evaluate_code(code) - 1

    def eval_bits(self, bits: np.ndarray) -> int:
        return 2 * self.inner.eval_bits(bits) - 1

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        return (2 * np.asarray(self.inner.eval_codes(codes), dtype=np.int8) - 1)

    def descriptor(self) -> dict:
        return {"family": "pm1", "inner": self.inner.descriptor()}


def pm1_of(f: EvaluableFunction) -> EvaluableFunction:
    return f if f.codomain == BOOLEAN else SignOfZeroOne(f)


def tribes(l: int, k: int) -> Tribes:
    return Tribes(TribesParams(l, k))


def bribable(l: int, k: int) -> BribableTribes:
    return BribableTribes(TribesParams(l, k))


def bribed(l: int, k: int, tie_rule: str = "plus") -> Bribed:
    params = TribesParams(l, k)
    return Bribed(Majority(params.n, tie_rule), BribableTribes(params))


def tribes_generators(params: TribesParams) -> list:
    """Generators of a transitive symmetry group of the tribes layout:
    sigma rotates whole tribes, tau rotates inside tribe 0."""
    n, l = params.n, params.l
    sigma = Permutation(tuple((i + l) % n for i in range(n)))
    tau = Permutation(tuple((i + 1) % l if i < l else i for i in range(n)))
    return [sigma, tau]


def tribes_record_from_code(params: TribesParams, code: int) -> dict:
    """Per-configuration tribe statistics, straight from the definition.

    Returns tribe counts at the given configuration: 'full_plus' and
    'full_minus' (unanimous tribes each way), 'one_minus' and 'one_plus'
    (tribes one flip away from unanimity), plus 'minus_total' and the
    ternary sign 'maj_sign' of the coordinate sum.
    """
    l, k = params.l, params.k
    mask = (1 << l) - 1
    full_plus = full_minus = one_minus = one_plus = minus_total = 0
    for t in range(k):
        word = (code >> (t * l)) & mask
        pc = word.bit_count()
        minus_total += l - pc
        if pc == l:
            full_plus += 1
        elif pc == 0:
            full_minus += 1
        if pc == l - 1:
            one_minus += 1
        if pc == 1:
            one_plus += 1
    total = params.n - 2 * minus_total
    return {
        "full_plus": full_plus,
        "full_minus": full_minus,
        "one_minus": one_minus,
        "one_plus": one_plus,
        "minus_total": minus_total,
        "maj_sign": (total > 0) - (total < 0),
    }


@dataclass(frozen=True)
class ScheduleEntry:
    """One point of the growth schedule: tribe size l against tribe count k.

    q0 is the probability that no tribe is unanimously +1, mu the expected
    number of tribes sitting one flip below unanimity. The intended regime
    has q0 -> 1 and mu -> infinity; ``flags`` names any direction violated
    relative to the previous entry.
    """

    index: int
    k: int
    l: int
    q0: float
    mu: float
    flags: tuple = ()

    @property
    def n(self) -> int:
        return self.l * self.k

    @property
    def params(self) -> TribesParams:
        return TribesParams(self.l, self.k)


def schedule(k_values: Sequence[int], rounding: str = "ceil") -> list:
    """Tribe sizes l(k) = round(log2 k + 0.5 * log2 log2 k) for each k.

    rounding='ceil' takes the ceiling (integer q0/mu trends can then break
    between entries, which the flags record); rounding='round' rounds to
    nearest (ties to even, per Python round).
    """
    if rounding not in ("ceil", "round"):
        raise UsageError(f"unknown rounding {rounding!r}")
    entries = []
    prev = None
    for idx, k in enumerate(k_values):
        if k < 4:
            raise UsageError(f"schedule needs k >= 4 so that log2 log2 k > 0, got k = {k}")
        target = math.log2(k) + 0.5 * math.log2(math.log2(k))
        l = math.ceil(target) if rounding == "ceil" else round(target)
        q0 = (1.0 - 2.0 ** -l) ** k
        mu = k * l * 2.0 ** -l
        flags = []
        if prev is not None:
            if q0 <= prev.q0:
                flags.append("q0-not-increasing")
            if mu <= prev.mu:
                flags.append("mu-not-increasing")
        entry = ScheduleEntry(idx, k, l, q0, mu, tuple(flags))
        entries.append(entry)
        prev = entry
    return entries


@dataclass(frozen=True)
class PivotalThreshold:
    """How to pick the slow-growth threshold a_n compared against the
    pivotal-set size: half the expected pivotal-tribe count, its square
    root, or an explicit integer."""

    rule: str = "half-mean"
    value: Optional[int] = None

    def __post_init__(self):
        if self.rule not in ("half-mean", "sqrt-mean", "explicit"):
            raise UsageError(f"unknown threshold rule {self.rule!r}")
        if self.rule == "explicit":
            if self.value is None or self.value < 0:
                raise UsageError("explicit threshold needs an integer value >= 0")
        elif self.value is not None:
            raise UsageError(f"rule {self.rule!r} does not take a value")

    def resolve(self, entry: ScheduleEntry) -> int:
        if self.rule == "explicit":
            return int(self.value)
        if self.rule == "half-mean":
            return max(1, math.floor(entry.mu / 2))
        return max(1, math.floor(math.sqrt(entry.mu)))


def pivotal_threshold(entry: ScheduleEntry, rule: str = "half-mean", value: Optional[int] = None) -> int:
    return PivotalThreshold(rule, value).resolve(entry)


_FAMILIES = ("tribes", "bribable", "bribed", "majority", "dictator", "parity", "constant", "pm1")


def from_descriptor(desc: dict) -> EvaluableFunction:
    """Rebuild a function from its JSON-friendly descriptor."""
    if not isinstance(desc, dict) or "family" not in desc:
        raise UsageError(f"descriptor must be a dict with a 'family' key, got {desc!r}")
    family = desc["family"]
    extra = {key for key in desc if key != "family"}

    def need(*keys):
        missing = set(keys) - extra
        unknown = extra - set(keys)
        if missing or unknown:
            raise UsageError(
                f"descriptor for {family!r}: missing {sorted(missing)}, unknown {sorted(unknown)}"
            )

    if family == "tribes":
        need("l", "k")
        return tribes(desc["l"], desc["k"])
    if family == "bribable":
        need("l", "k")
        return bribable(desc["l"], desc["k"])
    if family == "bribed":
        if extra == {"l", "k"} or extra == {"l", "k", "tie_rule"}:
            return bribed(desc["l"], desc["k"], desc.get("tie_rule", "plus"))
        need("base", "ternary")
        return Bribed(from_descriptor(desc["base"]), from_descriptor(desc["ternary"]))
    if family == "majority":
        if "tie_rule" in extra:
            need("n", "tie_rule")
        else:
            need("n")
        return Majority(desc["n"], desc.get("tie_rule", "plus"))
    if family == "dictator":
        if "index" in extra:
            need("n", "index")
        else:
            need("n")
        return Dictator(desc["n"], desc.get("index", 0))
    if family == "parity":
        need("n")
        return Parity(desc["n"])
    if family == "constant":
        need("n", "value")
        return ConstantFunction(desc["n"], desc["value"])
    if family == "pm1":
        need("inner")
        return SignOfZeroOne(from_descriptor(desc["inner"]))
    raise UsageError(f"unknown family {family!r}; expected one of {_FAMILIES}")
