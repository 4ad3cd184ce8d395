"""Hypercube configurations, the function contract, noise, and pivotal sets.

A configuration is a point of {-1,+1}^n stored as a packed integer code
(bit i set <=> coordinate i is +1), so a configuration *is* its truth-table
index. Functions on configurations may be Boolean ({-1,+1}), zero-one
({0,1}) or ternary ({-1,0,+1}) valued; they are deterministic and total.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .bitops import bits_to_int, int_to_bits, random_bits, random_code
from .errors import ExhaustiveCapError, UsageError
from .rng import RandomStream, as_generator

BOOLEAN = "boolean"
ZERO_ONE = "zero-one"
TERNARY = "ternary"

CODOMAIN_VALUES = {
    BOOLEAN: (-1, 1),
    ZERO_ONE: (0, 1),
    TERNARY: (-1, 0, 1),
}

#: Largest arity for which we will walk all n * 2^(n-1) hypercube edges.
EDGE_SCAN_CAP = 22


class Configuration:
    """An assignment of +-1 signs to coordinates 0..n-1, packed into an int."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int):
        if n < 1:
            raise UsageError(f"configuration needs at least one coordinate, got n = {n}")
        if not 0 <= bits < (1 << n):
            raise UsageError(f"code {bits:#x} out of range for n = {n}")
        self.n = n
        self.bits = bits

    @classmethod
    def from_signs(cls, signs: Iterable[int]) -> "Configuration":
        signs = list(signs)
        code = 0
        for i, s in enumerate(signs):
            if s == 1:
                code |= 1 << i
            elif s != -1:
                raise UsageError(f"sign at coordinate {i} must be +-1, got {s}")
        return cls(len(signs), code)

    @classmethod
    def from_string(cls, text: str) -> "Configuration":
        """Parse '+-++' style text, leftmost character = coordinate 0."""
        try:
            return cls.from_signs(1 if ch == "+" else -1 if ch == "-" else 0 for ch in text)
        except UsageError:
            raise UsageError(f"configuration text may only contain '+' and '-': {text!r}")

    @classmethod
    def all_plus(cls, n: int) -> "Configuration":
        return cls(n, (1 << n) - 1)

    @classmethod
    def all_minus(cls, n: int) -> "Configuration":
        return cls(n, 0)

    def sign(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise UsageError(f"coordinate {i} out of range for n = {self.n}")
        return 1 if (self.bits >> i) & 1 else -1

    def flip(self, i: int) -> "Configuration":
        if not 0 <= i < self.n:
            raise UsageError(f"coordinate {i} out of range for n = {self.n}")
        return Configuration(self.n, self.bits ^ (1 << i))

    def negate(self) -> "Configuration":
        return Configuration(self.n, self.bits ^ ((1 << self.n) - 1))

    def plus_count(self) -> int:
        return self.bits.bit_count()

    def signs(self) -> np.ndarray:
        """Signs as an int8 array."""
        return (2 * int_to_bits(self.bits, self.n).astype(np.int8) - 1)

    def to_string(self) -> str:
        return "".join("+" if (self.bits >> i) & 1 else "-" for i in range(self.n))

    def hamming(self, other: "Configuration") -> int:
        if other.n != self.n:
            raise UsageError("configurations live on different coordinate sets")
        return (self.bits ^ other.bits).bit_count()

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and other.n == self.n
            and other.bits == self.bits
        )

    def __hash__(self):
        return hash((self.n, self.bits))

    def __repr__(self):
        if self.n <= 32:
            return f"Configuration({self.to_string()!r})"
        return f"Configuration(n={self.n}, bits={self.bits:#x})"


class EvaluableFunction(abc.ABC):
    """A deterministic total function on sign vectors.

    Subclasses set ``n`` and ``codomain`` and implement ``evaluate_code``
    (integer code in, value out). ``monotone_hint`` is advisory only; trust
    comes from check_monotone.
    """

    n: int
    codomain: str = BOOLEAN
    monotone_hint: bool = False

    @abc.abstractmethod
    def evaluate_code(self, code: int) -> int:
        ...

    def eval_bits(self, bits: np.ndarray) -> int:
        """Value from a uint8 0/1 coordinate array (override for large n)."""
        return self.evaluate_code(bits_to_int(bits))

    def evaluate(self, c: Configuration) -> int:
        if c.n != self.n:
            raise UsageError(f"function has arity {self.n}, configuration has {c.n}")
        if self.n <= 64:
            return self.evaluate_code(c.bits)
        return self.eval_bits(int_to_bits(c.bits, c.n))

    def __call__(self, c: Configuration) -> int:
        return self.evaluate(c)

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over an array of integer codes."""
        out = np.empty(len(codes), dtype=np.int8)
        for pos, code in enumerate(codes):
            out[pos] = self.evaluate_code(int(code))
        return out

    def values_table(self, cap: int = 24) -> np.ndarray:
        """Full truth table as int8, index = configuration code."""
        if self.n > cap:
            raise ExhaustiveCapError("truth table", self.n, cap)
        return np.asarray(self.eval_codes(np.arange(1 << self.n, dtype=np.uint64)), dtype=np.int8)

    def descriptor(self) -> dict:
        raise UsageError(f"{type(self).__name__} has no serializable descriptor")


class TableFunction(EvaluableFunction):
    """A function given by an explicit truth table (testing and glue)."""

    def __init__(self, values, codomain: Optional[str] = None, monotone_hint: bool = False):
        values = np.asarray(values, dtype=np.int8)
        if len(values) == 0 or len(values) & (len(values) - 1):
            raise UsageError(f"table length must be a power of two, got {len(values)}")
        self.n = len(values).bit_length() - 1
        if self.n < 1:
            raise UsageError("table must cover at least one coordinate")
        present = set(np.unique(values).tolist())
        if codomain is None:
            if present <= {-1, 1}:
                codomain = BOOLEAN
            elif present <= {0, 1}:
                codomain = ZERO_ONE
            elif present <= {-1, 0, 1}:
                codomain = TERNARY
            else:
                raise UsageError(f"table values {sorted(present)} are not in -1/0/+1")
        elif not present <= set(CODOMAIN_VALUES[codomain]):
            raise UsageError(f"table values {sorted(present)} do not fit codomain {codomain}")
        self.codomain = codomain
        self.monotone_hint = monotone_hint
        self.values = values

    def evaluate_code(self, code: int) -> int:
        return int(self.values[code])

    def eval_codes(self, codes: np.ndarray) -> np.ndarray:
        return self.values[np.asarray(codes, dtype=np.int64)]


@dataclass(frozen=True)
class Permutation:
    """A bijection of coordinate indices; acts on configurations by
    c'[images[i]] = c[i]."""

    images: tuple

    def __post_init__(self):
        n = len(self.images)
        if sorted(self.images) != list(range(n)):
            raise UsageError(f"images {self.images} are not a permutation of 0..{n - 1}")

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def apply_index(self, i: int) -> int:
        return self.images[i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, tgt in enumerate(self.images):
            inv[tgt] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self . other)(i) = self(other(i))."""
        if other.n != self.n:
            raise UsageError("permutations act on different coordinate sets")
        return Permutation(tuple(self.images[other.images[i]] for i in range(self.n)))

    def apply(self, c: Configuration) -> Configuration:
        if c.n != self.n:
            raise UsageError("permutation and configuration have different arity")
        old = int_to_bits(c.bits, c.n)
        new = np.empty_like(old)
        new[list(self.images)] = old
        return Configuration(c.n, bits_to_int(new))

    def apply_codes(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized action on integer codes (n <= 64)."""
        codes = np.asarray(codes, dtype=np.uint64)
        out = np.zeros_like(codes)
        one = np.uint64(1)
        for i, tgt in enumerate(self.images):
            out |= ((codes >> np.uint64(i)) & one) << np.uint64(tgt)
        return out


def flip(c: Configuration, i: int) -> Configuration:
    return c.flip(i)


def negate(c: Configuration) -> Configuration:
    return c.negate()


def sample_configuration(n: int, rng, p: float = 0.5) -> Configuration:
    """Draw from the product measure with per-coordinate P[+1] = p."""
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    gen = as_generator(rng)
    return Configuration(n, bits_to_int(random_bits(gen, n, p)))


def apply_noise(c: Configuration, epsilon: float, rng, p: float = 0.5) -> Configuration:
    """Resample each coordinate independently with probability epsilon.

    A resampled coordinate gets a fresh sign with P[+1] = p, independent of
    its old value, so epsilon = 1 yields a fresh product-measure draw and a
    +1 coordinate disagrees with its noisy copy with probability
    epsilon * (1 - p). Draw order is fixed (resample mask, then fresh
    signs); epsilon = 0 consumes no randomness.
    """
    if not 0 <= epsilon <= 1:
        raise UsageError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not 0 < p < 1:
        raise UsageError(f"p must lie strictly between 0 and 1, got {p}")
    if epsilon == 0:
        return c
    gen = as_generator(rng)
    mask = gen.random(c.n) < epsilon
    fresh = random_bits(gen, c.n, p)
    new = np.where(mask, fresh, int_to_bits(c.bits, c.n))
    return Configuration(c.n, bits_to_int(new))


def pivotal_set(f: EvaluableFunction, c: Configuration) -> set:
    """Coordinates whose single flip changes f at c."""
    base = f.evaluate(c)
    if f.n <= 64:
        code = c.bits
        return {i for i in range(f.n) if f.evaluate_code(code ^ (1 << i)) != base}
    return {i for i in range(f.n) if f.evaluate(c.flip(i)) != base}


@dataclass(frozen=True)
class MonotoneReport:
    monotone: bool
    violation: Optional[tuple]  # (low Configuration, coordinate)
    conclusive: bool = True
    edges_checked: int = 0


def check_monotone(f: EvaluableFunction, cap: int = EDGE_SCAN_CAP) -> MonotoneReport:
    """Walk every hypercube edge and test f(low) <= f(high).

    Refuses above the cap; use check_monotone_sampled there and treat its
    clean runs as inconclusive.
    """
    n = f.n
    if n > cap:
        raise ExhaustiveCapError("check_monotone", n, cap, "use check_monotone_sampled")
    values = f.values_table(cap=cap)
    edges = 0
    for i in range(n):
        cube = values.reshape(-1, 2, 1 << i)
        bad = cube[:, 0, :] > cube[:, 1, :]
        edges += bad.size
        if bad.any():
            block, rest = np.argwhere(bad)[0]
            code = (int(block) << (i + 1)) | int(rest)
            return MonotoneReport(False, (Configuration(n, code), i), True, edges)
    return MonotoneReport(True, None, True, edges)


def check_monotone_sampled(
    f: EvaluableFunction, samples: int, rng
) -> MonotoneReport:
    """Spot-check random edges; can only ever prove non-monotonicity."""
    gen = as_generator(rng)
    for _ in range(samples):
        code = random_code(gen, f.n) if f.n <= 64 else None
        c = (
            Configuration(f.n, code)
            if code is not None
            else sample_configuration(f.n, gen)
        )
        i = int(gen.integers(0, f.n))
        low = c if c.sign(i) == -1 else c.flip(i)
        if f.evaluate(low) > f.evaluate(low.flip(i)):
            return MonotoneReport(False, (low, i), True, samples)
    return MonotoneReport(True, None, False, samples)


@dataclass(frozen=True)
class InvarianceReport:
    invariant: bool
    counterexample: Optional[tuple]  # (Configuration, generator index)
    orbit_size: int
    transitive: bool
    conclusive: bool = True


def _coordinate_orbit(n: int, generators) -> set:
    """Orbit of coordinate 0 under the generated group (closure suffices)."""
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for g in generators:
            j = g.apply_index(i)
            if j not in seen:
                seen.add(j)
                frontier.append(j)
    return seen


def check_invariance(
    f: EvaluableFunction,
    generators,
    mode: str = "exhaustive",
    cap: int = EDGE_SCAN_CAP,
    samples: int = 1024,
    rng=None,
) -> InvarianceReport:
    """Verify f(sigma(c)) = f(c) for each generator, plus orbit transitivity."""
    generators = list(generators)
    for g in generators:
        if g.n != f.n:
            raise UsageError("generator arity does not match the function")
    orbit = _coordinate_orbit(f.n, generators)
    transitive = len(orbit) == f.n
    if mode == "exhaustive":
        if f.n > cap:
            raise ExhaustiveCapError("check_invariance", f.n, cap, "use mode='sampled'")
        codes = np.arange(1 << f.n, dtype=np.uint64)
        values = np.asarray(f.eval_codes(codes))
        for gi, g in enumerate(generators):
            moved = values[g.apply_codes(codes).astype(np.int64)]
            bad = np.nonzero(moved != values)[0]
            if bad.size:
                return InvarianceReport(
                    False, (Configuration(f.n, int(bad[0])), gi), len(orbit), transitive
                )
        return InvarianceReport(True, None, len(orbit), transitive)
    if mode == "sampled":
        if rng is None:
            raise UsageError("sampled invariance check needs an rng")
        gen = as_generator(rng)
        for _ in range(samples):
            c = sample_configuration(f.n, gen)
            base = f.evaluate(c)
            for gi, g in enumerate(generators):
                if f.evaluate(g.apply(c)) != base:
                    return InvarianceReport(False, (c, gi), len(orbit), transitive, True)
        return InvarianceReport(True, None, len(orbit), transitive, conclusive=False)
    raise UsageError(f"unknown invariance mode {mode!r}")
