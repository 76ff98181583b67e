"""Exact Fourier analysis over the Boolean cube {0,1}^n.

Conventions used throughout the package:

* functions take values in {-1, +1}; a {0,1}-valued bit b maps to (-1)**b;
* a subset S of [n] = {1, ..., n} is an n-bit integer with bit i-1 set
  when coordinate i belongs to S;
* inputs x are n-bit integers with the same bit layout.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from qsqlearn import kernels

MAX_N = 16


class DimensionError(ValueError):
    """Raised for dimensions outside the supported range or mismatched operands."""


def check_dimension(n: int) -> int:
    n = int(n)
    if n < 0:
        raise DimensionError(f"dimension must be nonnegative, got {n}")
    if n > MAX_N:
        raise DimensionError(f"dimension {n} exceeds the cap of {MAX_N}")
    return n


def popcount_parity(values: np.ndarray) -> np.ndarray:
    """(popcount(v) mod 2) elementwise for nonnegative int64 arrays."""
    v = np.asarray(values, dtype=np.int64).copy()
    acc = np.zeros_like(v)
    while np.any(v):
        acc ^= v & 1
        v >>= 1
    return acc


def character_table(n: int, s: int) -> np.ndarray:
    """chi_s(x) = (-1)^{s.x} for every x in {0,1}^n, as int8."""
    x = np.arange(1 << n, dtype=np.int64)
    return (1 - 2 * popcount_parity(x & int(s))).astype(np.int8)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    """Truth table of f: {0,1}^n -> {-1, +1}, indexed by the integer x."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        vals = np.array(self.values, dtype=np.int8).reshape(-1)
        if vals.shape[0] != 1 << n:
            raise DimensionError(
                f"table length {vals.shape[0]} does not match 2^{n}"
            )
        if not np.all((vals == 1) | (vals == -1)):
            raise ValueError("truth table entries must be -1 or +1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", _readonly(vals))

    def __call__(self, x: int) -> int:
        return int(self.values[x])

    def __eq__(self, other):
        if not isinstance(other, BooleanFunction):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def __neg__(self) -> "BooleanFunction":
        return BooleanFunction(self.n, -self.values)

    def __mul__(self, other: "BooleanFunction") -> "BooleanFunction":
        _same_dimension(self, other)
        return BooleanFunction(self.n, self.values * other.values)

    @classmethod
    def constant(cls, n: int, value: int = 1) -> "BooleanFunction":
        return cls(n, np.full(1 << n, value, dtype=np.int8))

    @classmethod
    def parity(cls, n: int, s: int) -> "BooleanFunction":
        if not 0 <= s < (1 << n):
            raise ValueError(f"character index {s} out of range for n={n}")
        return cls(n, character_table(n, s))

    @classmethod
    def from_bits(cls, n: int, bits: Sequence[int]) -> "BooleanFunction":
        """Build from {0,1} outputs via b -> (-1)^b."""
        b = np.asarray(bits, dtype=np.int8)
        return cls(n, 1 - 2 * b)

    def to_bits(self) -> np.ndarray:
        return ((1 - self.values) // 2).astype(np.uint8)

    @cached_property
    def spectrum(self) -> "FourierSpectrum":
        return walsh_hadamard_transform(self)

    # serialization

    def to_json(self) -> dict:
        return {"n": self.n, "values": [int(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "BooleanFunction":
        return cls(int(obj["n"]), obj["values"])

    def to_bitstring(self) -> bytes:
        """Packed bits, one per input, 0 -> +1 and 1 -> -1, little-endian order."""
        return np.packbits(self.to_bits(), bitorder="little").tobytes()

    @classmethod
    def from_bitstring(cls, n: int, data: bytes) -> "BooleanFunction":
        n = check_dimension(n)
        bits = np.unpackbits(
            np.frombuffer(data, dtype=np.uint8), bitorder="little"
        )
        if bits.shape[0] < 1 << n:
            raise DimensionError("bitstring too short for the stated dimension")
        return cls.from_bits(n, bits[: 1 << n])


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """Coefficients f^(S) for every S, stored in index order."""

    n: int
    coefficients: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        c = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if c.shape[0] != 1 << n:
            raise DimensionError(
                f"spectrum length {c.shape[0]} does not match 2^{n}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coefficients", _readonly(c))

    def __getitem__(self, s: int) -> float:
        return float(self.coefficients[s])

    def total_mass(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients))

    def inverse(self) -> np.ndarray:
        """Real-valued function sum_S f^(S) chi_S(x), one entry per x."""
        return fourier_expansion(self.coefficients)

    def to_boolean_function(self) -> BooleanFunction:
        vals = self.inverse()
        return BooleanFunction(self.n, np.where(vals >= 0, 1, -1))

    def to_json(self) -> list:
        return [float(v) for v in self.coefficients]

    @classmethod
    def from_json(cls, values: Sequence[float]) -> "FourierSpectrum":
        n = int(len(values)).bit_length() - 1
        return cls(n, values)


class Constraint(Enum):
    FREE = "free"
    ONE = "one"
    ZERO = "zero"


@dataclass(frozen=True)
class SubsetPattern:
    """Per-coordinate constraint on a set S: must contain, must avoid, or free.

    Stored as two disjoint bitmasks; the matched family is every S with
    ``S & ones == ones`` and ``S & zeros == 0``.
    """

    n: int
    ones: int = 0
    zeros: int = 0

    def __post_init__(self):
        n = check_dimension(self.n)
        full = (1 << n) - 1
        if self.ones & ~full or self.zeros & ~full:
            raise DimensionError("pattern mask exceeds the dimension")
        if self.ones & self.zeros:
            raise ValueError("a coordinate cannot be both MustBeOne and MustBeZero")
        object.__setattr__(self, "n", n)

    @property
    def free(self) -> int:
        return ((1 << self.n) - 1) & ~(self.ones | self.zeros)

    @property
    def size(self) -> int:
        """Number of matched sets."""
        return 1 << bin(self.free).count("1")

    def matches(self, s: int) -> bool:
        return (s & self.ones) == self.ones and (s & self.zeros) == 0

    def members(self) -> np.ndarray:
        return kernels.submasks(self.ones, self.free)

    def mask(self) -> np.ndarray:
        """Boolean indicator over all 2^n sets."""
        out = np.zeros(1 << self.n, dtype=bool)
        out[self.members()] = True
        return out

    def constraints(self) -> list[Constraint]:
        out = []
        for i in range(self.n):
            if (self.ones >> i) & 1:
                out.append(Constraint.ONE)
            elif (self.zeros >> i) & 1:
                out.append(Constraint.ZERO)
            else:
                out.append(Constraint.FREE)
        return out

    @classmethod
    def from_constraints(cls, constraints: Sequence[Constraint | str]) -> "SubsetPattern":
        ones = zeros = 0
        for i, c in enumerate(constraints):
            c = Constraint(c)
            if c is Constraint.ONE:
                ones |= 1 << i
            elif c is Constraint.ZERO:
                zeros |= 1 << i
        return cls(len(constraints), ones, zeros)

    @classmethod
    def from_mapping(cls, n: int, fixed: Mapping[int, Constraint | str]) -> "SubsetPattern":
        """Build from {coordinate (1-based): constraint}; unlisted coordinates are free."""
        cons = [Constraint.FREE] * n
        for i, c in fixed.items():
            if not 1 <= i <= n:
                raise DimensionError(f"coordinate {i} out of range 1..{n}")
            cons[i - 1] = Constraint(c)
        return cls.from_constraints(cons)

    @classmethod
    def all_free(cls, n: int) -> "SubsetPattern":
        return cls(n)

    @classmethod
    def containing(cls, n: int, i: int) -> "SubsetPattern":
        """Sets that contain coordinate i (1-based); its mass is Inf_i."""
        if not 1 <= i <= n:
            raise DimensionError(f"coordinate {i} out of range 1..{n}")
        return cls(n, ones=1 << (i - 1))

    @classmethod
    def bucket(cls, n: int, prefix: int, fixed: int) -> "SubsetPattern":
        """Sets agreeing with ``prefix`` on the coordinates in ``fixed``, free elsewhere."""
        return cls(n, ones=prefix & fixed, zeros=fixed & ~prefix)

    def to_json(self) -> dict:
        return {"n": self.n, "ones": self.ones, "zeros": self.zeros}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SubsetPattern":
        return cls(int(obj["n"]), int(obj.get("ones", 0)), int(obj.get("zeros", 0)))


def _same_dimension(*objs) -> int:
    ns = {o.n for o in objs}
    if len(ns) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(ns)}")
    return ns.pop()


def fourier_expansion(coefficients: np.ndarray) -> np.ndarray:
    """sum_S a_S chi_S(x) for every x; an unnormalized transform of ``a``."""
    out = np.array(coefficients, dtype=np.float64)
    kernels.fwht_inplace(out)
    return out


def walsh_hadamard_transform(f: BooleanFunction) -> FourierSpectrum:
    """f^(S) = 2^-n sum_x f(x) (-1)^{S.x}, by the in-place butterfly."""
    check_dimension(f.n)
    a = f.values.astype(np.float64)
    kernels.fwht_inplace(a)
    a *= 2.0 ** -f.n
    return FourierSpectrum(f.n, a)


def walsh_hadamard_rows(tables: np.ndarray) -> np.ndarray:
    """Normalized transform of each row of a (m, 2^n) array."""
    a = np.array(tables, dtype=np.float64, order="C")
    if a.ndim != 2:
        raise ValueError("expected a 2-D array of truth tables")
    kernels.fwht_rows_inplace(a)
    a /= a.shape[1]
    return a


def naive_walsh_hadamard(f: BooleanFunction) -> FourierSpectrum:
    """Direct O(4^n) evaluation of the defining sum."""
    if f.n > 12:
        raise DimensionError("naive transform is limited to n <= 12")
    size = 1 << f.n
    idx = np.arange(size, dtype=np.int64)
    signs = 1 - 2 * popcount_parity(idx[:, None] & idx[None, :])
    return FourierSpectrum(f.n, signs @ f.values.astype(np.float64) / size)


def influence(f: BooleanFunction | FourierSpectrum, i: int) -> float:
    """Inf_i(f): squared Fourier mass on sets containing coordinate i (1-based)."""
    spec = f.spectrum if isinstance(f, BooleanFunction) else f
    return fourier_mass(spec, SubsetPattern.containing(spec.n, i))


def influences(f: BooleanFunction | FourierSpectrum) -> np.ndarray:
    spec = f.spectrum if isinstance(f, BooleanFunction) else f
    return np.array([influence(spec, i) for i in range(1, spec.n + 1)])


def fourier_mass(spec: FourierSpectrum, pattern: SubsetPattern) -> float:
    """sum of f^(S)^2 over the sets matched by ``pattern``."""
    _same_dimension(spec, pattern)
    return float(kernels.pattern_mass(spec.coefficients, pattern.ones, pattern.free))


def correlation(f: BooleanFunction, g: BooleanFunction, D=None) -> float:
    """E_{x~D}[f(x) g(x)]; uniform when ``D`` is None."""
    n = _same_dimension(f, g)
    prod = f.values.astype(np.float64) * g.values
    if D is None:
        return float(prod.mean())
    if D.n != n:
        raise DimensionError(f"dimension mismatch: {n} vs distribution {D.n}")
    return float(np.dot(D.probs, prod))


def dump_spectrum(spec: FourierSpectrum) -> str:
    return json.dumps(spec.to_json())


__all__ = [
    "MAX_N",
    "BooleanFunction",
    "Constraint",
    "DimensionError",
    "FourierSpectrum",
    "SubsetPattern",
    "character_table",
    "correlation",
    "fourier_expansion",
    "fourier_mass",
    "influence",
    "influences",
    "naive_walsh_hadamard",
    "walsh_hadamard_rows",
    "walsh_hadamard_transform",
]
