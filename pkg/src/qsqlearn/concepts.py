"""Concept classes, distributions, sparse sign hypotheses and exact error rates."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Union

import numpy as np

from qsqlearn.fourier import (
    BooleanFunction,
    DimensionError,
    check_dimension,
    fourier_expansion,
    popcount_parity,
)

PROB_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class Distribution:
    """Explicit probability vector over {0,1}^n."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        p = np.array(self.probs, dtype=np.float64).reshape(-1)
        if p.shape[0] != 1 << n:
            raise DimensionError(f"probability table length {p.shape[0]} != 2^{n}")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(n, np.full(1 << n, 2.0 ** -n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, concentration: float = 1.0) -> "Distribution":
        return cls(n, rng.dirichlet(np.full(1 << n, concentration)))

    @cached_property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.probs, 2.0 ** -self.n, rtol=0, atol=1e-15))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(1 << self.n, size=size, p=self.probs)

    def to_json(self):
        if self.is_uniform:
            return "uniform"
        return {"n": self.n, "probs": [float(v) for v in self.probs]}

    @classmethod
    def from_json(cls, obj, n: int | None = None) -> "Distribution":
        if obj == "uniform":
            if n is None:
                raise ValueError("'uniform' distribution needs an explicit dimension")
            return cls.uniform(n)
        return cls(int(obj["n"]), obj["probs"])


def _as_input_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


class Concept:
    """Common behaviour of the concept classes: lazy truth table and spectrum."""

    n: int

    def evaluate(self, x):
        raise NotImplementedError

    @cached_property
    def function(self) -> BooleanFunction:
        check_dimension(self.n)
        return BooleanFunction(self.n, self.evaluate(np.arange(1 << self.n)))

    def to_boolean_function(self) -> BooleanFunction:
        return self.function


@dataclass(frozen=True, eq=False)
class ParityConcept(Concept):
    n: int
    s: int

    def __post_init__(self):
        if not 0 <= self.s < (1 << self.n):
            raise ValueError(f"parity index {self.s} out of range for n={self.n}")

    def evaluate(self, x):
        return (1 - 2 * popcount_parity(_as_input_array(x) & self.s)).astype(np.int8)

    def to_json(self) -> dict:
        return {"kind": "parity", "n": self.n, "s": self.s}


@dataclass(frozen=True, eq=False)
class JuntaConcept(Concept):
    """c(x) = table[x restricted to ``relevant``]; coordinates are 1-based.

    Bit j of the restricted index is the input bit at coordinate relevant[j].
    """

    n: int
    relevant: tuple[int, ...]
    table: tuple[int, ...]

    def __post_init__(self):
        rel = tuple(int(i) for i in self.relevant)
        if len(set(rel)) != len(rel) or any(not 1 <= i <= self.n for i in rel):
            raise ValueError(f"relevant coordinates {rel} invalid for n={self.n}")
        tab = tuple(int(v) for v in self.table)
        if len(tab) != 1 << len(rel) or any(v not in (-1, 1) for v in tab):
            raise ValueError("junta table must hold 2^k entries in {-1, +1}")
        object.__setattr__(self, "relevant", rel)
        object.__setattr__(self, "table", tab)

    @property
    def k(self) -> int:
        return len(self.relevant)

    def evaluate(self, x):
        x = _as_input_array(x)
        idx = np.zeros_like(x)
        for j, i in enumerate(self.relevant):
            idx |= ((x >> (i - 1)) & 1) << j
        return np.asarray(self.table, dtype=np.int8)[idx]

    def to_json(self) -> dict:
        return {
            "kind": "junta",
            "n": self.n,
            "relevant": list(self.relevant),
            "table": list(self.table),
        }


Literal = tuple[int, bool]  # (coordinate, negated)


@dataclass(frozen=True, eq=False)
class DnfConcept(Concept):
    """Disjunction of terms; DNF-true maps to -1 under b -> (-1)^b.

    A literal (i, False) asks x_i = 1, (i, True) asks x_i = 0.
    """

    n: int
    terms: tuple[tuple[Literal, ...], ...]

    def __post_init__(self):
        terms = []
        for term in self.terms:
            lits = tuple((int(i), bool(neg)) for i, neg in term)
            coords = [i for i, _ in lits]
            if any(not 1 <= i <= self.n for i in coords):
                raise ValueError(f"literal coordinate out of range in {lits}")
            if len(set(coords)) != len(coords):
                raise ValueError(f"term {lits} repeats a coordinate")
            terms.append(lits)
        object.__setattr__(self, "terms", tuple(terms))

    def evaluate(self, x):
        x = _as_input_array(x)
        sat = np.zeros(x.shape, dtype=bool)
        for term in self.terms:
            t = np.ones(x.shape, dtype=bool)
            for i, neg in term:
                bit = (x >> (i - 1)) & 1
                t &= bit == (0 if neg else 1)
            sat |= t
        return np.where(sat, -1, 1).astype(np.int8)

    def to_json(self) -> dict:
        return {
            "kind": "dnf",
            "n": self.n,
            "terms": [[{"var": i, "neg": neg} for i, neg in t] for t in self.terms],
        }


AnyConcept = Union[Concept, BooleanFunction]


def as_function(c: AnyConcept) -> BooleanFunction:
    if isinstance(c, BooleanFunction):
        return c
    return c.to_boolean_function()


def evaluate(concept: AnyConcept, x):
    """Value in {-1, +1} of ``concept`` at input ``x`` (scalar or array)."""
    if isinstance(concept, BooleanFunction):
        out = concept.values[x]
    else:
        out = concept.evaluate(x)
    return int(out) if np.ndim(out) == 0 else out


def to_boolean_function(concept: AnyConcept) -> BooleanFunction:
    return as_function(concept)


def concept_from_json(obj: Mapping) -> AnyConcept:
    kind = obj.get("kind")
    n = int(obj["n"])
    if kind == "parity":
        return ParityConcept(n, int(obj["s"]))
    if kind == "junta":
        return JuntaConcept(n, tuple(obj["relevant"]), tuple(obj["table"]))
    if kind == "dnf":
        terms = tuple(
            tuple((int(l["var"]), bool(l["neg"])) for l in t) for t in obj["terms"]
        )
        return DnfConcept(n, terms)
    if kind in (None, "table"):
        return BooleanFunction.from_json(obj)
    raise ValueError(f"unknown concept kind {kind!r}")


def concept_to_json(concept: AnyConcept) -> dict:
    if isinstance(concept, BooleanFunction):
        return {"kind": "table", **concept.to_json()}
    return concept.to_json()


@dataclass(frozen=True)
class Hypothesis:
    """h(x) = sign(sum_S alpha_S chi_S(x)), with sign(0) = +1."""

    n: int
    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        entries = tuple((int(s), float(a)) for s, a in self.entries)
        sets = [s for s, _ in entries]
        if len(set(sets)) != len(sets):
            raise ValueError("hypothesis entries must have distinct sets")
        if any(not 0 <= s < (1 << self.n) for s in sets):
            raise ValueError("hypothesis set index out of range")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_mapping(cls, n: int, coeffs: Mapping[int, float]) -> "Hypothesis":
        return cls(n, tuple(sorted(coeffs.items())))

    def coefficient_vector(self) -> np.ndarray:
        vec = np.zeros(1 << self.n)
        for s, a in self.entries:
            vec[s] = a
        return vec

    def real_values(self) -> np.ndarray:
        """sum_S alpha_S chi_S(x) at every x."""
        return fourier_expansion(self.coefficient_vector())

    def table(self) -> np.ndarray:
        return np.where(self.real_values() >= 0, 1, -1).astype(np.int8)

    def to_boolean_function(self) -> BooleanFunction:
        return BooleanFunction(self.n, self.table())

    def predict(self, x) -> int:
        x = int(x)
        total = sum(a * (1 - 2 * (bin(s & x).count("1") & 1)) for s, a in self.entries)
        return 1 if total >= 0 else -1

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [{"set": s, "coeff": a} for s, a in self.entries]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Hypothesis":
        return cls(int(obj["n"]), tuple((int(e["set"]), float(e["coeff"])) for e in obj["entries"]))


def hypothesis_predict(h: Hypothesis, x) -> int:
    return h.predict(x)


def error_rate(h: Hypothesis | BooleanFunction, c: AnyConcept, D: Distribution | None = None) -> float:
    """Pr_{x~D}[h(x) != c(x)] by full enumeration (uniform when D is None)."""
    target = as_function(c)
    pred = h.table() if isinstance(h, Hypothesis) else h.values
    if h.n != target.n:
        raise DimensionError(f"hypothesis dimension {h.n} != concept dimension {target.n}")
    wrong = pred != target.values
    if D is None:
        return float(wrong.mean())
    if D.n != target.n:
        raise DimensionError("distribution dimension mismatch")
    return float(D.probs[wrong].sum())


def agreement_rate(h, c, D=None) -> float:
    target = as_function(c)
    pred = h.table() if isinstance(h, Hypothesis) else h.values
    right = pred == target.values
    if D is None:
        return float(right.mean())
    return float(D.probs[right].sum())


def random_concept(kind: str, params: Mapping, seed) -> AnyConcept:
    """Seeded random member of a concept class.

    ``kind`` is one of ``parity`` (n), ``junta`` (n, k), ``dnf``
    (n, s, optional literal_prob, default 0.3) or ``sparse`` (n, optional
    terms, default 3, and noise, default 0.1). A ``sparse`` concept is the
    sign of a few random characters with random weights plus independent
    Gaussian jitter per input; it comes back as a plain truth table.
    ``seed`` is an int or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = int(params["n"])
    check_dimension(n)
    if n < 1:
        raise ValueError("concepts need n >= 1")
    if kind == "parity":
        return ParityConcept(n, int(rng.integers(0, 1 << n)))
    if kind == "junta":
        k = int(params["k"])
        if not 0 <= k <= n:
            raise ValueError(f"junta size k={k} must lie in [0, n]")
        rel = tuple(int(i) + 1 for i in rng.choice(n, size=k, replace=False))
        table = tuple(int(v) for v in rng.choice([-1, 1], size=1 << k))
        return JuntaConcept(n, rel, table)
    if kind == "dnf":
        s = int(params["s"])
        p = float(params.get("literal_prob", 0.3))
        if s < 0 or not 0 < p <= 1:
            raise ValueError("dnf needs s >= 0 and literal_prob in (0, 1]")
        terms = []
        for _ in range(s):
            while True:
                used = rng.random(n) < p
                if used.any():
                    break
            negs = rng.random(n) < 0.5
            terms.append(tuple((i + 1, bool(negs[i])) for i in np.flatnonzero(used)))
        return DnfConcept(n, tuple(terms))
    if kind == "sparse":
        terms = int(params.get("terms", 3))
        noise = float(params.get("noise", 0.1))
        if not 1 <= terms <= 1 << n or noise < 0:
            raise ValueError("sparse concept needs 1 <= terms <= 2^n and noise >= 0")
        coeffs = np.zeros(1 << n)
        sets = rng.choice(1 << n, size=terms, replace=False)
        coeffs[sets] = rng.uniform(0.2, 1.0, size=terms) * rng.choice([-1, 1], size=terms)
        real = fourier_expansion(coeffs) + noise * rng.normal(size=1 << n)
        return BooleanFunction(n, np.where(real >= 0, 1, -1).astype(np.int8))
    raise ValueError(f"unknown concept kind {kind!r}")


__all__ = [
    "AnyConcept",
    "Concept",
    "Distribution",
    "DnfConcept",
    "Hypothesis",
    "JuntaConcept",
    "ParityConcept",
    "agreement_rate",
    "as_function",
    "concept_from_json",
    "concept_to_json",
    "error_rate",
    "evaluate",
    "hypothesis_predict",
    "random_concept",
    "to_boolean_function",
]
