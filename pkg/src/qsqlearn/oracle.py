"""The Qstat oracle: exact observable expectations on (noisy) example states.

The example state for a concept c under D lives on n+1 qubits; the basis
index of |x, b> is ``2*x + b`` with the label qubit least significant, and
the label bit of a +-1 concept value v is (1 - v) / 2.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from qsqlearn.concepts import AnyConcept, Distribution, as_function
from qsqlearn.fourier import (
    BooleanFunction,
    DimensionError,
    FourierSpectrum,
    SubsetPattern,
    character_table,
    fourier_mass,
    popcount_parity,
    walsh_hadamard_rows,
)
from qsqlearn import kernels

DENSE_MAX_N = 10
NORM_ATOL = 1e-9
CONTRACT_ATOL = 1e-12


class ObservableError(ValueError):
    """Observable violates ||M|| <= 1, Hermiticity, or its value range."""


class ToleranceError(ValueError):
    """Tolerance not positive, or below what the answering party supports."""


class UnsupportedQuery(ValueError):
    """Observable/state combination outside the simulator's contract."""


# ---------------------------------------------------------------- observables


@dataclass(frozen=True, eq=False)
class Diagonal:
    """M = sum_{x,b} phi(x, b) |x, b><x, b|.

    ``phi`` has shape (2^n, 2); column 0 holds phi(x, +1) and column 1
    holds phi(x, -1), matching the label bits 0 and 1.
    """

    n: int
    phi: np.ndarray
    label: str = "diagonal"

    kind = "diagonal"

    def __post_init__(self):
        phi = np.array(self.phi, dtype=np.float64)
        if phi.shape != (1 << self.n, 2):
            raise DimensionError(f"phi table must have shape (2^{self.n}, 2), got {phi.shape}")
        if np.any(np.abs(phi) > 1 + NORM_ATOL):
            raise ObservableError("diagonal observable needs |phi| <= 1")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    def norm(self) -> float:
        return float(np.max(np.abs(self.phi)))

    def summary(self) -> str:
        return self.label

    def to_dense(self) -> np.ndarray:
        return np.diag(self.phi.reshape(-1)).astype(np.complex128)

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "phi": self.phi.tolist(), "label": self.label}


@dataclass(frozen=True)
class FourierMass:
    """Projector whose expectation on the uniform example state is (1/2) sum_{S in T} f^(S)^2."""

    pattern: SubsetPattern

    kind = "fourier_mass"

    @property
    def n(self) -> int:
        return self.pattern.n

    def norm(self) -> float:
        return 1.0

    def summary(self) -> str:
        p = self.pattern
        return f"fourier_mass(ones={p.ones:#x},zeros={p.zeros:#x})"

    def to_dense(self) -> np.ndarray:
        return fourier_mass_dense(self.pattern)

    def to_json(self) -> dict:
        return {"kind": self.kind, "pattern": self.pattern.to_json()}


@dataclass(frozen=True, eq=False)
class DenseHermitian:
    """Arbitrary Hermitian M on n+1 qubits with operator norm at most 1."""

    n: int
    matrix: np.ndarray
    label: str = "dense"

    kind = "dense"

    def __post_init__(self):
        if self.n > DENSE_MAX_N:
            raise DimensionError(f"dense observables are capped at n <= {DENSE_MAX_N}")
        m = np.array(self.matrix, dtype=np.complex128)
        dim = 1 << (self.n + 1)
        if m.shape != (dim, dim):
            raise DimensionError(f"dense observable must be {dim}x{dim}, got {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > NORM_ATOL:
            raise ObservableError("dense observable is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.norm() > 1 + NORM_ATOL:
            raise ObservableError(f"operator norm {self.norm():.6g} exceeds 1")

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    def norm(self) -> float:
        return float(np.max(np.abs(self.eigh[0])))

    def summary(self) -> str:
        return self.label

    def to_dense(self) -> np.ndarray:
        return self.matrix

    def to_json(self) -> dict:
        pairs = np.stack([self.matrix.real, self.matrix.imag], axis=-1)
        return {"kind": self.kind, "n": self.n, "matrix": pairs.tolist(), "label": self.label}


Observable = Union[Diagonal, FourierMass, DenseHermitian]


def observable_from_json(obj) -> Observable:
    kind = obj["kind"]
    if kind == "diagonal":
        return Diagonal(int(obj["n"]), obj["phi"], obj.get("label", "diagonal"))
    if kind == "fourier_mass":
        return FourierMass(SubsetPattern.from_json(obj["pattern"]))
    if kind == "dense":
        pairs = np.asarray(obj["matrix"], dtype=np.float64)
        return DenseHermitian(int(obj["n"]), pairs[..., 0] + 1j * pairs[..., 1], obj.get("label", "dense"))
    raise ValueError(f"unknown observable kind {kind!r}")


def fourier_mass_observable(pattern: SubsetPattern) -> FourierMass:
    if pattern.size < 1:
        raise ValueError("pattern matches no set")
    return FourierMass(pattern)


def diagonal_from_phi(phi, n: Optional[int] = None, label: str = "diagonal") -> Diagonal:
    """Diagonal observable from a (2^n, 2) table or a vectorized callable phi(x, b).

    A callable receives integer inputs x and labels b in {-1, +1}.
    """
    if callable(phi):
        if n is None:
            raise ValueError("callable phi needs the dimension n")
        x = np.arange(1 << n)
        table = np.stack(
            [np.broadcast_to(phi(x, np.ones_like(x)), x.shape),
             np.broadcast_to(phi(x, -np.ones_like(x)), x.shape)],
            axis=1,
        )
    else:
        table = np.asarray(phi, dtype=np.float64)
        n = int(table.shape[0]).bit_length() - 1
    return Diagonal(n, table, label)


def character_observable(n: int, v: int) -> Diagonal:
    """phi(x, b) = b * chi_V(x); its noiseless expectation under uniform D is c^(V)."""
    chi = character_table(n, v).astype(np.float64)
    return Diagonal(n, np.stack([chi, -chi], axis=1), f"character({v:#x})")


def label_observable(n: int) -> Diagonal:
    """phi(x, b) = b."""
    return Diagonal(n, np.tile([1.0, -1.0], (1 << n, 1)), "label")


def hadamard(n_qubits: int) -> np.ndarray:
    size = 1 << n_qubits
    idx = np.arange(size)
    signs = 1 - 2 * popcount_parity(idx[:, None] & idx[None, :])
    return signs / np.sqrt(size)


def fourier_mass_dense(pattern: SubsetPattern) -> np.ndarray:
    """H^{(n+1)} (M (x) |1><1|) H^{(n+1)} with M the projector onto the matched sets."""
    n = pattern.n
    if n > 8:
        raise DimensionError("dense materialization is limited to n <= 8")
    h = hadamard(n + 1)
    proj = np.zeros(1 << (n + 1))
    proj[2 * pattern.members() + 1] = 1.0
    return (h * proj) @ h


# ---------------------------------------------------------------- example states


@dataclass(frozen=True, eq=False)
class ExampleSpec:
    """Concept, input distribution and label-noise rate of the example state."""

    concept: AnyConcept
    D: Distribution
    eta: float = 0.0

    def __post_init__(self):
        if not 0 <= self.eta < 0.5:
            raise ValueError(f"noise rate must lie in [0, 1/2), got {self.eta}")
        if self.function.n != self.D.n:
            raise DimensionError("concept and distribution dimensions differ")

    @property
    def n(self) -> int:
        return self.D.n

    @cached_property
    def function(self) -> BooleanFunction:
        return as_function(self.concept)

    @cached_property
    def spectrum(self) -> FourierSpectrum:
        return self.function.spectrum

    @cached_property
    def label_bits(self) -> np.ndarray:
        return ((1 - self.function.values) // 2).astype(np.int64)

    def noiseless(self) -> "ExampleSpec":
        if self.eta == 0:
            return self
        return ExampleSpec(self.concept, self.D, 0.0)


def example_state(spec: ExampleSpec, labels: Optional[np.ndarray] = None) -> np.ndarray:
    """Amplitude vector sum_x sqrt(D(x)) |x, label(x)> of length 2^{n+1}."""
    bits = spec.label_bits if labels is None else labels
    psi = np.zeros(1 << (spec.n + 1))
    x = np.arange(1 << spec.n)
    psi[2 * x + bits] = np.sqrt(spec.D.probs)
    return psi


def exact_expectation(spec: ExampleSpec, M: Observable) -> float:
    """Expectation of M on the example state, averaged over label noise when eta > 0."""
    if M.n != spec.n:
        raise DimensionError(f"observable dimension {M.n} != example dimension {spec.n}")
    eta = spec.eta
    if isinstance(M, Diagonal):
        x = np.arange(1 << spec.n)
        bits = spec.label_bits
        kept = M.phi[x, bits]
        flipped = M.phi[x, 1 - bits]
        return float(np.dot(spec.D.probs, (1 - eta) * kept + eta * flipped))
    if isinstance(M, FourierMass):
        if not spec.D.is_uniform:
            raise UnsupportedQuery("Fourier-mass observables require the uniform distribution")
        mass = fourier_mass(spec.spectrum, M.pattern)
        if eta == 0:
            return 0.5 * mass
        # E_b[f'(x) f'(y)] = (1-2eta)^2 f(x) f(y) off the diagonal and 1 on it
        r = (1 - 2 * eta) ** 2
        return 0.5 * (r * mass + (1 - r) * M.pattern.size * 2.0 ** -spec.n)
    if isinstance(M, DenseHermitian):
        mat = M.matrix
        psi = example_state(spec)
        if eta == 0:
            return float(np.real(psi @ mat @ psi))
        flipped = example_state(spec, 1 - spec.label_bits)
        mean = (1 - eta) * psi + eta * flipped
        val = np.real(mean @ mat @ mean)
        # per-x fluctuation: eta(1-eta) D(x) w_x^T M w_x with w_x = |x,0> - |x,1>
        d0 = np.real(np.diagonal(mat)[0::2])
        d1 = np.real(np.diagonal(mat)[1::2])
        off = np.real(np.diagonal(mat, offset=1)[0::2])
        val += eta * (1 - eta) * np.dot(spec.D.probs, d0 + d1 - 2 * off)
        return float(val)
    raise TypeError(f"not an observable: {type(M).__name__}")


def class_expectations(tables: np.ndarray, D: Distribution, M: Observable) -> np.ndarray:
    """Noiseless expectations of M for each row of a (m, 2^n) table of +-1 concepts."""
    tables = np.asarray(tables)
    if isinstance(M, FourierMass):
        if not D.is_uniform:
            raise UnsupportedQuery("Fourier-mass observables require the uniform distribution")
        spectra = walsh_hadamard_rows(tables)
        return 0.5 * kernels.pattern_mass_rows(spectra, M.pattern.ones, M.pattern.free)
    if isinstance(M, Diagonal):
        bits = ((1 - tables) // 2).astype(np.int64)
        x = np.arange(tables.shape[1])
        return M.phi[x[None, :], bits] @ D.probs
    return np.array(
        [exact_expectation(ExampleSpec(BooleanFunction(D.n, row), D), M) for row in tables]
    )


# ---------------------------------------------------------------- tolerance models


class ToleranceModel:
    targets_noiseless = False

    def respond(self, spec: ExampleSpec, M: Observable, tau: float, truth: float) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"model": type(self).__name__}


class Exact(ToleranceModel):
    def respond(self, spec, M, tau, truth):
        return truth


class GridAdversary(ToleranceModel):
    """Answer with the nearest point of a grid of spacing 2t, t = min(tau, cap)."""

    def __init__(self, tau: Optional[float] = None):
        if tau is not None and tau <= 0:
            raise ToleranceError("grid tolerance must be positive")
        self.tau = tau

    def respond(self, spec, M, tau, truth):
        return grid_round(truth, tau if self.tau is None else min(self.tau, tau))

    def describe(self):
        return {"model": "GridAdversary", "tau": self.tau}


def grid_round(value: float, tau: float) -> float:
    spacing = 2 * tau
    alpha = np.floor(value / spacing + 0.5) * spacing
    return float(min(max(alpha, value - tau), value + tau))


class Sampling(ToleranceModel):
    """Average measurement outcomes on fresh example copies.

    With ``copies`` unset the count is the Hoeffding number for the query's
    tolerance and ``delta_share``; with label noise the noisy-example
    emulation is used and answers target the noiseless expectation.
    """

    targets_noiseless = True

    def __init__(self, copies: Optional[int] = None, delta_share: float = 0.01, seed=0):
        if copies is not None and copies < 1:
            raise ValueError("copies must be positive")
        self.copies = copies
        self.delta_share = delta_share
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.copies_used = 0

    def respond(self, spec, M, tau, truth):
        from qsqlearn import simulation

        sampler = simulation.MeasurementSampler(spec, self.rng)
        if self.copies is not None:
            outcomes = sampler.sample_many(M, self.copies)
            self.copies_used += self.copies
            return float(outcomes.mean())
        if spec.eta > 0:
            alpha, used = simulation.simulate_noisy_qstat(spec, M, tau, self.delta_share, sampler)
        else:
            alpha, used = simulation.simulate_qstat(spec, M, tau, self.delta_share, sampler)
        self.copies_used += used
        return alpha

    def describe(self):
        return {"model": "Sampling", "copies": self.copies, "delta_share": self.delta_share}


# ---------------------------------------------------------------- query ledger


@dataclass(frozen=True)
class QueryRecord:
    index: int
    kind: str
    summary: str
    tau: float
    alpha: float
    exact: Optional[float]

    @property
    def abs_error(self) -> Optional[float]:
        return None if self.exact is None else abs(self.alpha - self.exact)

    def within_tolerance(self) -> bool:
        return self.exact is None or self.abs_error <= self.tau + CONTRACT_ATOL


@dataclass
class QueryLog:
    records: list = field(default_factory=list)

    def append(self, kind, summary, tau, alpha, exact) -> QueryRecord:
        rec = QueryRecord(len(self.records), kind, summary, float(tau), float(alpha),
                          None if exact is None else float(exact))
        self.records.append(rec)
        return rec

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def count(self) -> int:
        return len(self.records)

    def min_tolerance(self, start: int = 0) -> Optional[float]:
        taus = [r.tau for r in self.records[start:]]
        return min(taus) if taus else None

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query_index", "kind", "tau", "alpha", "exact", "abs_error"])
        for r in self.records:
            w.writerow([r.index, r.kind, repr(r.tau), repr(r.alpha),
                        "" if r.exact is None else repr(r.exact),
                        "" if r.exact is None else repr(r.abs_error)])
        return buf.getvalue() if fh is None else ""


# ---------------------------------------------------------------- oracles


class QstatOracleBase:
    """Shared query validation and logging for everything a learner can query.

    Subclasses implement ``_respond(M, tau) -> (alpha, exact_or_None)``.
    """

    n: int
    distribution: Distribution
    answers_noiseless: bool = True

    def __init__(self):
        self.log = QueryLog()

    @property
    def is_uniform(self) -> bool:
        return self.distribution.is_uniform

    @property
    def query_count(self) -> int:
        return len(self.log)

    def qstat(self, M: Observable, tau: float) -> float:
        if not tau > 0:
            raise ToleranceError(f"tolerance must be positive, got {tau}")
        if not isinstance(M, (Diagonal, FourierMass, DenseHermitian)):
            raise ObservableError(f"not an observable: {type(M).__name__}")
        if M.norm() > 1 + NORM_ATOL:
            raise ObservableError("observable norm exceeds 1; query rejected")
        if M.n != self.n:
            raise DimensionError(f"observable dimension {M.n} != oracle dimension {self.n}")
        alpha, exact = self._respond(M, tau)
        self.log.append(M.kind, M.summary(), tau, alpha, exact)
        return alpha

    def _respond(self, M, tau):
        raise NotImplementedError


class QstatOracle(QstatOracleBase):
    """Oracle bound to a hidden example spec and a tolerance model."""

    def __init__(self, spec: ExampleSpec, model: Optional[ToleranceModel] = None):
        super().__init__()
        self.spec = spec
        self.model = model if model is not None else Exact()
        self.n = spec.n
        self.distribution = spec.D
        self.answers_noiseless = spec.eta == 0 or self.model.targets_noiseless

    @classmethod
    def uniform(cls, concept: AnyConcept, model: Optional[ToleranceModel] = None, eta: float = 0.0):
        f = as_function(concept)
        return cls(ExampleSpec(concept, Distribution.uniform(f.n), eta), model)

    def target(self, M: Observable) -> float:
        """The value the tau-contract refers to."""
        spec = self.spec.noiseless() if self.answers_noiseless else self.spec
        return exact_expectation(spec, M)

    def _respond(self, M, tau):
        truth = self.target(M)
        return self.model.respond(self.spec, M, tau, truth), truth


__all__ = [
    "CONTRACT_ATOL",
    "DENSE_MAX_N",
    "DenseHermitian",
    "Diagonal",
    "Exact",
    "ExampleSpec",
    "FourierMass",
    "GridAdversary",
    "Observable",
    "ObservableError",
    "QstatOracle",
    "QstatOracleBase",
    "QueryLog",
    "QueryRecord",
    "Sampling",
    "ToleranceError",
    "ToleranceModel",
    "UnsupportedQuery",
    "character_observable",
    "class_expectations",
    "diagonal_from_phi",
    "example_state",
    "exact_expectation",
    "fourier_mass_dense",
    "fourier_mass_observable",
    "grid_round",
    "label_observable",
    "observable_from_json",
]
