"""One-way protocol: Alice sends quantized Qstat answers, Bob learns and predicts.

Alice holds the concept and answers each query with the nearest point of a
fixed grid; Bob runs a QSQ learner on those answers under the input
distribution and outputs h(x). Each answer costs a fixed-width code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from qsqlearn.adversary import ConceptClassTable
from qsqlearn.concepts import Distribution, Hypothesis
from qsqlearn.fourier import BooleanFunction, DimensionError
from qsqlearn.learners import LearnerReport, learn_parity
from qsqlearn.oracle import (
    CONTRACT_ATOL,
    ExampleSpec,
    QstatOracleBase,
    ToleranceError,
    exact_expectation,
)


def grid_levels(tau: float) -> int:
    if not tau > 0:
        raise ToleranceError(f"quantization tolerance must be positive, got {tau}")
    return math.ceil(1 / tau - 1e-12) + 1


def code_width(tau: float) -> int:
    """Bits of the fixed-width code over ceil(1/tau) + 1 grid levels."""
    return max(1, math.ceil(math.log2(grid_levels(tau))))


def quantize(value: float, tau: float) -> tuple[int, float]:
    """(code, decoded) on the grid -1 + 2 tau k, k = 0..ceil(1/tau); |decoded - value| <= tau."""
    levels = grid_levels(tau)
    k = int(math.floor((float(value) + 1) / (2 * tau) + 0.5))
    k = min(max(k, 0), levels - 1)
    return k, decode(k, tau)


def decode(code: int, tau: float) -> float:
    # the top level is pinned to 1 so that a non-integer 1/tau cannot overshoot
    return min(-1 + 2 * tau * code, 1.0)


class AliceOracle(QstatOracleBase):
    """Answers with the quantized exact expectation and records each code."""

    def __init__(self, spec: ExampleSpec, tau: float):
        super().__init__()
        self.spec = spec
        self.tau = tau
        self.n = spec.n
        self.distribution = spec.D
        self.codes = []

    def _respond(self, M, tau):
        if tau < self.tau - 1e-12:
            raise ToleranceError(
                f"requested tolerance {tau} is finer than the protocol grid {self.tau}"
            )
        exact = exact_expectation(self.spec, M)
        code, decoded = quantize(exact, self.tau)
        self.codes.append(code)
        return decoded, exact


def _constant_learner(oracle) -> Hypothesis:
    return Hypothesis(oracle.n, ((0, 1.0),))


def _zero_query_learner(cls: ConceptClassTable):
    # only meaningful for a single-concept class: output its sole member
    def learner(oracle):
        return cls.functions[0]
    return learner


LEARNERS = {
    "parity": (lambda cls: learn_parity, 0.5),
    "constant": (lambda cls: _constant_learner, 0.0),
    "zero-query": (_zero_query_learner, 0.5),
}


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    """Product input mu1 x mu2 over (class index, input) plus the quantization grid."""

    cls: ConceptClassTable
    mu1: np.ndarray
    mu2: Distribution
    tau: float
    learner: Union[str, Callable] = "parity"
    gamma_target: Optional[float] = None

    def __post_init__(self):
        mu1 = np.array(self.mu1, dtype=np.float64).reshape(-1)
        if mu1.shape[0] != len(self.cls):
            raise ValueError("mu1 must weight every member of the class")
        if np.any(mu1 < 0) or abs(mu1.sum() - 1) > 1e-9:
            raise ValueError("mu1 is not a probability vector")
        if self.mu2.n != self.cls.n:
            raise DimensionError("mu2 dimension differs from the class dimension")
        grid_levels(self.tau)
        if isinstance(self.learner, str) and self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}")
        mu1.setflags(write=False)
        object.__setattr__(self, "mu1", mu1)

    @classmethod
    def uniform(cls, concepts: ConceptClassTable, tau: float, learner="parity") -> "ProtocolConfig":
        m = len(concepts)
        return cls(concepts, np.full(m, 1.0 / m), Distribution.uniform(concepts.n), tau, learner)

    def resolve_learner(self) -> tuple[Callable, float]:
        if isinstance(self.learner, str):
            make, gamma = LEARNERS[self.learner]
            fn = make(self.cls)
        else:
            fn, gamma = self.learner, 0.0
        return fn, gamma if self.gamma_target is None else self.gamma_target


@dataclass
class ProtocolResult:
    bits: int
    queries: int
    success: float
    trials: int
    gamma_target: float
    code_width: int
    ideal_bits: float
    max_answer_error: float
    bits_per_trial: list

    def to_json(self) -> dict:
        return {
            "bits": self.bits,
            "queries": self.queries,
            "success": self.success,
            "trials": self.trials,
            "gamma_target": self.gamma_target,
            "code_width": self.code_width,
            "ideal_bits": self.ideal_bits,
            "max_answer_error": self.max_answer_error,
        }


def _hypothesis_of(out):
    h = out.hypothesis if isinstance(out, LearnerReport) else out
    if isinstance(h, Hypothesis):
        return h.table()
    if isinstance(h, BooleanFunction):
        return h.values
    raise TypeError("learner must return a hypothesis")


def run_trial(config: ProtocolConfig, rng: np.random.Generator) -> dict:
    """One execution: draw (c, x), run Bob's learner on Alice's answers, predict h(x)."""
    learner, _ = config.resolve_learner()
    c = int(rng.choice(len(config.cls), p=config.mu1))
    x = int(config.mu2.sample(rng))
    spec = ExampleSpec(config.cls.functions[c], config.mu2)
    alice = AliceOracle(spec, config.tau)
    table = _hypothesis_of(learner(alice))
    width = code_width(config.tau)
    errors = [r.abs_error for r in alice.log]
    return {
        "concept": c,
        "x": x,
        "queries": alice.query_count,
        "bits": alice.query_count * width,
        "codes": list(alice.codes),
        "success": bool(table[x] == config.cls.functions[c].values[x]),
        "max_answer_error": max(errors, default=0.0),
    }


def run_protocol(config: ProtocolConfig, trials: int, seed) -> ProtocolResult:
    """Seeded batch of protocol executions; every Alice answer is checked against tau."""
    if trials < 1:
        raise ValueError("trials must be positive")
    _, gamma = config.resolve_learner()
    streams = np.random.SeedSequence(seed).spawn(trials)
    rows = [run_trial(config, np.random.default_rng(s)) for s in streams]
    worst = max(r["max_answer_error"] for r in rows)
    if worst > config.tau + CONTRACT_ATOL:
        raise AssertionError(f"Alice answered outside tolerance: error {worst} > {config.tau}")
    bits = [r["bits"] for r in rows]
    queries = [r["queries"] for r in rows]
    width = code_width(config.tau)
    return ProtocolResult(
        bits=max(bits),
        queries=max(queries),
        success=float(np.mean([r["success"] for r in rows])),
        trials=trials,
        gamma_target=gamma,
        code_width=width,
        ideal_bits=max(queries) * math.log2(1 / config.tau),
        max_answer_error=float(worst),
        bits_per_trial=bits,
    )


__all__ = [
    "AliceOracle",
    "LEARNERS",
    "ProtocolConfig",
    "ProtocolResult",
    "code_width",
    "decode",
    "grid_levels",
    "quantize",
    "run_protocol",
    "run_trial",
]
