"""Laplace noise, the private average, a private QSQ learner and an empirical DP audit.

Measurement outcomes live in [-1, 1]; the private average works on [0, 1],
so outcomes are mapped through a -> (a + 1)/2 before averaging and the
released value is mapped back with v -> 2v - 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from qsqlearn.concepts import Hypothesis
from qsqlearn.learners import LearnerReport
from qsqlearn.oracle import (
    CONTRACT_ATOL,
    ExampleSpec,
    QstatOracleBase,
    ToleranceError,
    exact_expectation,
)
from qsqlearn.simulation import MeasurementSampler

PRIVACY_CONSTANT = 2.0
AUDIT_MIN_COUNT = 50
AUDIT_SIGMAS = 4.0


@dataclass(frozen=True)
class LaplaceParams:
    """Density (rate/2) exp(-rate |x|)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise ValueError(f"Laplace rate must be a positive finite number, got {self.rate}")

    @property
    def scale(self) -> float:
        return 1.0 / self.rate

    def density(self, x):
        return 0.5 * self.rate * np.exp(-self.rate * np.abs(x))

    def tail(self, t):
        """P(|X| > t) for t >= 0."""
        return np.exp(-self.rate * np.asarray(t, dtype=np.float64))


def laplace_sample(params: LaplaceParams, rng: np.random.Generator, size=None):
    """Inverse-CDF draw: u uniform on (-1/2, 1/2), x = -sign(u) ln(1 - 2|u|) / rate."""
    u = rng.random(size) - 0.5
    # 1 - 2|u| is 0 only for u = -1/2; nudge that single point into the open interval
    inner = np.maximum(1 - 2 * np.abs(u), np.finfo(np.float64).tiny)
    x = -np.sign(u) * np.log(inner) / params.rate
    return float(x) if size is None else x


def accuracy_radius(alpha: float, T: int, delta: float) -> float:
    """ln(1/delta) / (alpha T): the noise exceeds it with probability exactly delta."""
    return math.log(1 / delta) / (alpha * T)


def _check_unit_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size < 1:
        raise ValueError("private average needs at least one value")
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise ValueError("private average values must lie in [0, 1]")
    return v


def private_average(values, alpha: float, rng: np.random.Generator, size=None):
    """mean(values) + Laplace(rate alpha T); unclamped. ``size`` draws several releases."""
    if not alpha > 0:
        raise ValueError("privacy parameter alpha must be positive")
    v = _check_unit_values(values)
    return v.mean() + laplace_sample(LaplaceParams(alpha * v.size), rng, size)


@dataclass(frozen=True)
class LogRatioCertificate:
    """sup over outputs of |log p1(z) - log p2(z)| for two Laplace releases."""

    rate: float
    mean_shift: float
    sup_log_ratio: float
    alpha: float

    @property
    def holds(self) -> bool:
        return self.sup_log_ratio <= self.alpha + 1e-12


def log_ratio_certificate(values_a, values_b, alpha: float) -> LogRatioCertificate:
    """Closed-form privacy loss of the private average on a neighbouring pair.

    log p1(z) - log p2(z) = rate (|z - m2| - |z - m1|), bounded in absolute
    value by rate |m1 - m2| with equality for z outside [m1, m2]. Neighbours
    differ in one entry of [0, 1], so |m1 - m2| <= 1/T and the bound is alpha.
    """
    a = _check_unit_values(values_a)
    b = _check_unit_values(values_b)
    if a.shape != b.shape:
        raise ValueError("neighbouring tuples must have the same length")
    if np.count_nonzero(a != b) > 1:
        raise ValueError("tuples differ in more than one entry")
    rate = alpha * a.size
    shift = float(abs(a.mean() - b.mean()))
    return LogRatioCertificate(float(rate), shift, float(rate) * shift, float(alpha))


def log_density_ratio(z, values_a, values_b, alpha: float) -> np.ndarray:
    """Pointwise log p1(z) - log p2(z); used to spot-check the certificate."""
    a = _check_unit_values(values_a)
    b = _check_unit_values(values_b)
    rate = alpha * a.size
    z = np.asarray(z, dtype=np.float64)
    return rate * (np.abs(z - b.mean()) - np.abs(z - a.mean()))


def private_copies(alpha: float, tau: float, d: int, delta: float,
                   C: float = PRIVACY_CONSTANT) -> int:
    """Q = ceil((C/alpha) (1/tau^2 + 2/tau) ln(2d/delta)) copies per query."""
    if not (alpha > 0 and tau > 0 and d >= 1 and 0 < delta < 1):
        raise ValueError("need alpha > 0, tau > 0, d >= 1 and delta in (0, 1)")
    return math.ceil(C / alpha * (1 / tau ** 2 + 2 / tau) * math.log(2 * d / delta))


class PrivateOracle(QstatOracleBase):
    """Answers each query with a privatized average of Q fresh measurement outcomes."""

    def __init__(self, spec: ExampleSpec, tau: float, d: int, alpha: float, copies: int,
                 rng: np.random.Generator):
        super().__init__()
        if spec.eta != 0:
            raise ValueError("private learning is defined for noiseless examples")
        self.spec = spec
        self.n = spec.n
        self.distribution = spec.D
        self.tau = tau
        self.d = d
        self.alpha = alpha
        self.copies = copies
        self.rng = rng
        self.sampler = MeasurementSampler(spec, rng)
        self.noise = []
        self.samples_used = 0

    def _respond(self, M, tau):
        if tau < self.tau - 1e-12:
            raise ToleranceError(f"query tolerance {tau} below the configured tolerance {self.tau}")
        if self.query_count >= self.d:
            raise ToleranceError(f"learner exceeded its declared budget of {self.d} queries")
        outcomes = self.sampler.sample_many(M, self.copies)
        self.samples_used += outcomes.size
        unit = (outcomes + 1) / 2
        released = private_average(unit, self.alpha, self.rng)
        self.noise.append(float(released - unit.mean()))
        return 2 * released - 1, exact_expectation(self.spec, M)


@dataclass
class PrivateLearnReport:
    hypothesis: Hypothesis
    total_samples: int
    copies_per_query: int
    alpha: float
    delta: float
    tau: float
    d: int
    noise_trace: list
    answers_within_tau: bool
    queries_used: int
    learner: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "hypothesis": self.hypothesis.to_json(),
            "total_samples": self.total_samples,
            "copies_per_query": self.copies_per_query,
            "alpha": self.alpha,
            "delta": self.delta,
            "tau": self.tau,
            "d": self.d,
            "noise_trace": list(self.noise_trace),
            "answers_within_tau": self.answers_within_tau,
            "queries_used": self.queries_used,
            "learner": self.learner,
        }


def private_pac_learn(learner: Callable, d: int, tau: float, spec: ExampleSpec, alpha: float,
                      delta: float, rng: np.random.Generator,
                      C: float = PRIVACY_CONSTANT) -> PrivateLearnReport:
    """Run ``learner(oracle)`` with every answer released through the private average.

    ``d`` bounds the number of queries and ``tau`` is the smallest raw
    tolerance the learner asks for.
    """
    copies = private_copies(alpha, tau, d, delta, C)
    oracle = PrivateOracle(spec, tau, d, alpha, copies, rng)
    out = learner(oracle)
    h = out.hypothesis if isinstance(out, LearnerReport) else out
    within = all(r.abs_error <= tau + CONTRACT_ATOL for r in oracle.log)
    # the sample budget is fixed up front: d batches of Q copies
    return PrivateLearnReport(
        hypothesis=h,
        total_samples=d * copies,
        copies_per_query=copies,
        alpha=alpha,
        delta=delta,
        tau=tau,
        d=d,
        noise_trace=list(oracle.noise),
        answers_within_tau=within,
        queries_used=oracle.query_count,
        learner=out.to_json() if isinstance(out, LearnerReport) else {},
    )


# ---------------------------------------------------------------- audit


@dataclass
class AuditReport:
    alpha: float
    max_log_ratio: float
    verdict: bool
    bins: list
    excluded: list
    support_mismatch: list

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            # strict JSON has no infinity; a support mismatch is reported as the string "inf"
            "max_log_ratio": self.max_log_ratio if math.isfinite(self.max_log_ratio) else "inf",
            "verdict": "PASS" if self.verdict else "FAIL",
            "bins": self.bins,
            "excluded": self.excluded,
            "support_mismatch": self.support_mismatch,
        }


def dp_audit(mechanism: Callable, neighbors: tuple, alpha: float, bins: Sequence[float],
             samples: int, rng: np.random.Generator,
             min_count: int = AUDIT_MIN_COUNT) -> AuditReport:
    """Histogram ``mechanism(values, rng, size)`` on both neighbours and compare bin masses.

    Bins with at least ``min_count`` hits on both sides are compared; each
    passes when |log ratio| <= alpha + 4 sqrt(1/a + 1/b). A bin with
    ``min_count`` hits on one side and none on the other is a support
    mismatch (infinite ratio) and fails the audit. Remaining bins are
    excluded and listed.
    """
    edges = np.asarray(bins, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be increasing edges")
    first, second = neighbors
    out_a = np.asarray(mechanism(first, rng, samples), dtype=np.float64)
    out_b = np.asarray(mechanism(second, rng, samples), dtype=np.float64)
    # outputs beyond the edges land in the outer bins so every draw is counted
    span = np.clip(out_a, edges[0], edges[-1]), np.clip(out_b, edges[0], edges[-1])
    count_a, _ = np.histogram(span[0], edges)
    count_b, _ = np.histogram(span[1], edges)

    compared, excluded, mismatch = [], [], []
    worst = 0.0
    verdict = True
    for i, (a, b) in enumerate(zip(count_a.tolist(), count_b.tolist())):
        lo, hi = float(edges[i]), float(edges[i + 1])
        if a >= min_count and b >= min_count:
            ratio = math.log((a / out_a.size) / (b / out_b.size))
            slack = AUDIT_SIGMAS * math.sqrt(1 / a + 1 / b)
            ok = abs(ratio) <= alpha + slack
            verdict &= ok
            worst = max(worst, abs(ratio))
            compared.append({"lo": lo, "hi": hi, "count_a": a, "count_b": b,
                             "log_ratio": ratio, "slack": slack, "ok": ok})
        elif max(a, b) >= min_count and min(a, b) == 0:
            verdict = False
            worst = math.inf
            mismatch.append({"lo": lo, "hi": hi, "count_a": a, "count_b": b})
        elif a or b:
            excluded.append({"lo": lo, "hi": hi, "count_a": a, "count_b": b})
    return AuditReport(alpha, worst, bool(verdict), compared, excluded, mismatch)


def private_average_mechanism(alpha: float) -> Callable:
    """The private average in the audit's ``mechanism(values, rng, size)`` form."""
    def mechanism(values, rng, size):
        return private_average(values, alpha, rng, size)
    return mechanism


def exact_mean_mechanism(values, rng, size):
    """No noise at all; the audit must reject it on neighbours with different means."""
    return np.full(size, _check_unit_values(values).mean())


__all__ = [
    "AuditReport",
    "LaplaceParams",
    "LogRatioCertificate",
    "PRIVACY_CONSTANT",
    "PrivateLearnReport",
    "PrivateOracle",
    "accuracy_radius",
    "dp_audit",
    "exact_mean_mechanism",
    "laplace_sample",
    "log_density_ratio",
    "log_ratio_certificate",
    "private_average",
    "private_average_mechanism",
    "private_copies",
    "private_pac_learn",
]
