"""QSQ learners for parities, juntas, heavy Fourier coefficients and DNFs.

Every learner talks to an oracle through ``oracle.qstat(M, tau)`` only.
Fourier-mass answers carry the factor 1/2 of the post-selected branch, so
the learners double them; a raw tolerance t becomes 2t on the doubled value.

Goldreich-Levin constants. Bucket masses are queried at raw tolerance
tau^2/8, so the doubled estimate is within tau^2/4 of the true mass.

* A bucket holding a set with |f^(T)| >= tau has mass >= tau^2, its
  estimate is >= 3 tau^2/4 and it survives the cut at tau^2/2.
* A surviving bucket has true mass >= tau^2/4; by Parseval at most
  4/tau^2 buckets survive a level, so a level costs <= 8/tau^2 queries.
* Confirmation queries at tolerance tau/4 with the cut 3 tau/4 keep every
  |f^(T)| >= tau and drop every |f^(T)| < tau/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from qsqlearn.concepts import Hypothesis
from qsqlearn.fourier import SubsetPattern
from qsqlearn.oracle import character_observable, fourier_mass_observable, label_observable


class LearnerPreconditionError(ValueError):
    """The oracle does not meet the learner's distributional assumptions."""


@dataclass
class LearnerReport:
    hypothesis: Hypothesis
    queries_used: int
    min_tolerance_used: Optional[float]
    phases: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "hypothesis": self.hypothesis.to_json(),
            "queries_used": self.queries_used,
            "min_tolerance_used": self.min_tolerance_used,
            "phases": dict(self.phases),
            "details": self.details,
        }


def _require_uniform_noiseless(oracle):
    if not oracle.is_uniform:
        raise LearnerPreconditionError("learner requires the uniform distribution")
    if not oracle.answers_noiseless:
        raise LearnerPreconditionError(
            "learner requires answers about the noiseless state; "
            "use the noisy-example emulation for eta > 0"
        )


def _doubled_mass(oracle, pattern: SubsetPattern, raw_tau: float) -> float:
    return 2.0 * oracle.qstat(fourier_mass_observable(pattern), raw_tau)


class _Run:
    """Ledger bookkeeping for one learner run."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.start = oracle.query_count
        self.phases = {}
        self._mark = self.start

    def phase(self, name):
        now = self.oracle.query_count
        self.phases[name] = now - self._mark
        self._mark = now

    def report(self, hypothesis, **details) -> LearnerReport:
        used = self.oracle.query_count - self.start
        return LearnerReport(
            hypothesis=hypothesis,
            queries_used=used,
            min_tolerance_used=self.oracle.log.min_tolerance(self.start),
            phases=self.phases,
            details=details,
        )


PARITY_RAW_TOLERANCE = 1 / 6


def learn_parity(oracle, n: Optional[int] = None, queries: Optional[int] = None) -> LearnerReport:
    """Recover s from one influence query per coordinate.

    Influences of a parity are 0 or 1; the doubled answers fall in
    [-1/3, 1/3] or [2/3, 4/3] and are split at 1/2. ``queries`` truncates the
    run to the first coordinates (unqueried bits default to 0); the
    lower-bound harness uses it.
    """
    _require_uniform_noiseless(oracle)
    n = oracle.n if n is None else n
    run = _Run(oracle)
    s = 0
    estimates = []
    for i in range(1, (n if queries is None else min(queries, n)) + 1):
        est = _doubled_mass(oracle, SubsetPattern.containing(n, i), PARITY_RAW_TOLERANCE)
        estimates.append(est)
        if est >= 0.5:
            s |= 1 << (i - 1)
    run.phase("influence")
    return run.report(Hypothesis(n, ((s, 1.0),)), s=s, estimates=estimates)


def learn_junta(oracle, n: Optional[int] = None, k: int = 1, eps: float = 0.1) -> LearnerReport:
    """Influence screening followed by Fourier coefficients on the surviving variables.

    Phase 1 keeps T = {i : doubled Inf_i estimate >= eps/(4k)} from queries at
    raw tolerance eps/(10k). Phase 2 estimates c^(V) for every V subset of T at
    tolerance sqrt(eps/2) 2^{-k/2} and outputs sign(sum alpha_V chi_V).
    """
    _require_uniform_noiseless(oracle)
    n = oracle.n if n is None else n
    if not 0 <= k <= n or (1 << k) > (1 << 12):
        raise ValueError(f"junta size k={k} must satisfy 0 <= k <= min(n, 12)")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    run = _Run(oracle)
    if k == 0:
        alpha = oracle.qstat(label_observable(n), math.sqrt(eps / 2))
        run.phase("coefficients")
        return run.report(Hypothesis(n, ((0, alpha),)), relevant=[], estimates=[])

    raw_tau = eps / (10 * k)
    cut = eps / (4 * k)
    relevant = []
    estimates = []
    for i in range(1, n + 1):
        est = _doubled_mass(oracle, SubsetPattern.containing(n, i), raw_tau)
        estimates.append(est)
        if est >= cut:
            relevant.append(i)
    run.phase("influence")

    coeff_tau = math.sqrt(eps / 2) * 2.0 ** (-k / 2)
    t_mask = sum(1 << (i - 1) for i in relevant)
    coeffs = {}
    sub = t_mask
    while True:
        coeffs[sub] = oracle.qstat(character_observable(n, sub), coeff_tau)
        if sub == 0:
            break
        sub = (sub - 1) & t_mask
    run.phase("coefficients")
    return run.report(Hypothesis.from_mapping(n, coeffs), relevant=relevant, estimates=estimates)


def goldreich_levin(oracle, tau: float, trace: Optional[dict] = None) -> frozenset:
    """Sets U with every |f^(T)| >= tau in U and every member satisfying |f^(T)| >= tau/2.

    Buckets are prefixes on coordinates 1..j, split one coordinate per level.
    Pass a dict as ``trace`` to receive per-level survivor counts and the
    confirmation estimates.
    """
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    _require_uniform_noiseless(oracle)
    n = oracle.n
    mass_tau = tau * tau / 8
    mass_cut = tau * tau / 2
    live = [0]
    level_sizes = []
    for j in range(n):
        fixed = (1 << (j + 1)) - 1
        nxt = []
        for prefix in live:
            for child in (prefix, prefix | (1 << j)):
                est = _doubled_mass(oracle, SubsetPattern.bucket(n, child, fixed), mass_tau)
                if est >= mass_cut:
                    nxt.append(child)
        live = nxt
        level_sizes.append(len(live))
        if not live:
            break

    confirmed = {}
    for s in live:
        est = oracle.qstat(character_observable(n, s), tau / 4)
        if abs(est) >= 3 * tau / 4:
            confirmed[s] = est
    if trace is not None:
        trace["level_sizes"] = level_sizes
        trace["candidates"] = list(live)
        trace["estimates"] = confirmed
    return frozenset(confirmed)


def gl_query_bound(n: int, tau: float, survivors: int) -> float:
    return n * (8 / tau ** 2 + 1) + survivors


def learn_dnf(oracle, s: int, eps: float) -> LearnerReport:
    """sign of the heavy Fourier coefficients found by Goldreich-Levin at tau = eps/(2(2s+1))."""
    if s < 1:
        raise ValueError("DNF size bound s must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _require_uniform_noiseless(oracle)
    n = oracle.n
    run = _Run(oracle)
    tau = eps / (2 * (2 * s + 1))
    trace = {}
    heavy = goldreich_levin(oracle, tau, trace)
    run.phase("goldreich_levin")
    coeffs = {S: oracle.qstat(character_observable(n, S), tau / 2) for S in sorted(heavy)}
    run.phase("coefficients")
    return run.report(
        Hypothesis.from_mapping(n, coeffs),
        gl_tau=tau,
        heavy_sets=sorted(heavy),
        level_sizes=trace.get("level_sizes", []),
    )


__all__ = [
    "LearnerPreconditionError",
    "LearnerReport",
    "PARITY_RAW_TOLERANCE",
    "gl_query_bound",
    "goldreich_levin",
    "learn_dnf",
    "learn_junta",
    "learn_parity",
]
