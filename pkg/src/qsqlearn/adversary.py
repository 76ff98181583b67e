"""Weak SQ dimension and the covering-cell adversary game.

The adversary keeps a set of live candidate concepts. For each query it
splits [-1, 1] into ceil(1/tau) cells of width 2*tau, answers with the
centre of the most populated cell (leftmost on ties) and keeps only the
candidates whose exact value fell into that cell.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import networkx as nx
import numpy as np

from qsqlearn.concepts import Distribution, Hypothesis, as_function, error_rate
from qsqlearn.fourier import BooleanFunction, DimensionError
from qsqlearn.oracle import (
    Observable,
    QstatOracleBase,
    ToleranceError,
    class_expectations,
)
from qsqlearn.learners import LearnerReport

EXACT_MAX_CLASS = 64


@dataclass(frozen=True, eq=False)
class ConceptClassTable:
    """Finite concept class as a stack of truth tables."""

    functions: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        fns = tuple(as_function(f) for f in self.functions)
        if not fns:
            raise ValueError("concept class is empty")
        if len({f.n for f in fns}) != 1:
            raise DimensionError("concept class mixes dimensions")
        object.__setattr__(self, "functions", fns)
        if self.labels is not None and len(self.labels) != len(fns):
            raise ValueError("labels must match the number of concepts")

    @property
    def n(self) -> int:
        return self.functions[0].n

    def __len__(self):
        return len(self.functions)

    @property
    def tables(self) -> np.ndarray:
        return np.stack([f.values for f in self.functions])

    @classmethod
    def parities(cls, n: int) -> "ConceptClassTable":
        return cls(tuple(BooleanFunction.parity(n, s) for s in range(1 << n)),
                   tuple(f"chi_{s}" for s in range(1 << n)))

    def to_json(self) -> dict:
        out = {"n": self.n, "concepts": [f.to_json() for f in self.functions]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, obj) -> "ConceptClassTable":
        from qsqlearn.concepts import concept_from_json

        fns = tuple(as_function(concept_from_json(c)) for c in obj["concepts"])
        labels = tuple(obj["labels"]) if "labels" in obj else None
        return cls(fns, labels)


def correlation_matrix(cls: ConceptClassTable, D: Optional[Distribution] = None) -> np.ndarray:
    t = cls.tables.astype(np.float64)
    w = np.full(t.shape[1], 1.0 / t.shape[1]) if D is None else D.probs
    return (t * w) @ t.T


@dataclass(frozen=True)
class SQDimResult:
    d: int
    exact: bool
    witness: tuple

    def to_json(self) -> dict:
        return {"d": self.d, "exact": self.exact, "witness": list(self.witness)}


def weak_sqdim(cls: ConceptClassTable, D: Optional[Distribution] = None,
               mode: str = "auto") -> SQDimResult:
    """Largest d with d members pairwise |E_D[c_i c_j]| <= 1/d.

    Exact mode scans d downward and searches for a d-clique in the graph
    joining pairs with |correlation| <= 1/d. Classes above 64 members fall
    back to a greedy search whose result is only a lower bound.
    """
    m = len(cls)
    corr = np.abs(correlation_matrix(cls, D))
    if mode == "auto":
        mode = "exact" if m <= EXACT_MAX_CLASS else "greedy"
    if mode == "greedy":
        return _greedy_sqdim(corr)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    for d in range(m, 1, -1):
        ok = corr <= 1.0 / d + 1e-12
        g = nx.Graph()
        g.add_nodes_from(range(m))
        g.add_edges_from((i, j) for i in range(m) for j in range(i + 1, m) if ok[i, j])
        # cheap prune: a d-clique needs d nodes of degree >= d-1
        core = nx.k_core(g, d - 1)
        if core.number_of_nodes() < d:
            continue
        clique, size = nx.max_weight_clique(core, weight=None)
        if size >= d:
            return SQDimResult(d, True, tuple(sorted(clique)[:d]))
    return SQDimResult(1, True, (0,))


def _greedy_sqdim(corr: np.ndarray) -> SQDimResult:
    m = corr.shape[0]
    best = (1, (0,))
    for d in range(m, 1, -1):
        if d <= best[0]:
            break
        ok = corr <= 1.0 / d + 1e-12
        order = np.argsort(-ok.sum(axis=1), kind="stable")
        chosen = []
        for i in order:
            if all(ok[i, j] for j in chosen):
                chosen.append(int(i))
        if len(chosen) >= d:
            best = (d, tuple(sorted(chosen[:d])))
            break
    return SQDimResult(best[0], False, best[1])


def weak_sqdim_bruteforce(cls: ConceptClassTable, D: Optional[Distribution] = None) -> int:
    """Enumerate every subset; the independent check for small classes."""
    m = len(cls)
    if m > 16:
        raise ValueError("brute force limited to 16 concepts")
    corr = np.abs(correlation_matrix(cls, D))
    best = 1
    for size in range(2, m + 1):
        for subset in itertools.combinations(range(m), size):
            sub = corr[np.ix_(subset, subset)]
            off = sub[~np.eye(size, dtype=bool)]
            if np.all(off <= 1.0 / size + 1e-12):
                best = size
                break
    return best


# ---------------------------------------------------------------- adversary


@dataclass
class AdversaryState:
    live: np.ndarray
    tau: float
    transcript: list = field(default_factory=list)

    @property
    def live_count(self) -> int:
        return int(self.live.size)


def cell_index(values: np.ndarray, tau: float) -> np.ndarray:
    cells = math.ceil(1 / tau - 1e-12)
    idx = np.floor((np.asarray(values) + 1) / (2 * tau) + 1e-12).astype(np.int64)
    return np.clip(idx, 0, cells - 1)


def adversary_answer(state: AdversaryState, values: np.ndarray, tau_query: float,
                     ) -> tuple[float, AdversaryState]:
    """Answer for one query given the exact values of the live candidates.

    ``values[i]`` is the expectation for candidate ``state.live[i]``.
    """
    tau = state.tau
    if tau_query < 2 * tau - 1e-12:
        raise ToleranceError(
            f"query tolerance {tau_query} below the adversary's legality bound {2 * tau}"
        )
    values = np.asarray(values, dtype=np.float64)
    cells = cell_index(values, tau)
    counts = np.bincount(cells, minlength=math.ceil(1 / tau - 1e-12))
    best = int(np.argmax(counts))  # argmax returns the leftmost maximum
    answer = -1 + (2 * best + 1) * tau
    keep = cells == best
    new_state = AdversaryState(state.live[keep], tau, state.transcript + [{
        "tau_query": tau_query,
        "answer": answer,
        "live_before": int(state.live.size),
        "live_after": int(keep.sum()),
        "max_deviation": float(np.max(np.abs(values[keep] - answer))),
    }])
    return answer, new_state


class AdversaryOracle(QstatOracleBase):
    """Qstat interface answered by the covering-cell adversary."""

    def __init__(self, cls: ConceptClassTable, tau: float, D: Optional[Distribution] = None):
        super().__init__()
        if not 0 < tau <= 1:
            raise ValueError("adversary tau must lie in (0, 1]")
        self.cls = cls
        self.n = cls.n
        self.distribution = D if D is not None else Distribution.uniform(cls.n)
        self.state = AdversaryState(np.arange(len(cls)), tau)
        self._tables = cls.tables

    def _respond(self, M: Observable, tau):
        values = class_expectations(self._tables[self.state.live], self.distribution, M)
        answer, self.state = adversary_answer(self.state, values, tau)
        return answer, None


@dataclass
class GameReport:
    queries: int
    surviving_count: int
    worst_error: float
    worst_index: int
    lower_bound_queries: float
    transcript: list
    class_size: int

    def to_json(self) -> dict:
        return {
            "queries": self.queries,
            "surviving_count": self.surviving_count,
            "worst_error": self.worst_error,
            "worst_index": self.worst_index,
            "lower_bound_queries": self.lower_bound_queries,
            "class_size": self.class_size,
            "transcript": self.transcript,
        }

    def transcript_csv(self) -> str:
        lines = ["query,tau_query,answer,live_before,live_after,max_deviation"]
        for q, t in enumerate(self.transcript):
            lines.append(f"{q},{t['tau_query']!r},{t['answer']!r},{t['live_before']},"
                         f"{t['live_after']},{t['max_deviation']!r}")
        return "\n".join(lines) + "\n"


def run_lower_bound_game(learner: Callable, cls: ConceptClassTable,
                         D: Optional[Distribution] = None, tau: float = 1 / 12,
                         error_target: Optional[float] = None) -> GameReport:
    """Play ``learner(oracle)`` against the adversary, then pick the worst surviving target.

    ``learner`` returns a Hypothesis, a LearnerReport, or a BooleanFunction.
    """
    oracle = AdversaryOracle(cls, tau, D)
    out = learner(oracle)
    h = out.hypothesis if isinstance(out, LearnerReport) else out
    if not isinstance(h, (Hypothesis, BooleanFunction)):
        raise TypeError("learner must return a hypothesis")
    errors = [error_rate(h, cls.functions[i], oracle.distribution) for i in oracle.state.live]
    worst = int(np.argmax(errors))
    d = len(cls)
    bound = math.log(d) / math.log(1 / (2 * tau)) if 2 * tau < 1 else float("inf")
    return GameReport(
        queries=oracle.query_count,
        surviving_count=oracle.state.live_count,
        worst_error=float(errors[worst]),
        worst_index=int(oracle.state.live[worst]),
        lower_bound_queries=bound,
        transcript=oracle.state.transcript,
        class_size=d,
    )


__all__ = [
    "AdversaryOracle",
    "AdversaryState",
    "ConceptClassTable",
    "GameReport",
    "SQDimResult",
    "adversary_answer",
    "cell_index",
    "correlation_matrix",
    "run_lower_bound_game",
    "weak_sqdim",
    "weak_sqdim_bruteforce",
]
