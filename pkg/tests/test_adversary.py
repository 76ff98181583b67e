import math

import numpy as np
import pytest

from qsqlearn.adversary import (
    AdversaryOracle,
    AdversaryState,
    ConceptClassTable,
    adversary_answer,
    cell_index,
    run_lower_bound_game,
    weak_sqdim,
    weak_sqdim_bruteforce,
)
from qsqlearn.concepts import Hypothesis
from qsqlearn.fourier import BooleanFunction, SubsetPattern
from qsqlearn.learners import learn_parity
from qsqlearn.oracle import FourierMass, ToleranceError, character_observable

from conftest import random_function


def test_sqdim_examples():
    for n in range(1, 6):
        assert weak_sqdim(ConceptClassTable.parities(n)).d == 2 ** n
    c = BooleanFunction.parity(3, 2)
    assert weak_sqdim(ConceptClassTable((c, c))).d == 1
    chi0 = BooleanFunction.parity(3, 0)
    trio = ConceptClassTable((chi0, -chi0, BooleanFunction.parity(3, 1)))
    assert weak_sqdim(trio).d == 2 == weak_sqdim_bruteforce(trio)


def test_sqdim_matches_bruteforce_on_random_classes():
    rng = np.random.default_rng(0)
    for _ in range(40):
        m = int(rng.integers(1, 11))
        fns = []
        for _ in range(m):
            # mix parities with random tables so both high and low dimensions occur
            if rng.random() < 0.6:
                fns.append(BooleanFunction.parity(4, int(rng.integers(16))))
            else:
                fns.append(random_function(rng, 4))
        cls = ConceptClassTable(tuple(fns))
        res = weak_sqdim(cls)
        assert res.exact and res.d == weak_sqdim_bruteforce(cls)
        w = list(res.witness)
        assert len(w) == res.d


def test_greedy_mode_is_a_lower_bound():
    cls = ConceptClassTable.parities(4)
    res = weak_sqdim(cls, mode="greedy")
    assert not res.exact and res.d == 16


def test_empty_class_rejected():
    with pytest.raises(ValueError):
        ConceptClassTable(())


def test_cells_cover_interval():
    tau = 1 / 12
    idx = cell_index(np.linspace(-1, 1, 1001), tau)
    assert idx.min() == 0 and idx.max() == 11


def test_single_cluster_keeps_everyone():
    state = AdversaryState(np.arange(5), 1 / 6)
    answer, new = adversary_answer(state, np.full(5, 0.3), 1 / 3)
    assert new.live_count == 5 and abs(answer - 0.3) <= 1 / 6


def test_parity_influence_split():
    cls = ConceptClassTable.parities(5)
    oracle = AdversaryOracle(cls, 1 / 6)
    ans = oracle.qstat(FourierMass(SubsetPattern.containing(5, 2)), 1 / 3)
    assert oracle.state.live_count == 16
    # raw values 0 and 1/2 tie 16 to 16; the leftmost cell [0, 1/3) wins
    assert ans == pytest.approx(1 / 6)
    assert all((s >> 1) & 1 == 0 for s in oracle.state.live)


def test_illegal_tolerance_rejected():
    oracle = AdversaryOracle(ConceptClassTable.parities(3), 1 / 12)
    with pytest.raises(ToleranceError):
        oracle.qstat(character_observable(3, 1), 0.1)


@pytest.mark.parametrize("seed", range(5))
def test_retention_and_legality_random_queries(seed):
    rng = np.random.default_rng(seed)
    tau = 1 / 12
    fns = tuple(random_function(rng, 5) for _ in range(60))
    cls = ConceptClassTable(fns)
    oracle = AdversaryOracle(cls, tau)
    tables = cls.tables.astype(float)
    for _ in range(6):
        v = int(rng.integers(32))
        M = character_observable(5, v)
        live = oracle.state.live.copy()
        ans = oracle.qstat(M, 2 * tau)
        kept = oracle.state.live
        assert len(kept) >= math.ceil(len(live) / 12)
        values = tables[kept] @ (M.phi[np.arange(32), 0]) / 32
        assert np.all(np.abs(values - ans) <= tau + 1e-12)


def test_game_examples():
    cls = ConceptClassTable.parities(8)
    full = run_lower_bound_game(learn_parity, cls, tau=1 / 12)
    assert full.queries == 8 and full.surviving_count == 1 and full.worst_error == 0
    idle = run_lower_bound_game(lambda o: Hypothesis(o.n), cls, tau=1 / 12)
    assert idle.queries == 0 and idle.surviving_count == 256
    assert idle.worst_error == 0.5


@pytest.mark.parametrize("n", [6, 8, 10])
def test_truncated_learners_leave_ambiguity(n):
    tau = 1 / 12
    bound = n / math.log2(1 / (2 * tau))
    cls = ConceptClassTable.parities(n)
    for q in range(0, math.ceil(bound)):
        rep = run_lower_bound_game(lambda o: learn_parity(o, queries=q), cls, tau=tau)
        assert rep.queries == q < rep.lower_bound_queries
        assert rep.surviving_count >= 2
        assert rep.worst_error >= 0.5 - 2.0 ** -(n + 1)


def test_transcript_csv():
    rep = run_lower_bound_game(lambda o: learn_parity(o, queries=2), ConceptClassTable.parities(4), tau=1 / 12)
    lines = rep.transcript_csv().strip().splitlines()
    assert lines[0] == "query,tau_query,answer,live_before,live_after,max_deviation"
    assert len(lines) == 3
    assert rep.to_json()["class_size"] == 16


def test_class_json_round_trip():
    cls = ConceptClassTable.parities(3)
    back = ConceptClassTable.from_json(cls.to_json())
    assert all(a == b for a, b in zip(back.functions, cls.functions))
    assert back.labels == cls.labels
