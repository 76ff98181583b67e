import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsqlearn.concepts import (
    Distribution,
    DnfConcept,
    Hypothesis,
    JuntaConcept,
    ParityConcept,
    agreement_rate,
    concept_from_json,
    concept_to_json,
    error_rate,
    evaluate,
    hypothesis_predict,
    random_concept,
    to_boolean_function,
)
from qsqlearn.fourier import BooleanFunction, DimensionError


def test_evaluate_examples():
    assert all(evaluate(ParityConcept(4, 0), x) == 1 for x in range(16))
    dnf = DnfConcept(3, (((1, False),),))
    assert evaluate(dnf, 0b001) == -1 and evaluate(dnf, 0b110) == 1
    junta = JuntaConcept(3, (2,), (1, -1))
    assert evaluate(junta, 0) == 1 and evaluate(junta, 0b010) == -1


def test_negated_literal_requires_zero():
    dnf = DnfConcept(2, (((2, True),),))
    assert [evaluate(dnf, x) for x in range(4)] == [-1, -1, 1, 1]


def test_to_boolean_function_examples():
    spec = to_boolean_function(ParityConcept(5, 19)).spectrum.coefficients
    assert spec[19] == 1 and np.count_nonzero(spec) == 1
    assert to_boolean_function(DnfConcept(4, ())) == BooleanFunction.constant(4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["parity", "junta", "dnf"]))
def test_table_agrees_with_direct_evaluation(seed, kind):
    c = random_concept(kind, {"n": 6, "k": 3, "s": 3}, seed)
    table = to_boolean_function(c).values
    direct = np.array([evaluate(c, x) for x in range(64)])
    np.testing.assert_array_equal(table, direct)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_junta_ignores_irrelevant_coordinates(seed):
    c = random_concept("junta", {"n": 8, "k": 3}, seed)
    values = c.function.values
    x = np.arange(256)
    for i in range(1, 9):
        if i not in c.relevant:
            np.testing.assert_array_equal(values, values[x ^ (1 << (i - 1))])


def test_hypothesis_predict_examples():
    s = 0b1011
    h = Hypothesis(4, ((s, 1.0),))
    chi = BooleanFunction.parity(4, s)
    assert all(hypothesis_predict(h, x) == chi(x) for x in range(16))
    assert all(hypothesis_predict(Hypothesis(4), x) == 1 for x in range(16))
    mixed = Hypothesis(4, ((0, 0.2), (s, -0.9)))
    x = next(x for x in range(16) if chi(x) == 1)
    assert hypothesis_predict(mixed, x) == -1


def test_hypothesis_table_matches_predict():
    rng = np.random.default_rng(5)
    entries = {int(s): float(a) for s, a in zip(rng.choice(32, 6, replace=False), rng.normal(size=6))}
    h = Hypothesis.from_mapping(5, entries)
    assert [h.predict(x) for x in range(32)] == h.table().tolist()


def test_hypothesis_rejects_duplicate_sets():
    with pytest.raises(ValueError):
        Hypothesis(3, ((1, 0.5), (1, 0.2)))


def test_error_rate_examples(maj3):
    assert error_rate(Hypothesis(3, ((5, 1.0),)), ParityConcept(3, 5)) == 0.0
    assert error_rate(-maj3, maj3) == 1.0
    dictator = Hypothesis(3, ((1, maj3.spectrum[1]),))
    assert error_rate(dictator, maj3) == 0.25


def test_error_rate_with_distribution(maj3):
    rng = np.random.default_rng(0)
    D = Distribution.random(3, rng)
    h = Hypothesis(3, ((1, 1.0),))
    wrong = h.table() != maj3.values
    assert error_rate(h, maj3, D) == pytest.approx(D.probs[wrong].sum(), abs=0)
    assert error_rate(h, maj3, D) + agreement_rate(h, maj3, D) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DimensionError):
        error_rate(h, ParityConcept(4, 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_error_rate_ignores_entry_order(seed):
    rng = np.random.default_rng(seed)
    sets = rng.choice(64, 5, replace=False)
    entries = [(int(s), float(a)) for s, a in zip(sets, rng.normal(size=5))]
    c = random_concept("dnf", {"n": 6, "s": 2}, rng)
    a = error_rate(Hypothesis(6, tuple(entries)), c)
    b = error_rate(Hypothesis(6, tuple(reversed(entries))), c)
    assert a == b
    assert a + agreement_rate(Hypothesis(6, tuple(entries)), c) == 1.0


def test_random_concept_examples():
    assert to_boolean_function(random_concept("parity", {"n": 4}, 9)) == to_boolean_function(
        random_concept("parity", {"n": 4}, 9)
    )
    assert 0 <= random_concept("parity", {"n": 4}, 1).s < 16
    constant = to_boolean_function(random_concept("junta", {"n": 5, "k": 0}, 3))
    assert len(set(constant.values.tolist())) == 1
    with pytest.raises(ValueError):
        random_concept("junta", {"n": 3, "k": 4}, 0)
    with pytest.raises(ValueError):
        random_concept("circuit", {"n": 3}, 0)


def test_dnf_terms_are_nonempty():
    c = random_concept("dnf", {"n": 5, "s": 20, "literal_prob": 0.05}, 11)
    assert all(len(t) >= 1 for t in c.terms)


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution(2, [0.5, 0.5, 0.5, -0.5])
    with pytest.raises(ValueError):
        Distribution(2, [0.3, 0.3, 0.3, 0.3])
    with pytest.raises(DimensionError):
        Distribution(2, [1.0, 0.0])
    assert Distribution.uniform(3).is_uniform


def test_json_round_trips():
    concepts = [
        ParityConcept(5, 7),
        JuntaConcept(6, (2, 5), (1, -1, -1, 1)),
        DnfConcept(4, (((1, False), (3, True)), ((2, False),))),
        BooleanFunction(2, [1, -1, -1, 1]),
    ]
    for c in concepts:
        back = concept_from_json(json.loads(json.dumps(concept_to_json(c))))
        assert to_boolean_function(back) == to_boolean_function(c)
    assert concept_to_json(concepts[2])["terms"][0][1] == {"var": 3, "neg": True}
    h = Hypothesis(4, ((3, 0.25), (0, -1.0)))
    assert Hypothesis.from_json(json.loads(json.dumps(h.to_json()))) == h
    assert Distribution.uniform(3).to_json() == "uniform"
    D = Distribution(1, [0.25, 0.75])
    np.testing.assert_array_equal(Distribution.from_json(D.to_json()).probs, D.probs)
