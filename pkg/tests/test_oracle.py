import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsqlearn.concepts import Distribution, ParityConcept, random_concept
from qsqlearn.fourier import BooleanFunction, DimensionError, SubsetPattern
from qsqlearn.oracle import (
    DenseHermitian,
    Diagonal,
    Exact,
    ExampleSpec,
    FourierMass,
    GridAdversary,
    ObservableError,
    QstatOracle,
    Sampling,
    ToleranceError,
    UnsupportedQuery,
    character_observable,
    diagonal_from_phi,
    example_state,
    exact_expectation,
    fourier_mass_dense,
    fourier_mass_observable,
    grid_round,
    label_observable,
    observable_from_json,
)
from qsqlearn.simulation import random_projector

from conftest import random_function


def noisy_density(spec):
    """E_b |psi_b><psi_b| from the pairwise label statistics of independent flips."""
    n, eta = spec.n, spec.eta
    dim = 1 << (n + 1)
    p = spec.D.probs
    bits = spec.label_bits
    # q[x, a] = Pr[realized label bit of x equals a]
    q = np.zeros((1 << n, 2))
    q[np.arange(1 << n), bits] = 1 - eta
    q[np.arange(1 << n), 1 - bits] = eta
    rho = np.zeros((dim, dim))
    for x in range(1 << n):
        for y in range(1 << n):
            amp = math.sqrt(p[x] * p[y])
            for a in range(2):
                for b in range(2):
                    if x == y:
                        w = q[x, a] if a == b else 0.0
                    else:
                        w = q[x, a] * q[y, b]
                    rho[2 * x + a, 2 * y + b] = amp * w
    return rho


def enumerated_noisy_expectation(spec, M):
    """Average over every flip vector; only feasible for n <= 3."""
    n, eta = spec.n, spec.eta
    mat = M.to_dense()
    total = 0.0
    for flips in itertools.product([0, 1], repeat=1 << n):
        flips = np.array(flips)
        weight = np.prod(np.where(flips == 1, eta, 1 - eta))
        psi = example_state(spec, spec.label_bits ^ flips)
        total += weight * np.real(psi @ mat @ psi)
    return total


def test_character_observable_gives_coefficient(maj3):
    spec = ExampleSpec(maj3, Distribution.uniform(3))
    for v in range(8):
        assert exact_expectation(spec, character_observable(3, v)) == maj3.spectrum[v]


def test_fourier_mass_all_free_is_half():
    rng = np.random.default_rng(0)
    f = random_function(rng, 5)
    spec = ExampleSpec(f, Distribution.uniform(5))
    assert exact_expectation(spec, fourier_mass_observable(SubsetPattern.all_free(5))) == pytest.approx(0.5, abs=1e-12)
    # the post-selected branch of the dense construction carries squared norm 1/2
    psi = example_state(spec)
    dense = fourier_mass_dense(SubsetPattern.all_free(5))
    assert float(psi @ dense @ psi) == pytest.approx(0.5, abs=1e-12)


def test_constant_diagonal_is_one():
    rng = np.random.default_rng(1)
    ones = Diagonal(4, np.ones((16, 2)))
    for eta in (0.0, 0.2):
        spec = ExampleSpec(random_function(rng, 4), Distribution.random(4, rng), eta)
        assert exact_expectation(spec, ones) == pytest.approx(1.0, abs=1e-12)


def test_influence_pattern_on_parity():
    spec = ExampleSpec(ParityConcept(6, 0b100101), Distribution.uniform(6))
    assert exact_expectation(spec, FourierMass(SubsetPattern.containing(6, 3))) == 0.5
    assert exact_expectation(spec, FourierMass(SubsetPattern.containing(6, 2))) == 0.0


def test_bucket_pattern_gives_half_bucket_mass():
    rng = np.random.default_rng(2)
    f = random_function(rng, 6)
    coeffs = f.spectrum.coefficients
    fixed, prefix = 0b000111, 0b000101
    want = 0.5 * sum(coeffs[s] ** 2 for s in range(64) if s & fixed == prefix)
    got = exact_expectation(ExampleSpec(f, Distribution.uniform(6)), FourierMass(SubsetPattern.bucket(6, prefix, fixed)))
    assert got == pytest.approx(want, abs=1e-12)


def test_diagonal_from_phi_variants():
    rng = np.random.default_rng(3)
    f = random_function(rng, 4)
    D = Distribution.random(4, rng)
    spec = ExampleSpec(f, D)
    label = diagonal_from_phi(lambda x, b: b, n=4)
    assert exact_expectation(spec, label) == pytest.approx(np.dot(D.probs, f.values), abs=1e-12)
    assert exact_expectation(spec, label_observable(4)) == pytest.approx(np.dot(D.probs, f.values), abs=1e-12)
    assert exact_expectation(spec, diagonal_from_phi(np.ones((16, 2)))) == pytest.approx(1.0)
    with pytest.raises(ObservableError):
        diagonal_from_phi(np.full((16, 2), 1.5))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_structured_fourier_mass_matches_dense(n):
    rng = np.random.default_rng(10 + n)
    for _ in range(5):
        f = random_function(rng, n)
        spec = ExampleSpec(f, Distribution.uniform(n))
        psi = example_state(spec)
        patterns = itertools.product(range(3), repeat=n) if n <= 3 else (
            tuple(rng.integers(0, 3, size=n)) for _ in range(20))
        for choice in patterns:
            ones = sum(1 << i for i, c in enumerate(choice) if c == 1)
            zeros = sum(1 << i for i, c in enumerate(choice) if c == 2)
            M = FourierMass(SubsetPattern(n, ones, zeros))
            dense = float(psi @ M.to_dense() @ psi)
            assert abs(exact_expectation(spec, M) - dense) <= 1e-9


def test_fourier_mass_dense_is_projector():
    mat = fourier_mass_dense(SubsetPattern(3, 0b001, 0b100))
    np.testing.assert_allclose(mat @ mat, mat, atol=1e-12)
    np.testing.assert_allclose(mat, mat.T, atol=1e-12)


def test_fourier_mass_rejects_nonuniform():
    rng = np.random.default_rng(4)
    spec = ExampleSpec(random_function(rng, 3), Distribution.random(3, rng))
    with pytest.raises(UnsupportedQuery):
        exact_expectation(spec, FourierMass(SubsetPattern.all_free(3)))


@pytest.mark.parametrize("eta", [0.0, 0.1, 0.3])
def test_diagonal_mixture_identity(eta):
    rng = np.random.default_rng(5)
    f = random_function(rng, 5)
    D = Distribution.random(5, rng)
    phi = rng.uniform(-1, 1, size=(32, 2))
    M = Diagonal(5, phi)
    neg = BooleanFunction(5, -f.values)
    want = (1 - eta) * exact_expectation(ExampleSpec(f, D), M) + eta * exact_expectation(ExampleSpec(neg, D), M)
    assert exact_expectation(ExampleSpec(f, D, eta), M) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_noisy_expectation_matches_pair_sum(n):
    rng = np.random.default_rng(20 + n)
    for eta in (0.05, 0.2, 0.45):
        f = random_function(rng, n)
        spec = ExampleSpec(f, Distribution.uniform(n), eta)
        rho = noisy_density(spec)
        observables = [random_projector(n, rng, "fourier_mass"), random_projector(n, rng, "diagonal"),
                       random_projector(n, rng, "dense")]
        for M in observables:
            want = float(np.real(np.trace(rho @ M.to_dense())))
            assert abs(exact_expectation(spec, M) - want) <= 1e-9


def test_noisy_expectation_matches_flip_enumeration():
    rng = np.random.default_rng(6)
    f = random_function(rng, 2)
    for eta in (0.1, 0.35):
        spec = ExampleSpec(f, Distribution.uniform(2), eta)
        for kind in ("fourier_mass", "diagonal", "dense"):
            M = random_projector(2, rng, kind)
            assert abs(exact_expectation(spec, M) - enumerated_noisy_expectation(spec, M)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.001, 0.25), st.sampled_from(["fourier_mass", "diagonal"]))
def test_noisy_deviation_within_sqrt_eta(seed, eta, kind):
    rng = np.random.default_rng(seed)
    f = random_function(rng, 6)
    M = random_projector(6, rng, kind)
    noisy = exact_expectation(ExampleSpec(f, Distribution.uniform(6), eta), M)
    clean = exact_expectation(ExampleSpec(f, Distribution.uniform(6)), M)
    assert abs(noisy - clean) <= math.sqrt(eta)


def test_worst_case_dense_observable_exceeds_sqrt_eta():
    # The sign of (rho_eta - rho_0) is a legal norm-1 observable whose bias is the
    # trace distance; at eta = 0.16 it exceeds sqrt(eta). Structured observables
    # and random projectors stay inside the band (see the tests around this one).
    f = BooleanFunction.constant(1)
    eta = 0.16
    noisy = ExampleSpec(f, Distribution.uniform(1), eta)
    clean = noisy.noiseless()
    psi = example_state(clean)
    w, v = np.linalg.eigh(noisy_density(noisy) - np.outer(psi, psi))
    M = DenseHermitian(1, (v * np.sign(w)) @ v.T)
    bias = exact_expectation(noisy, M) - exact_expectation(clean, M)
    assert bias == pytest.approx(np.abs(w).sum(), abs=1e-12)
    assert bias > math.sqrt(eta)


def test_grid_adversary_example():
    assert grid_round(0.13, 0.1) == pytest.approx(0.2)
    oracle = QstatOracle.uniform(ParityConcept(3, 1), GridAdversary(0.1))
    M = Diagonal(3, np.full((8, 2), 0.13))
    assert oracle.qstat(M, 0.1) == pytest.approx(0.2)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(1e-3, 1))
def test_grid_round_is_legal(value, tau):
    assert abs(grid_round(value, tau) - value) <= tau + 1e-12


def test_sampling_model_coverage():
    rng = np.random.default_rng(7)
    misses = 0
    for trial in range(100):
        f = random_function(rng, 4)
        oracle = QstatOracle.uniform(f, Sampling(copies=10_000, seed=trial))
        M = random_projector(4, rng, "fourier_mass")
        alpha = oracle.qstat(M, 0.1)
        misses += abs(alpha - oracle.target(M)) > 0.1
    assert misses <= 1
    assert oracle.model.copies_used == 10_000


def test_contract_audit_over_models():
    rng = np.random.default_rng(8)
    for model in (Exact(), GridAdversary(), GridAdversary(0.05)):
        f = random_function(rng, 5)
        oracle = QstatOracle.uniform(f, model)
        for _ in range(30):
            M = random_projector(5, rng)
            oracle.qstat(M, float(rng.uniform(0.01, 0.5)))
        assert all(r.within_tolerance() for r in oracle.log)
        assert oracle.query_count == 30


def test_qstat_rejections():
    oracle = QstatOracle.uniform(ParityConcept(3, 1))
    with pytest.raises(ToleranceError):
        oracle.qstat(label_observable(3), 0.0)
    with pytest.raises(DimensionError):
        oracle.qstat(label_observable(4), 0.1)
    with pytest.raises(ObservableError):
        DenseHermitian(1, 2 * np.eye(4))
    with pytest.raises(ObservableError):
        DenseHermitian(1, np.triu(np.ones((4, 4))) / 4)
    with pytest.raises(ObservableError):
        oracle.qstat(np.eye(16), 0.1)
    assert oracle.query_count == 0


def test_query_log_csv():
    oracle = QstatOracle.uniform(ParityConcept(3, 5), GridAdversary())
    oracle.qstat(character_observable(3, 5), 0.3)
    rows = oracle.log.to_csv().strip().splitlines()
    assert rows[0] == "query_index,kind,tau,alpha,exact,abs_error"
    assert rows[1].startswith("0,diagonal,0.3,")


def test_observable_json_round_trip():
    rng = np.random.default_rng(9)
    spec = ExampleSpec(random_function(rng, 2), Distribution.uniform(2))
    for kind in ("fourier_mass", "diagonal", "dense"):
        M = random_projector(2, rng, kind)
        back = observable_from_json(json.loads(json.dumps(M.to_json())))
        assert exact_expectation(spec, back) == pytest.approx(exact_expectation(spec, M), abs=1e-12)


def test_dense_cap():
    with pytest.raises(DimensionError):
        DenseHermitian(11, np.eye(2))


def test_noise_rate_range():
    with pytest.raises(ValueError):
        ExampleSpec(ParityConcept(2, 1), Distribution.uniform(2), 0.5)


def test_random_concept_spec_dimension_mismatch():
    with pytest.raises(DimensionError):
        ExampleSpec(random_concept("parity", {"n": 3}, 0), Distribution.uniform(4))
