"""Emulating Qstat answers by measuring fresh (possibly noisy) example copies."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from qsqlearn.fourier import BooleanFunction, SubsetPattern, walsh_hadamard_rows
from qsqlearn import kernels
from qsqlearn.oracle import (
    DenseHermitian,
    Diagonal,
    ExampleSpec,
    FourierMass,
    Observable,
    ToleranceError,
    UnsupportedQuery,
    example_state,
    exact_expectation,
)

_CHUNK = 1 << 20  # max floats held per batch of per-copy noisy states


def hoeffding_copies(tau: float, delta_share: float) -> int:
    """ceil(2 ln(2/delta) / tau^2): two-sided Hoeffding count for outcomes in [-1, 1]."""
    if not tau > 0:
        raise ToleranceError(f"tolerance must be positive, got {tau}")
    if not 0 < delta_share < 1:
        raise ValueError(f"delta_share must lie in (0, 1), got {delta_share}")
    return math.ceil(2 * math.log(2 / delta_share) / tau ** 2)


def noisy_copies(tau: float, eta: float, delta_share: float) -> int:
    """Copies needed so the noisy average lands within tau - sqrt(eta) of its mean."""
    margin = tau - math.sqrt(eta)
    if not margin > 0:
        raise ToleranceError(
            f"noise rate {eta} too large for tolerance {tau}: need sqrt(eta) < tau"
        )
    return hoeffding_copies(margin, delta_share)


def noisy_example_draw(spec: ExampleSpec, rng: np.random.Generator) -> BooleanFunction:
    """The labelling c(x) xor b_x realized by one noisy example copy."""
    f = spec.function
    if spec.eta == 0:
        return f
    flips = rng.random(1 << spec.n) < spec.eta
    return BooleanFunction(spec.n, np.where(flips, -f.values, f.values))


class MeasurementSampler:
    """Measures one fresh copy of the example state per outcome."""

    def __init__(self, spec: ExampleSpec, rng=None):
        self.spec = spec
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    def sample(self, M: Observable) -> float:
        return float(self.sample_many(M, 1)[0])

    def sample_many(self, M: Observable, size: int) -> np.ndarray:
        """``size`` independent outcomes, one copy each."""
        if M.n != self.spec.n:
            raise UnsupportedQuery("observable and example dimensions differ")
        if isinstance(M, Diagonal):
            return self._diagonal(M, size)
        if isinstance(M, FourierMass):
            return self._projector(M, size)
        if isinstance(M, DenseHermitian):
            return self._dense(M, size)
        raise UnsupportedQuery(f"cannot measure {type(M).__name__}")

    def _diagonal(self, M, size):
        spec, rng = self.spec, self.rng
        x = spec.D.sample(rng, size)
        bits = spec.label_bits[x]
        if spec.eta > 0:
            bits = bits ^ (rng.random(size) < spec.eta)
        return M.phi[x, bits]

    def _projector(self, M, size):
        spec, rng = self.spec, self.rng
        if not spec.D.is_uniform:
            raise UnsupportedQuery("Fourier-mass observables require the uniform distribution")
        if spec.eta == 0:
            p = exact_expectation(spec, M)
            return (rng.random(size) < p).astype(np.float64)
        # fresh label noise per copy: outcome ~ Bernoulli(mass of the realized labelling)
        out = np.empty(size)
        step = max(1, _CHUNK >> spec.n)
        f = spec.function.values
        for start in range(0, size, step):
            m = min(step, size - start)
            flips = rng.random((m, 1 << spec.n)) < spec.eta
            tables = np.where(flips, -f, f)
            spectra = walsh_hadamard_rows(tables)
            p = 0.5 * kernels.pattern_mass_rows(spectra, M.pattern.ones, M.pattern.free)
            out[start:start + m] = rng.random(m) < p
        return out

    def _dense(self, M, size):
        spec, rng = self.spec, self.rng
        evals, evecs = M.eigh
        if spec.eta == 0:
            probs = np.abs(evecs.conj().T @ example_state(spec)) ** 2
            probs /= probs.sum()
            return evals[rng.choice(len(evals), size=size, p=probs)]
        out = np.empty(size)
        dim = evecs.shape[0]
        step = max(1, _CHUNK // dim)
        for start in range(0, size, step):
            m = min(step, size - start)
            flips = rng.random((m, 1 << spec.n)) < spec.eta
            bits = spec.label_bits[None, :] ^ flips
            psis = np.zeros((m, dim))
            x = np.arange(1 << spec.n)
            psis[np.arange(m)[:, None], 2 * x[None, :] + bits] = np.sqrt(spec.D.probs)
            probs = np.abs(psis @ evecs.conj()) ** 2
            cdf = np.cumsum(probs, axis=1)
            u = rng.random(m) * cdf[:, -1]
            idx = np.minimum((cdf < u[:, None]).sum(axis=1), dim - 1)
            out[start:start + m] = evals[idx]
        return out


def sample_measurement(sampler: MeasurementSampler, M: Observable) -> float:
    return sampler.sample(M)


def _sampler_for(spec, sampler, rng):
    if sampler is not None:
        return sampler
    return MeasurementSampler(spec, rng)


def simulate_qstat(spec: ExampleSpec, M: Observable, tau: float, delta_share: float,
                   sampler: Optional[MeasurementSampler] = None, rng=None) -> tuple[float, int]:
    """Mean of T = hoeffding_copies(tau, delta_share) outcomes; returns (alpha, T)."""
    copies = hoeffding_copies(tau, delta_share)
    outcomes = _sampler_for(spec, sampler, rng).sample_many(M, copies)
    return float(outcomes.mean()), copies


def simulate_noisy_qstat(spec: ExampleSpec, M: Observable, tau: float, delta_share: float,
                         sampler: Optional[MeasurementSampler] = None, rng=None) -> tuple[float, int]:
    """Noisy-copy average aimed at the noiseless expectation; returns (alpha, T)."""
    if not 0 <= spec.eta < 0.5:
        raise ValueError("noise rate must lie in [0, 1/2)")
    copies = noisy_copies(tau, spec.eta, delta_share)
    outcomes = _sampler_for(spec, sampler, rng).sample_many(M, copies)
    return float(outcomes.mean()), copies


def random_projector(n: int, rng: np.random.Generator, kind: Optional[str] = None) -> Observable:
    """Random projector observable: a Fourier-mass pattern, a 0/1 diagonal, or (n <= 5) a dense one."""
    kinds = ["fourier_mass", "diagonal"] + (["dense"] if n <= 5 else [])
    kind = kind or kinds[int(rng.integers(len(kinds)))]
    if kind == "fourier_mass":
        choice = rng.integers(0, 3, size=n)  # 0 free, 1 must-be-one, 2 must-be-zero
        ones = sum(1 << i for i in range(n) if choice[i] == 1)
        zeros = sum(1 << i for i in range(n) if choice[i] == 2)
        return FourierMass(SubsetPattern(n, ones, zeros))
    if kind == "diagonal":
        phi = (rng.random((1 << n, 2)) < rng.random()).astype(np.float64)
        return Diagonal(n, phi, "random_indicator")
    if kind == "dense":
        dim = 1 << (n + 1)
        rank = int(rng.integers(1, dim))
        g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        q, _ = np.linalg.qr(g)
        proj = q @ q.conj().T
        return DenseHermitian(n, (proj + proj.conj().T) / 2, f"random_projector(rank={rank})")
    raise ValueError(f"unknown projector kind {kind!r}")


def coverage_trials(n: int, tau: float, delta_share: float, trials: int, seed,
                    eta: float = 0.0) -> list[dict]:
    """Seeded coverage experiment over random concepts and projector observables.

    One row per trial: (trial, copies_used, alpha, exact, abs_error, within_tau),
    with ``exact`` the noiseless expectation.
    """
    from qsqlearn.concepts import Distribution

    root = np.random.SeedSequence(seed)
    rows = []
    for trial, child in enumerate(root.spawn(trials)):
        rng = np.random.default_rng(child)
        f = BooleanFunction(n, rng.choice(np.array([-1, 1], dtype=np.int8), size=1 << n))
        spec = ExampleSpec(f, Distribution.uniform(n), eta)
        M = random_projector(n, rng)
        sampler = MeasurementSampler(spec, rng)
        if eta > 0:
            alpha, used = simulate_noisy_qstat(spec, M, tau, delta_share, sampler)
        else:
            alpha, used = simulate_qstat(spec, M, tau, delta_share, sampler)
        exact = exact_expectation(spec.noiseless(), M)
        err = abs(alpha - exact)
        rows.append({
            "trial": trial,
            "copies_used": used,
            "alpha": alpha,
            "exact": exact,
            "abs_error": err,
            "within_tau": bool(err <= tau),
            "kind": M.kind,
        })
    return rows


__all__ = [
    "MeasurementSampler",
    "coverage_trials",
    "hoeffding_copies",
    "noisy_copies",
    "noisy_example_draw",
    "random_projector",
    "sample_measurement",
    "simulate_noisy_qstat",
    "simulate_qstat",
]
