"""Named random streams derived from one global seed.

Each stochastic site asks for its stream by name, so adding a new site
never shifts the draws of an existing one.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def seed_sequence(seed: int, name: str, *index: int) -> np.random.SeedSequence:
    if seed is None:
        raise ValueError("stochastic runs need an explicit seed")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_key(name), *map(int, index)))


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for site ``name``; extra integers (e.g. a trial index) select substreams."""
    return np.random.default_rng(seed_sequence(seed, name, *index))


def trial_seed(seed: int, name: str, trial: int) -> int:
    """A plain integer seed for APIs that spawn their own streams."""
    return int(seed_sequence(seed, name, trial).generate_state(1, np.uint64)[0])


__all__ = ["seed_sequence", "stream", "stream_key", "trial_seed"]
