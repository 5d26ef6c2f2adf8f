"""Seeded configuration samplers and deterministic seed derivation.

All randomness flows through numpy Generators seeded via split_seed so that
independent pipeline stages get independent, reproducible streams.
"""

from __future__ import annotations

import hashlib
from typing import Sequence, Tuple

import numpy as np

from .blocks import MarkovLaw, ProductLaw


def split_seed(seed: int, label: str) -> int:
    """Derive a child seed from a root seed and a stage label."""
    h = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def rng_for(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(split_seed(seed, label))


def sample_product(shape: Tuple[int, ...], probs: Sequence[float],
                   rng: np.random.Generator) -> np.ndarray:
    """iid window over symbols 1..s with the given marginals."""
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9 or (probs < 0).any():
        raise ValueError("probs must be a distribution")
    flat = rng.choice(len(probs), size=int(np.prod(shape)), p=probs) + 1
    return flat.reshape(shape).astype(np.int64)


def sample_markov(length: int, initial: Sequence[float],
                  transitions: Sequence[Sequence[float]],
                  rng: np.random.Generator) -> np.ndarray:
    """Markov chain window on Z over symbols 1..s."""
    init = np.asarray(initial, dtype=float)
    trans = np.asarray(transitions, dtype=float)
    s = len(init)
    if trans.shape != (s, s):
        raise ValueError("transition matrix shape mismatch")
    if abs(init.sum() - 1.0) > 1e-9 or np.abs(trans.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("rows must be distributions")
    out = np.empty(length, dtype=np.int64)
    out[0] = rng.choice(s, p=init) + 1
    # pre-draw uniforms and walk the cumulative rows
    cum = np.cumsum(trans, axis=1)
    us = rng.random(length - 1)
    for i in range(1, length):
        out[i] = np.searchsorted(cum[out[i - 1] - 1], us[i - 1]) + 1
    return out


def law_of_product(probs: Sequence[float]) -> ProductLaw:
    return ProductLaw(tuple(float(p) for p in probs))


def law_of_markov(initial: Sequence[float],
                  transitions: Sequence[Sequence[float]]) -> MarkovLaw:
    return MarkovLaw(tuple(float(p) for p in initial),
                     tuple(tuple(float(p) for p in row) for row in transitions))
