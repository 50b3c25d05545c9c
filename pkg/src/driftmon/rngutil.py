"""Deterministic seed derivation.

Sub-seeds are derived from (root seed, tag ints) with splitmix64, a fixed,
documented 64-bit mixing function, so that e.g. day k of a simulated stream
gets the same batch no matter how many total days are simulated. The derived
seed feeds numpy's PCG64 for actual distribution sampling.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + _GAMMA) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def derive_seed(root: int, *parts: int) -> int:
    """Fold (root, *parts) into a single 64-bit seed via splitmix64."""
    state = root & _MASK
    _, seed = splitmix64(state)
    for p in parts:
        state = (state ^ ((p & _MASK) * _GAMMA)) & _MASK
        state, seed = splitmix64(state)
    return seed


def derived_rng(root: int, *parts: int) -> np.random.Generator:
    """A PCG64 generator keyed by the derived seed."""
    return np.random.default_rng(derive_seed(root, *parts))
