"""Shared brute-force oracles used to pin expected values independently of
the implementation paths they check."""

import math
from fractions import Fraction

import numpy as np
import pytest


def brute_force_typical_mass(n, p_exact: Fraction, eps_exact: Fraction) -> float:
    """Sum P(x) over all 2^n sequences that satisfy the typicality definition
    checked symbol by symbol.  Independent of any binomial-window logic."""
    p = float(p_exact)
    q = 1.0 - p
    total = 0.0
    for pattern in range(1 << n):
        ones = bin(pattern).count("1")
        zeros = n - ones
        ok = (
            (1 - eps_exact) * p_exact * n <= zeros <= (1 + eps_exact) * p_exact * n
            and (1 - eps_exact) * (1 - p_exact) * n
            <= ones
            <= (1 + eps_exact) * (1 - p_exact) * n
        )
        if ok:
            total += (p ** zeros) * (q ** ones)
    return total


def brute_force_extremes(n, p_exact: Fraction, eps_exact: Fraction):
    """(min, max) natural-log probability over typical sequences, by
    enumerating zero counts and checking the definition directly."""
    p = float(p_exact)
    lnp, lnq = math.log(p), math.log(1.0 - p)
    logs = []
    for zeros in range(n + 1):
        ones = n - zeros
        ok = (
            (1 - eps_exact) * p_exact * n <= zeros <= (1 + eps_exact) * p_exact * n
            and (1 - eps_exact) * (1 - p_exact) * n
            <= ones
            <= (1 + eps_exact) * (1 - p_exact) * n
        )
        if ok:
            logs.append(zeros * lnp + ones * lnq)
    return (min(logs), max(logs)) if logs else (None, None)


def collision_entropy(weights) -> float:
    w = np.asarray(list(weights), dtype=float)
    w = w / w.sum()
    return float(-np.log2(np.square(w).sum()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
