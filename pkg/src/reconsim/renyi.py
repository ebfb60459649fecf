"""Brute-force order-2 (collision) entropy of an eavesdropper's posterior
over error patterns on small instances.

Quantifies what announced parities leak, what covering them with a
pre-shared pad hides, and what the structure of an interactive transcript
(its skeleton) still gives away even when every parity value is covered.

Pattern encoding: integer bit i (1 << i) set means an error at position i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .bitcore import ConfigurationError, RngSeed
from .protocols import (
    CASCADE,
    ProtocolParams,
    TranscriptSkeleton,
    _reconcile,
)

PARITY_MODE_CAP = 20   # 2^n posterior enumeration
SKELETON_MODE_CAP = 12  # each candidate pattern replays the protocol


class TranscriptContradiction(ValueError):
    """Constraints eliminated every error pattern (inconsistent transcript)."""


@dataclass(frozen=True)
class ParityConstraint:
    """Announced parity over an index set; value None means pad-covered."""

    indices: tuple[int, ...]
    value: Optional[int]

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if not idx:
            raise ConfigurationError("parity constraint needs a non-empty index set")
        object.__setattr__(self, "indices", idx)
        if self.value is not None and self.value not in (0, 1):
            raise ConfigurationError("parity value must be 0, 1 or None (covered)")

    @classmethod
    def parse(cls, text: str) -> "ParityConstraint":
        """Parse 'i,j,...=v' with v in {0, 1, ?}; '?' means covered."""
        try:
            left, right = text.split("=")
            indices = tuple(int(tok) for tok in left.split(","))
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse constraint {text!r}") from exc
        right = right.strip()
        value = None if right == "?" else int(right)
        return cls(indices=indices, value=value)

    def covered(self) -> "ParityConstraint":
        return ParityConstraint(self.indices, None)


@dataclass(frozen=True)
class Posterior:
    """Distribution over all 2^n error patterns as a dense weight vector."""

    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (1 << self.n,):
            raise ValueError("weights must have length 2^n")
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)

    def check_normalized(self, tol: float = 1e-9):
        total = float(self.weights.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"posterior is not normalized (sum={total!r})")

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)

    def pattern_text(self, pattern: int) -> str:
        return "".join("1" if pattern >> i & 1 else "0" for i in range(self.n))

    def rows(self) -> Iterable[tuple[str, float]]:
        for pat in self.support():
            yield self.pattern_text(int(pat)), float(self.weights[pat])


def _popcount(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.uint32)
    v = v - ((v >> 1) & np.uint32(0x55555555))
    v = (v & np.uint32(0x33333333)) + ((v >> 2) & np.uint32(0x33333333))
    v = (v + (v >> 4)) & np.uint32(0x0F0F0F0F)
    return ((v * np.uint32(0x01010101)) >> 24).astype(np.int64)


def prior_posterior(n: int, epsilon_ch: float) -> Posterior:
    """BSC prior: weight(e) proportional to eps^|e| (1-eps)^(n-|e|)."""
    if not (0.0 < epsilon_ch <= 0.5):
        raise ConfigurationError("epsilon_ch must be in (0, 1/2]")
    if n > PARITY_MODE_CAP:
        raise ConfigurationError(
            f"n={n} above the enumeration cap {PARITY_MODE_CAP}"
        )
    k = _popcount(np.arange(1 << n, dtype=np.uint32))
    w = np.power(epsilon_ch, k) * np.power(1.0 - epsilon_ch, n - k)
    return Posterior(n, w / w.sum())


def renyi2(post: Posterior) -> float:
    """Order-2 collision entropy -log2(sum w^2) in bits."""
    post.check_normalized()
    return float(-np.log2(np.square(post.weights).sum()))


def renyi_reduction(prior: Posterior, post: Posterior) -> float:
    """Signed entropy drop; can be negative for specific outcomes."""
    return renyi2(prior) - renyi2(post)


def posterior_from_parities(
    n: int,
    epsilon_ch: float,
    constraints: Sequence[ParityConstraint],
) -> Posterior:
    """Condition the BSC prior on announced error parities.

    Uncovered constraints filter patterns to those matching the announced
    value; covered constraints are independent of the pattern and change
    nothing.
    """
    prior = prior_posterior(n, epsilon_ch)
    w = prior.weights.copy()
    patterns = np.arange(1 << n, dtype=np.uint32)
    for c in constraints:
        for i in c.indices:
            if not (0 <= i < n):
                raise ConfigurationError(f"constraint index {i} out of range")
        if c.value is None:
            continue
        mask = np.uint32(sum(1 << i for i in c.indices))
        par = _popcount(patterns & mask) & 1
        w[par != c.value] = 0.0
    total = w.sum()
    if total == 0.0:
        raise TranscriptContradiction("constraints eliminated every pattern")
    return Posterior(n, w / total)


def replay_skeleton_signature(
    n: int,
    pattern: int,
    params: ProtocolParams,
    permutations,
) -> tuple:
    """Skeleton signature of the protocol run on one error pattern."""
    errors = [i for i in range(n) if pattern >> i & 1]
    _, _, _, _, messages = _reconcile(
        n,
        errors,
        params.block_schedule,
        cascade=(params.protocol_kind == CASCADE),
        rng=None,
        permutations=permutations,
        record=True,
        alice_bits=np.zeros(n, dtype=np.uint8),
    )
    return tuple(m.structural_key() for m in messages)


def protocol_permutations(n: int, passes: int, seed: RngSeed) -> list:
    """The permutations a seeded session draws: identity, then uniform."""
    rng = seed.generator(RngSeed.STREAM_PROTOCOL)
    return [None] + [rng.permutation(n) for _ in range(passes - 1)]


def posterior_from_skeleton(
    n: int,
    epsilon_ch: float,
    params: ProtocolParams,
    skeleton: TranscriptSkeleton,
    seed: RngSeed,
) -> Posterior:
    """Posterior over error patterns given only the transcript skeleton.

    Replays the protocol on every possible pattern with the same
    permutations (fixed by the seed) and keeps those whose run produces a
    structurally identical skeleton, weighted by the BSC prior.
    """
    if n > SKELETON_MODE_CAP:
        raise ConfigurationError(
            f"n={n} above the replay enumeration cap {SKELETON_MODE_CAP}"
        )
    if params.channel.n != n:
        raise ConfigurationError("params.channel.n must equal n")
    perms = protocol_permutations(n, params.passes, seed)
    target = skeleton.signature()
    prior = prior_posterior(n, epsilon_ch)
    w = prior.weights.copy()
    for pattern in range(1 << n):
        if replay_skeleton_signature(n, pattern, params, perms) != target:
            w[pattern] = 0.0
    total = w.sum()
    if total == 0.0:
        raise RuntimeError(
            "no pattern reproduces the skeleton; the true pattern must survive"
        )
    return Posterior(n, w / total)
