"""Bit-vector primitives, the binary symmetric channel, and permutations.

Everything here is immutable after construction and safe to share across
threads; the operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bad epsilon, length, trials...)."""


def _as_bit_array(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return arr


class BitString:
    """Fixed-length sequence of bits.

    Thin immutable wrapper over a uint8 numpy array.  XOR, indexing and
    Hamming weight are the only operations the protocols need.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = _as_bit_array(bits).copy()
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitString":
        if n < 1:
            raise ConfigurationError("length must be >= 1")
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        return cls([int(c) for c in text])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, i: int) -> int:
        return int(self._bits[i])

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self) != len(other):
            raise ValueError("length mismatch")
        return BitString(np.bitwise_xor(self._bits, other._bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __repr__(self) -> str:
        body = "".join(str(b) for b in self._bits[:64])
        if len(self) > 64:
            body += "..."
        return f"BitString({body})"

    def to_text(self) -> str:
        return "".join(str(b) for b in self._bits)

    def weight(self) -> int:
        return int(self._bits.sum())

    def with_flipped(self, i: int) -> "BitString":
        arr = self._bits.copy()
        arr[i] ^= 1
        return BitString(arr)

    def error_positions(self) -> list[int]:
        return np.flatnonzero(self._bits).tolist()


@dataclass(frozen=True)
class ChannelConfig:
    """Binary symmetric channel: each bit flips independently with epsilon_ch."""

    epsilon_ch: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.epsilon_ch <= 0.5):
            raise ConfigurationError(
                f"epsilon_ch must be in (0, 1/2], got {self.epsilon_ch}"
            )
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class RngSeed:
    """Deterministic per-trial randomness: (master_seed, trial_index).

    Identical pairs yield identical random streams, and distinct trials get
    statistically independent streams, so trials can run in any order or in
    parallel without changing results.

    Streams are numbered so that different consumers inside one trial never
    share a generator: 0 = channel noise, 1 = protocol permutations,
    2 = key material.
    """

    master_seed: int
    trial_index: int = 0

    STREAM_CHANNEL = 0
    STREAM_PROTOCOL = 1
    STREAM_KEY = 2

    def __post_init__(self):
        if self.trial_index < 0:
            raise ConfigurationError("trial_index must be >= 0")

    def generator(self, stream: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.trial_index, stream)
        )
        return np.random.Generator(np.random.PCG64(seq))


class Permutation:
    """Bijection on {0, ..., n-1}.

    ``mapping[slot]`` is the original index occupying position ``slot`` of
    the permuted sequence.
    """

    __slots__ = ("_mapping", "_inverse")

    def __init__(self, mapping: Sequence[int] | np.ndarray):
        arr = np.asarray(mapping, dtype=np.int64).copy()
        n = arr.size
        if n < 1:
            raise ConfigurationError("permutation length must be >= 1")
        seen = np.zeros(n, dtype=bool)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("permutation entries out of range")
        seen[arr] = True
        if not seen.all():
            raise ValueError("mapping is not a bijection")
        inv = np.empty(n, dtype=np.int64)
        inv[arr] = np.arange(n, dtype=np.int64)
        arr.setflags(write=False)
        inv.setflags(write=False)
        self._mapping = arr
        self._inverse = inv

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def mapping(self) -> np.ndarray:
        return self._mapping

    @property
    def inverse_mapping(self) -> np.ndarray:
        return self._inverse

    def __len__(self) -> int:
        return self._mapping.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(
            self._mapping, other._mapping
        )

    def apply(self, x: BitString) -> BitString:
        """Permuted sequence: slot s receives bit mapping[s]."""
        return BitString(x.bits[self._mapping])

    def inverse(self) -> "Permutation":
        return Permutation(self._inverse)

    def slot_of(self, index: int) -> int:
        return int(self._inverse[index])


def sample_error_pattern(cfg: ChannelConfig, seed: RngSeed | np.random.Generator) -> BitString:
    """Draw a BSC error pattern: each bit is 1 with probability epsilon_ch."""
    rng = seed.generator(RngSeed.STREAM_CHANNEL) if isinstance(seed, RngSeed) else seed
    pattern = (rng.random(cfg.n) < cfg.epsilon_ch).astype(np.uint8)
    return BitString(pattern)


def parity(x: BitString | np.ndarray, indices: Iterable[int]) -> int:
    """XOR of the selected bits.  Out-of-range indices are a programming bug."""
    bits = x.bits if isinstance(x, BitString) else x
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size == 0:
        return 0
    if idx.min() < 0 or idx.max() >= bits.size:
        raise IndexError("parity index out of range")
    return int(np.bitwise_xor.reduce(bits[idx]))


def random_permutation(n: int, seed: RngSeed | np.random.Generator) -> Permutation:
    """Uniformly distributed bijection, deterministic given the seed."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rng = seed.generator(RngSeed.STREAM_PROTOCOL) if isinstance(seed, RngSeed) else seed
    return Permutation(rng.permutation(n))
