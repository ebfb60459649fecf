"""Exact log-domain numerics for strongly typical sets.

Membership, the most and least probable typical sequences, their ratio, and
the total probability mass of the typical set.  The window edges are
computed in exact rational arithmetic (a float off-by-one in the edge count
would shift the answers by orders of magnitude); only the final logarithms
are floating point.

Binary sources are parameterized by p = P(0) <= 1/2, so sequences with more
zeros are less probable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .bitcore import BitString, ConfigurationError

LN10 = math.log(10.0)


class EmptyTypicalWindow(ValueError):
    """No integer occurrence count satisfies the typicality constraints."""


class EmptyTypicalWindowWarning(UserWarning):
    pass


def _exact(x) -> Fraction:
    """Numbers arrive as decimals ('0.1', 0.1, Fraction); keep them exact.

    Floats go through their shortest decimal repr, so 0.1 means one tenth.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    raise TypeError(f"cannot interpret {x!r} as an exact probability")


@dataclass(frozen=True)
class SourceDist:
    """Finite-alphabet source; all symbol probabilities strictly positive."""

    probs: Mapping[object, Fraction]

    def __post_init__(self):
        exact = {a: _exact(p) for a, p in self.probs.items()}
        if not exact:
            raise ConfigurationError("empty alphabet")
        for a, p in exact.items():
            if p <= 0:
                raise ConfigurationError(f"P({a!r}) must be > 0")
        if sum(exact.values()) != 1:
            raise ConfigurationError(
                "probabilities must sum to exactly 1; pass exact decimals "
                "(strings or Fractions) if float rounding is the problem"
            )
        object.__setattr__(self, "probs", exact)

    @classmethod
    def binary(cls, p) -> "SourceDist":
        p = _exact(p)
        if not (0 < p <= Fraction(1, 2)):
            raise ConfigurationError(f"binary p must be in (0, 1/2], got {p}")
        return cls({0: p, 1: 1 - p})

    @property
    def p_zero(self) -> Fraction:
        return self.probs[0]

    def require_binary(self) -> tuple[Fraction, Fraction]:
        if set(self.probs) != {0, 1}:
            raise ConfigurationError("operation is defined for binary sources only")
        p = self.probs[0]
        if p > Fraction(1, 2):
            raise ConfigurationError("binary operations assume P(0) <= 1/2")
        return p, self.probs[1]


@dataclass(frozen=True)
class TypicalityParams:
    n: int
    eps_typ: Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        eps = _exact(self.eps_typ)
        if eps <= 0:
            raise ConfigurationError("eps_typ must be > 0")
        object.__setattr__(self, "eps_typ", eps)


@dataclass(frozen=True)
class LogProb:
    """Probability carried as its natural logarithm.

    Survives magnitudes far below float underflow; rendered in base 10.
    """

    ln_value: float

    def __post_init__(self):
        if self.ln_value > 1e-9:
            raise ValueError("log-probability must be <= 0")

    @classmethod
    def from_probability(cls, p: float) -> "LogProb":
        if not (0.0 < p <= 1.0):
            raise ValueError("probability must be in (0, 1]")
        return cls(math.log(p))

    @property
    def log10(self) -> float:
        return self.ln_value / LN10

    def mantissa_exponent(self) -> tuple[float, int]:
        return _mantissa_exponent(self.log10)

    def sci(self, sig: int = 3) -> str:
        return format_log10_sci(self.log10, sig)


def _mantissa_exponent(log10_value: float) -> tuple[float, int]:
    exp = math.floor(log10_value)
    mant = 10.0 ** (log10_value - exp)
    return mant, exp


def format_log10_sci(log10_value: float, sig: int = 3) -> str:
    """Render 10**log10_value as 'm.mmE' scientific text, e.g. 2.52e-14214."""
    mant, exp = _mantissa_exponent(log10_value)
    mant = round(mant, sig - 1)
    if mant >= 10.0:
        mant /= 10.0
        exp += 1
    return f"{mant:.{sig - 1}f}e{exp}"


def logsumexp(values: Sequence[float]) -> float:
    """Stable log(sum(exp(v))) with compensated accumulation."""
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    m = max(vals)
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def _symbol_counts(x, alphabet) -> dict:
    if isinstance(x, BitString):
        ones = x.weight()
        counts = {0: len(x) - ones, 1: ones}
    else:
        counts = {}
        for sym in x:
            counts[sym] = counts.get(sym, 0) + 1
    for sym in counts:
        if sym not in alphabet:
            raise ConfigurationError(f"symbol {sym!r} not in the source alphabet")
    return counts


def is_strongly_typical(x, dist: SourceDist, tp: TypicalityParams) -> bool:
    """True iff every symbol frequency is within (1 +- eps) of its probability."""
    n = tp.n
    if len(x) != n:
        raise ConfigurationError(f"sequence length {len(x)} != n={n}")
    counts = _symbol_counts(x, dist.probs)
    eps = tp.eps_typ
    for a, pa in dist.probs.items():
        na = counts.get(a, 0)
        if not ((1 - eps) * pa * n <= na <= (1 + eps) * pa * n):
            return False
    return True


def zero_count_window(dist: SourceDist, tp: TypicalityParams) -> tuple[int, int]:
    """Inclusive range of zero-counts N0 that makes a binary sequence typical.

    Inner rounding (ceil on the lower edge, floor on the upper) so every
    included count strictly satisfies the definition, intersected over both
    symbols' constraints.
    """
    p, q = dist.require_binary()
    n, eps = tp.n, tp.eps_typ
    lo = max(
        math.ceil(n * p * (1 - eps)),
        n - math.floor(n * q * (1 + eps)),
        0,
    )
    hi = min(
        math.floor(n * p * (1 + eps)),
        n - math.ceil(n * q * (1 - eps)),
        n,
    )
    return lo, hi


def extreme_typical_logprobs(dist: SourceDist, tp: TypicalityParams) -> tuple[LogProb, LogProb]:
    """(log P_min, log P_max) over sequences in the typical set.

    With p <= 1/2, probability decreases with the number of zeros, so the
    extremes sit at the edges of the zero-count window.
    """
    p, q = dist.require_binary()
    lo, hi = zero_count_window(dist, tp)
    if lo > hi:
        raise EmptyTypicalWindow(
            f"no integer zero-count in the typical window for n={tp.n}, "
            f"p={p}, eps={tp.eps_typ}"
        )
    lnp = math.log(float(p))
    lnq = math.log(float(q))
    n = tp.n

    def ln_seq_prob(n0: int) -> float:
        return n0 * lnp + (n - n0) * lnq

    return LogProb(ln_seq_prob(hi)), LogProb(ln_seq_prob(lo))


def typical_ratio_log(dist: SourceDist, tp: TypicalityParams) -> float:
    """Natural log of P_max/P_min by the closed form 2*n*p*eps*log((1-p)/p).

    Agrees with the window extremes up to the integer rounding of the edges;
    grows linearly in n for fixed (p, eps).
    """
    p, q = dist.require_binary()
    return float(2 * tp.n * p * tp.eps_typ) * math.log(float(q / p))


def typical_mass(dist: SourceDist, tp: TypicalityParams) -> float:
    """Probability that a length-n sequence lands in the typical set.

    Exact binomial sum over the zero-count window, accumulated in the log
    domain.  An empty window yields 0.0 with a warning.
    """
    p, q = dist.require_binary()
    lo, hi = zero_count_window(dist, tp)
    if lo > hi:
        warnings.warn(
            "typicality window is empty; mass is 0", EmptyTypicalWindowWarning
        )
        return 0.0
    n = tp.n
    lnp = math.log(float(p))
    lnq = math.log(float(q))
    lg_n1 = math.lgamma(n + 1)
    terms = [
        lg_n1
        - math.lgamma(k + 1)
        - math.lgamma(n - k + 1)
        + k * lnp
        + (n - k) * lnq
        for k in range(lo, hi + 1)
    ]
    return min(1.0, math.exp(logsumexp(terms)))
