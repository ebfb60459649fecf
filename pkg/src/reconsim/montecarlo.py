"""Seeded, parallel trial runner reproducing the announced-bit, failure and
round-trip tables at configurable trial counts.

Determinism: every trial derives its random streams from
(master_seed, trial_index), and aggregation sums exact integer per-trial
counters, so results are bit-identical for any execution order, chunking or
worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .bitcore import ChannelConfig, ConfigurationError, RngSeed
from .protocols import CASCADE, ProtocolParams, _reconcile

THREADS_ENV = "RECONSIM_THREADS"

# Leakage upper-bound coefficients c(epsilon), bound = c * n.  Values are
# pinned by the tabulated bounds being exactly linear in n.
_BOUND_COEFF = {
    0.01: 0.093288,
    0.05: 0.331429,
    0.10: 0.570,
    0.15: 0.824,
}


def bs94_bound(n: int, epsilon_ch: float) -> float:
    """Tabulated announced-bit upper bound c(epsilon) * n.

    Only the four tabulated epsilon values are supported; anything else
    raises rather than silently interpolating.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    for eps, coeff in _BOUND_COEFF.items():
        if epsilon_ch == eps:
            return coeff * n
    raise ConfigurationError(
        f"no tabulated bound coefficient for epsilon={epsilon_ch!r}; "
        f"supported: {sorted(_BOUND_COEFF)}"
    )


@dataclass(frozen=True)
class ExperimentConfig:
    params: ProtocolParams
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")


@dataclass(frozen=True)
class AggregateStats:
    mean_announced_bits: float
    se_announced_bits: float
    failure_probability: float
    mean_round_trips: float
    se_round_trips: float
    mean_residual_after_pass: tuple[float, ...]
    trials_run: int


def _run_chunk(args):
    """Run trials [start, start+count) and return exact integer sums."""
    (eps, n, schedule, passes, kind, master_seed, start, count) = args
    cascade = kind == CASCADE
    sum_ann = 0
    sum_ann2 = 0
    sum_rt = 0
    sum_rt2 = 0
    failures = 0
    resid = [0] * passes
    for t in range(start, start + count):
        seed = RngSeed(master_seed, t)
        ch_rng = seed.generator(RngSeed.STREAM_CHANNEL)
        errors = (ch_rng.random(n) < eps).nonzero()[0].tolist()
        proto_rng = seed.generator(RngSeed.STREAM_PROTOCOL)
        announced, rts, residuals, _, _ = _reconcile(
            n,
            errors,
            schedule,
            cascade=cascade,
            rng=proto_rng,
            use_slot_sampling=True,
        )
        sum_ann += announced
        sum_ann2 += announced * announced
        sum_rt += rts
        sum_rt2 += rts * rts
        if residuals[-1] != 0:
            failures += 1
        for i, r in enumerate(residuals):
            resid[i] += r
    return sum_ann, sum_ann2, sum_rt, sum_rt2, failures, tuple(resid), count


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _se(total: int, total_sq: int, t: int) -> float:
    if t < 2:
        return 0.0
    var = (total_sq - total * total / t) / (t - 1)
    return math.sqrt(max(var, 0.0) / t)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> AggregateStats:
    """Run cfg.trials independent sessions and aggregate.

    A failed session (strings still unequal after the last pass) is data,
    not an error.  Results do not depend on `threads`.
    """
    p = cfg.params
    threads = _default_threads() if threads is None else max(1, threads)
    base = (
        p.channel.epsilon_ch,
        p.channel.n,
        tuple(p.block_schedule),
        p.passes,
        p.protocol_kind,
        cfg.master_seed,
    )
    chunk = max(200, -(-cfg.trials // (threads * 8)))
    specs = []
    start = 0
    while start < cfg.trials:
        count = min(chunk, cfg.trials - start)
        specs.append(base + (start, count))
        start += count

    if threads == 1 or len(specs) == 1:
        parts = [_run_chunk(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_run_chunk, specs))

    sum_ann = sum(x[0] for x in parts)
    sum_ann2 = sum(x[1] for x in parts)
    sum_rt = sum(x[2] for x in parts)
    sum_rt2 = sum(x[3] for x in parts)
    failures = sum(x[4] for x in parts)
    resid = [0] * p.passes
    for x in parts:
        for i, r in enumerate(x[5]):
            resid[i] += r
    t = cfg.trials
    return AggregateStats(
        mean_announced_bits=sum_ann / t,
        se_announced_bits=_se(sum_ann, sum_ann2, t),
        failure_probability=failures / t,
        mean_round_trips=sum_rt / t,
        se_round_trips=_se(sum_rt, sum_rt2, t),
        mean_residual_after_pass=tuple(r / t for r in resid),
        trials_run=t,
    )


def experiment(
    protocol: str,
    n: int,
    epsilon: float,
    trials: int,
    master_seed: int,
    passes: int = 4,
) -> ExperimentConfig:
    """Convenience constructor used by the CLI and scripts."""
    params = ProtocolParams(
        channel=ChannelConfig(epsilon_ch=epsilon, n=n),
        passes=passes,
        protocol_kind=protocol,
    )
    return ExperimentConfig(params=params, trials=trials, master_seed=master_seed)
