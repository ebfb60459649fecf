"""Simulator and numerics toolkit for interactive reconciliation protocols
over a binary symmetric channel, with typical-set and collision-entropy
computations."""

from .bitcore import (
    BitString,
    ChannelConfig,
    ConfigurationError,
    Permutation,
    RngSeed,
    parity,
    random_permutation,
    sample_error_pattern,
)
from .montecarlo import (
    AggregateStats,
    ExperimentConfig,
    bs94_bound,
    experiment,
    run_experiment,
)
from .protocols import (
    BBBSS,
    CASCADE,
    Message,
    ProtocolParams,
    SessionOutcome,
    Transcript,
    TranscriptSkeleton,
    binary_locate,
    count_round_trips,
    default_block_schedule,
    run_bbbss,
    run_cascade,
    skeleton_of,
)
from .renyi import (
    ParityConstraint,
    Posterior,
    TranscriptContradiction,
    posterior_from_parities,
    posterior_from_skeleton,
    prior_posterior,
    renyi2,
    renyi_reduction,
)
from .typicality import (
    EmptyTypicalWindow,
    LogProb,
    SourceDist,
    TypicalityParams,
    extreme_typical_logprobs,
    format_log10_sci,
    is_strongly_typical,
    typical_mass,
    typical_ratio_log,
    zero_count_window,
)

__version__ = "0.1.0"
