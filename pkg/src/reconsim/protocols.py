"""Two-party reconciliation engines with exact transcript accounting.

Implements the parity-bisection primitive, the cascading multi-pass protocol
(corrections in late passes reopen blocks of earlier passes), and the
non-cascading baseline that runs the same pass structure without memory.

Counting conventions, fixed here and used everywhere:

* Alice announces every block parity of a pass as one batch (one round trip,
  one payload bit per block).
* A bisection announces one bit per level actually descended (Alice sends the
  first-half parity; Bob infers the other half).  For a block of size s this
  is at most ceil(log2 s) bits, and equals it when s is a power of two.
* Round trips: within a single pass, the odd blocks found at the parity
  announcement are bisected in parallel, advancing one level per round trip.
  In the cascading protocol the corrections then reopen blocks of earlier
  passes; that correction backlog is worked off sequentially, one bisection
  level per round trip for the single active block.
* Only Alice's parity bits count as announced; Bob's replies carry no
  countable payload.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bitcore import (
    BitString,
    ChannelConfig,
    ConfigurationError,
    Permutation,
    RngSeed,
)

CASCADE = "cascade"
BBBSS = "bbbss"

# First-pass block size is chosen so a block carries ~0.73 expected errors;
# doubling then halves the expected per-block error count each pass.
BLOCK_RATE = 0.73


def default_block_schedule(epsilon_ch: float, passes: int, n: int) -> list[int]:
    """Per-pass block sizes: k1 = round(0.73/epsilon), doubling, capped at
    ceil(n/2).

    The cap applies to every pass, not just the first: a pass whose block is
    the whole string can never separate a surviving error pair, so doubling
    is stopped once blocks reach half the string.  k1 rounds to nearest
    (0.73/0.1 = 7.3 gives 7); ceiling it instead shifts the announced-bit
    and failure columns at that error rate visibly off the reference data.
    """
    if not (0.0 < epsilon_ch <= 0.5):
        raise ConfigurationError(f"epsilon_ch must be in (0, 1/2], got {epsilon_ch}")
    if passes < 1:
        raise ConfigurationError("passes must be >= 1")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    cap = max(1, (n + 1) // 2)
    k = min(max(1, math.floor(BLOCK_RATE / epsilon_ch + 0.5)), cap)
    schedule = [k]
    for _ in range(passes - 1):
        k = min(2 * k, cap)
        schedule.append(k)
    return schedule


@dataclass(frozen=True)
class ProtocolParams:
    channel: ChannelConfig
    passes: int = 4
    block_schedule: Optional[tuple[int, ...]] = None
    protocol_kind: str = CASCADE

    def __post_init__(self):
        if self.protocol_kind not in (CASCADE, BBBSS):
            raise ConfigurationError(f"unknown protocol kind {self.protocol_kind!r}")
        if self.passes < 1:
            raise ConfigurationError("passes must be >= 1")
        if self.block_schedule is None:
            sched = tuple(
                default_block_schedule(self.channel.epsilon_ch, self.passes, self.channel.n)
            )
            object.__setattr__(self, "block_schedule", sched)
        else:
            object.__setattr__(self, "block_schedule", tuple(self.block_schedule))
        if len(self.block_schedule) != self.passes:
            raise ConfigurationError("block_schedule length must equal passes")
        for k in self.block_schedule:
            if not (1 <= k <= self.channel.n):
                raise ConfigurationError(f"block size {k} outside [1, n]")


ALICE_TO_BOB = "alice->bob"
BOB_TO_ALICE = "bob->alice"

BLOCK_PARITY = "block_parity"
BISECTION_PARITY = "bisection_parity"
CORRECTION_NOTICE = "correction_notice"


@dataclass(frozen=True)
class Message:
    direction: str
    purpose: str
    pass_index: int                      # 1-based pass during which it was sent
    payload_bits: int
    home_pass: Optional[int] = None      # pass owning the bisected block
    block_index: Optional[int] = None
    level: Optional[int] = None
    batch: Optional[int] = None          # bisections sharing a batch run in parallel
    value: Optional[int] = None          # announced parity bit
    values: Optional[tuple[int, ...]] = None  # batched block parities
    position: Optional[int] = None       # corrected index (notice only)

    def structural_key(self) -> tuple:
        return (
            self.direction,
            self.purpose,
            self.pass_index,
            self.payload_bits,
            self.home_pass,
            self.block_index,
            self.level,
            self.batch,
            self.position,
        )


@dataclass
class Transcript:
    n: int
    passes: int
    block_schedule: tuple[int, ...]
    protocol_kind: str
    messages: list[Message] = field(default_factory=list)
    announced_bits: int = 0
    round_trips: int = 0

    def parity_payload_total(self) -> int:
        return sum(
            m.payload_bits
            for m in self.messages
            if m.purpose in (BLOCK_PARITY, BISECTION_PARITY)
        )


@dataclass(frozen=True)
class TranscriptSkeleton:
    """Transcript with every parity value erased.

    Models what an eavesdropper still observes when all announced parity
    bits are one-time-pad covered: which blocks were bisected, in what
    order, and which positions were corrected.
    """

    n: int
    passes: int
    block_schedule: tuple[int, ...]
    protocol_kind: str
    messages: tuple[Message, ...]

    def signature(self) -> tuple:
        return tuple(m.structural_key() for m in self.messages)


def skeleton_of(transcript: Transcript) -> TranscriptSkeleton:
    stripped = tuple(
        replace(m, value=None, values=None) for m in transcript.messages
    )
    return TranscriptSkeleton(
        n=transcript.n,
        passes=transcript.passes,
        block_schedule=transcript.block_schedule,
        protocol_kind=transcript.protocol_kind,
        messages=stripped,
    )


@dataclass(frozen=True)
class SessionOutcome:
    success: bool
    residual_errors_after_pass: tuple[int, ...]
    transcript: Transcript
    corrected_positions: tuple[int, ...]
    final_bob: Optional[BitString] = None


def binary_locate(
    alice: BitString,
    bob: BitString,
    block: Sequence[int],
    transcript: Optional[Transcript] = None,
    pass_index: int = 1,
    block_index: int = 0,
) -> int:
    """Locate one error in an odd-parity block by halving.

    Alice announces the parity of the first half (ceil of the current size)
    at each level; the mismatched half is kept.  Returns the position of an
    actual error; the caller flips Bob's bit.
    """
    idx = list(block)
    if not idx:
        raise ValueError("binary_locate on empty block")
    a = alice.bits
    b = bob.bits
    if int(np.bitwise_xor.reduce(a[idx])) == int(np.bitwise_xor.reduce(b[idx])):
        raise ValueError("binary_locate requires an odd-parity block")
    level = 0
    while len(idx) > 1:
        half = (len(idx) + 1) // 2
        first = idx[:half]
        pa = int(np.bitwise_xor.reduce(a[first]))
        pb = int(np.bitwise_xor.reduce(b[first]))
        level += 1
        if transcript is not None:
            transcript.announced_bits += 1
            transcript.messages.append(
                Message(
                    direction=ALICE_TO_BOB,
                    purpose=BISECTION_PARITY,
                    pass_index=pass_index,
                    payload_bits=1,
                    home_pass=pass_index,
                    block_index=block_index,
                    level=level,
                    value=pa,
                )
            )
        idx = first if pa != pb else idx[half:]
    return idx[0]


class _PassState:
    """Bookkeeping for one announced pass of one session."""

    __slots__ = ("k", "m", "par", "slots", "slot_of", "err_at", "perm")

    def __init__(self, n, k, alive, slot_arr, perm):
        self.k = k
        self.m = -(-n // k)
        self.par = bytearray(self.m)
        self.perm = perm  # None for identity / sampled-slot passes
        if slot_arr is None:  # identity mapping
            self.slots = list(alive)
            self.slot_of = None
            self.err_at = None
            par = self.par
            for s in self.slots:
                par[s // k] ^= 1
        else:
            pairs = sorted(zip(slot_arr, alive))
            self.slots = [s for s, _ in pairs]
            self.err_at = {s: q for s, q in pairs}
            self.slot_of = {q: s for s, q in pairs}
            par = self.par
            for s in self.slots:
                par[s // k] ^= 1

    def slot(self, q):
        return q if self.slot_of is None else self.slot_of[q]

    def error_at(self, s):
        return s if self.err_at is None else self.err_at[s]

    def remove(self, q):
        s = self.slot(q)
        L = self.slots
        L.pop(bisect_left(L, s))
        b = s // self.k
        self.par[b] ^= 1
        return b

    def block_size(self, b, n):
        return self.k if b < self.m - 1 else n - b * self.k


def _reconcile(
    n: int,
    error_positions: Sequence[int],
    schedule: Sequence[int],
    cascade: bool,
    rng: Optional[np.random.Generator],
    permutations: Optional[Sequence[Optional[np.ndarray]]] = None,
    use_slot_sampling: bool = False,
    record: bool = False,
    alice_bits: Optional[np.ndarray] = None,
):
    """Core engine shared by both protocols.

    The session state is tracked sparsely through the current error
    positions: block parities and bisection parities depend only on where
    the errors sit in each pass, so a uniform permutation can equivalently
    be realized by assigning the live errors uniform distinct slots
    (``use_slot_sampling``), which is what the Monte-Carlo harness uses.
    Explicit ``permutations`` (entry per pass, None = identity) override the
    rng and make replays exactly repeatable.
    """
    if record and use_slot_sampling:
        raise ValueError("recorded transcripts need explicit permutations")

    alive = sorted(int(q) for q in error_positions)
    weight = len(alive)
    announced = 0
    rts = 0
    residuals = []
    corrected: list[int] = []
    messages: Optional[list[Message]] = [] if record else None
    states: list[Optional[_PassState]] = []
    batch_id = 0

    for p_idx, k in enumerate(schedule):
        pass_no = p_idx + 1
        m = -(-n // k)
        announced += m
        rts += 1

        perm = None
        slot_arr = None
        if p_idx > 0 and (weight > 0 or record):
            if permutations is not None:
                perm = permutations[p_idx]
                if perm is not None:
                    inv = np.empty(n, dtype=np.int64)
                    inv[perm] = np.arange(n, dtype=np.int64)
                    slot_arr = [int(inv[q]) for q in alive]
            elif use_slot_sampling:
                if weight > 0:
                    slot_arr = rng.choice(n, size=weight, replace=False).tolist()
            else:
                perm = rng.permutation(n)
                inv = np.empty(n, dtype=np.int64)
                inv[perm] = np.arange(n, dtype=np.int64)
                slot_arr = [int(inv[q]) for q in alive]

        st = _PassState(n, k, alive, slot_arr, perm)
        states.append(st)

        if record:
            if perm is not None:
                a_perm = alice_bits[perm]
            else:
                a_perm = alice_bits
            starts = np.arange(0, n, k)
            vals = tuple(int(v) for v in np.bitwise_xor.reduceat(a_perm, starts))
            messages.append(
                Message(
                    direction=ALICE_TO_BOB,
                    purpose=BLOCK_PARITY,
                    pass_index=pass_no,
                    payload_bits=m,
                    values=vals,
                )
            )

        odd = [b for b in range(st.m) if st.par[b]]

        def bisect_block(home_idx: int, b: int, sent_pass: int, batch: int):
            nonlocal announced
            hst = states[home_idx]
            lo = b * hst.k
            hi = min(n, lo + hst.k)
            L = hst.slots
            path = 0
            while hi - lo > 1:
                mid = lo + ((hi - lo + 1) >> 1)
                cnt = bisect_left(L, mid) - bisect_left(L, lo)
                announced += 1
                path += 1
                if record:
                    if hst.perm is not None:
                        seg = alice_bits[hst.perm[lo:mid]]
                    else:
                        seg = alice_bits[lo:mid]
                    messages.append(
                        Message(
                            direction=ALICE_TO_BOB,
                            purpose=BISECTION_PARITY,
                            pass_index=sent_pass,
                            payload_bits=1,
                            home_pass=home_idx + 1,
                            block_index=b,
                            level=path,
                            batch=batch,
                            value=int(np.bitwise_xor.reduce(seg)),
                        )
                    )
                if cnt & 1:
                    hi = mid
                else:
                    lo = mid
            return path, hst.error_at(lo)

        def correct(q: int, sent_pass: int, backlog=None):
            nonlocal weight
            weight -= 1
            alive.pop(bisect_left(alive, q))
            corrected.append(q)
            if record:
                messages.append(
                    Message(
                        direction=BOB_TO_ALICE,
                        purpose=CORRECTION_NOTICE,
                        pass_index=sent_pass,
                        payload_bits=0,
                        position=q,
                    )
                )
            if cascade:
                for j, stj in enumerate(states):
                    b = stj.remove(q)
                    if backlog is not None and stj.par[b]:
                        backlog.append((j, b))
            else:
                states[p_idx].remove(q)

        # Every odd block found at the announcement is bisected; the blocks
        # are disjoint, so these corrections cannot interfere with each
        # other within the pass.  Without cross-pass memory (and in pass 1,
        # where there is nothing to reopen) the bisections advance in
        # parallel; once corrections start reopening earlier passes, the
        # work is serialized, one bisection level per round trip.
        sequential = cascade and p_idx > 0
        backlog = deque() if sequential else None
        paths = []
        if not sequential:
            batch_id += 1
        for b in odd:
            if sequential:
                batch_id += 1
            path, q = bisect_block(p_idx, b, pass_no, batch_id)
            if sequential:
                rts += path
            correct(q, pass_no, backlog)
            paths.append(path)
        if paths and not sequential:
            rts += max(paths)

        # Corrections re-open blocks of other passes; that backlog is worked
        # off one block at a time, each bisection level costing a round trip.
        if backlog:
            while backlog:
                jj, bb = backlog.popleft()
                if not states[jj].par[bb]:
                    continue  # re-flipped even by a later correction
                batch_id += 1
                path, q = bisect_block(jj, bb, pass_no, batch_id)
                rts += path
                correct(q, pass_no, backlog)

        if not cascade:
            states[p_idx] = st  # current pass only; older states unused
        residuals.append(weight)

    return announced, rts, residuals, corrected, messages


def _prepare_run(alice: BitString, bob: BitString, params: ProtocolParams, kind: str):
    if params.protocol_kind != kind:
        raise ConfigurationError(
            f"params.protocol_kind is {params.protocol_kind!r}, expected {kind!r}"
        )
    n = params.channel.n
    if len(alice) != n or len(bob) != n:
        raise ConfigurationError("alice/bob length must equal channel n")
    diff = np.bitwise_xor(alice.bits, bob.bits)
    return n, np.flatnonzero(diff).tolist()


def _resolve_perms(permutations, n, passes):
    if permutations is None:
        return None
    resolved: list[Optional[np.ndarray]] = []
    for p in permutations:
        if p is None:
            resolved.append(None)
        elif isinstance(p, Permutation):
            resolved.append(p.mapping)
        else:
            resolved.append(Permutation(p).mapping)
    if len(resolved) != passes:
        raise ConfigurationError("need one permutation entry per pass")
    return resolved


def _run(alice, bob, params, seed, permutations, kind, record=True):
    n, errors = _prepare_run(alice, bob, params, kind)
    perms = _resolve_perms(permutations, n, params.passes)
    rng = None
    if perms is None:
        if isinstance(seed, RngSeed):
            rng = seed.generator(RngSeed.STREAM_PROTOCOL)
        else:
            rng = seed
    announced, rts, residuals, corrected, messages = _reconcile(
        n,
        errors,
        params.block_schedule,
        cascade=(kind == CASCADE),
        rng=rng,
        permutations=perms,
        record=record,
        alice_bits=alice.bits if record else None,
    )
    transcript = Transcript(
        n=n,
        passes=params.passes,
        block_schedule=params.block_schedule,
        protocol_kind=kind,
        messages=messages or [],
        announced_bits=announced,
        round_trips=rts,
    )
    final_bob = bob
    for q in corrected:
        final_bob = final_bob.with_flipped(q)
    return SessionOutcome(
        success=(residuals[-1] == 0),
        residual_errors_after_pass=tuple(residuals),
        transcript=transcript,
        corrected_positions=tuple(corrected),
        final_bob=final_bob,
    )


def run_cascade(
    alice: BitString,
    bob: BitString,
    params: ProtocolParams,
    seed: RngSeed | np.random.Generator,
    permutations: Optional[Sequence] = None,
    record: bool = True,
) -> SessionOutcome:
    """Run the cascading protocol.

    Pass 1 uses the identity permutation; later passes draw fresh uniform
    permutations.  Every block parity is announced; odd blocks are bisected.
    From pass 2 on, each correction flips the parity of the containing block
    in every announced pass, and the smallest currently-odd block anywhere
    is bisected next until none remains.
    """
    return _run(alice, bob, params, seed, permutations, CASCADE, record)


def run_bbbss(
    alice: BitString,
    bob: BitString,
    params: ProtocolParams,
    seed: RngSeed | np.random.Generator,
    permutations: Optional[Sequence] = None,
    record: bool = True,
) -> SessionOutcome:
    """Run the non-cascading baseline: same pass structure, no memory.

    Odd blocks found within a pass are all bisected in parallel; corrections
    never reopen earlier passes.
    """
    return _run(alice, bob, params, seed, permutations, BBBSS, record)


def count_round_trips(transcript: Transcript) -> int:
    """Re-derive the round-trip total from the message sequence.

    One round trip per pass of batched block parities, plus, for every batch
    of simultaneously active bisections, the deepest path in the batch (a
    sequentially worked block is a singleton batch, so each of its levels
    costs one round trip).
    """
    rt = sum(1 for m in transcript.messages if m.purpose == BLOCK_PARITY)
    batches: dict[int, dict[tuple, int]] = {}
    for m in transcript.messages:
        if m.purpose != BISECTION_PARITY:
            continue
        per_block = batches.setdefault(m.batch, {})
        key = (m.home_pass, m.block_index)
        per_block[key] = per_block.get(key, 0) + 1
    for per_block in batches.values():
        rt += max(per_block.values())
    return rt
