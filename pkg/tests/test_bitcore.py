import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reconsim.bitcore import (
    BitString,
    ChannelConfig,
    ConfigurationError,
    Permutation,
    RngSeed,
    parity,
    random_permutation,
    sample_error_pattern,
)


class TestBitString:
    def test_xor_self_is_zero(self):
        x = BitString([1, 0, 1, 1, 0])
        assert (x ^ x) == BitString.zeros(5)

    def test_immutable(self):
        x = BitString([1, 0, 1])
        with pytest.raises(ValueError):
            x.bits[0] = 0

    def test_flip_round_trip(self):
        x = BitString.zeros(4)
        y = x.with_flipped(2)
        assert y.weight() == 1 and y[2] == 1
        assert y.with_flipped(2) == x

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            BitString([0, 2, 1])

    def test_text_round_trip(self):
        assert BitString.from_text("0110").to_text() == "0110"


class TestChannelConfig:
    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.6, 1.0])
    def test_rejects_bad_epsilon(self, eps):
        with pytest.raises(ConfigurationError):
            ChannelConfig(epsilon_ch=eps, n=10)

    def test_rejects_bad_n(self):
        with pytest.raises(ConfigurationError):
            ChannelConfig(epsilon_ch=0.1, n=0)

    def test_half_allowed(self):
        ChannelConfig(epsilon_ch=0.5, n=2)


class TestSampleErrorPattern:
    def test_deterministic_for_seed(self):
        cfg = ChannelConfig(epsilon_ch=0.5, n=4)
        seed = RngSeed(99, 3)
        a = sample_error_pattern(cfg, seed)
        b = sample_error_pattern(cfg, seed)
        assert a == b

    def test_distinct_trials_differ(self):
        cfg = ChannelConfig(epsilon_ch=0.5, n=64)
        a = sample_error_pattern(cfg, RngSeed(99, 0))
        b = sample_error_pattern(cfg, RngSeed(99, 1))
        assert a != b

    def test_fraction_of_ones_large_n(self):
        # Binomial tail: at n=1e6 the observed rate is within 0.0015 of 0.1
        # with probability > 0.999; a fixed seed makes the check exact.
        cfg = ChannelConfig(epsilon_ch=0.1, n=10**6)
        pattern = sample_error_pattern(cfg, RngSeed(7, 0))
        rate = pattern.weight() / cfg.n
        assert 0.0985 <= rate <= 0.1015

    def test_mean_weight_over_many_seeds(self):
        # mean of Binomial(1000, 0.01) is 10; SE over 1e5 trials ~ 0.01
        cfg = ChannelConfig(epsilon_ch=0.01, n=1000)
        total = 0
        trials = 10**5
        for t in range(trials):
            rng = RngSeed(11, t).generator(RngSeed.STREAM_CHANNEL)
            total += int((rng.random(cfg.n) < cfg.epsilon_ch).sum())
        assert abs(total / trials - 10.0) < 0.1

    def test_weight_within_4_standard_errors(self):
        cfg = ChannelConfig(epsilon_ch=0.2, n=5000)
        trials = 2000
        weights = [
            sample_error_pattern(cfg, RngSeed(3, t)).weight() for t in range(trials)
        ]
        se = math.sqrt(cfg.n * 0.2 * 0.8 / trials)
        assert abs(np.mean(weights) - 1000.0) < 4 * se


class TestParity:
    def test_all_zero(self):
        assert parity(BitString.zeros(8), [0, 3, 7]) == 0

    def test_single_one_inside(self):
        x = BitString.zeros(8).with_flipped(3)
        assert parity(x, [1, 3, 5]) == 1
        assert parity(x, [0, 1, 2]) == 0

    def test_hand_example(self):
        assert parity(BitString([1, 0, 1, 1]), [0, 1, 2, 3]) == 1

    def test_out_of_range_is_bug(self):
        with pytest.raises(IndexError):
            parity(BitString.zeros(4), [0, 4])

    @given(st.data())
    @settings(max_examples=50)
    def test_linearity(self, data):
        n = data.draw(st.integers(2, 32))
        bits = st.lists(st.integers(0, 1), min_size=n, max_size=n)
        x = BitString(data.draw(bits))
        y = BitString(data.draw(bits))
        idx = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
        assert parity(x ^ y, idx) == parity(x, idx) ^ parity(y, idx)


class TestPermutation:
    def test_identity_for_n1(self):
        assert random_permutation(1, RngSeed(0, 0)) == Permutation.identity(1)

    def test_deterministic(self):
        assert random_permutation(20, RngSeed(5, 2)) == random_permutation(
            20, RngSeed(5, 2)
        )

    def test_rejects_n0(self):
        with pytest.raises(ConfigurationError):
            random_permutation(0, RngSeed(0, 0))

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Permutation([0, 0, 2])

    def test_uniform_over_s3(self):
        # 6e4 samples; each of the 6 permutations within 0.01 of 1/6
        counts = {}
        samples = 60000
        for t in range(samples):
            p = tuple(random_permutation(3, RngSeed(17, t)).mapping)
            counts[p] = counts.get(p, 0) + 1
        assert len(counts) == 6
        for c in counts.values():
            assert abs(c / samples - 1 / 6) < 0.01

    @given(st.integers(1, 64), st.integers(0, 2**32))
    @settings(max_examples=40)
    def test_inverse_composes_to_identity(self, n, seed):
        p = random_permutation(n, RngSeed(seed, 0))
        q = p.inverse()
        assert np.array_equal(p.mapping[q.mapping], np.arange(n))
        x = BitString((np.arange(n) % 2).astype(np.uint8))
        assert q.apply(p.apply(x)) == x

    def test_apply_semantics(self):
        # slot s of the permuted sequence holds original index mapping[s]
        p = Permutation([2, 0, 1])
        x = BitString([1, 0, 0])
        assert p.apply(x) == BitString([0, 1, 0])
        assert p.slot_of(0) == 1


class TestRngSeed:
    def test_streams_are_independent(self):
        s = RngSeed(1, 0)
        a = s.generator(0).random(4)
        b = s.generator(1).random(4)
        assert not np.allclose(a, b)

    def test_negative_trial_rejected(self):
        with pytest.raises(ConfigurationError):
            RngSeed(1, -1)
