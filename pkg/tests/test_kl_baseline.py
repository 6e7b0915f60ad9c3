import numpy as np
import pytest

from awhmm import DegenerateDensityError, Gaussian, GmmHmm, TransitionMatrix, kl_hmm
from awhmm.kl_baseline import SequenceCache, model_digest

from conftest import random_hmm


def one_state(mean, var):
    return GmmHmm(TransitionMatrix([[1.0]]), (Gaussian([mean], [[var]]),))


class TestSymmetryAndSelf:
    def test_exact_symmetry(self, rng):
        # the digest-keyed streams make the symmetrized value exactly
        # order-invariant, not just statistically
        for _ in range(5):
            h1 = random_hmm(rng, 2, 2)
            h2 = random_hmm(rng, 3, 2)
            assert kl_hmm(h1, h2, seed=3) == kl_hmm(h2, h1, seed=3)

    def test_self_distance_exact_zero(self, well_separated_pair):
        h1, _ = well_separated_pair
        assert kl_hmm(h1, h1) == 0.0

    def test_nonnegative(self, rng):
        for _ in range(10):
            h1 = random_hmm(rng, 2, 2)
            h2 = random_hmm(rng, 2, 2)
            assert kl_hmm(h1, h2) >= 0.0


class TestAgainstClosedForm:
    def test_one_state_unit_shift(self):
        # a 1-state HMM is an i.i.d. Gaussian stream; symmetrized KL rate
        # between N(0,1) and N(1,1) is 0.5 per observation
        h1 = one_state(0.0, 1.0)
        h2 = one_state(1.0, 1.0)
        vals = [kl_hmm(h1, h2, seq_len=200, n_seq=50, seed=s) for s in range(5)]
        assert np.mean(vals) == pytest.approx(0.5, abs=0.05)

    def test_one_state_variance_gap(self):
        # KL(N(0,1)||N(0,4)) = 0.5(1/4 - 1 + ln 4), symmetrized with
        # KL(N(0,4)||N(0,1)) = 0.5(4 - 1 - ln 4) -> mean 0.5625
        h1 = one_state(0.0, 1.0)
        h2 = one_state(0.0, 4.0)
        vals = [kl_hmm(h1, h2, seq_len=200, n_seq=50, seed=s) for s in range(5)]
        assert np.mean(vals) == pytest.approx(0.5625, abs=0.06)


class TestVariance:
    def test_spread_shrinks_with_more_sequences(self, well_separated_pair):
        h1, h2 = well_separated_pair
        def spread(n_seq):
            vals = [kl_hmm(h1, h2, seq_len=50, n_seq=n_seq, seed=s)
                    for s in range(12)]
            return np.std(vals)
        assert spread(40) < spread(5)


class TestDegeneracy:
    def test_rejects_singular_covariance(self, well_separated_pair):
        _, h2 = well_separated_pair
        flat = np.diag([1.0, 0.0])
        trans = TransitionMatrix([[0.8, 0.2], [0.2, 0.8]])
        h1 = GmmHmm(trans, (Gaussian([2, 0], flat), Gaussian([5, 0], flat)))
        with pytest.raises(DegenerateDensityError):
            kl_hmm(h1, h2)
        with pytest.raises(DegenerateDensityError):
            kl_hmm(h2, h1)


class TestSequenceCache:
    def test_digest_distinguishes_models(self, well_separated_pair):
        h1, h2 = well_separated_pair
        assert model_digest(h1) != model_digest(h2)
        assert model_digest(h1) == model_digest(h1)

    def test_cache_reuses_simulations(self, well_separated_pair):
        h1, h2 = well_separated_pair
        cache = SequenceCache(seq_len=50, n_seq=5, seed=0)
        kl_hmm(h1, h2, cache=cache)
        seqs_before, _ = cache.get(h1)
        kl_hmm(h1, h2, cache=cache)
        seqs_after, _ = cache.get(h1)
        assert seqs_before is seqs_after

    def test_cached_matches_uncached(self, well_separated_pair):
        h1, h2 = well_separated_pair
        cache = SequenceCache(seq_len=100, n_seq=20, seed=0)
        assert kl_hmm(h1, h2, cache=cache) == kl_hmm(h1, h2, seed=0)
