import math

import numpy as np
import pytest

from mixbandit.noise import (IidGaussianNoise, MarkovTwoStateNoise,
                             MixingProfile, SuperposedChainsNoise, ZeroNoise,
                             algebraic_envelope_constant, certified_profile,
                             conditional_mean_oracle, dyadic_superposed_process,
                             dyadic_weights, geometric_profile, make_noise,
                             algebraic_profile, next_noise, no_mixing, phi,
                             tabulated_profile, write_noise_csv)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestProfiles:
    def test_geometric_formula(self):
        assert phi(geometric_profile(1.0, 5.0), 5) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_none_profile(self):
        assert phi(no_mixing(), 17) == 0.0

    def test_algebraic_formula(self):
        assert phi(algebraic_profile(2.0, 3.0), 2) == pytest.approx(0.25, rel=1e-12)

    def test_tabulated_extends_last_value(self):
        prof = tabulated_profile([0.5, 0.25, 0.125])
        assert prof.phi(2) == 0.25
        assert prof.phi(100) == 0.125

    def test_tabulated_rejects_increasing(self):
        with pytest.raises(ValueError):
            tabulated_profile([0.1, 0.2])

    def test_profile_nonincreasing_over_lags(self):
        for prof in (geometric_profile(2.0, 3.0), algebraic_profile(1.5, 2.0),
                     tabulated_profile([1.0, 0.5, 0.5, 0.1])):
            vals = [prof.phi(d) for d in range(1, 50)]
            assert all(a >= b >= 0.0 for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_lag(self):
        with pytest.raises(ValueError):
            no_mixing().phi(0)


class TestMarkovChain:
    def test_frozen_chain_is_constant(self):
        proc = MarkovTwoStateNoise(1.0, 0.0, rng(1))
        first = next_noise(proc)
        assert all(next_noise(proc) == first for _ in range(100))

    def test_half_flip_is_iid_signs(self):
        proc = MarkovTwoStateNoise(1.0, 0.5, rng(2))
        path = proc.sample_path(200_000)
        assert set(np.unique(path)) == {-1.0, 1.0}
        lag1 = np.mean(path[:-1] * path[1:])
        assert abs(lag1) < 3.0 / math.sqrt(len(path))

    @pytest.mark.parametrize("d", [1, 2, 4, 8])
    def test_lag_autocovariance_matches_chain_power(self, d):
        q = 0.25
        proc = MarkovTwoStateNoise(1.0, q, rng(40 + d))
        n = 1_000_000
        path = proc.sample_path(n + d)
        prods = path[:-d] * path[d:]
        batches = prods[: (n // 1000) * 1000].reshape(1000, -1).mean(axis=1)
        se = batches.std(ddof=1) / math.sqrt(len(batches))
        assert abs(prods.mean() - (1 - 2 * q) ** d) <= 3 * se

    def test_sample_path_matches_stepwise(self):
        a, q, seed = 0.8, 0.3, 9
        p1 = MarkovTwoStateNoise(a, q, rng(seed))
        p2 = MarkovTwoStateNoise(a, q, rng(seed))
        path = p1.sample_path(500)
        steps = np.array([p2.step() for _ in range(500)])
        assert np.array_equal(path, steps)

    def test_bounded_and_centred(self):
        proc = MarkovTwoStateNoise(0.7, 0.2, rng(12))
        path = proc.sample_path(1_000_000)
        assert np.all(np.abs(path) <= 0.7 + 1e-15)
        assert abs(path.mean()) <= 3.0 * path.std() / 1e3


class TestCertifiedProfile:
    def test_markov_quarter_flip(self):
        proc = MarkovTwoStateNoise(1.0, 0.25, rng(3))
        prof = certified_profile(proc)
        assert prof.phi(2) == pytest.approx(0.25, rel=1e-12)
        assert prof.envelope[0] == "geometric"
        assert prof.envelope[2] == pytest.approx(-1.0 / math.log(0.5), rel=1e-12)

    def test_iid_boundary_gives_none(self):
        proc = MarkovTwoStateNoise(1.0, 0.5, rng(4))
        assert certified_profile(proc).kind == "none"

    def test_superposed_weighted_sum(self):
        proc = SuperposedChainsNoise([0.5, 0.25, 0.25], [0.25, 0.125, 0.0625], rng(5))
        expected = 0.5 * 0.5**4 + 0.25 * 0.75**4 + 0.25 * 0.875**4
        assert certified_profile(proc).phi(4) == pytest.approx(expected, rel=1e-12)

    def test_rejects_frozen_component(self):
        with pytest.raises(ValueError):
            certified_profile(MarkovTwoStateNoise(1.0, 0.0, rng(6)))
        with pytest.raises(ValueError):
            certified_profile(SuperposedChainsNoise([0.5, 0.5], [0.0, 0.25], rng(7)))

    def test_gaussian_gives_none(self):
        assert certified_profile(IidGaussianNoise(rng(8))).kind == "none"


class TestConditionalMeanOracle:
    def test_markov_sign_and_decay(self):
        proc = MarkovTwoStateNoise(1.0, 0.25, rng(10))
        proc.states[0] = 1.0
        assert conditional_mean_oracle(proc, 2) == pytest.approx(0.25, rel=1e-12)
        proc.states[0] = -1.0
        assert conditional_mean_oracle(proc, 2) == pytest.approx(-0.25, rel=1e-12)

    def test_vanishes_at_large_lag(self):
        proc = MarkovTwoStateNoise(1.0, 0.25, rng(11))
        assert abs(conditional_mean_oracle(proc, 200)) < 1e-30

    def test_gaussian_returns_zero(self):
        assert conditional_mean_oracle(IidGaussianNoise(rng(12)), 3) == 0.0

    def test_dominated_by_certified_envelope_exactly(self):
        # all reachable hidden states of a three-chain superposition
        w, q = [0.5, 0.25, 0.25], [0.25, 0.125, 0.0625]
        proc = SuperposedChainsNoise(w, q, rng(13))
        prof = certified_profile(proc)
        for signs in np.ndindex(2, 2, 2):
            proc.states = np.where(np.array(signs) == 0, -1.0, 1.0)
            for d in range(1, 30):
                assert abs(proc.conditional_mean(d)) <= prof.phi(d)

    def test_markov_states_saturate_envelope(self):
        proc = MarkovTwoStateNoise(0.9, 0.2, rng(14))
        prof = certified_profile(proc)
        for s in (-1.0, 1.0):
            proc.states[0] = s
            for d in (1, 3, 9):
                assert abs(proc.conditional_mean(d)) == pytest.approx(prof.phi(d), rel=1e-12)


class TestStationarity:
    def test_marginals_agree_across_time(self):
        # two-sample KS between the marginal at t=5 and t=1005 over
        # independent chains; 1% critical value for n = m = 1e5
        n = 100_000
        w, q = dyadic_weights(1.0, 3)
        gen = rng(15)
        states = np.where(gen.random((n, 3)) < 0.5, 1.0, -1.0)
        snap5 = None
        for t in range(1, 1006):
            flips = gen.random((n, 3)) < q
            states *= np.where(flips, -1.0, 1.0)
            if t == 5:
                snap5 = states @ w
        snap1005 = states @ w
        xs = np.sort(np.unique(np.concatenate([snap5, snap1005])))
        cdf1 = np.searchsorted(np.sort(snap5), xs, side="right") / n
        cdf2 = np.searchsorted(np.sort(snap1005), xs, side="right") / n
        ks = np.max(np.abs(cdf1 - cdf2))
        crit = 1.6276 * math.sqrt(2.0 / n)
        assert ks < crit


class TestDyadicEnvelope:
    def test_algebraic_envelope_certifies_tabulation(self):
        for r in (1.0, 2.0, 3.0):
            proc = dyadic_superposed_process(r, 8, rng(16))
            prof = certified_profile(proc)
            kind, C, r_out = prof.envelope
            assert kind == "algebraic" and r_out == r
            lags = np.arange(1, 10_001)
            vals = np.array([prof.phi(int(d)) for d in lags])
            assert np.all(vals <= C * lags.astype(float) ** (-r) + 1e-15)

    def test_explicit_constant_is_finite_and_tightish(self):
        w, q = dyadic_weights(2.0, 6)
        C = algebraic_envelope_constant(w, q, 2.0)
        assert 0 < C < 50


class TestFactoryAndExport:
    def test_make_noise_kinds(self):
        assert isinstance(make_noise("zero", {}, rng(0)), ZeroNoise)
        assert isinstance(make_noise("iid_gaussian", {}, rng(0)), IidGaussianNoise)
        assert isinstance(make_noise("markov", {"a": 1, "q": 0.1}, rng(0)),
                          MarkovTwoStateNoise)
        proc = make_noise("superposed", {"w": [0.5, 0.5], "q": [0.25, 0.125]}, rng(0))
        assert isinstance(proc, SuperposedChainsNoise)
        assert isinstance(make_noise("dyadic", {"r": 2.0, "K": 4}, rng(0)),
                          SuperposedChainsNoise)
        with pytest.raises(ValueError):
            make_noise("lorenz", {}, rng(0))

    def test_csv_roundtrip(self, tmp_path):
        eps = MarkovTwoStateNoise(1.0, 0.25, rng(18)).sample_path(50)
        path = tmp_path / "noise.csv"
        write_noise_csv(path, eps)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,epsilon"
        assert len(lines) == 51
        parsed = np.array([float(l.split(",")[1]) for l in lines[1:]])
        assert np.array_equal(parsed, eps)

    def test_gaussian_path_matches_steps(self):
        p1, p2 = IidGaussianNoise(rng(21)), IidGaussianNoise(rng(21))
        assert np.array_equal(p1.sample_path(100),
                              np.array([p2.step() for _ in range(100)]))

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            MixingProfile(kind="geometric", C=0.0, tau=1.0)
        with pytest.raises(ValueError):
            MixingProfile(kind="bogus")
