"""Radial laws and the exact Poisson-binomial tail machinery."""

import math

import numpy as np
import pytest
from scipy import special

from gafzeros import (BernoulliProfile, RadialEnsemble, bernoulli_probs,
                      poisson_binomial_tail_log, sample_radii, stream,
                      tail_log_bracket)

GIN = RadialEnsemble.GINIBRE
HYP = RadialEnsemble.HYPERBOLIC_ONE


def brute_poisson_tail(lam, n, terms=800):
    # independent oracle: direct summation of the Poisson mass
    k = np.arange(n, n + terms)
    return float(np.sum(np.exp(k * math.log(lam) - lam - special.gammaln(k + 1))))


def enumerate_tail_log(log_p, log_q, m):
    # exhaustive 2^N enumeration oracle (vectorized over bit masks)
    n = len(log_p)
    masks = np.arange(1 << n, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    counts = bits.sum(axis=1)
    logw = np.where(bits, log_p, log_q).sum(axis=1)
    keep = logw[counts >= m]
    return float(special.logsumexp(keep))


class TestProfiles:
    def test_ginibre_first_probability(self):
        prof = bernoulli_probs(GIN, 1.0)
        assert prof.probs[0] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)

    def test_ginibre_matches_poisson_summation_oracle(self):
        prof = bernoulli_probs(GIN, 1.0, min_terms=50)
        for n in range(1, 51):
            assert prof.probs[n - 1] == pytest.approx(brute_poisson_tail(1.0, n), rel=1e-12)

    def test_hyperbolic_probabilities(self):
        prof = bernoulli_probs(HYP, 0.5)
        assert prof.probs[1] == pytest.approx(0.0625, rel=1e-14)
        assert np.all(np.diff(prof.log_probs) < 0)  # strictly decreasing

    def test_ginibre_monotone_past_r_squared(self):
        prof = bernoulli_probs(GIN, 2.0, min_terms=30)
        start = int(math.ceil(4.0))
        assert np.all(np.diff(prof.log_probs[start:]) < 0)

    def test_neglected_mass_below_eps(self):
        for ens, r in ((GIN, 1.5), (HYP, 0.7)):
            prof = bernoulli_probs(ens, r, eps=1e-6)
            assert prof.neglected_mass < 1e-6
            assert np.all((prof.probs > 0) & (prof.probs < 1))

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            bernoulli_probs(HYP, 1.1)
        with pytest.raises(ValueError):
            bernoulli_probs(GIN, 1.0, eps=0.5)


class TestSampleRadii:
    def test_ginibre_squared_means(self):
        trials, depth = 4000, 12
        rng = stream(71)
        acc = np.zeros(depth)
        for _ in range(trials):
            acc += sample_radii(GIN, rng, depth) ** 2
        mean = acc / trials
        n = np.arange(1, depth + 1)
        # 4 sigma: twelve simultaneous comparisons
        assert np.all(np.abs(mean - n) < 4.0 * np.sqrt(n / trials))

    def test_hyperbolic_cdf_matches_power_law(self):
        trials, r = 20000, 0.6
        rng = stream(72)
        hits = np.zeros(4)
        for _ in range(trials):
            radii = sample_radii(HYP, rng, 4)
            hits += radii < r
        for n in range(1, 5):
            p = r ** (2 * n)
            se = math.sqrt(p * (1 - p) / trials)
            assert abs(hits[n - 1] / trials - p) < 4.0 * se

    def test_count_matches_profile_expectation(self):
        trials, r = 20000, 1.0
        prof = bernoulli_probs(GIN, r, min_terms=20)
        expect = float(prof.probs.sum())
        rng = stream(73)
        total = 0
        for _ in range(trials):
            total += int(np.sum(sample_radii(GIN, rng, prof.size) < r))
        sd = math.sqrt(float(np.sum(prof.probs * (1 - prof.probs))) / trials)
        assert abs(total / trials - expect) < 4.0 * sd


class TestTailDP:
    def test_half_half(self):
        prof = BernoulliProfile(GIN, 1.0, np.log([0.5, 0.5]),
                                np.log([0.5, 0.5]), -np.inf)
        br = poisson_binomial_tail_log(prof, 1)
        assert br.log_lower == pytest.approx(math.log(0.75), abs=1e-12)
        assert br.log_upper == pytest.approx(math.log(0.75), abs=1e-12)

    def test_m_zero(self):
        prof = bernoulli_probs(GIN, 1.0)
        assert poisson_binomial_tail_log(prof, 0) == (0.0, 0.0)

    def test_matches_exhaustive_enumeration(self):
        rng = stream(81)
        for n, m in ((12, 3), (16, 1), (18, 9), (20, 5)):
            p = rng.random(n) * 0.9 + 0.05
            prof = BernoulliProfile(GIN, 1.0, np.log(p), np.log1p(-p), -np.inf)
            got = poisson_binomial_tail_log(prof, m).log_lower
            want = enumerate_tail_log(np.log(p), np.log1p(-p), m)
            assert got == pytest.approx(want, abs=1e-12)

    def test_hyperbolic_product_lower_bound(self):
        br = tail_log_bracket(HYP, 0.5, 3)
        assert br.log_lower >= 12 * math.log(0.5)

    def test_bracket_width(self):
        for ens, r, m in ((GIN, 1.0, 5), (GIN, 2.0, 25), (HYP, 0.7, 12)):
            br = tail_log_bracket(ens, r, m)
            assert br.log_upper - br.log_lower <= 1e-6

    def test_monotone_in_m_and_r(self):
        vals = [tail_log_bracket(GIN, 1.0, m).log_lower for m in range(1, 12)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        vals = [tail_log_bracket(GIN, r, 6).log_lower for r in (0.5, 1.0, 2.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        vals = [tail_log_bracket(HYP, r, 6).log_lower for r in (0.3, 0.5, 0.7)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_matches_monte_carlo(self):
        # MC oracle at modest size; the acceptance suite runs the 1e6 version
        ens, r, m, trials = GIN, 1.0, 3, 200000
        rng = stream(82)
        depth = bernoulli_probs(ens, r, min_terms=m + 8).size
        shapes = np.broadcast_to(np.arange(1.0, depth + 1.0), (trials, depth))
        radii2 = rng.standard_gamma(shapes)
        counts = (radii2 < r * r).sum(axis=1)
        hits = int((counts >= m).sum())
        p_hat = hits / trials
        exact = math.exp(tail_log_bracket(ens, r, m).log_lower)
        se = math.sqrt(exact * (1 - exact) / trials)
        assert abs(p_hat - exact) < 4.0 * se

    def test_deep_tail_stays_finite(self):
        br = tail_log_bracket(GIN, 1.0, 120)
        assert np.isfinite(br.log_lower)
        assert br.log_lower < -1e4
        assert br.log_upper - br.log_lower <= 1e-6


class TestSandwiches:
    def test_ginibre_sandwich_small_grid(self):
        from gafzeros import ginibre_tail_brackets
        for r in (0.5, 1.0, 2.0):
            for m in range(max(2, math.ceil(r * r)), 16):
                dp = tail_log_bracket(GIN, r, m).log_lower
                bk = ginibre_tail_brackets(r, m)
                assert bk.log_lower <= dp <= bk.log_upper

    def test_hyperbolic_sandwich_small_grid(self):
        from gafzeros import _num  # noqa: F401  (lchoose lives in bounds path)
        from gafzeros._num import lchoose
        for r in (0.3, 0.5, 0.7):
            for m in range(1, 16):
                dp = tail_log_bracket(HYP, r, m).log_lower
                lo = m * (m + 1) * math.log(r)
                hi = float(np.logaddexp(lchoose(m * m, m) + m * (m + 1) * math.log(r),
                                        (2 * m * m + 2) * math.log(r) - math.log1p(-r * r)))
                assert lo <= dp <= hi
