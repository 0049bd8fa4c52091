import math
import random

import mpmath
import pytest
import scipy.stats

from gedkit.stats import (
    ks_2sample,
    pearson,
    regularized_incomplete_beta,
    t_interval,
)

mpmath.mp.dps = 50


def oracle_ks_statistic(x, y):
    # direct counting over the pooled values
    d = 0.0
    for v in list(x) + list(y):
        cx = sum(1 for u in x if u <= v) / len(x)
        cy = sum(1 for u in y if u <= v) / len(y)
        d = max(d, abs(cx - cy))
    return d


def oracle_ks_pvalue(x, y):
    # same formula, evaluated in 50-digit arithmetic
    d = oracle_ks_statistic(x, y)
    if d == 0:
        return 1.0
    m_e = mpmath.mpf(len(x)) * len(y) / (len(x) + len(y))
    lam = (mpmath.sqrt(m_e) + mpmath.mpf("0.12") + mpmath.mpf("0.11") / mpmath.sqrt(m_e)) * d
    total = mpmath.nsum(
        lambda k: (-1) ** (k - 1) * mpmath.exp(-2 * k**2 * lam**2), [1, mpmath.inf]
    )
    return float(min(1, max(0, 2 * total)))


def oracle_pearson_rho(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x)) * math.sqrt(sum((b - my) ** 2 for b in y))
    return num / den


def oracle_pearson_pvalue(rho, n):
    if abs(rho) >= 1:
        return 0.0
    df = n - 2
    t = abs(rho) * math.sqrt(df / (1 - rho * rho))
    return float(mpmath.betainc(df / 2, mpmath.mpf("0.5"), 0, df / (df + t * t), regularized=True))


class TestKs2Sample:
    def test_identical_samples(self):
        d, p = ks_2sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert d == 0.0 and p == 1.0

    def test_fully_separated(self):
        d, _ = ks_2sample([0.0, 0.0], [1.0, 1.0])
        assert d == 1.0

    def test_statistic_matches_oracle(self):
        rng = random.Random(0)
        for _ in range(100):
            x = [rng.gauss(0, 1) for _ in range(rng.randint(1, 20))]
            y = [rng.gauss(0.3, 1.2) for _ in range(rng.randint(1, 20))]
            d, _ = ks_2sample(x, y)
            assert abs(d - oracle_ks_statistic(x, y)) < 1e-12

    def test_pvalue_matches_series_reference(self):
        rng = random.Random(1)
        for _ in range(40):
            x = [rng.gauss(0, 1) for _ in range(rng.randint(5, 30))]
            y = [rng.gauss(0.5, 1) for _ in range(rng.randint(5, 30))]
            _, p = ks_2sample(x, y)
            assert abs(p - oracle_ks_pvalue(x, y)) < 1e-6

    def test_symmetry(self):
        rng = random.Random(2)
        x = [rng.random() for _ in range(9)]
        y = [rng.random() for _ in range(13)]
        assert ks_2sample(x, y)[0] == ks_2sample(y, x)[0]

    def test_monotone_transform_invariance(self):
        rng = random.Random(3)
        x = [rng.random() for _ in range(10)]
        y = [rng.random() for _ in range(12)]
        d1, _ = ks_2sample(x, y)
        d2, _ = ks_2sample([math.exp(v) for v in x], [math.exp(v) for v in y])
        assert abs(d1 - d2) < 1e-12

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            ks_2sample([], [1.0])


class TestIncompleteBeta:
    def test_matches_mpmath(self):
        rng = random.Random(4)
        for _ in range(60):
            a = rng.uniform(0.5, 20)
            b = rng.uniform(0.5, 20)
            x = rng.random()
            ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
            assert abs(regularized_incomplete_beta(x, a, b) - ref) < 1e-10

    def test_bounds(self):
        assert regularized_incomplete_beta(0.0, 2, 3) == 0.0
        assert regularized_incomplete_beta(1.0, 2, 3) == 1.0


class TestPearson:
    def test_exact_positive_linearity(self):
        x = [1.0, 2.0, 3.0, 4.0]
        rho, p = pearson(x, [2 * v + 1 for v in x])
        assert rho == 1.0 and p == 0.0

    def test_exact_negative(self):
        x = [1.0, 2.0, 3.0]
        rho, _ = pearson(x, [-v for v in x])
        assert rho == -1.0

    def test_rho_matches_oracle(self):
        rng = random.Random(5)
        for _ in range(100):
            n = rng.randint(3, 15)
            x = [rng.gauss(0, 1) for _ in range(n)]
            y = [rng.gauss(0, 1) for _ in range(n)]
            rho, _ = pearson(x, y)
            assert abs(rho - oracle_pearson_rho(x, y)) < 1e-12

    def test_pvalue_matches_continued_fraction_reference(self):
        rng = random.Random(6)
        for _ in range(40):
            n = rng.randint(4, 30)
            x = [rng.gauss(0, 1) for _ in range(n)]
            y = [0.4 * v + rng.gauss(0, 1) for v in x]
            rho, p = pearson(x, y)
            assert abs(p - oracle_pearson_pvalue(rho, n)) < 1e-6

    def test_agrees_with_scipy(self):
        rng = random.Random(7)
        x = [rng.gauss(0, 1) for _ in range(25)]
        y = [0.3 * v + rng.gauss(0, 1) for v in x]
        rho, p = pearson(x, y)
        ref = scipy.stats.pearsonr(x, y)
        assert abs(rho - ref.statistic) < 1e-12
        assert abs(p - ref.pvalue) < 1e-9

    def test_zero_variance_errors(self):
        with pytest.raises(ValueError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_too_short_errors(self):
        with pytest.raises(ValueError):
            pearson([1.0, 2.0], [1.0, 2.0])


class TestTInterval:
    def test_constant_values(self):
        mean, low, high = t_interval([0.8, 0.8, 0.8], 4.3)
        assert abs(mean - 0.8) < 1e-12
        assert abs(low - 0.8) < 1e-12 and abs(high - 0.8) < 1e-12

    def test_hand_case(self):
        mean, low, high = t_interval([0.0, 1.0], 1.0)
        assert abs(mean - 0.5) < 1e-12
        assert abs(low - 0.0) < 1e-12 and abs(high - 1.0) < 1e-12

    def test_symmetric_around_mean(self):
        rng = random.Random(8)
        values = [rng.random() for _ in range(6)]
        mean, low, high = t_interval(values, 2.5)
        assert abs((mean - low) - (high - mean)) < 1e-12

    def test_needs_two_values(self):
        with pytest.raises(ValueError):
            t_interval([0.5], 4.3)
