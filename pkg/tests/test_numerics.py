from fractions import Fraction

import numpy as np
import pytest

from capplan.numerics import Moments
from oracles import two_pass_stats


def exact_variance(samples):
    s = [Fraction(x) for x in samples]
    n = len(s)
    tot = sum(s)
    totsq = sum(x * x for x in s)
    return float((totsq - tot * tot / n) / (n - 1))


def test_matches_two_pass_oracle_at_tiny_cv():
    rng = np.random.default_rng(0)
    for _ in range(100):
        base = rng.uniform(1e5, 1e7)
        cv = rng.uniform(1e-4, 0.5)
        q = base * (1.0 + cv * rng.standard_normal(size=rng.integers(2, 60)))
        mom = Moments()
        for v in q:
            mom.add(float(v))
        mean, var = two_pass_stats(q)
        assert mom.mean() == pytest.approx(mean, rel=1e-12)
        assert mom.variance() == pytest.approx(var, rel=1e-10, abs=1e-30)


def test_matches_exact_fraction_arithmetic():
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = (1e6 * (1.0 + 1e-5 * rng.standard_normal(size=12))).tolist()
        mom = Moments()
        for v in q:
            mom.add(v)
        assert mom.variance() == pytest.approx(exact_variance(q), rel=1e-9, abs=1e-12)


def test_merge_equals_single_stream():
    rng = np.random.default_rng(2)
    q = rng.uniform(10.0, 20.0, size=30)
    whole = Moments()
    for v in q:
        whole.add(float(v))
    left, right = Moments(), Moments()
    for v in q[:17]:
        left.add(float(v))
    for v in q[17:]:
        right.add(float(v))
    left.merge(right)
    assert left.count == whole.count
    assert left.total == whole.total
    assert left.variance() == pytest.approx(whole.variance(), rel=1e-14)


def test_constant_samples_zero_variance():
    mom = Moments()
    for _ in range(5):
        mom.add(7.0)
    assert mom.variance() == 0.0
    assert mom.mean() == 7.0


def test_rejects_non_finite():
    mom = Moments()
    with pytest.raises(ValueError):
        mom.add(float("nan"))
