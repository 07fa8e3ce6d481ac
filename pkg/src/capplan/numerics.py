"""Compensated (double-double) accumulation for streaming cost statistics.

The labeling algorithm streams Sum and SumSq of per-scenario costs and then
evaluates the sample variance as (SumSq - Sum^2/S)/(S-1). In plain doubles
that subtraction cancels catastrophically once the coefficient of variation
is small, which is exactly the regime the algorithm terminates in. Keeping
both accumulators as unevaluated double-double pairs (hi + lo) makes the
subtraction effectively exact; the final result is rounded once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    a_hi = _SPLITTER * a
    a_hi = a_hi - (a_hi - a)
    a_lo = a - a_hi
    b_hi = _SPLITTER * b
    b_hi = b_hi - (b_hi - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


class DoubleDouble:
    """Unevaluated sum hi + lo of two doubles, |lo| <= ulp(hi)/2."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float = 0.0, lo: float = 0.0):
        self.hi = hi
        self.lo = lo

    def copy(self) -> "DoubleDouble":
        return DoubleDouble(self.hi, self.lo)

    def add_float(self, x: float) -> "DoubleDouble":
        s, e = _two_sum(self.hi, x)
        e += self.lo
        self.hi, self.lo = _two_sum(s, e)
        return self

    def add(self, other: "DoubleDouble") -> "DoubleDouble":
        s, e = _two_sum(self.hi, other.hi)
        e += self.lo + other.lo
        self.hi, self.lo = _two_sum(s, e)
        return self

    def sub(self, other: "DoubleDouble") -> "DoubleDouble":
        s, e = _two_sum(self.hi, -other.hi)
        e += self.lo - other.lo
        self.hi, self.lo = _two_sum(s, e)
        return self

    def mul(self, other: "DoubleDouble") -> "DoubleDouble":
        p, e = _two_prod(self.hi, other.hi)
        e += self.hi * other.lo + self.lo * other.hi
        return DoubleDouble(*_two_sum(p, e))

    def div_int(self, k: int) -> "DoubleDouble":
        q1 = self.hi / k
        # one Newton correction on the remainder
        p, e = _two_prod(q1, float(k))
        r = ((self.hi - p) - e) + self.lo
        q2 = r / k
        return DoubleDouble(*_two_sum(q1, q2))

    def to_float(self) -> float:
        return self.hi + self.lo


@dataclass
class Moments:
    """Streaming Sum / SumSq of a cost sample, compensated.

    Exposes the plain-double views (`total`, `total_sq`) that mirror the
    streaming quantities, plus exact-within-rounding mean/variance.
    """

    count: int = 0

    def __post_init__(self):
        self._sum = DoubleDouble()
        self._sumsq = DoubleDouble()

    def add(self, q: float) -> None:
        if not math.isfinite(q):
            raise ValueError(f"non-finite cost sample: {q!r}")
        self._sum.add_float(q)
        p, e = _two_prod(q, q)
        self._sumsq.add_float(p)
        self._sumsq.add_float(e)
        self.count += 1

    def merge(self, other: "Moments") -> None:
        self._sum.add(other._sum)
        self._sumsq.add(other._sumsq)
        self.count += other.count

    @property
    def total(self) -> float:
        return self._sum.to_float()

    @property
    def total_sq(self) -> float:
        return self._sumsq.to_float()

    def mean(self) -> float:
        if self.count == 0:
            raise ValueError("empty sample")
        return self._sum.div_int(self.count).to_float()

    def variance(self) -> float:
        """Sample variance (SumSq - Sum^2/S)/(S-1), evaluated double-double."""
        if self.count < 2:
            raise ValueError("variance needs at least two samples")
        mean_dd = self._sum.div_int(self.count)
        corr = mean_dd.mul(self._sum)
        num = self._sumsq.copy().sub(corr)
        var = num.div_int(self.count - 1).to_float()
        return max(var, 0.0)

    def copy(self) -> "Moments":
        out = Moments()
        out.count = self.count
        out._sum = self._sum.copy()
        out._sumsq = self._sumsq.copy()
        return out
