"""Intervals of the extended real line with open/closed endpoint flags.

Extended reals are plain IEEE floats (``math.inf``/``-math.inf``); the only
arithmetic rule we have to police is that ``inf + -inf`` is undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


def ext_add(x: float, y: float) -> float:
    """Extended-real addition; ``+inf + -inf`` is a domain error."""
    if (x == INF and y == -INF) or (x == -INF and y == INF):
        raise ArithmeticError("+inf + -inf is undefined")
    return x + y


def fmt_ext(x: float) -> str:
    """17-significant-digit decimal, with ``inf``/``-inf`` literals."""
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Interval:
    """A convex subset of the real line.

    ``lo``/``hi`` may be infinite; a closed flag at an infinite endpoint is
    rejected. The empty interval is the unique instance with ``lo > hi``.
    """

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            if (self.lo, self.hi) != (INF, -INF):
                raise ValueError(f"lo > hi ({self.lo} > {self.hi}); use Interval.empty()")
            return
        if math.isinf(self.lo) and self.lo_closed:
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi) and self.hi_closed:
            object.__setattr__(self, "hi_closed", False)
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("degenerate interval must be closed at both ends; use Interval.empty()")

    @classmethod
    def empty(cls) -> Interval:
        return cls(INF, -INF, False, False)

    @classmethod
    def real_line(cls) -> Interval:
        return cls(-INF, INF, False, False)

    @classmethod
    def closed(cls, lo: float, hi: float) -> Interval:
        return cls.make(lo, hi, True, True)

    @classmethod
    def open(cls, lo: float, hi: float) -> Interval:
        return cls.make(lo, hi, False, False)

    @classmethod
    def make(cls, lo: float, hi: float, lo_closed: bool, hi_closed: bool) -> Interval:
        """Build an interval, collapsing anything without points to empty."""
        lo_closed = lo_closed and not math.isinf(lo)
        hi_closed = hi_closed and not math.isinf(hi)
        if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
            return cls.empty()
        return cls(float(lo), float(hi), lo_closed, hi_closed)

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, x: float) -> bool:
        if self.is_empty:
            return False
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below

    def intersect(self, other: Interval) -> Interval:
        if self.is_empty or other.is_empty:
            return Interval.empty()
        if self.lo > other.lo:
            lo, lo_c = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_c = other.lo, other.lo_closed
        else:
            lo, lo_c = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_c = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_c = other.hi, other.hi_closed
        else:
            hi, hi_c = self.hi, self.hi_closed and other.hi_closed
        return Interval.make(lo, hi, lo_c, hi_c)

    def upper_closure(self) -> Interval:
        """All values in the set or greater than those in it (``A+``)."""
        if self.is_empty:
            return self
        return Interval.make(self.lo, INF, self.lo_closed, False)

    def issubset(self, other: Interval) -> bool:
        if self.is_empty:
            return True
        if other.is_empty:
            return False
        if self.lo < other.lo or (self.lo == other.lo and self.lo_closed and not other.lo_closed):
            return False
        if self.hi > other.hi or (self.hi == other.hi and self.hi_closed and not other.hi_closed):
            return False
        return True

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{fmt_ext(self.lo)}, {fmt_ext(self.hi)}{right}"
