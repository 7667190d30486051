"""Impulse-time sequences with exact rational times.

Every sequence enumerates strictly increasing positive times lazily through
:meth:`ImpulseTimeSequence.iter_after`. Times are :class:`fractions.Fraction`
so membership and ordering never go through floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence


def as_time(t) -> Fraction:
    """Coerce ``t`` to an exact time.

    Floats are converted exactly (binary value), strings accept decimal and
    ``p/q`` syntax.
    """
    if isinstance(t, Fraction):
        return t
    if isinstance(t, float):
        if not math.isfinite(t):
            raise ValueError(f"time must be finite, got {t}")
        return Fraction(t)
    if isinstance(t, str):
        return Fraction(t.strip())
    return Fraction(t)


@dataclass(frozen=True)
class Interval:
    """Real interval with independently open/closed ends. ``hi=None`` means +inf."""

    lo: Fraction
    hi: Optional[Fraction]
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", as_time(self.lo))
        if self.hi is not None:
            object.__setattr__(self, "hi", as_time(self.hi))
            if self.hi < self.lo or (self.hi == self.lo and not (self.lo_closed and self.hi_closed)):
                raise ValueError(f"empty interval {self}")
        else:
            object.__setattr__(self, "hi_closed", False)

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    @classmethod
    def left_open(cls, lo, hi):
        """(lo, hi]"""
        return cls(lo, hi, False, True)

    @classmethod
    def right_open(cls, lo, hi):
        """[lo, hi)"""
        return cls(lo, hi, True, False)

    @classmethod
    def open(cls, lo, hi):
        return cls(lo, hi, False, False)

    @classmethod
    def from_(cls, lo):
        """[lo, inf)"""
        return cls(lo, None, True, False)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``[a,b]``, ``(a,b]``, ``[a,inf)`` etc."""
        text = text.strip()
        if len(text) < 5 or text[0] not in "[(" or text[-1] not in "])":
            raise ValueError(f"cannot parse interval {text!r}")
        lo_s, hi_s = text[1:-1].split(",")
        hi_s = hi_s.strip()
        hi = None if hi_s in ("inf", "+inf", "oo") else as_time(hi_s)
        return cls(as_time(lo_s), hi, text[0] == "[", text[-1] == "]")

    @property
    def bounded(self) -> bool:
        return self.hi is not None

    def __contains__(self, t) -> bool:
        t = as_time(t)
        if t < self.lo or (t == self.lo and not self.lo_closed):
            return False
        if self.hi is None:
            return True
        return t < self.hi or (t == self.hi and self.hi_closed)

    def __str__(self):
        hi = "inf" if self.hi is None else str(self.hi)
        return f"{'[' if self.lo_closed else '('}{self.lo},{hi}{']' if self.hi_closed else ')'}"


class ExhaustedSequence(LookupError):
    """Raised when a finite explicit sequence has no time after the query."""


class ImpulseTimeSequence:
    """Base class. Subclasses implement :meth:`iter_after`."""

    finite = False

    def iter_after(self, t) -> Iterator[Fraction]:
        """Yield the times strictly greater than ``t`` in ascending order."""
        raise NotImplementedError

    def __iter__(self):
        return self.iter_after(Fraction(0))

    def next_after(self, t) -> Fraction:
        t = as_time(t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        for tau in self.iter_after(t):
            return tau
        raise ExhaustedSequence(f"{self!r} has no impulse time after {t}")

    def times_in(self, interval: Interval) -> list[Fraction]:
        if not interval.bounded:
            raise ValueError("times_in needs a bounded interval")
        start = interval.lo
        out = []
        if interval.lo_closed and self.contains(start):
            out.append(start)
        for tau in self.iter_after(start):
            if tau > interval.hi or (tau == interval.hi and not interval.hi_closed):
                break
            out.append(tau)
        return out

    def count_in(self, interval: Interval) -> int:
        return len(self.times_in(interval))

    def contains(self, t) -> bool:
        t = as_time(t)
        if t <= 0:
            return False
        for tau in self.iter_after(max(Fraction(0), t - 1)):
            if tau >= t:
                return tau == t
        return False

    def head(self, n: int) -> list[Fraction]:
        return list(itertools.islice(iter(self), n))


class Explicit(ImpulseTimeSequence):
    """Finite list of impulse times.

    A finite list does not satisfy the unboundedness invariant on its own;
    :meth:`next_after` raises :class:`ExhaustedSequence` past the last time.
    Use it for horizons that end before the last listed time.
    """

    finite = True

    def __init__(self, times: Iterable):
        ts = tuple(as_time(t) for t in times)
        if ts and ts[0] <= 0:
            raise ValueError("impulse times must be positive")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("impulse times must be strictly increasing")
        self.times = ts
        self._set = frozenset(ts)

    def contains(self, t):
        return as_time(t) in self._set

    def iter_after(self, t):
        t = as_time(t)
        for tau in self.times:
            if tau > t:
                yield tau

    def __repr__(self):
        return f"Explicit({len(self.times)} times)"


class Periodic(ImpulseTimeSequence):
    def __init__(self, first, dwell):
        self.first = as_time(first)
        self.dwell = as_time(dwell)
        if self.first <= 0 or self.dwell <= 0:
            raise ValueError("first and dwell must be positive")

    def iter_after(self, t):
        t = as_time(t)
        k = 0 if t < self.first else math.floor((t - self.first) / self.dwell) + 1
        while True:
            yield self.first + k * self.dwell
            k += 1

    def contains(self, t):
        t = as_time(t)
        if t < self.first:
            return False
        q = (t - self.first) / self.dwell
        return q.denominator == 1

    def __repr__(self):
        return f"Periodic(first={self.first}, dwell={self.dwell})"


def triangular(j: int) -> int:
    """j(j+1)/2, the start of the j-th sigma staircase block."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    return j * (j + 1) // 2


def triangular_index(m: int) -> int:
    """Largest j with triangular(j) <= m, for integer m >= 0."""
    j = (math.isqrt(8 * m + 1) - 1) // 2
    return j


class GammaStar(ImpulseTimeSequence):
    """Dyadic bursts: block N >= 1 holds s_N + k/2^(N+1) for k = 0..2^N."""

    @staticmethod
    def block(n: int) -> list[Fraction]:
        s = triangular(n)
        den = 2 ** (n + 1)
        return [s + Fraction(k, den) for k in range(2 ** n + 1)]

    @staticmethod
    def time(n: int, k: int) -> Fraction:
        if n < 1 or not 0 <= k <= 2 ** n:
            raise ValueError(f"no time tau_({n},{k})")
        return triangular(n) + Fraction(k, 2 ** (n + 1))

    def iter_after(self, t):
        t = as_time(t)
        n = max(1, triangular_index(math.floor(t)))
        while True:
            s = triangular(n)
            den = 2 ** (n + 1)
            if t < s:
                k = 0
            else:
                k = math.floor((t - s) * den) + 1
            for kk in range(k, 2 ** n + 1):
                yield s + Fraction(kk, den)
            n += 1

    def contains(self, t):
        t = as_time(t)
        if t < 1:
            return False
        n = triangular_index(math.floor(t))
        off = t - triangular(n)
        if n < 1 or off > Fraction(1, 2):
            return False
        return (off * 2 ** (n + 1)).denominator == 1

    def block_of(self, t) -> tuple[int, int]:
        """(N, k) with t = tau_(N,k); ValueError if t is not in the sequence."""
        t = as_time(t)
        if not self.contains(t):
            raise ValueError(f"{t} is not in gamma*")
        n = triangular_index(math.floor(t))
        return n, int((t - triangular(n)) * 2 ** (n + 1))

    def __repr__(self):
        return "GammaStar()"


class Concatenation(ImpulseTimeSequence):
    """Finite blocks laid end to end, optionally followed by an infinite tail."""

    def __init__(self, blocks: Sequence[Iterable], tail: Optional[ImpulseTimeSequence] = None):
        times = [as_time(t) for blk in blocks for t in blk]
        self.head_part = Explicit(times)
        self.tail = tail
        self.finite = tail is None

    @property
    def _last(self) -> Fraction:
        return self.head_part.times[-1] if self.head_part.times else Fraction(0)

    def iter_after(self, t):
        t = as_time(t)
        yield from self.head_part.iter_after(t)
        if self.tail is not None:
            yield from self.tail.iter_after(max(t, self._last))

    def contains(self, t):
        t = as_time(t)
        if self.head_part.contains(t):
            return True
        return self.tail is not None and t > self._last and self.tail.contains(t)

    def __repr__(self):
        return f"Concatenation({len(self.head_part.times)} times, tail={self.tail!r})"


def parse_times(lines: Iterable[str]) -> list[Fraction]:
    out = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(as_time(line))
    return out


def load_times(path) -> Explicit:
    """Read one time per line (decimal or ``p/q``); ``#`` starts a comment."""
    return Explicit(parse_times(Path(path).read_text().splitlines()))


def dump_times(times: Iterable, path) -> None:
    Path(path).write_text("".join(f"{as_time(t)}\n" for t in times))
