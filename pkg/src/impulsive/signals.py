"""Inputs, comparison functions and the two input norms.

An :class:`InputSignal` is a piecewise-constant base plus finitely many
point values ("atoms") at exact times. The sup norm takes the essential
supremum of the base and the supremum over impulse instants; the energy
norm integrates ``rho1`` of the base and sums ``rho2`` over impulse instants.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .sequences import ImpulseTimeSequence, Interval, as_time


class NormUndefined(ValueError):
    """The requested norm cannot be evaluated on the given interval."""


# --------------------------------------------------------------- K-infinity


@dataclass(frozen=True)
class KFunction:
    """Class-K-infinity function ``rho`` with a numeric inverse.

    ``power`` is set for the closed-form family ``scale * r**power``; the
    inverse is then exact. Other functions go through bracket doubling
    and bisection in :func:`k_inverse`.
    """

    name: str
    fn: Callable[[float], float] = field(compare=False)
    power: Optional[float] = None
    scale: float = 1.0

    def __call__(self, r):
        return self.fn(r)


def identity() -> KFunction:
    return KFunction("id", lambda r: r, power=1.0)


def power(p: float, scale: float = 1.0) -> KFunction:
    if p <= 0 or scale <= 0:
        raise ValueError("power and scale must be positive")
    name = f"r^{p:g}" if scale == 1.0 else f"{scale:g}*r^{p:g}"
    return KFunction(name, lambda r: scale * r ** p, power=float(p), scale=float(scale))


def scaled(c: float, base: KFunction) -> KFunction:
    if c <= 0:
        raise ValueError("scale must be positive")
    if base.power is not None:
        return power(base.power, c * base.scale)
    return KFunction(f"{c:g}*{base.name}", lambda r: c * base.fn(r))


def table(xs: Sequence[float], ys: Sequence[float], name: str = "table") -> KFunction:
    """Piecewise-linear K-infinity function through ``(xs, ys)``.

    Requires ``xs[0] == ys[0] == 0`` and strictly increasing data; beyond the
    last knot the last slope is continued, which keeps the function unbounded.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need at least two matching knots")
    if xs[0] != 0 or ys[0] != 0:
        raise ValueError("table must start at (0, 0)")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise ValueError("table must be strictly increasing")
    slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])

    def fn(r):
        if r <= xs[-1]:
            return float(np.interp(r, xs, ys))
        return float(ys[-1] + slope * (r - xs[-1]))

    return KFunction(name, fn)


_NAMED = {"id": identity, "identity": identity}


def k_function(name: str) -> KFunction:
    """Look up ``id``, ``r2``, ``r3``, ``r^p`` or ``c*r^p`` by name."""
    key = name.strip().replace(" ", "")
    if key in _NAMED:
        return _NAMED[key]()
    scale = 1.0
    if "*" in key:
        c, key = key.split("*", 1)
        scale = float(c)
    if key.startswith("r^"):
        return power(float(key[2:]), scale)
    if key.startswith("r") and key[1:].replace(".", "", 1).isdigit():
        return power(float(key[1:]), scale)
    if key == "r":
        return power(1.0, scale)
    raise ValueError(f"unknown K-infinity function {name!r}")


def k_inverse(rho: KFunction, y: float, tol: float = 1e-12) -> float:
    """Return ``r >= 0`` with ``|rho(r) - y| <= tol * max(1, y)``."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    if y == 0:
        return 0.0
    if rho.power is not None:
        return (y / rho.scale) ** (1.0 / rho.power)
    target = tol * max(1.0, y)
    lo, hi = 0.0, 1.0
    while rho(hi) < y:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ArithmeticError(f"{rho.name} does not reach {y}")
    mid = 0.5 * (lo + hi)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        val = rho(mid)
        if abs(val - y) <= target:
            break
        if val < y:
            lo = mid
        else:
            hi = mid
    return mid


# ------------------------------------------------------------------ signals


@dataclass(frozen=True)
class InputSignal:
    """Piecewise-constant base plus atoms at exact times.

    ``breakpoints`` ``b_0 < b_1 < ... < b_m`` and ``values`` ``v_0..v_{m-1}``
    give ``base(t) = v_i`` on ``[b_i, b_{i+1})`` and 0 elsewhere. ``u(t)`` is
    ``atoms[t]`` when ``t`` is an atom, otherwise ``base(t)``.

    ``horizon`` marks a truncated signal: it is only described on
    ``[0, horizon)``. Norms over intervals reaching ``horizon`` raise
    :class:`NormUndefined` unless ``tail_sup`` declares the exact supremum of
    ``|u|`` on ``[horizon, inf)`` (only the sup norm can use it).
    """

    breakpoints: tuple = ()
    values: tuple = ()
    atoms: Mapping = field(default_factory=dict)
    horizon: Optional[Fraction] = None
    tail_sup: Optional[float] = None

    def __post_init__(self):
        bps = tuple(as_time(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if bps and len(vals) != len(bps) - 1:
            raise ValueError("need len(values) == len(breakpoints) - 1")
        if not bps and vals:
            raise ValueError("values without breakpoints")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("values must be finite")
        atoms = {as_time(t): float(v) for t, v in dict(self.atoms).items()}
        if any(not math.isfinite(v) for v in atoms.values()):
            raise ValueError("atom values must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "atoms", dict(sorted(atoms.items())))
        if self.horizon is not None:
            object.__setattr__(self, "horizon", as_time(self.horizon))

    # -- construction helpers

    @classmethod
    def zero(cls) -> "InputSignal":
        return cls()

    @classmethod
    def pieces(cls, pieces: Iterable, atoms: Optional[Mapping] = None) -> "InputSignal":
        """Build from ``(a, b, v)`` triples; gaps between pieces are zero."""
        bps: list = []
        vals: list = []
        for a, b, v in sorted(((as_time(a), as_time(b), float(v)) for a, b, v in pieces)):
            if b <= a:
                raise ValueError(f"empty piece [{a},{b})")
            if bps and a < bps[-1]:
                raise ValueError("pieces overlap")
            if bps and a > bps[-1]:
                vals.append(0.0)
                bps.append(a)
            elif not bps:
                bps.append(a)
            vals.append(v)
            bps.append(b)
        return cls(tuple(bps), tuple(vals), atoms or {})

    # -- evaluation

    def base(self, t) -> float:
        t = as_time(t)
        bps = self.breakpoints
        i = bisect.bisect_right(bps, t) - 1
        if i < 0 or i >= len(self.values):
            return 0.0
        return self.values[i]

    def __call__(self, t) -> float:
        t = as_time(t)
        if t in self.atoms:
            return self.atoms[t]
        return self.base(t)

    def breakpoints_in(self, lo, hi) -> list:
        """Breakpoints strictly inside ``(lo, hi)``."""
        lo, hi = as_time(lo), as_time(hi)
        i = bisect.bisect_right(self.breakpoints, lo)
        j = bisect.bisect_left(self.breakpoints, hi)
        return list(self.breakpoints[i:j])

    @property
    def support_end(self) -> Fraction:
        """Every time strictly after this has ``u == 0`` (ignoring ``horizon``)."""
        ends = [Fraction(0)]
        if self.breakpoints:
            ends.append(self.breakpoints[-1])
        if self.atoms:
            ends.append(next(reversed(self.atoms)))
        return max(ends)

    def _pieces_meeting(self, interval: Interval):
        """(a, b, v) nonzero base pieces clipped to ``interval`` (positive length only)."""
        hi = interval.hi
        out = []
        for a, b, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            if v == 0.0:
                continue
            lo_c = max(a, interval.lo)
            hi_c = b if hi is None else min(b, hi)
            if hi_c > lo_c:
                out.append((lo_c, hi_c, v))
        return out

    def _check_range(self, interval: Interval, allow_tail: bool):
        if self.horizon is None:
            return
        reaches = interval.hi is None or interval.hi >= self.horizon
        if reaches and not (allow_tail and self.tail_sup is not None):
            raise NormUndefined(
                f"norm undefined at desk scale: {interval} reaches the signal horizon {self.horizon}"
            )

    def impulse_values(self, interval: Interval, gamma: ImpulseTimeSequence):
        """``(tau, u(tau))`` for impulse times in ``interval`` with ``u(tau) != 0``, ascending."""
        found = {}
        for t, v in self.atoms.items():
            if v != 0.0 and t in interval and gamma.contains(t):
                found[t] = v
        for a, b, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            if v == 0.0:
                continue
            lo_c = max(a, interval.lo)
            hi_c = b if interval.hi is None else min(b, interval.hi)
            if hi_c < lo_c:
                continue
            for tau in gamma.times_in(Interval.closed(lo_c, hi_c)):
                if tau < b and tau in interval and tau not in self.atoms:
                    found[tau] = v
        return sorted(found.items())

    def with_atoms(self, atoms: Mapping) -> "InputSignal":
        merged = dict(self.atoms)
        merged.update({as_time(t): float(v) for t, v in atoms.items()})
        return InputSignal(self.breakpoints, self.values, merged, self.horizon, self.tail_sup)

    def __eq__(self, other):
        if not isinstance(other, InputSignal):
            return NotImplemented
        return (self.breakpoints, self.values, tuple(self.atoms.items()), self.horizon, self.tail_sup) == (
            other.breakpoints, other.values, tuple(other.atoms.items()), other.horizon, other.tail_sup)

    __hash__ = None


def _interval_arg(interval) -> Interval:
    if isinstance(interval, Interval):
        return interval
    if isinstance(interval, str):
        return Interval.parse(interval)
    lo, hi = interval
    return Interval.closed(lo, hi) if hi is not None else Interval.from_(lo)


def sup_norm(u: InputSignal, interval, gamma: ImpulseTimeSequence) -> float:
    """max(esssup of |base| on the interval, sup of |u| over impulse times in it)."""
    interval = _interval_arg(interval)
    u._check_range(interval, allow_tail=True)
    best = 0.0
    for _, _, v in u._pieces_meeting(interval):
        best = max(best, abs(v))
    for _, v in u.impulse_values(interval, gamma):
        best = max(best, abs(v))
    if u.horizon is not None and (interval.hi is None or interval.hi >= u.horizon):
        best = max(best, u.tail_sup)
    return best


def energy_norm(u: InputSignal, interval, gamma: ImpulseTimeSequence,
                rho1: KFunction, rho2: KFunction) -> float:
    """Integral of rho1(|base|) plus the sum of rho2(|u(tau)|) over impulse times."""
    interval = _interval_arg(interval)
    u._check_range(interval, allow_tail=False)
    total = 0.0
    for a, b, v in u._pieces_meeting(interval):
        total += rho1(abs(v)) * float(b - a)
    for _, v in u.impulse_values(interval, gamma):
        total += rho2(abs(v))
    return total


def energy_profile(u: InputSignal, t0, times: Sequence, gamma: ImpulseTimeSequence,
                   rho1: KFunction, rho2: KFunction) -> list[float]:
    """``energy_norm(u, (t0, t], ...)`` for each ``t`` of an ascending list, in one pass."""
    t0 = as_time(t0)
    times = [as_time(t) for t in times]
    if not times:
        return []
    if times[0] < t0 or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be ascending and >= t0")
    end = times[-1]
    if end == t0:
        return [0.0] * len(times)
    window = Interval.left_open(t0, end)
    u._check_range(window, allow_tail=False)
    pieces = u._pieces_meeting(window)
    jumps = u.impulse_values(window, gamma)
    out = []
    pi = ji = 0
    closed_area = 0.0
    jump_sum = 0.0
    for t in times:
        while pi < len(pieces) and pieces[pi][1] <= t:
            a, b, v = pieces[pi]
            closed_area += rho1(abs(v)) * float(b - a)
            pi += 1
        partial = 0.0
        if pi < len(pieces) and pieces[pi][0] < t:
            a, _, v = pieces[pi]
            partial = rho1(abs(v)) * float(t - a)
        while ji < len(jumps) and jumps[ji][0] <= t:
            jump_sum += rho2(abs(jumps[ji][1]))
            ji += 1
        out.append(closed_area + partial + jump_sum)
    return out


# ------------------------------------------------------------ text format


def dumps_signal(u: InputSignal) -> str:
    lines = []
    for a, b, v in zip(u.breakpoints, u.breakpoints[1:], u.values):
        if v != 0.0:
            lines.append(f"piece {a} {b} {v!r}")
    for t, v in u.atoms.items():
        lines.append(f"atom {t} {v!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def loads_signal(text: str) -> InputSignal:
    """Parse ``piece a b v`` and ``atom t v`` lines; ``#`` starts a comment."""
    pieces, atoms = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        kind = line[0]
        try:
            if kind == "piece" and len(line) == 4:
                pieces.append((as_time(line[1]), as_time(line[2]), float(line[3])))
            elif kind == "atom" and len(line) == 3:
                t = as_time(line[1])
                if t in atoms:
                    raise ValueError(f"duplicate atom at {t}")
                atoms[t] = float(line[2])
            else:
                raise ValueError(f"bad record {raw.strip()!r}")
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return InputSignal.pieces(pieces, atoms)


def load_signal(path) -> InputSignal:
    return loads_signal(Path(path).read_text())


def dump_signal(u: InputSignal, path) -> None:
    Path(path).write_text(dumps_signal(u))
