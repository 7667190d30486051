"""Event-aligned simulation of scalar impulsive systems.

Two engines: ``exact`` evaluates the affine flows in closed form between
events, ``rk4`` runs fixed-step classical Runge-Kutta with every impulse time
and input breakpoint landing on a step boundary; between steps it
interpolates with cubic Hermite polynomials. Jumps fire at the impulse
times in ``(t0, t_end]``; a time equal to ``t0`` does not fire.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .model import GenericRHS, ImpulsiveSystem, LinearDecay, LinearDecayPlusInput
from .sequences import Interval, as_time
from .signals import InputSignal

RK4_STEP = 1e-3
ENGINES = ("exact", "rk4")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Jump:
    tau: Fraction
    x_minus: float
    u_at: float
    x_plus: float


@dataclass(frozen=True)
class Segment:
    """Flow on ``[start, end)`` from ``x_start``.

    ``kind`` is ``"exact"`` (closed form with input level ``u_c`` and
    ``input_gain``) or ``"samples"`` (offsets ``ts`` from ``start`` with
    states ``xs`` and slopes ``fs``, cubic Hermite interpolated).
    """

    start: Fraction
    end: Fraction
    x_start: float
    kind: str
    u_c: float = 0.0
    input_gain: float = 0.0
    ts: Optional[np.ndarray] = None
    xs: Optional[np.ndarray] = None
    fs: Optional[np.ndarray] = None

    def value(self, t) -> float:
        d = float(as_time(t) - self.start)
        if self.kind == "exact":
            return affine_flow(self.x_start, self.input_gain * self.u_c, d)
        return hermite(self.ts, self.xs, self.fs, d)

    @property
    def x_end(self) -> float:
        """Left limit at ``end``."""
        if self.kind == "exact":
            return affine_flow(self.x_start, self.input_gain * self.u_c, float(self.end - self.start))
        return float(self.xs[-1])


def hermite(ts: np.ndarray, xs: np.ndarray, fs: np.ndarray, d: float) -> float:
    """Cubic Hermite interpolation of step states; O(h^4) like the integrator itself."""
    n = len(ts) - 1
    if n == 0 or d <= ts[0]:
        return float(xs[0])
    if d >= ts[n]:
        return float(xs[n])
    i = min(int(np.searchsorted(ts, d, side="right")) - 1, n - 1)
    h = ts[i + 1] - ts[i]
    s = (d - ts[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return float(h00 * xs[i] + h10 * h * fs[i] + h01 * xs[i + 1] + h11 * h * fs[i + 1])


def affine_flow(x0: float, drive: float, d: float) -> float:
    """Solution of x' = -x + drive after time d."""
    if drive == 0.0:
        return x0 * math.exp(-d)
    return x0 * math.exp(-d) - drive * math.expm1(-d)


@dataclass(frozen=True)
class Trajectory:
    t0: Fraction
    x0: float
    t_end: Fraction
    segments: tuple
    jumps: tuple
    engine: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "_starts", [s.start for s in self.segments])
        object.__setattr__(self, "_jump_index", {j.tau: j for j in self.jumps})

    def sample(self, t) -> float:
        """Right-continuous state at ``t``."""
        t = as_time(t)
        if t < self.t0 or t > self.t_end:
            raise ValueError(f"t={t} outside [{self.t0}, {self.t_end}]")
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[i].value(t)

    def left_limit(self, tau) -> float:
        tau = as_time(tau)
        try:
            return self._jump_index[tau].x_minus
        except KeyError:
            raise ValueError(f"{tau} is not a jump time of this trajectory") from None

    @property
    def x_final(self) -> float:
        return self.sample(self.t_end)

    @property
    def jump_times(self) -> list:
        return [j.tau for j in self.jumps]

    def sample_grid(self, n: int) -> list[tuple[Fraction, float]]:
        """``n`` evenly spaced exact times over ``[t0, t_end]`` with their states."""
        if n < 2 or self.t_end == self.t0:
            return [(self.t0, self.x0)]
        span = self.t_end - self.t0
        return [(self.t0 + span * i / (n - 1), self.sample(self.t0 + span * i / (n - 1))) for i in range(n)]

    def sup_abs(self) -> float:
        """Supremum of |x| on [t0, t_end] (attained at t0, post-jump states, or flow ends)."""
        best = abs(self.x0)
        for seg in self.segments:
            best = max(best, abs(seg.x_start))
            if seg.kind == "samples":
                best = max(best, float(np.max(np.abs(seg.xs))))
            else:
                best = max(best, abs(seg.x_end))
        return best

    def rows(self, samples_per_segment: int = 4):
        """CSV rows ``(t, x, kind)`` with ``kind`` in flow/pre_jump/post_jump."""
        out = [(self.t0, self.x0, "flow")]
        jumps = iter(self.jumps)
        nxt = next(jumps, None)
        for seg in self.segments:
            if nxt is not None and nxt.tau == seg.start:
                out.append((nxt.tau, nxt.x_minus, "pre_jump"))
                out.append((nxt.tau, nxt.x_plus, "post_jump"))
                nxt = next(jumps, None)
            span = seg.end - seg.start
            for i in range(1, samples_per_segment + 1):
                t = seg.start + span * i / (samples_per_segment + 1)
                if t > seg.start:
                    out.append((t, seg.value(t), "flow"))
        if out[-1][0] != self.t_end or out[-1][2] == "pre_jump":
            out.append((self.t_end, self.x_final, "flow"))
        return out

    def to_csv(self, path, samples_per_segment: int = 4, exact_times: bool = False) -> None:
        """Write ``t,x,kind`` rows; ``exact_times`` appends a ``t_exact`` rational column."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "kind"] + (["t_exact"] if exact_times else []))
            for t, x, kind in self.rows(samples_per_segment):
                row = [repr(float(t)), repr(x), kind]
                if exact_times:
                    row.append(str(t))
                w.writerow(row)


def _event_times(sys: ImpulsiveSystem, u: InputSignal, t0: Fraction, t_end: Fraction):
    if t_end == t0:
        return [], set()
    window = Interval.left_open(t0, t_end)
    impulses = sys.gamma.times_in(window)
    events = set(impulses) | set(u.breakpoints_in(t0, t_end))
    return sorted(events), set(impulses)


def _rk4_generic(f, t_start: float, x0: float, u_c: float, length: float, hmax: float):
    n = _kernels._step_count(length, hmax)
    ts = np.empty(n + 1)
    xs = np.empty(n + 1)
    ts[0], xs[0] = 0.0, x0
    x = x0
    for i in range(n):
        hh = hmax if i < n - 1 else length - (n - 1) * hmax
        t = t_start + ts[i]
        k1 = f(t, x, u_c)
        k2 = f(t + hh / 2, x + hh / 2 * k1, u_c)
        k3 = f(t + hh / 2, x + hh / 2 * k2, u_c)
        k4 = f(t + hh, x + hh * k3, u_c)
        x = x + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[i + 1] = x
        ts[i + 1] = length if i == n - 1 else (i + 1) * hmax
    return ts, xs


def simulate(sys: ImpulsiveSystem, t0, x0: float, u: InputSignal, t_end,
             engine: str = "exact", step: float = RK4_STEP) -> Trajectory:
    """Solve on ``[t0, t_end]`` and return the right-continuous trajectory."""
    t0, t_end = as_time(t0), as_time(t_end)
    x0 = float(x0)
    if t0 < 0 or t_end < t0:
        raise ValueError("need 0 <= t0 <= t_end")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if not 0 < step <= RK4_STEP:
        raise ValueError(f"rk4 step must lie in (0, {RK4_STEP}]")
    flow = sys.flow
    affine = isinstance(flow, (LinearDecay, LinearDecayPlusInput))
    if engine == "exact" and not affine:
        raise ValueError("the exact engine only supports the affine decay flows")
    if u.horizon is not None and t_end >= u.horizon:
        raise ValueError(f"input is truncated at {u.horizon}; cannot simulate to {t_end}")
    if not math.isfinite(x0):
        raise SimulationError(f"non-finite initial state at t={t0}")

    events, impulses = _event_times(sys, u, t0, t_end)
    gain = getattr(flow, "input_gain", 0.0)
    segments, jumps = [], []
    x, a = x0, t0
    bounds = events if events and events[-1] == t_end else events + [t_end]
    for b in bounds:
        u_c = u.base(a)
        length = float(b - a)
        if engine == "exact":
            seg = Segment(a, b, x, "exact", u_c=u_c, input_gain=gain)
        elif affine:
            ts, xs = _kernels.rk4_affine(x, u_c, gain, length, step)
            seg = Segment(a, b, x, "samples", ts=ts, xs=xs, fs=gain * u_c - xs)
        else:
            ts, xs = _rk4_generic(flow, float(a), x, u_c, length, step)
            fs = np.array([flow(float(a) + ti, xi, u_c) for ti, xi in zip(ts, xs)])
            seg = Segment(a, b, x, "samples", ts=ts, xs=xs, fs=fs)
        if b > a or not segments:
            segments.append(seg)
        x = seg.x_end
        if not math.isfinite(x):
            raise SimulationError(f"non-finite state reached before t={b} (segment from {a})")
        if b in impulses:
            u_b = u(b)
            x_plus = float(sys.jump(b, x, u_b))
            if not math.isfinite(x_plus):
                raise SimulationError(f"non-finite state after jump at t={b}")
            jumps.append(Jump(b, x, u_b, x_plus))
            x = x_plus
        a = b
    if jumps and jumps[-1].tau == t_end:
        segments.append(Segment(t_end, t_end, x, "exact", u_c=0.0, input_gain=0.0))
    return Trajectory(t0, x0, t_end, tuple(segments), tuple(jumps), engine)
