"""The counterexample construction: staircase schedule, sawtooth jump map,
dyadic impulse bursts and the vanishing input that defeats convergence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .sequences import GammaStar, ImpulseTimeSequence, as_time, triangular, triangular_index
from .signals import InputSignal
from ._kernels import SNAP_TOL, SQRT_E

TIME_VARYING = "tv"
TIME_INVARIANT = "ti"


def s_j(j: int) -> int:
    """0 + 1 + ... + j."""
    return triangular(j)


def sigma(t) -> int:
    """Staircase schedule: ``i`` on ``[s_j + i, s_j + i + 1)``, ``0 <= i <= j``."""
    t = as_time(t)
    if t < 0:
        raise ValueError("sigma is defined for t >= 0")
    m = math.floor(t)
    return m - triangular(triangular_index(m))


def snap_log(r: float) -> float:
    """``ln r``, snapped to the nearest integer or half-integer when within 1e-9 relative."""
    v = math.log(r)
    nearest = round(2.0 * v) / 2.0
    if abs(v - nearest) <= SNAP_TOL * max(1.0, abs(v)):
        return nearest
    return v


def bar_h(r: float) -> float:
    """Sawtooth amplifier on ``r >= 0``.

    Identity above 1. On ``(0, 1]`` it lifts ``r`` to ``e^ceil(ln r)`` on the
    upper half of each log-decade and ramps linearly (slope ``1 + sqrt(e)``)
    on the lower half, so it is continuous and ``r <= bar_h(r) <= e^ceil(ln r)``.
    """
    if r < 0:
        raise ValueError("bar_h takes r >= 0")
    if r == 0:
        return 0.0
    lr = snap_log(r)
    if lr > 0:
        return r
    c = math.ceil(lr)
    if c - 0.5 < lr:
        return math.exp(c)
    return (1.0 + SQRT_E) * r - math.exp(c - 0.5)


def hat_h(t, xi: float, mode: str = TIME_VARYING) -> float:
    a = abs(xi)
    level = 0 if mode == TIME_INVARIANT else sigma(t)
    if a <= math.exp(-level):
        return bar_h(a)
    return a


def h(t, xi: float, mu: float, mode: str = TIME_VARYING) -> float:
    """Jump map ``hat_h(t, xi) + mu``; ``mode="ti"`` freezes the schedule at 0."""
    if mode not in (TIME_VARYING, TIME_INVARIANT):
        raise ValueError(f"unknown jump mode {mode!r}")
    return hat_h(t, xi, mode) + mu


def gamma_star() -> GammaStar:
    return GammaStar()


def tau(n: int, k: int) -> Fraction:
    """k-th time of burst n: s_n + k / 2^(n+1)."""
    return GammaStar.time(n, k)


def burst_step(n: int) -> float:
    """Spacing 2^-(n+1) inside burst n."""
    return 2.0 ** -(n + 1)


def mu_N(n: int) -> float:
    if n < 1:
        raise ValueError("N must be >= 1")
    return math.expm1(-burst_step(n)) / math.expm1(-0.5)


def u_star(n_max: int) -> InputSignal:
    """The vanishing input, truncated after burst ``n_max``.

    Value ``mu_N`` at every time of burst ``N``, zero elsewhere. The signal
    is exact on ``[0, s_(n_max+1))``; the sup of ``|u*|`` on the remaining
    tail is ``mu_(n_max+1)``, which is recorded so tail sup-norms stay exact.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    atoms = {}
    for n in range(1, n_max + 1):
        m = mu_N(n)
        for t in GammaStar.block(n):
            atoms[t] = m
    return InputSignal(atoms=atoms, horizon=Fraction(s_j(n_max + 1)), tail_sup=mu_N(n_max + 1))


def t_star(t0, k: int) -> tuple[Fraction, Fraction]:
    """Start of a unit window where the schedule stays >= k+1.

    Returns ``(t_star, T_bar)`` with ``T_bar = k + 1 + s_(k+2)`` and
    ``t0 <= t_star <= t0 + T_bar``.
    """
    t0 = as_time(t0)
    if t0 < 0 or k < 0:
        raise ValueError("need t0 >= 0 and k >= 0")
    t_bar = Fraction(k + 1 + s_j(k + 2))
    if t0 <= t_bar:
        return t_bar, t_bar
    kappa = triangular_index(math.floor(t0))
    s_k, s_next = s_j(kappa), s_j(kappa + 1)
    if t0 <= s_k + k + 1:
        return Fraction(s_k + k + 1), t_bar
    if t0 <= s_next - 1:
        return t0, t_bar
    return Fraction(s_next + k + 1), t_bar


# ------------------------------------------------------------------ systems


class LinearDecay:
    """x' = -x."""

    name = "decay"
    input_gain = 0.0

    def __call__(self, t, x, u):
        return -x


class LinearDecayPlusInput:
    """x' = -x + u."""

    name = "decay_input"
    input_gain = 1.0

    def __call__(self, t, x, u):
        return -x + u


@dataclass(frozen=True)
class GenericRHS:
    fn: Callable[[float, float, float], float]
    name: str = "generic"

    def __call__(self, t, x, u):
        return self.fn(t, x, u)


@dataclass(frozen=True)
class SawtoothJumpMap:
    mode: str = TIME_VARYING

    def __post_init__(self):
        if self.mode not in (TIME_VARYING, TIME_INVARIANT):
            raise ValueError(f"unknown jump mode {self.mode!r}")

    def __call__(self, t, xi, mu):
        return h(t, xi, mu, self.mode)


@dataclass(frozen=True)
class GenericJump:
    fn: Callable[[Fraction, float, float], float]

    def __call__(self, t, xi, mu):
        return self.fn(t, xi, mu)


@dataclass(frozen=True)
class ImpulsiveSystem:
    flow: object
    jump: object
    gamma: ImpulseTimeSequence

    def __post_init__(self):
        if self.flow(0.0, 0.0, 0.0) != 0 or self.jump(Fraction(1), 0.0, 0.0) != 0:
            raise ValueError("flow and jump maps must vanish at (x, u) = (0, 0)")


def system_a(gamma: Optional[ImpulseTimeSequence] = None, mode: str = TIME_VARYING) -> ImpulsiveSystem:
    """Input-free decay flow with the sawtooth jump map."""
    return ImpulsiveSystem(LinearDecay(), SawtoothJumpMap(mode), gamma if gamma is not None else GammaStar())


def system_b(gamma: Optional[ImpulseTimeSequence] = None, mode: str = TIME_VARYING) -> ImpulsiveSystem:
    """Additive-input decay flow with the sawtooth jump map."""
    return ImpulsiveSystem(LinearDecayPlusInput(), SawtoothJumpMap(mode), gamma if gamma is not None else GammaStar())


SYSTEMS = {"A": system_a, "B": system_b}


def make_system(name: str, gamma: Optional[ImpulseTimeSequence] = None, mode: str = TIME_VARYING) -> ImpulsiveSystem:
    try:
        return SYSTEMS[name.upper()](gamma, mode)
    except KeyError:
        raise ValueError(f"unknown system {name!r}; expected one of {sorted(SYSTEMS)}") from None
