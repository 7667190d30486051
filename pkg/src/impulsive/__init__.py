"""Scalar impulsive systems with exact event times.

Simulate ``x' = f(t, x, u)`` with state resets ``x(tau) = h(tau, x(tau^-), u(tau))``
at prescribed impulse times, evaluate input norms, and reproduce the
decay/sawtooth construction whose zero-input stability does not survive
vanishing, small or small-energy inputs.
"""
from ._kernels import BACKEND
from .model import (
    TIME_INVARIANT, TIME_VARYING, ImpulsiveSystem, bar_h, h, hat_h, make_system, mu_N, s_j,
    sigma, system_a, system_b, t_star, tau, u_star,
)
from .sequences import (
    Concatenation, Explicit, ExhaustedSequence, GammaStar, ImpulseTimeSequence, Interval,
    Periodic, as_time,
)
from .signals import (
    InputSignal, KFunction, NormUndefined, energy_norm, identity, k_function, k_inverse, power,
    sup_norm,
)
from .sim import SimulationError, Trajectory, simulate
from .synth import (
    SynthesisError, SynthesisResult, assemble, build_witness, falsify_iiss_candidate, synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "TIME_INVARIANT", "TIME_VARYING", "ImpulsiveSystem", "bar_h", "h", "hat_h",
    "make_system", "mu_N", "s_j", "sigma", "system_a", "system_b", "t_star", "tau", "u_star",
    "Concatenation", "Explicit", "ExhaustedSequence", "GammaStar", "ImpulseTimeSequence",
    "Interval", "Periodic", "as_time", "InputSignal", "KFunction", "NormUndefined",
    "energy_norm", "identity", "k_function", "k_inverse", "power", "sup_norm",
    "SimulationError", "Trajectory", "simulate", "SynthesisError", "SynthesisResult",
    "assemble", "build_witness", "falsify_iiss_candidate", "synthesize",
]
