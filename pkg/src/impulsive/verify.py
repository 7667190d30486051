"""Property checkers and counterexample experiment drivers.

Positive properties of the decay/sawtooth system (zero-input stability
envelope, settling below each power of e, bounded-energy bound) are checked
on parameter grids. Negative properties are exhibited by explicit
trajectories: a vanishing input that keeps the state above 1, small
initial data with small input that still reach 1, and synthesized inputs of
tiny energy that push the state above e^-1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import mu_N, s_j, snap_log, system_a, system_b, tau, u_star
from .sequences import Explicit, GammaStar, ImpulseTimeSequence, Interval, Periodic, as_time
from .signals import InputSignal, KFunction, energy_profile, identity, sup_norm
from .sim import Trajectory, simulate
from .synth import E_INV, SynthesisResult, Witness, build_witness

TOL = 1e-12
DEFAULT_T0S = (0, 1, Fraction(11, 2), 10, 20, 45)
_MAGS = (1e-3, math.exp(-2), 0.3, 0.9, 1.0, 5.0)
DEFAULT_X0S = tuple(s * m for m in _MAGS for s in (1.0, -1.0))
DEFAULT_KS = tuple(range(7))


@dataclass
class CheckReport:
    name: str
    trials: int = 0
    violations: list = field(default_factory=list)
    worst_margin: float = math.inf
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, params: dict, observed: float, bound: float, margin: float) -> None:
        """Track a margin (``>= -TOL`` passes); failing points become violations."""
        self.worst_margin = min(self.worst_margin, margin)
        if margin < -TOL:
            self.violations.append({"params": params, "observed": observed, "bound": bound})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "pass": self.passed,
            "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
            "violations": self.violations,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.trials} trials, {len(self.violations)} violations, worst margin {self.worst_margin:.3g}"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def random_explicit(seed: int, until, min_gap=Fraction(1, 64), max_gap=Fraction(2)) -> Explicit:
    """Dyadic impulse times with random gaps, covering ``(0, until]``."""
    rng = np.random.default_rng(seed)
    lo, hi = int(min_gap * 64), int(max_gap * 64)
    times, t = [], Fraction(0)
    until = as_time(until)
    while t <= until:
        t += Fraction(int(rng.integers(lo, hi + 1)), 64)
        times.append(t)
    return Explicit(times)


def default_sequences(until=120, seed: int = 7) -> dict:
    return {
        "gammastar": GammaStar(),
        "periodic_1": Periodic(1, 1),
        "periodic_0.1": Periodic(Fraction(1, 10), Fraction(1, 10)),
        "explicit_random": random_explicit(seed, until),
    }


def nu_bar(r: float) -> float:
    """Tight zero-input envelope: r above 1, e^ceil(ln r) on (0, 1]."""
    if r == 0:
        return 0.0
    if r > 1:
        return r
    return math.exp(math.ceil(snap_log(r)))


def _observations(traj: Trajectory, samples: int):
    for j in traj.jumps:
        yield j.tau, j.x_minus
        yield j.tau, j.x_plus
    yield from traj.sample_grid(samples)


# ------------------------------------------------------------ positive checks


def check_gus(t0s: Iterable = DEFAULT_T0S, x0s: Iterable = DEFAULT_X0S,
              sequences: Optional[dict] = None, horizon=30, samples: int = 200) -> CheckReport:
    """|x(t)| <= e |x0| for zero-input runs of system A."""
    sequences = sequences if sequences is not None else default_sequences()
    rep = CheckReport("gus")
    tight = 0
    zero = InputSignal.zero()
    horizon = as_time(horizon)
    for name, seq in sequences.items():
        sys = system_a(seq)
        for t0 in t0s:
            t0 = as_time(t0)
            for x0 in x0s:
                traj = simulate(sys, t0, x0, zero, t0 + horizon)
                bound = math.e * abs(x0)
                tight_bound = nu_bar(abs(x0))
                worst_obs, worst_margin = 0.0, math.inf
                for _, x in _observations(traj, samples):
                    m = bound - abs(x)
                    if m < worst_margin:
                        worst_obs, worst_margin = abs(x), m
                    if abs(x) > tight_bound + TOL:
                        tight += 1
                rep.trials += 1
                rep.record({"gamma": name, "t0": str(t0), "x0": x0}, worst_obs, bound, worst_margin)
    rep.details["tight_envelope_violations"] = tight
    return rep


def settling_time(k: int) -> Fraction:
    """T_k = k + 2 + s_(k+2)."""
    return Fraction(k + 2 + s_j(k + 2))


def first_dip(traj: Trajectory, level: float) -> Optional[Fraction | float]:
    """Earliest time at which |x| <= level (zero-input exact trajectories), or None."""
    for seg in traj.segments:
        xa = abs(seg.x_start)
        if xa <= level + TOL:
            return seg.start
        if seg.kind != "exact" or seg.u_c * seg.input_gain != 0.0:
            raise ValueError("first_dip needs exact zero-input segments")
        d = math.log(xa / level)
        if d <= float(seg.end - seg.start) + TOL:
            return float(seg.start) + d
    return None


def check_settling(t0s: Iterable = DEFAULT_T0S, x0s: Iterable = DEFAULT_X0S,
                   sequences: Optional[dict] = None, ks: Iterable[int] = DEFAULT_KS) -> CheckReport:
    """From |x0| <= e^-k the state dips to e^-(k+1) within T_k."""
    sequences = sequences if sequences is not None else default_sequences()
    rep = CheckReport("settling")
    zero = InputSignal.zero()
    ks = tuple(ks)
    for name, seq in sequences.items():
        sys = system_a(seq)
        for t0 in t0s:
            t0 = as_time(t0)
            for x0 in x0s:
                if x0 == 0:
                    continue
                for k in ks:
                    if abs(x0) > math.exp(-k):
                        continue
                    window = settling_time(k)
                    level = math.exp(-(k + 1))
                    traj = simulate(sys, t0, x0, zero, t0 + window)
                    dip = first_dip(traj, level)
                    rep.trials += 1
                    params = {"gamma": name, "t0": str(t0), "x0": x0, "k": k}
                    if dip is None:
                        rep.record(params, math.inf, float(window), -math.inf)
                    else:
                        elapsed = float(dip - t0) if isinstance(dip, Fraction) else dip - float(t0)
                        rep.record(params, elapsed, float(window), float(window) - elapsed)
    return rep


def random_signal(rng: np.random.Generator, gamma: ImpulseTimeSequence, t0: Fraction,
                  horizon: Fraction) -> InputSignal:
    """Random piecewise-constant base with dyadic breakpoints plus atoms on impulse times."""
    span = int(horizon * 16)
    n_pieces = int(rng.integers(0, 6))
    cuts = sorted(set(int(c) for c in rng.integers(0, span + 1, size=2 * n_pieces)))
    pieces = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if b > a:
            pieces.append((t0 + Fraction(a, 16), t0 + Fraction(b, 16), float(rng.uniform(-2, 2))))
    taus = gamma.times_in(Interval.left_open(t0, t0 + horizon))
    atoms = {}
    if taus:
        picks = rng.choice(len(taus), size=min(len(taus), int(rng.integers(0, 11))), replace=False)
        for i in sorted(picks):
            atoms[taus[int(i)]] = float(rng.uniform(-1, 1) * 10 ** rng.uniform(-3, 0.5))
    # atoms off the impulse set must be ignored by both the flow and the norms
    atoms[t0 + Fraction(1, 3)] = 7.0
    return InputSignal.pieces(pieces, atoms)


def check_ubebs(trials: int = 1000, seed: int = 0, horizon=20) -> CheckReport:
    """|x(t)| <= |x0| + ||u_(t0,t]|| + 1 with rho1 = rho2 = id, at jumps and endpoint."""
    rng = np.random.default_rng(seed)
    horizon = as_time(horizon)
    rho = identity()
    rep = CheckReport("ubebs")
    family = ("gammastar", "periodic_1", "periodic_0.1", "explicit_random")
    for trial in range(trials):
        kind = family[trial % len(family)]
        t0 = Fraction(int(rng.integers(0, 30 * 8 + 1)), 8)
        if kind == "gammastar":
            gamma = GammaStar()
        elif kind == "periodic_1":
            gamma = Periodic(1, 1)
        elif kind == "periodic_0.1":
            gamma = Periodic(Fraction(1, 10), Fraction(1, 10))
        else:
            gamma = random_explicit(int(rng.integers(0, 2 ** 31)), t0 + horizon)
        x0 = float(rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-3, 1))
        u = random_signal(rng, gamma, t0, horizon)
        traj = simulate(system_a(gamma), t0, x0, u, t0 + horizon)
        checks = [(j.tau, j.x_plus) for j in traj.jumps] + [(traj.t_end, traj.x_final)]
        energies = energy_profile(u, t0, [t for t, _ in checks], gamma, rho, rho)
        worst = None
        for (t, x), en in zip(checks, energies):
            bound = abs(x0) + en + 1
            m = bound - abs(x)
            if worst is None or m < worst[2]:
                worst = (abs(x), bound, m, t)
        rep.trials += 1
        rep.record({"trial": trial, "gamma": kind, "t0": str(t0), "x0": x0, "t": str(worst[3])},
                   worst[0], worst[1], worst[2])
    return rep


def check_ubebs_on(traj: Trajectory, u: InputSignal, gamma: ImpulseTimeSequence,
                   name: str = "ubebs_trajectory") -> CheckReport:
    """The bounded-energy bound along one given trajectory."""
    rho = identity()
    rep = CheckReport(name)
    checks = [(j.tau, j.x_plus) for j in traj.jumps] + [(traj.t_end, traj.x_final)]
    energies = energy_profile(u, traj.t0, [t for t, _ in checks], gamma, rho, rho)
    for (t, x), en in zip(checks, energies):
        bound = abs(traj.x0) + en + 1
        rep.trials += 1
        rep.record({"t": str(t)}, abs(x), bound, bound - abs(x))
    return rep


def _zero_input_envelope(t0, x0: float, t_end, gamma) -> CheckReport:
    return check_gus([t0], [x0], {"rerun": gamma}, horizon=as_time(t_end) - as_time(t0))


# ------------------------------------------------------- negative experiments


def run_cics_violation(n_max: int = 10, engine: str = "exact") -> tuple[CheckReport, Trajectory]:
    """Vanishing input u* from x(0) = 0 keeps x(s_N + 1/2) >= 1 for every burst N."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    gamma = GammaStar()
    u = u_star(n_max)
    t_end = s_j(n_max) + Fraction(1, 2)
    traj = simulate(system_a(gamma), 0, 0.0, u, t_end, engine=engine)
    rep = CheckReport("cics_violation")
    ends, norms = [], []
    for n in range(1, n_max + 1):
        x = traj.sample(s_j(n) + Fraction(1, 2))
        ends.append(x)
        rep.trials += 1
        rep.record({"N": n, "what": "x(s_N+1/2) >= 1"}, x, 1.0, x - 1.0)
        norm = sup_norm(u, Interval.from_(s_j(n)), gamma)
        norms.append(norm)
        rep.record({"N": n, "what": "tail sup norm == mu_N"}, norm, mu_N(n), -abs(norm - mu_N(n)))
    for n in range(1, n_max):
        rep.record({"N": n + 1, "what": "tail sup norm decreasing"}, norms[n], norms[n - 1],
                   norms[n - 1] - norms[n] - TOL if norms[n] < norms[n - 1] else -1.0)
    bound = traj.sup_abs()
    rep.record({"what": "sup |x| <= 3"}, bound, 3.0, 3.0 - bound)
    rerun = _zero_input_envelope(0, 0.0, t_end, gamma)
    if not rerun.passed:
        rep.violations.append({"params": {"what": "zero-input rerun"}, "observed": rerun.violations, "bound": None})
    rep.details.update(n_max=n_max, block_end_values=ends, tail_sup_norms=norms,
                       mu=[mu_N(n) for n in range(1, n_max + 1)], sup_abs_x=bound,
                       jumps=len(traj.jumps), zero_input_rerun_pass=rerun.passed)
    return rep, traj


def smallest_burst_below(delta: float) -> int:
    if not delta > 0:
        raise ValueError("delta must be positive")
    n = 1
    while not mu_N(n) < delta:
        n += 1
    return n


def run_ts_violation(deltas: Sequence[float] = (0.5, 0.1, 0.01), engine: str = "exact") -> CheckReport:
    """Additive-input system: |x0| < delta and ||u|| < delta still reach |x| >= 1."""
    rep = CheckReport("ts_violation")
    rows = []
    for delta in deltas:
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        n = smallest_burst_below(delta)
        t0 = Fraction(s_j(n))
        t_hit = t0 + Fraction(1, 2)
        u = u_star(n)
        traj = simulate(system_b(GammaStar()), t0, 0.0, u, t_hit, engine=engine)
        x = traj.sample(t_hit)
        norm = sup_norm(u, Interval.from_(t0), GammaStar())
        same_as_a = simulate(system_a(GammaStar()), t0, 0.0, u, t_hit, engine=engine).x_final
        rep.trials += 1
        params = {"delta": delta, "N": n}
        rep.record({**params, "what": "|x(s_N+1/2)| >= 1"}, abs(x), 1.0, abs(x) - 1.0)
        rep.record({**params, "what": "input norm < delta"}, norm, delta, delta - norm if norm < delta else -1.0)
        rep.record({**params, "what": "input norm == mu_N"}, norm, mu_N(n), -abs(norm - mu_N(n)))
        rows.append({"delta": delta, "N": n, "mu_N": mu_N(n), "t0": str(t0), "x_hit": x,
                     "input_sup_norm": norm, "x_hit_flow_without_input": same_as_a})
    rep.details["runs"] = rows
    return rep


def synthesis_violations(res: SynthesisResult, delta2: float, rho2: KFunction) -> list[str]:
    """Structural facts of the synthesis; returns human-readable failures."""
    bad = []
    step = (1 - E_INV) * res.bar_mu
    for k in range(1, len(res.xi)):
        if not res.xi[k] - res.xi[k - 1] >= step - TOL:
            bad.append(f"xi increment at k={k} is {res.xi[k] - res.xi[k - 1]} < {step}")
    if res.F > res.iteration_bound():
        bad.append(f"F={res.F} exceeds bound {res.iteration_bound()}")
    if res.n1 > res.n0:
        bad.append(f"n1={res.n1} > n0={res.n0}")
    spent = sum(rho2(m) for m in res.mu)
    if spent > delta2 + TOL:
        bad.append(f"sum rho2(mu) = {spent} > delta2 = {delta2}")
    if not 0 < res.Delta < 0.5:
        bad.append(f"Delta={res.Delta} outside (0, 1/2)")
    if res.xi[-1] < E_INV - TOL:
        bad.append(f"xi_F = {res.xi[-1]} below e^-1")
    if not res.mu or res.mu[0] != res.bar_mu or res.k_indices[:1] != (1,):
        bad.append("first step must use bar_mu")
    ks = set(res.k_indices)
    for k in range(1, res.F + 1):
        want = res.bar_mu if k in ks else 0.0
        if res.mu[k - 1] != want:
            bad.append(f"mu_{k} = {res.mu[k - 1]} inconsistent with k_indices")
        if res.ell:
            drop = res.ell[k - 1] - res.ell[k]
            if drop != (1 if k in ks else 0):
                bad.append(f"ell_{k} - ell_{k-1} = {-drop}, expected {-1 if k in ks else 0}")
    return bad


def run_iiss_violation(delta1: float, delta2: float, rho1: Optional[KFunction] = None,
                       rho2: Optional[KFunction] = None, engine: str = "exact") -> tuple[CheckReport, Witness]:
    """Small initial state and small-energy input still reach |x| >= e^-1."""
    rho1, rho2 = rho1 or identity(), rho2 or identity()
    w = build_witness(delta1, delta2, rho1, rho2, engine=engine)
    exp, res = w.experiment, w.synthesis
    rep = CheckReport("iiss_violation", trials=1)
    params = {"delta1": delta1, "delta2": delta2, "rho1": rho1.name, "rho2": rho2.name}
    rep.record({**params, "what": "|x(t_final)| >= e^-1"}, abs(w.x_final), E_INV, abs(w.x_final) - E_INV)
    rep.record({**params, "what": "|x0| <= delta1"}, abs(exp.x0), delta1, delta1 - abs(exp.x0))
    rep.record({**params, "what": "energy <= delta2"}, w.energy, delta2, delta2 - w.energy)
    if res is not None:
        for msg in synthesis_violations(res, delta2, rho2):
            rep.violations.append({"params": params, "observed": msg, "bound": None})
        traj = simulate(system_a(GammaStar()), exp.t0, exp.x0, exp.u, exp.t_final, engine=engine)
        for k in range(1, res.F + 1):
            x = traj.sample(tau(exp.N, k))
            rep.record({**params, "what": f"x(tau_N,{k}) >= xi_{k}"}, x, res.xi[k], x - res.xi[k])
        rerun = _zero_input_envelope(exp.t0, exp.x0, exp.t_final, GammaStar())
        rep.details["zero_input_rerun_pass"] = rerun.passed
        if not rerun.passed:
            rep.violations.append({"params": params, "observed": "zero-input rerun broke the envelope", "bound": None})
    rep.details["witness"] = w.report()
    return rep, w
