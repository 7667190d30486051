"""Adversarial input synthesis for the integral-ISS counterexample.

:func:`synthesize` builds a lower-bound state sequence ``xi`` and a sparse
input sequence ``mu`` (each entry 0 or ``bar_mu``) that carries a state of
size ``delta1`` above ``e^-1`` while the input energy stays below ``delta2``.
:func:`assemble` places that input on one burst of the dyadic impulse
sequence, and :func:`falsify_iiss_candidate` uses the pipeline to refute a
proposed iISS estimate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .model import bar_h, burst_step, s_j, snap_log, system_a, tau
from .sequences import GammaStar, Interval
from .signals import InputSignal, KFunction, energy_norm, identity, k_inverse
from .sim import simulate

E_INV = math.exp(-1.0)
TOL = 1e-12


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthesisResult:
    n0: int
    bar_mu: float
    Delta: float
    F: int
    xi: tuple
    mu: tuple
    k_indices: tuple
    ell: tuple = field(default=(), repr=False)

    @property
    def n1(self) -> int:
        return len(self.k_indices)

    def iteration_bound(self) -> int:
        """Ceiling bound on F from the guaranteed per-step growth."""
        return math.ceil((E_INV - math.exp(-self.n0)) / ((1 - E_INV) * self.bar_mu))


@dataclass(frozen=True)
class IissExperiment:
    N: int
    t0: Fraction
    x0: float
    u: InputSignal
    t_final: Fraction
    threshold: float = E_INV


def synthesis_parameters(delta1: float, delta2: float, rho2: KFunction) -> tuple[int, float, float]:
    """``(n0, bar_mu, Delta)`` for ``0 < delta1 < e^-1``."""
    n0 = -math.floor(snap_log(delta1))
    bar_mu = min(k_inverse(rho2, delta2 / n0), math.exp(-n0 + 1) - math.exp(-n0))
    delta = min(-math.log1p(-bar_mu), math.log((1 + math.sqrt(math.e) * bar_mu) / (1 + bar_mu)))
    return n0, bar_mu, delta


def synthesize(delta1: float, delta2: float, rho2: Optional[KFunction] = None) -> SynthesisResult:
    rho2 = rho2 or identity()
    if not delta2 > 0:
        raise ValueError("delta2 must be positive")
    if not 0 < delta1 or snap_log(delta1) >= -1:
        raise ValueError("synthesis needs 0 < delta1 < e^-1; larger delta1 is a trivial witness")
    n0, bar_mu, delta = synthesis_parameters(delta1, delta2, rho2)
    decay = math.exp(-delta)
    limit = 2 * math.ceil((E_INV - math.exp(-n0)) / ((1 - E_INV) * bar_mu))

    xi = [math.exp(-n0)]
    mu: list[float] = []
    ks: list[int] = []
    ells: list[int] = []
    k = 0
    while True:
        shrunk = xi[k] * decay
        # ln(xi) - Delta, taken on the product so the branch test matches bar_h's own
        log_shrunk = snap_log(shrunk)
        ells.append(-math.ceil(log_shrunk))
        k += 1
        if -ells[k - 1] - 0.5 <= log_shrunk <= -ells[k - 1]:
            mu.append(bar_mu)
            ks.append(k)
        else:
            mu.append(0.0)
        xi.append(bar_h(shrunk) + mu[-1])
        if xi[k] >= E_INV:
            break
        if k >= limit:
            raise SynthesisError("algorithm failed to terminate")
    ells.append(-math.ceil(snap_log(xi[k] * decay)))
    return SynthesisResult(n0, bar_mu, delta, k, tuple(xi), tuple(mu), tuple(ks), tuple(ells))


def choose_burst(result: SynthesisResult, n_override: Optional[int] = None) -> int:
    """Smallest burst index whose spacing is below Delta and that holds F impulses after its start."""
    n = 1
    while not (burst_step(n) < result.Delta and 2 ** n > result.F):
        n += 1
    if n_override is not None:
        if n_override < n:
            raise ValueError(f"burst {n_override} is too coarse; need N >= {n}")
        n = n_override
    return n


def assemble(result: SynthesisResult, delta1: float, delta2: float,
             rho1: Optional[KFunction] = None, rho2: Optional[KFunction] = None,
             n_override: Optional[int] = None) -> IissExperiment:
    n = choose_burst(result, n_override)
    atoms = {tau(n, k): m for k, m in enumerate(result.mu, start=1)}
    exp = IissExperiment(n, Fraction(s_j(n)), float(delta1), InputSignal(atoms=atoms), tau(n, result.F))
    rho1, rho2 = rho1 or identity(), rho2 or identity()
    energy = energy_norm(exp.u, Interval.left_open(exp.t0, exp.t_final), GammaStar(), rho1, rho2)
    if energy > delta2 + TOL:
        raise SynthesisError(f"assembled input energy {energy} exceeds delta2={delta2}")
    return exp


def trivial_experiment(delta1: float) -> IissExperiment:
    """For ``delta1 >= e^-1`` the initial state is already a witness."""
    return IissExperiment(0, Fraction(0), float(delta1), InputSignal.zero(), Fraction(0))


@dataclass
class Witness:
    delta1: float
    delta2: float
    experiment: IissExperiment
    synthesis: Optional[SynthesisResult]
    x_final: float
    energy: float

    @property
    def margin(self) -> float:
        return abs(self.x_final) - E_INV

    def report(self) -> dict:
        exp, res = self.experiment, self.synthesis
        out = {
            "delta1": self.delta1,
            "delta2": self.delta2,
            "N": exp.N,
            "t0": float(exp.t0),
            "t0_exact": str(exp.t0),
            "t_final": float(exp.t_final),
            "t_final_exact": str(exp.t_final),
            "x0": exp.x0,
            "x_final": self.x_final,
            "energy": self.energy,
            "threshold": exp.threshold,
            "margin": self.margin,
        }
        if res is not None:
            out.update(n0=res.n0, bar_mu=res.bar_mu, Delta=res.Delta, F=res.F, n1=res.n1,
                       xi=list(res.xi), mu=list(res.mu), k_indices=list(res.k_indices))
        else:
            out.update(n0=None, bar_mu=None, Delta=None, F=0, n1=0, xi=[], mu=[], k_indices=[])
        return out


def build_witness(delta1: float, delta2: float, rho1: Optional[KFunction] = None,
                  rho2: Optional[KFunction] = None, engine: str = "exact",
                  n_override: Optional[int] = None) -> Witness:
    """Synthesize, assemble and simulate; short-circuits when delta1 >= e^-1."""
    rho1, rho2 = rho1 or identity(), rho2 or identity()
    if snap_log(delta1) >= -1:
        exp = trivial_experiment(delta1)
        return Witness(delta1, delta2, exp, None, exp.x0, 0.0)
    res = synthesize(delta1, delta2, rho2)
    exp = assemble(res, delta1, delta2, rho1, rho2, n_override)
    traj = simulate(system_a(GammaStar()), exp.t0, exp.x0, exp.u, exp.t_final, engine=engine)
    energy = energy_norm(exp.u, Interval.left_open(exp.t0, exp.t_final), GammaStar(), rho1, rho2)
    return Witness(delta1, delta2, exp, res, traj.x_final, energy)


def find_falsifying_delta(alpha: Callable[[float], float], beta0: Callable[[float], float],
                          floor: float = 1e-6) -> float:
    """Largest-ish delta with ``beta0(delta) + delta < alpha(e^-1)``.

    Halves from ``alpha(e^-1)/2`` until feasible, then bisects toward the
    feasibility boundary and keeps the last feasible point.
    """
    target = alpha(E_INV)

    def ok(d):
        return beta0(d) + d < target

    hi = target
    lo = target / 2
    while not ok(lo):
        hi = lo
        lo /= 2
        if lo < floor:
            raise SynthesisError("candidate too weak to falsify at desk scale")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def falsify_iiss_candidate(alpha: KFunction, beta0: Callable[[float], float],
                           rho1: Optional[KFunction] = None, rho2: Optional[KFunction] = None,
                           engine: str = "exact") -> dict:
    """Refute ``alpha(|x(t)|) <= beta(|x0|, t - t0) + ||u||`` for the given candidate.

    ``beta0(r)`` stands for ``beta(r, 0)``, which dominates ``beta(r, s)``.
    """
    delta = find_falsifying_delta(alpha, beta0)
    w = build_witness(delta, delta, rho1, rho2, engine=engine)
    lhs = alpha(abs(w.x_final))
    rhs = beta0(delta) + w.energy
    return {
        "delta": delta,
        "alpha_threshold": alpha(E_INV),
        "beta0_delta_plus_delta": beta0(delta) + delta,
        "witness": w.report(),
        "lhs_alpha_x": lhs,
        "rhs_bound": rhs,
        "violated": lhs > rhs and abs(w.x_final) >= E_INV - TOL,
    }


def result_dict(result: SynthesisResult) -> dict:
    d = asdict(result)
    d["n1"] = result.n1
    for key in ("xi", "mu", "k_indices", "ell"):
        d[key] = list(d[key])
    return d
