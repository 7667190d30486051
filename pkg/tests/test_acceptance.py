"""Acceptance suite: one group of checks per numbered criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion. Each item is desk scale (well under 30 s).
"""
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from impulsive.model import (
    TIME_INVARIANT, TIME_VARYING, bar_h, burst_step, mu_N, s_j, sigma, snap_log, system_a, u_star,
)
from impulsive.sequences import GammaStar, Interval
from impulsive.signals import energy_norm, k_function, sup_norm
from impulsive.sim import simulate
from impulsive.synth import E_INV, synthesize
from impulsive import verify
from regression import engine_gap, regression_cases

TOL = 1e-12
DELTAS = (1.0, 0.3, 0.1, 0.01)
RHOS = ("id", "r2", "r3")
GRID = [(d1, d2, rho) for d1 in DELTAS for d2 in DELTAS for rho in RHOS]


def criterion(num, title):
    return pytest.mark.criterion(num, title)


# ---------------------------------------------------------------- 1


@pytest.fixture(scope="module")
def cics():
    t = time.perf_counter()
    rep, traj = verify.run_cics_violation(10)
    return rep, traj, time.perf_counter() - t


C1 = criterion(1, "vanishing input keeps x(s_N+1/2) >= 1")


@C1
def test_cics_block_ends(cics):
    rep, traj, elapsed = cics
    ends = rep.details["block_end_values"]
    assert len(ends) == 10
    assert all(x >= 1 - TOL for x in ends), ends
    assert elapsed < 30


@C1
def test_cics_first_block_value(cics):
    _, traj, _ = cics
    assert abs(traj.sample(Fraction(3, 2)) - 1.562176) <= 1e-6


@C1
def test_cics_input_tail_vanishes(cics):
    rep, _, _ = cics
    norms = rep.details["tail_sup_norms"]
    assert norms == [mu_N(n) for n in range(1, 11)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 0.02
    assert sup_norm(u_star(10), Interval.from_(s_j(10)), GammaStar()) == mu_N(10)


# ---------------------------------------------------------------- 2


@criterion(2, "small state and small input still reach |x| >= 1")
@pytest.mark.parametrize("delta", [0.5, 0.1, 0.01])
def test_ts(delta):
    rep = verify.run_ts_violation([delta])
    run = rep.details["runs"][0]
    assert rep.passed
    assert abs(run["x_hit"]) >= 1 - TOL
    assert run["mu_N"] < delta and run["input_sup_norm"] < delta


# ---------------------------------------------------------------- 3


C3 = criterion(3, "small-energy witnesses reach e^-1")


@C3
@pytest.mark.parametrize("d1,d2,rho", GRID, ids=[f"{a}-{b}-{r}" for a, b, r in GRID])
def test_iiss_grid(d1, d2, rho):
    rep, w = verify.run_iiss_violation(d1, d2, rho2=k_function(rho))
    assert abs(w.experiment.x0) <= d1
    assert w.energy <= d2 + TOL
    assert w.x_final >= E_INV - TOL
    assert rep.passed, rep.violations


@C3
def test_iiss_reference_structure():
    _, w = verify.run_iiss_violation(0.3, 0.2)
    assert (w.synthesis.F, w.synthesis.n1, w.experiment.N) == (3, 2, 4)


@C3
def test_iiss_reference_x_final_pinned():
    _, w = verify.run_iiss_violation(0.3, 0.2)
    assert abs(w.x_final - 1.019981) <= 1e-6, f"x_final = {w.x_final!r}"


# ---------------------------------------------------------------- 4


@criterion(4, "synthesis structural suite")
def test_synthesis_structure():
    bad = []
    checked = 0
    for d1, d2, rho in GRID:
        if snap_log(d1) >= -1:
            continue  # trivial witness, no synthesis loop
        k = k_function(rho)
        res = synthesize(d1, d2, k)
        checked += 1
        step = (1 - E_INV) * res.bar_mu
        if not all(b - a >= step - TOL for a, b in zip(res.xi, res.xi[1:])):
            bad.append((d1, d2, rho, "increment"))
        if res.F > res.iteration_bound():
            bad.append((d1, d2, rho, "F bound"))
        if res.n1 > res.n0:
            bad.append((d1, d2, rho, "n1 > n0"))
        if sum(k(m) for m in res.mu) > d2 + TOL:
            bad.append((d1, d2, rho, "energy"))
        bad.extend((d1, d2, rho, m) for m in verify.synthesis_violations(res, d2, k))
    assert checked == 36
    assert bad == []


# ---------------------------------------------------------------- 5


C5 = criterion(5, "zero-input envelope, settling and bounded-energy bound")


@C5
def test_gus_and_settling_default_grid():
    seqs = verify.default_sequences()
    gus = verify.check_gus(sequences=seqs)
    settle = verify.check_settling(sequences=seqs)
    assert gus.trials + settle.trials >= 500
    assert gus.passed, gus.violations[:3]
    assert settle.passed, settle.violations[:3]


@C5
def test_ubebs_random_trials():
    rep = verify.check_ubebs(1000, seed=0)
    assert rep.trials == 1000
    assert rep.passed, rep.violations[:3]


# ---------------------------------------------------------------- 6


@criterion(6, "exact and rk4 engines agree to 1e-8")
def test_engine_regression_set():
    cases = regression_cases()
    assert len(cases) == 20
    gaps = {c[0]: engine_gap(*c[1:])[0] for c in cases}
    worst = max(gaps.values())
    assert worst <= 1e-8, gaps


# ---------------------------------------------------------------- 7


C7 = criterion(7, "construction identities")


@C7
def test_mu_geometric_sum():
    for n in range(1, 13):
        d = burst_step(n)
        total = math.fsum(math.exp(-j * d) for j in range(2 ** n))
        assert abs(mu_N(n) * total - 1) <= TOL, n


@C7
def test_bar_h_bounds_and_continuity():
    rs = np.logspace(-12, 0, 10_000)
    for r in rs:
        r = float(r)
        v = bar_h(r)
        assert r * (1 - 1e-15) <= v <= math.exp(math.ceil(snap_log(r))) * (1 + 1e-15)
    for m in range(0, -11, -1):
        for edge in (math.exp(m), math.exp(m - 0.5)):
            eps = 1e-7 * edge
            assert abs(bar_h(edge + eps) - bar_h(edge)) < 1e-6
            assert abs(bar_h(edge - eps) - bar_h(edge)) < 1e-6


@C7
def test_schedule_vanishes_on_dyadic_bursts():
    times = GammaStar().times_in(Interval.left_open(0, s_j(8) + Fraction(1, 2)))
    assert len(times) == sum(2 ** n + 1 for n in range(1, 9))
    assert all(sigma(t) == 0 for t in times)


@C7
def test_jump_modes_agree_bit_for_bit():
    gamma = GammaStar()
    cases = [(0, 0.0, u_star(6), s_j(6) + Fraction(1, 2)), (0, 0.9, u_star(6), 20),
             (Fraction(11, 2), 0.05, u_star(6), 25), (10, 0.3, u_star(6), Fraction(21, 2))]
    for t0, x0, u, t_end in cases:
        tv = simulate(system_a(gamma, TIME_VARYING), t0, x0, u, t_end)
        ti = simulate(system_a(gamma, TIME_INVARIANT), t0, x0, u, t_end)
        assert tv.jumps == ti.jumps
        assert tv.x_final == ti.x_final


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
