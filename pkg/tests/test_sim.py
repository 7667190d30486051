import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from impulsive.model import (
    GenericJump, GenericRHS, ImpulsiveSystem, LinearDecay, SawtoothJumpMap, h, mu_N, s_j, system_a,
    system_b, tau, u_star,
)
from impulsive.sequences import Explicit, GammaStar, Periodic
from impulsive.signals import InputSignal
from impulsive.sim import SimulationError, affine_flow, simulate
from oracles import burst_run_mp, cics_block_end_mp
from regression import engine_gap, regression_cases

ZERO = InputSignal.zero()


def test_pure_flow_without_impulses():
    traj = simulate(system_a(Periodic(2, 1)), 0, 2.0, ZERO, 1)
    assert traj.x_final == pytest.approx(2 * math.exp(-1), abs=1e-15)
    assert traj.x_final == pytest.approx(0.735759, abs=1e-6)
    assert traj.jumps == ()


def test_jump_fires_at_t_end():
    # tau = 1 is the first impulse of the dyadic sequence: 2/e is lifted to 1
    traj = simulate(system_a(GammaStar()), 0, 2.0, ZERO, 1)
    assert traj.jump_times == [1]
    assert traj.left_limit(1) == pytest.approx(0.735759, abs=1e-6)
    assert traj.x_final == 1.0


def test_cics_trace_against_oracle():
    traj = simulate(system_a(GammaStar()), 0, 0.0, u_star(2), Fraction(3, 2))
    expected = {
        Fraction(1): 0.5621765008857981,
        Fraction(5, 4): 1.1153182560893100,
        Fraction(3, 2): 1.5621765008857981,
    }
    for t, x in expected.items():
        assert traj.sample(t) == pytest.approx(x, abs=1e-13)
    assert traj.left_limit(Fraction(5, 4)) == pytest.approx(0.43782349911420190, abs=1e-13)
    assert traj.left_limit(Fraction(3, 2)) == pytest.approx(0.86861073121618827, abs=1e-13)
    assert traj.x_final == pytest.approx(float(cics_block_end_mp(1)[0]), abs=1e-13)


def test_synthesized_input_trace_against_oracle():
    u = InputSignal(atoms={tau(4, 1): 0.1, tau(4, 3): 0.1})
    traj = simulate(system_a(GammaStar()), 10, 0.3, u, tau(4, 3))
    want = burst_run_mp(0.3, 4, [0.1, 0.0, 0.1])
    for k, w in enumerate(want, start=1):
        assert traj.sample(tau(4, k)) == pytest.approx(float(w), abs=1e-13)
    assert traj.x_final == pytest.approx(1.0200022093554392, abs=1e-13)


def test_impulse_at_t0_does_not_fire():
    traj = simulate(system_a(GammaStar()), 10, 0.3, ZERO, Fraction(161, 16))
    assert traj.jump_times[0] == tau(4, 1)
    assert traj.sample(10) == 0.3


def test_sample_semantics():
    traj = simulate(system_a(GammaStar()), 0, 0.0, u_star(1), Fraction(3, 2))
    assert traj.sample(0) == 0.0
    for j in traj.jumps:
        assert traj.sample(j.tau) == j.x_plus
    with pytest.raises(ValueError):
        traj.sample(2)
    with pytest.raises(ValueError):
        traj.left_limit(Fraction(9, 8))


def test_zero_solution():
    for engine in ("exact", "rk4"):
        traj = simulate(system_b(GammaStar()), 0, 0.0, ZERO, 7, engine=engine)
        assert all(j.x_minus == 0.0 and j.x_plus == 0.0 for j in traj.jumps)
        assert traj.sup_abs() == 0.0


def test_input_drives_flow_only_for_system_b():
    u = InputSignal.pieces([(0, 2, 1.0)])
    a = simulate(system_a(Explicit([])), 0, 0.0, u, 1)
    b = simulate(system_b(Explicit([])), 0, 0.0, u, 1)
    assert a.x_final == 0.0
    assert b.x_final == pytest.approx(1 - math.exp(-1), abs=1e-15)


def test_breakpoint_inside_window():
    u = InputSignal.pieces([(0, Fraction(1, 2), 2.0)])
    traj = simulate(system_b(Explicit([])), 0, 0.0, u, 1)
    x_half = 2 * (1 - math.exp(-0.5))
    assert traj.sample(Fraction(1, 2)) == pytest.approx(x_half, abs=1e-15)
    assert traj.x_final == pytest.approx(x_half * math.exp(-0.5), abs=1e-15)


def test_errors():
    sys_ = system_a(GammaStar())
    with pytest.raises(ValueError):
        simulate(sys_, 2, 0.0, ZERO, 1)
    with pytest.raises(ValueError):
        simulate(sys_, 0, 0.0, ZERO, 1, engine="euler")
    with pytest.raises(ValueError):
        simulate(sys_, 0, 0.0, ZERO, 1, step=0.01)
    with pytest.raises(ValueError, match="truncated"):
        simulate(sys_, 0, 0.0, u_star(2), 6)
    generic = ImpulsiveSystem(GenericRHS(lambda t, x, u: -x ** 3), SawtoothJumpMap(), GammaStar())
    with pytest.raises(ValueError, match="exact engine"):
        simulate(generic, 0, 1.0, ZERO, 1)
    blowup = ImpulsiveSystem(LinearDecay(), GenericJump(lambda t, x, u: x * 1e308), Periodic(1, 1))
    with pytest.raises(SimulationError, match="t=1"):
        simulate(blowup, 0, 10.0, ZERO, 2)


def test_generic_rhs_rk4_against_closed_form():
    # x' = -x^3 solves to x / sqrt(1 + 2 x^2 t)
    generic = ImpulsiveSystem(GenericRHS(lambda t, x, u: -x ** 3), GenericJump(lambda t, x, u: x), Explicit([]))
    traj = simulate(generic, 0, 2.0, ZERO, 1, engine="rk4")
    assert traj.x_final == pytest.approx(2 / math.sqrt(1 + 8), abs=1e-10)


def test_csv_export(tmp_path):
    traj = simulate(system_a(GammaStar()), 0, 0.0, u_star(1), Fraction(3, 2))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, exact_times=True)
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["t", "x", "kind", "t_exact"]
    kinds = [(r["t_exact"], r["kind"]) for r in rows if r["kind"] != "flow"]
    assert kinds == [("1", "pre_jump"), ("1", "post_jump"), ("5/4", "pre_jump"), ("5/4", "post_jump"),
                     ("3/2", "pre_jump"), ("3/2", "post_jump")]
    assert float(rows[-1]["x"]) == traj.x_final
    plain = tmp_path / "plain.csv"
    traj.to_csv(plain)
    assert plain.read_text().splitlines()[0] == "t,x,kind"


@pytest.mark.parametrize("case", regression_cases(), ids=lambda c: c[0])
def test_engine_agreement(case):
    _, system, gamma, t0, x0, u, t_end = case
    gap, _ = engine_gap(system, gamma, t0, x0, u, t_end)
    assert gap <= 1e-8


def test_rk4_lands_on_events():
    traj = simulate(system_a(Periodic(Fraction(1, 3), Fraction(1, 3))), 0, 1.0, ZERO, 1, engine="rk4")
    for seg in traj.segments:
        if seg.kind != "samples":
            continue
        assert seg.ts[-1] == float(seg.end - seg.start)
        assert np.all(np.diff(seg.ts) <= 1e-3 * (1 + 1e-9))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 80), st.floats(-3, 3), st.integers(1, 40), st.integers(0, 2 ** 31))
def test_replay_jumps_bit_for_bit(t0_eighths, x0, span, seed):
    from impulsive.verify import random_signal
    rng = np.random.default_rng(seed)
    t0 = Fraction(t0_eighths, 8)
    t_end = t0 + Fraction(span, 4)
    gamma = GammaStar() if seed % 2 else Periodic(Fraction(1, 4), Fraction(1, 4))
    u = random_signal(rng, gamma, t0, t_end - t0)
    traj = simulate(system_b(gamma), t0, x0, u, t_end)
    for j in traj.jumps:
        assert h(j.tau, j.x_minus, u(j.tau)) == j.x_plus
    assert math.isfinite(traj.x_final)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(-5, 5), st.floats(0, 10))
def test_affine_flow_semigroup(x0, drive, d):
    a = affine_flow(affine_flow(x0, drive, d / 2), drive, d / 2)
    assert a == pytest.approx(affine_flow(x0, drive, d), abs=1e-12 * (1 + abs(x0) + abs(drive)))


def test_tail_sup_norm_block_bound():
    # block ends stay at or above 1 for the vanishing input
    traj = simulate(system_a(GammaStar()), 0, 0.0, u_star(6), s_j(6) + Fraction(1, 2))
    for n, w in enumerate(cics_block_end_mp(6), start=1):
        x = traj.sample(s_j(n) + Fraction(1, 2))
        assert x == pytest.approx(float(w), abs=1e-12)
        assert x >= 1 - 1e-12
    assert mu_N(6) < mu_N(1)
