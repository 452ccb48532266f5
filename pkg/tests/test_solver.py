import numpy as np
import pytest

from shocklab import entropy_flux as ef
from shocklab.errors import BlowUpError, CFLError, GridMismatchError, ShiftTooLargeError
from shocklab.grid import ChannelField, ChannelGrid
from shocklab.shock_profile import build_weight, burgers_closed_form, solve_profile
from shocklab.solver import (
    TRAJECTORY_COLUMNS,
    MovingFrameOperator,
    SimulationState,
    SolverConfig,
    evolve_pair,
    l1_distance,
    l2_distance,
    linf_distance,
    simulate,
    step,
)

SYS = ef.make_system("burgers", "paper")


@pytest.fixture(scope="module")
def shock():
    p = solve_profile(SYS.flux, 1.0, 0.9, L=200.0, n_xi=1024)
    return p, build_weight(p, 0.4)


@pytest.mark.parametrize(
    "kw", [dict(cfl_advective=0.0), dict(cfl_diffusive=1.0), dict(scheme="weno"), dict(time="rk4"), dict(t_end=-1)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_constant_state_is_steady():
    # constants solve the equation; ghosts equal the constant for a flat profile pair
    p = solve_profile(SYS.flux, 1.0, 0.9, L=200.0, n_xi=256)
    g = ChannelGrid(200.0, 256, 1, 4)
    op = MovingFrameOperator(g, SYS, p)
    op.ghost_left[:] = 0.3
    op.ghost_right[:] = 0.3
    cfg = SolverConfig(t_end=1.0)
    st = SimulationState(0.0, np.full(g.shape, 0.3))
    for _ in range(20):
        st = step(st, op.stable_dt(st.u, cfg), op, cfg)
        assert np.max(np.abs(st.u - 0.3)) < 1e-13


def test_profile_is_steady(shock):
    p, w = shock
    drift = []
    for n in (1024, 2048):
        q = solve_profile(SYS.flux, 1.0, 0.9, L=200.0, n_xi=n)
        g = ChannelGrid(200.0, n)
        tr = simulate(q.u, q, build_weight(q, 0.4), SYS, SolverConfig(t_end=10.0, cadence=10.0), g)
        drift.append(np.max(np.abs(tr.final.u - q.u)))
    assert drift[1] < 1e-6
    assert drift[0] / drift[1] > 3.5


def test_profile_start_has_no_shift(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024, 1, 4)
    tr = simulate(g.expand(p.u), p, w, SYS, SolverConfig(t_end=2.0, cadence=1.0), g)
    # only the discretization drift of the profile feeds the shift
    assert np.max(np.abs(tr.column("X"))) < 1e-6
    assert np.max(tr.column("weighted_entropy")) < 1e-12


def _manufactured():
    um, up, sig, eps, A = 1.0, -1.0, 0.0, 2.0, 0.05

    def ut(xi):
        return burgers_closed_form(sig, eps, xi)

    def dut(xi):
        return -(eps**2 / 8) / np.cosh(eps * xi / 4) ** 2

    def exact(t, xi, x2):
        return A * np.exp(-t) * np.exp(-(xi**2)) * np.sin(2 * np.pi * x2)

    def forcing(t, xi, x2):
        w = exact(t, xi, x2)
        wx = -2 * xi * w
        wxx = ((2 * xi) ** 2 - 2) * w
        wyy = -4 * np.pi**2 * w
        return -w - sig * wx + (dut(xi) * w + ut(xi) * wx + w * wx) - wxx - wyy

    return (um, up), ut, exact, forcing


@pytest.mark.parametrize("time,order", [("ssprk2", 1.9), ("imex", 0.9)])
def test_manufactured_order(time, order):
    (um, up), ut, exact, forcing = _manufactured()
    errs = []
    for n, nt in ((129, 8), (257, 16), (513, 32)):
        p = solve_profile(SYS.flux, um, up, L=15.0, n_xi=n)
        g = ChannelGrid(15.0, n, 1, nt)
        xi, x2 = g.coords()
        cfg = SolverConfig(t_end=0.5, cadence=0.5, shift=False, time=time)
        tr = simulate(ut(xi) + exact(0, xi, x2), p, build_weight(p, 0.4), SYS, cfg, g, forcing=forcing)
        e = tr.final.u - (ut(xi) + exact(0.5, xi, x2))
        errs.append(np.sqrt(g.integrate_array(e**2)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= order), rates


@pytest.mark.parametrize("d", [0, 1])
def test_maximum_principle_llf(shock, d):
    p, w = shock
    g = ChannelGrid(200.0, 1024, d, 8)
    c = g.coords()
    bump = 0.5 * np.exp(-c[0] ** 2 / 20)
    if d:
        bump = bump * (1 + np.cos(2 * np.pi * c[1])) / 2
    tr = simulate(g.expand(p.u) + bump, p, w, SYS,
                  SolverConfig(t_end=10.0, cadence=5.0, scheme="llf", track_extrema=True, shift=False), g)
    assert np.max(np.diff(tr.step_max)) <= 1e-12
    assert np.min(np.diff(tr.step_min)) >= -1e-12


def test_weighted_entropy_decreases_d0(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024)
    u0 = p.u + 0.5 * np.exp(-g.xi**2 / 10)
    tr = simulate(u0, p, w, SYS, SolverConfig(t_end=5.0, cadence=0.0), g)
    E = tr.column("weighted_entropy")
    assert np.all(np.diff(E) <= 1e-6 * E[:-1])


@pytest.mark.parametrize("scheme", ["llf", "muscl"])
def test_l1_contraction(shock, scheme):
    p, w = shock
    g = ChannelGrid(200.0, 1024)
    xi = g.xi
    u0 = p.u + 0.5 * np.exp(-xi**2 / 20)
    v0 = u0 + 0.3 * xi / 5 * np.exp(-((xi - 5) ** 2) / 20)  # sign-changing difference
    t, dist = evolve_pair(u0, v0, p, SYS, SolverConfig(t_end=10.0, scheme=scheme), g, 1.0)
    growth = np.diff(dist) / (dist[:-1] * np.diff(t))
    assert growth.max() <= 1e-8
    assert dist[-1] < dist[0]


def test_distances():
    g = ChannelGrid(10.0, 201, 1, 8)
    u = ChannelField.from_function(g, lambda xi, x2: np.sin(xi) + x2)
    assert l1_distance(u, u) == 0.0
    v = u + 0.25
    assert l1_distance(u, v) == pytest.approx(20 * 0.25, rel=1e-13)
    assert l2_distance(u, v) == pytest.approx(np.sqrt(20) * 0.25, rel=1e-13)
    assert linf_distance(u, v) == pytest.approx(0.25, rel=1e-13)
    bump = ChannelField.from_function(g, lambda xi, x2: np.exp(-(xi**2)) + 0 * x2)
    zero = ChannelField(g, np.zeros(g.shape))
    assert l1_distance(bump, zero) == pytest.approx(np.sqrt(np.pi), abs=1e-6)
    with pytest.raises(GridMismatchError):
        l1_distance(u, ChannelField(ChannelGrid(10.0, 101, 1, 8), np.zeros((101, 8))))


def test_cfl_error(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024)
    op = MovingFrameOperator(g, SYS, p)
    cfg = SolverConfig()
    st = SimulationState(0.0, p.u.copy())
    with pytest.raises(CFLError):
        step(st, 10 * op.stable_dt(st.u, cfg), op, cfg)


def test_nonfinite_initial_data(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024)
    u0 = p.u.copy()
    u0[10] = np.inf
    with pytest.raises(BlowUpError):
        simulate(u0, p, w, SYS, SolverConfig(t_end=1.0), g)


def test_shift_too_large():
    # the excess mass of the bump moves the shock by about 8.4 > L/2
    p = solve_profile(SYS.flux, 2.0, 0.0, L=12.0, n_xi=256)
    g = ChannelGrid(12.0, 256)
    u0 = p.u + 3.0 * np.exp(-g.xi**2 / 10)
    with pytest.raises(ShiftTooLargeError):
        simulate(u0, p, build_weight(p, 0.4), SYS, SolverConfig(t_end=40.0, cadence=1.0), g)


def test_sampling_and_columns(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024)
    tr = simulate(p.u + 0.1 * np.exp(-g.xi**2), p, w, SYS, SolverConfig(t_end=1.0, cadence=0.25), g)
    np.testing.assert_allclose(tr.column("t"), [0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)
    assert list(tr.samples[0].row()) == TRAJECTORY_COLUMNS
    assert tr.shift.bound_violation() <= 4 * np.finfo(float).eps


def test_imex_matches_explicit(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024, 1, 4)
    c = g.coords()
    u0 = g.expand(p.u) + 0.2 * np.exp(-c[0] ** 2 / 20) * np.cos(2 * np.pi * c[1])
    a = simulate(u0, p, w, SYS, SolverConfig(t_end=2.0, cadence=2.0), g)
    b = simulate(u0, p, w, SYS, SolverConfig(t_end=2.0, cadence=2.0, time="imex", cfl_advective=0.1), g)
    assert np.max(np.abs(a.final.u - b.final.u)) < 5e-3


def test_jit_and_numpy_paths_agree(shock):
    p, w = shock
    g = ChannelGrid(200.0, 1024, 1, 4)
    c = g.coords()
    u = g.expand(p.u) + 0.3 * np.exp(-c[0] ** 2 / 20) * (1 + np.cos(2 * np.pi * c[1])) / 2
    for scheme in ("muscl", "llf"):
        fast = MovingFrameOperator(g, SYS, p, scheme).explicit_rhs(u, 0.0)
        ref = MovingFrameOperator(g, SYS, p, scheme, use_jit=False).explicit_rhs(u, 0.0)
        np.testing.assert_allclose(fast, ref, rtol=0, atol=1e-14)
