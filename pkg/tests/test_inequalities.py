import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shocklab import entropy_flux as ef
from shocklab import inequalities as iq
from shocklab.errors import ConstraintError
from shocklab.functionals import ShockFrame
from shocklab.grid import ChannelGrid
from shocklab.shock_profile import build_weight, solve_profile
from shocklab.solver import SolverConfig, simulate


def test_grids():
    np.testing.assert_allclose(iq.z_midpoints(4), [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(iq.torus_nodes(4), [0, 0.25, 0.5, 0.75])


@pytest.mark.parametrize("n", [16, 64, 256])
def test_midpoint_integral(n):
    W = iq.from_callable(lambda z, x: z**2 + np.cos(2 * np.pi * x), lambda z, x: 2 * z + 0 * x, d=1, n_z=n, n_t=8)
    # midpoint rule error for z^2 is -h^2/12; the transverse mode integrates to 0 exactly
    assert W.integral(W.values) == pytest.approx(1 / 3 - 1 / (12 * n * n), abs=1e-15)


# ---------------------------------------------------------------------------
# R functional


def test_R_of_zero():
    assert iq.eval_R(iq.constant(0.0, d=1), 0.01, 1e-3) == 0.0


@pytest.mark.parametrize("c,delta,expected", [(-2.0, 0.1, -2 / 15), (0.0, 0.3, 0.0)])
def test_R_constant_examples(c, delta, expected):
    assert iq.R_constant(c, delta) == pytest.approx(expected, abs=1e-14)
    assert iq.eval_R(iq.constant(c, d=1), 0.5, delta) == pytest.approx(expected, abs=1e-14)


@given(st.floats(-3, 1), st.floats(1e-3, 0.5), st.integers(0, 2))
def test_R_constant_matches_quadrature(c, delta, d):
    assert iq.eval_R(iq.constant(c, d=d, n_z=16, n_t=4), 1.0, delta) == pytest.approx(
        iq.R_constant(c, delta), rel=1e-12, abs=1e-12
    )


def test_constraints_enforced():
    with pytest.raises(ConstraintError):
        iq.eval_R(iq.constant(200.0), 0.01, 1e-3, M=1e9)
    with pytest.raises(ConstraintError):
        iq.eval_R(iq.constant(3.0), 0.01, 1e-3, M=5.0)
    iq.eval_R(iq.constant(2.0), 0.01, 1e-3, M=5.0)


@pytest.mark.parametrize("d", [1, 2])
def test_random_W_satisfy_constraints(d):
    rng = np.random.default_rng(3)
    for _ in range(50):
        W = iq.random_constrained_W(rng, 0.01, 5.0, d=d, n_z=64, n_t=8)
        iq.check_constraints(W, 0.01, 5.0)
        assert W.d == d and np.all(np.isfinite(W.values))


def test_R_nonpositive_on_random_W():
    rng = np.random.default_rng(11)
    worst = max(iq.eval_R(iq.random_constrained_W(rng, 1e-2, 5.0, d=1 + k % 2, n_z=64, n_t=8), 1e-2, 1e-3, M=5.0)
                for k in range(200))
    assert worst <= 0.0


@given(st.integers(0, 2**32 - 1))
def test_R_quadrature_second_order(seed):
    # |T_j phi_m| <= 1, so the fluctuation stays within 0.5 and W < 0 keeps |W|^3 smooth
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=(5, 5))
    coef *= 0.5 / np.abs(coef).sum()
    R = [iq.eval_R(iq.trig_chebyshev(coef, 1, n_z=n, n_t=16, offset=-1.0), 0.5, 0.1) for n in (64, 128, 256)]
    e1, e2 = abs(R[0] - R[1]), abs(R[1] - R[2])
    assert e2 <= e1 / 3.5 + 1e-13


def test_trig_chebyshev_derivatives():
    coef = np.zeros((3, 3))
    coef[2, 1] = 1.0  # T_2(2z - 1) cos(2 pi x)
    W = iq.trig_chebyshev(coef, 1, n_z=32, n_t=8)
    z, x = W.z[:, None], iq.torus_nodes(8)[None, :]
    s = 2 * z - 1
    np.testing.assert_allclose(W.values, (2 * s * s - 1) * np.cos(2 * np.pi * x), atol=1e-14)
    np.testing.assert_allclose(W.dz, 8 * s * np.cos(2 * np.pi * x), atol=1e-13)
    np.testing.assert_allclose(W.dx[0], -(2 * s * s - 1) * 2 * np.pi * np.sin(2 * np.pi * x), atol=1e-13)


# ---------------------------------------------------------------------------
# pointwise bound and Poincare


def test_L_weight():
    assert float(iq.L_weight(0.5)) == pytest.approx(math.log(2) - 0.5, rel=1e-15)
    assert float(iq.L_weight(0.0)) == 0.0


def test_pointwise_constant_has_zero_slack():
    np.testing.assert_allclose(iq.pointwise_slack(iq.constant(1.7, d=1)), 0.0, atol=1e-14)


def test_pointwise_linear_example():
    n = 256
    f = iq.from_callable(lambda z, x: z + 0 * x, lambda z, x: 1 + 0 * z + 0 * x, d=1, n_z=n, n_t=4)
    slack = iq.pointwise_slack(f)
    k = n // 2 - 1  # node just below z = 1/2; shift the lhs to the exact centre
    D = 1 / 6 + 1 / (12 * n * n)
    rhs = math.sqrt(iq.L_weight(f.z[k]) + iq.L_weight(1 - f.z[k])) * math.sqrt(D)
    assert slack[k, 0] == pytest.approx(rhs - (f.z[k] - 0.5), rel=1e-12)
    assert math.sqrt(2 * (math.log(2) - 0.5)) * math.sqrt(1 / 6) == pytest.approx(0.2537, abs=1e-4)
    assert iq.pointwise_lemma_check(f) >= 0


def test_pointwise_random():
    rng = np.random.default_rng(5)
    worst = min(iq.pointwise_lemma_check(iq.random_trig_f(rng, d=1 + k % 2, n_t=8)) for k in range(100))
    assert worst >= -1e-8


@pytest.mark.parametrize("n", [64, 256])
def test_poincare_sharp_modes(n):
    cos = iq.from_callable(lambda z, x: np.cos(2 * np.pi * x) + 0 * z, lambda z, x: 0 * z + 0 * x,
                           dx=(lambda z, x: -2 * np.pi * np.sin(2 * np.pi * x) + 0 * z,), d=1, n_z=n, n_t=16)
    lin = iq.from_callable(lambda z: z, lambda z: np.ones_like(z), n_z=n)
    assert iq.poincare_slack(cos) == pytest.approx(0.0, abs=1e-12)
    assert iq.poincare_slack(lin) >= -1e-10
    assert iq.poincare_slack(lin) == pytest.approx(0.0, abs=1.0 / n**2)
    assert iq.poincare_slack(iq.constant(3.0, d=1)) == pytest.approx(0.0, abs=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_poincare_random(seed, d):
    f = iq.random_trig_f(np.random.default_rng(seed), d=d, deg_z=4, K=2, n_z=128, n_t=8)
    assert iq.poincare_slack(f) >= -1e-10


# ---------------------------------------------------------------------------
# constants and the algebraic region


def test_theta():
    theta, quad = iq.theta_constant()
    assert theta**2 == pytest.approx(5 - math.pi**2 / 3, abs=1e-14)
    assert quad == pytest.approx(1.71013, abs=1e-5)
    assert round(theta, 3) == 1.308
    assert theta == iq.THETA


def test_g_endpoints_exact():
    assert iq.g_poly_exact(Fraction(-2)) == Fraction(-4, 3)
    assert iq.g_poly_exact(Fraction(0)) == 0
    with pytest.raises(ValueError):
        iq.g_poly_exact(Fraction(-1))
    assert float(iq.g_poly(-2.0)) == pytest.approx(-4 / 3, abs=1e-15)
    assert float(iq.g_poly(0.0)) == 0.0


def test_g_midpoint_value():
    assert float(iq.g_poly(-1.0)) == pytest.approx(-8 / 3 + 1.4 * iq.THETA, abs=1e-14)
    assert float(iq.g_poly(-1.0)) == pytest.approx(-0.8359, abs=1e-4)


def test_g_negative_on_grid():
    x = -2.0 + 2.0 * np.arange(10_000) / 10_000
    assert np.all(iq.g_poly(x) < 0)


def test_P_delta_origin():
    assert iq.P_delta(0.0, 0.0, 0.1) - iq.E_poly(0.0, 0.0) ** 2 == 0.0


def test_algebraic_suite_coarse():
    rep = iq.algebraic_suite(deltas=[1e-3, 1e-2, 0.3], step=1e-2, g_points=1000)
    assert rep.nonempty
    assert rep.g_max_on_grid < 0 and rep.g_at_0 == 0.0
    assert np.all(np.diff(rep.delta3) <= 0) or np.all(np.isinf(rep.delta3))
    assert rep.delta2 <= 0.3


# ---------------------------------------------------------------------------
# interpolation inequality


def test_gn_exponents():
    assert iq.GN_EXPONENTS == (Fraction(1, 3), Fraction(1, 2), Fraction(3, 5))


@pytest.mark.parametrize("lam", [0.125, 1.0, 8.0])
def test_gaussian_norms_against_grid(lam):
    L = 12 / lam
    g = ChannelGrid(L, 4097, 1, 4)
    f = np.exp(-((lam * g.coords()[0]) ** 2)) + 0 * g.coords()[1]
    l2, l1, gl2 = iq.gaussian_norms(lam)
    assert math.sqrt(g.integrate_array(f * f)) == pytest.approx(l2, rel=1e-6)
    assert g.integrate_array(f) == pytest.approx(l1, rel=1e-6)
    assert iq.gn_check(f, g) == pytest.approx(iq.gn_ratio(l2, l1, gl2), rel=1e-4)


def test_gn_bounded_over_scaling():
    c = [iq.gn_ratio(*iq.gaussian_norms(lam)) for lam in np.geomspace(1 / 8, 8, 25)]
    assert max(c) <= 10


# ---------------------------------------------------------------------------
# normalised perturbation from a live run


@pytest.fixture(scope="module")
def live():
    sys = ef.make_system("burgers", "paper")
    p = solve_profile(sys.flux, 1.0, 0.9, L=200.0, n_xi=1024)
    w = build_weight(p, 0.4)
    g = ChannelGrid(200.0, 1024, 1, 8)
    c = g.coords()
    u0 = g.expand(p.u) + 0.05 * np.exp(-c[0] ** 2 / 20) * (1 + np.cos(2 * np.pi * c[1])) / 2
    tr = simulate(u0, p, w, sys, SolverConfig(t_end=5.0, cadence=5.0), g)
    return ShockFrame(g, p, w, sys), tr.final


def test_extract_W_of_profile_is_zero(live):
    frame, _ = live
    W = iq.extract_W(frame.u_tilde_field, frame, n_z=128)
    assert np.max(np.abs(W.values)) < 1e-12
    assert iq.eval_R(W, frame.eps, 1e-3, M=5.0) == pytest.approx(0.0, abs=1e-20)


def test_extract_W_from_simulation(live):
    frame, final = live
    u = frame.grid.shift_array(final.u, final.X)
    W = iq.extract_W(u, frame, n_z=256)
    iq.check_constraints(W, frame.eps, 5.0)
    assert np.all(np.isfinite(W.values)) and W.d == 1
    assert np.isfinite(iq.eval_R(W, frame.eps, 1e-3, M=5.0))
    assert iq.poincare_slack(W) >= -1e-6
