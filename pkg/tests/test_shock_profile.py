import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shocklab import entropy_flux as ef
from shocklab.errors import DegenerateStatesError, DomainError, TailNotConvergedError
from shocklab.shock_profile import (
    build_weight,
    burgers_closed_form,
    rankine_hugoniot,
    solve_profile,
    validate_profile,
    z_inverse,
    z_map,
)

BURGERS = ef.burgers_flux()


@pytest.fixture(scope="module")
def burgers():
    return solve_profile(BURGERS, 1.0, 0.9, L=200.0, n_xi=2048)


@pytest.mark.parametrize(
    "flux,um,up,sigma",
    [("burgers", 1.0, 0.0, 0.5), ("burgers", 1.0, 0.9, 0.95), ("exp", 1.0, 0.0, math.e - 1)],
)
def test_rankine_hugoniot(flux, um, up, sigma):
    assert rankine_hugoniot(ef.make_flux(flux), um, up) == pytest.approx(sigma, rel=1e-14)


def test_degenerate_states():
    with pytest.raises(DegenerateStatesError):
        rankine_hugoniot(BURGERS, 0.3, 0.3)
    with pytest.raises(DegenerateStatesError):
        solve_profile(BURGERS, 0.3, 0.3)


def test_wrong_orientation():
    with pytest.raises(DomainError):
        solve_profile(BURGERS, 0.9, 1.0)


def test_burgers_closed_form(burgers):
    exact = burgers_closed_form(burgers.sigma, burgers.eps, burgers.xi)
    assert np.max(np.abs(burgers.u - exact)) <= 1e-8


def test_midpoint_and_tails(burgers):
    assert float(burgers.evaluate(0.0)) == pytest.approx(0.95, abs=1e-15)
    assert abs(burgers.u[0] - 1.0) < 1e-4 * burgers.eps
    assert abs(burgers.u[-1] - 0.9) < 1e-4 * burgers.eps


def test_monotone_and_bracketed(burgers):
    inside = (burgers.u > burgers.u_plus) & (burgers.u < burgers.u_minus)
    assert np.all(burgers.du[inside] < 0)
    assert np.all(np.diff(burgers.u) <= 0)
    assert burgers.u.max() <= 1.0 and burgers.u.min() >= 0.9


def test_ode_residual(burgers):
    assert burgers.ode_residual() < 1e-12


def test_tail_not_converged():
    with pytest.raises(TailNotConvergedError):
        solve_profile(BURGERS, 1.0, 0.9, L=20.0, n_xi=256)


def test_refinement_order():
    # fixed-step RK4 makes the error grid dependent
    errs = []
    for n in (257, 513, 1025):
        p = solve_profile(BURGERS, 1.0, 0.9, L=200.0, n_xi=n, method="rk4")
        errs.append(np.max(np.abs(p.u - burgers_closed_form(p.sigma, p.eps, p.xi))))
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8


@pytest.mark.parametrize("flux", ["burgers", "cubic", "exp"])
def test_other_fluxes(flux):
    p = solve_profile(ef.make_flux(flux), 0.5, 0.4, n_xi=2049)  # node at xi = 0
    assert p.ode_residual() < 1e-10
    assert np.all(np.diff(p.u) <= 0)
    assert float(p.evaluate(0.0)) == pytest.approx(0.45, abs=1e-14)


def test_weight(burgers):
    w = build_weight(burgers, 0.4)
    assert w.a[0] == pytest.approx(1.0, abs=1e-4)
    assert w.a[-1] == pytest.approx(1.4, abs=1e-4)
    assert float(w.evaluate(0.0)) == pytest.approx(1.2, abs=1e-14)
    assert np.all(w.da >= 0)
    np.testing.assert_allclose(w.a, 1 + 0.4 * (1.0 - burgers.u) / 0.1, rtol=1e-15)


def test_weight_total_variation():
    p = solve_profile(BURGERS, 1.0, 0.9, n_xi=4096, kappa=2.0)
    w = build_weight(p, 0.4)
    assert w.total_variation() == pytest.approx(0.4, abs=1e-10)


@pytest.mark.parametrize("lam", [0.0, 1.0, -0.1])
def test_weight_rejects_lambda(burgers, lam):
    with pytest.raises(ValueError):
        build_weight(burgers, lam)


def test_z_map(burgers):
    assert float(z_map(burgers, 0.0)) == pytest.approx(0.5, abs=1e-14)
    assert float(z_map(burgers, -burgers.L)) == pytest.approx(0.0, abs=1e-4)
    assert float(z_map(burgers, burgers.L)) == pytest.approx(1.0, abs=1e-4)
    z = z_map(burgers, burgers.xi)
    assert np.all(np.diff(z) >= 0)
    dz = np.gradient(z, burgers.xi)
    core = np.abs(burgers.xi) < 50
    np.testing.assert_allclose(dz[core], -burgers.du[core] / burgers.eps, rtol=2e-3)


@given(st.floats(1e-3, 1 - 1e-3))
def test_z_roundtrip(z):
    p = _profile_cache()
    xi = z_inverse(p, z)
    assert z_map(p, xi)[0] == pytest.approx(z, abs=1e-10)


_CACHE = {}


def _profile_cache():
    if "p" not in _CACHE:
        _CACHE["p"] = solve_profile(BURGERS, 1.0, 0.9, L=200.0, n_xi=2048)
    return _CACHE["p"]


def test_validate_burgers(burgers):
    rep = validate_profile(burgers)
    assert rep.monotone and rep.within_states and rep.finite
    assert rep.sup_slope == pytest.approx(1 / 8, rel=1e-3)
    assert rep.decay_rate_left == pytest.approx(0.5, abs=0.01)
    assert rep.decay_rate_right == pytest.approx(0.5, abs=0.01)
    assert rep.curvature_ratio == pytest.approx(0.5, abs=1e-3)
    assert rep.jacobian_defect < 1e-6


@pytest.mark.parametrize("flux", ["burgers", "cubic"])
def test_validate_constants_eps_independent(flux):
    f = ef.make_flux(flux)
    reps = [validate_profile(solve_profile(f, 0.5, 0.5 - eps, n_xi=2048)) for eps in (0.05, 0.1, 0.2)]
    for key in ("sup_slope", "curvature_ratio", "core_slope_inf", "jacobian_defect", "C1", "C2"):
        vals = np.array([getattr(r, key) for r in reps])
        assert np.all(np.isfinite(vals))
        assert vals.max() <= 10.0, key
    assert min(r.core_slope_inf for r in reps) > 0


def test_profile_csv(tmp_path, burgers):
    w = build_weight(burgers, 0.4)
    path = burgers.to_csv(tmp_path / "p.csv", w)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("xi", "u_tilde", "du", "ddu", "z", "a", "da")
    np.testing.assert_array_equal(data["u_tilde"], burgers.u)
    np.testing.assert_array_equal(data["a"], w.a)


def test_evaluate_beyond_table(burgers):
    assert float(burgers.evaluate(-1e4)) == 1.0
    assert float(burgers.evaluate(1e4)) == 0.9
    assert float(burgers.evaluate(1e4, 1)) == 0.0
    np.testing.assert_allclose(burgers.evaluate(burgers.xi), burgers.u, atol=1e-15)
