"""Viscous shock profile, weight function and the z change of variables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicHermiteSpline

from .entropy_flux import FluxSpec
from .errors import DegenerateStatesError, DomainError, TailNotConvergedError

CLAMP_TOL = 1e-13
N_EXTRA = 2  # nodes tabulated beyond each end, used as Dirichlet ghosts


def rankine_hugoniot(flux: FluxSpec, u_minus: float, u_plus: float) -> float:
    """Shock speed sigma = (f1(u-) - f1(u+)) / (u- - u+)."""
    if u_minus == u_plus:
        raise DegenerateStatesError("u_minus and u_plus coincide; no shock")
    return float((flux.f1(u_minus) - flux.f1(u_plus)) / (u_minus - u_plus))


@dataclass(frozen=True)
class ShockProfile:
    flux: FluxSpec
    u_minus: float
    u_plus: float
    sigma: float
    xi: np.ndarray
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    # tables extended by N_EXTRA nodes on each side (same spacing)
    xi_ext: np.ndarray = field(repr=False)
    u_ext: np.ndarray = field(repr=False)
    du_ext: np.ndarray = field(repr=False)

    @property
    def eps(self) -> float:
        return self.u_minus - self.u_plus

    @property
    def L(self) -> float:
        return float(self.xi[-1])

    @property
    def h(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def _spline(self) -> CubicHermiteSpline:
        sp = getattr(self, "_sp", None)
        if sp is None:
            sp = CubicHermiteSpline(self.xi_ext, self.u_ext, self.du_ext, extrapolate=False)
            object.__setattr__(self, "_sp", sp)
        return sp

    def evaluate(self, xi, nu: int = 0) -> np.ndarray:
        """Profile (or its ``nu``-th derivative) at arbitrary points.

        Beyond the extended table the profile is the constant end state.
        """
        xi = np.asarray(xi, dtype=float)
        out = self._spline()(xi, nu)
        left = xi < self.xi_ext[0]
        right = xi > self.xi_ext[-1]
        if nu == 0:
            out = np.where(left, self.u_minus, np.where(right, self.u_plus, out))
        else:
            out = np.where(left | right, 0.0, out)
        return out

    def ode_residual(self) -> float:
        """sup |u' - (f1(u) - f1(u-) - sigma (u - u-))| over the grid."""
        rhs = _profile_rhs(self.flux, self.u_minus, self.sigma)(self.u)
        return float(np.max(np.abs(self.du - rhs)))

    def to_csv(self, path, weight: "Weight | None" = None) -> Path:
        path = Path(path)
        z = z_map(self, self.xi)
        a = weight.a if weight is not None else np.full_like(self.xi, np.nan)
        da = weight.da if weight is not None else np.full_like(self.xi, np.nan)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "u_tilde", "du", "ddu", "z", "a", "da"])
            for row in zip(self.xi, self.u, self.du, self.ddu, z, a, da):
                w.writerow([repr(float(v)) for v in row])
        return path


def _profile_rhs(flux: FluxSpec, u_minus: float, sigma: float):
    fm = float(flux.f1(u_minus))

    def rhs(u):
        return flux.f1(u) - fm - sigma * (u - u_minus)

    return rhs


def default_length(eps: float, kappa: float = 1.0) -> float:
    return 40.0 * kappa / eps


def _rk4_march(rhs, u0: float, xs: np.ndarray) -> np.ndarray:
    """Classical RK4 along the node sequence ``xs`` (xs[0] is the start point)."""
    out = np.empty_like(xs)
    out[0] = u = u0
    for i in range(1, xs.size):
        h = xs[i] - xs[i - 1]
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * h * k1)
        k3 = rhs(u + 0.5 * h * k2)
        k4 = rhs(u + h * k3)
        u = u + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out[i] = u
    return out


def _integrate_half(rhs, u0, targets, method, rtol):
    """Integrate from xi=0 to each of ``targets`` (monotone away from 0)."""
    if targets.size == 0:
        return targets.copy()
    if method == "rk4":
        xs = np.concatenate([[0.0], targets])
        return _rk4_march(lambda u: float(rhs(u)), u0, xs)[1:]
    sol = solve_ivp(
        lambda _, y: rhs(y),
        (0.0, float(targets[-1])),
        [u0],
        method="RK45",
        t_eval=targets,
        rtol=rtol,
        atol=rtol * 1e-3,
    )
    if not sol.success:
        raise TailNotConvergedError(f"profile integration failed: {sol.message}")
    return sol.y[0]


def solve_profile(
    flux: FluxSpec,
    u_minus: float,
    u_plus: float,
    L: float | None = None,
    n_xi: int = 2048,
    *,
    kappa: float = 1.0,
    method: str = "rk45",
    rtol: float = 1e-12,
    tail_tol: float | None = None,
) -> ShockProfile:
    """Solve the first-order profile ODE outward from the midpoint value.

    ``method="rk45"`` uses adaptive Dormand-Prince with output at the nodes;
    ``method="rk4"`` marches classical RK4 with the grid spacing, which makes
    the discretisation error grid dependent (used in refinement studies).
    ``tail_tol`` defaults to ``1e-4 * eps``.
    """
    if u_minus == u_plus:
        raise DegenerateStatesError("u_minus and u_plus coincide; no shock")
    if u_minus < u_plus:
        raise DomainError("an entropy shock of a convex flux needs u_minus > u_plus")
    if n_xi < 16:
        raise ValueError("n_xi must be at least 16")
    if method not in ("rk45", "rk4"):
        raise ValueError(f"unknown profile method {method!r}")
    eps = u_minus - u_plus
    lo, hi = u_plus, u_minus
    probe = np.linspace(lo, hi, 33)
    if np.any(flux.d2f1(probe) <= 0):
        raise DomainError("flux is not strictly convex between the end states")
    sigma = rankine_hugoniot(flux, u_minus, u_plus)
    if L is None:
        L = default_length(eps, kappa)
    tail_tol = 1e-4 * eps if tail_tol is None else tail_tol

    h = 2.0 * L / (n_xi - 1)
    idx = np.arange(-N_EXTRA, n_xi + N_EXTRA)
    xi_ext = -L + h * idx
    rhs = _profile_rhs(flux, u_minus, sigma)
    u0 = 0.5 * (u_minus + u_plus)

    right = xi_ext > 0
    left = xi_ext < 0
    u_ext = np.full_like(xi_ext, u0)
    u_ext[right] = _integrate_half(rhs, u0, xi_ext[right], method, rtol)
    u_ext[left] = _integrate_half(rhs, u0, xi_ext[left][::-1], method, rtol)[::-1]

    # clamp tails that have reached the end states at double precision and
    # remove roundoff-level upticks so the table is monotone
    u_ext = np.minimum.accumulate(np.clip(u_ext, u_plus, u_minus))
    near_m = np.abs(u_ext - u_minus) < CLAMP_TOL
    near_p = np.abs(u_ext - u_plus) < CLAMP_TOL
    if near_m.any():
        k = np.max(np.nonzero(near_m & left)[0], initial=-1)
        u_ext[: k + 1] = u_minus
    if near_p.any():
        cand = np.nonzero(near_p & right)[0]
        if cand.size:
            u_ext[cand[0]:] = u_plus

    du_ext = rhs(u_ext)
    du_ext = np.where((u_ext == u_minus) | (u_ext == u_plus), 0.0, du_ext)
    sl = slice(N_EXTRA, N_EXTRA + n_xi)
    xi = xi_ext[sl].copy()
    u = u_ext[sl].copy()
    du = du_ext[sl].copy()
    ddu = (flux.df1(u) - sigma) * du

    gap_l = abs(u[0] - u_minus)
    gap_r = abs(u[-1] - u_plus)
    if gap_l > tail_tol or gap_r > tail_tol:
        raise TailNotConvergedError(
            f"profile tails not converged on [-{L:g}, {L:g}]: "
            f"|u(-L)-u_-|={gap_l:.3g}, |u(L)-u_+|={gap_r:.3g} > {tail_tol:.3g}; enlarge L"
        )
    for arr in (xi, u, du, ddu, xi_ext, u_ext, du_ext):
        arr.setflags(write=False)
    return ShockProfile(flux, float(u_minus), float(u_plus), sigma, xi, u, du, ddu, xi_ext, u_ext, du_ext)


def burgers_closed_form(sigma: float, eps: float, xi) -> np.ndarray:
    """sigma - (eps/2) tanh(eps xi / 4), the Burgers profile."""
    return sigma - 0.5 * eps * np.tanh(0.25 * eps * np.asarray(xi, dtype=float))


# ---------------------------------------------------------------------------
# weight and z coordinate


@dataclass(frozen=True)
class Weight:
    lam: float
    a: np.ndarray
    da: np.ndarray
    profile: ShockProfile = field(repr=False)

    def total_variation(self) -> float:
        return float(trapezoid(self.da, self.profile.xi))

    def evaluate(self, xi, nu: int = 0) -> np.ndarray:
        p = self.profile
        if nu == 0:
            return 1.0 + self.lam * (p.u_minus - p.evaluate(xi)) / p.eps
        return -self.lam / p.eps * p.evaluate(xi, nu)


def build_weight(profile: ShockProfile, lam: float) -> Weight:
    """a = 1 + lam (u- - u~)/eps and a' = -(lam/eps) u~'."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    a = 1.0 + lam * (profile.u_minus - profile.u) / profile.eps
    da = -lam / profile.eps * profile.du
    a.setflags(write=False)
    da.setflags(write=False)
    return Weight(float(lam), a, da, profile)


def z_map(profile: ShockProfile, xi) -> np.ndarray:
    """z = (u- - u~(xi)) / eps, increasing from 0 to 1."""
    return (profile.u_minus - profile.evaluate(xi)) / profile.eps


def z_inverse(profile: ShockProfile, z, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """xi with z_map(xi) = z, by safeguarded Newton on the Hermite interpolant."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    zt = z_map(profile, profile.xi_ext)
    keep = np.concatenate([[True], np.diff(zt) > 0])
    zt, xt = zt[keep], profile.xi_ext[keep]
    if np.any((z < zt[0]) | (z > zt[-1])):
        raise DomainError("z outside the range covered by the tabulated profile")
    pos = np.clip(np.searchsorted(zt, z), 1, zt.size - 1)
    lo, hi = xt[pos - 1].copy(), xt[pos].copy()
    x = np.interp(z, zt, xt)
    for _ in range(max_iter):
        g = z_map(profile, x) - z
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        dg = -profile.evaluate(x, 1) / profile.eps
        step = np.where(dg > 0, g / np.where(dg > 0, dg, 1.0), 0.0)
        xn = x - step
        bad = (xn <= lo) | (xn >= hi) | (dg <= 0)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= tol * (1.0 + np.abs(x))
        x = xn
        if np.all(done):
            break
    return x


# ---------------------------------------------------------------------------
# validation report


@dataclass
class ProfileReport:
    eps: float
    sigma: float
    monotone: bool
    within_states: bool
    midpoint_error: float
    ode_residual: float
    sup_slope: float  # sup |u~'| / eps^2
    decay_rate_left: float  # fitted c in |u~'| ~ e^{-c eps |xi|}, xi -> -inf
    decay_rate_right: float
    envelope_upper: float  # sup |u~'| e^{C2 eps |xi|} / eps^2
    envelope_lower: float  # inf |u~'| e^{C1 eps |xi|} / eps^2
    curvature_ratio: float  # sup |u~''| / (eps |u~'|)
    core_slope_inf: float  # inf_{|xi| <= 1/eps} |u~'| / eps^2
    jacobian_defect: float  # sup |dz/dxi / (z(1-z)) - eps f1''(u-)/2| / eps^2
    notes: list[str] = field(default_factory=list)

    @property
    def C1(self) -> float:
        return max(self.decay_rate_left, self.decay_rate_right)

    @property
    def C2(self) -> float:
        return min(self.decay_rate_left, self.decay_rate_right)

    @property
    def finite(self) -> bool:
        vals = [self.sup_slope, self.decay_rate_left, self.decay_rate_right, self.envelope_upper,
                self.envelope_lower, self.curvature_ratio, self.core_slope_inf, self.jacobian_defect]
        return all(math.isfinite(v) for v in vals)


def _fit_rate(s: np.ndarray, logd: np.ndarray) -> float:
    if s.size < 4:
        return float("nan")
    slope = np.polyfit(s, logd, 1)[0]
    return float(-slope)


def validate_profile(profile: ShockProfile) -> ProfileReport:
    p = profile
    eps, xi, du = p.eps, p.xi, p.du
    notes = []
    mag = np.abs(du)
    live = mag > 0
    interior = (p.u > p.u_plus) & (p.u < p.u_minus)
    s = eps * np.abs(xi)

    # exponential tails: fit where the envelope is pure, eps|xi| in [8, 30]
    tail = live & (s >= 8.0) & (s <= 30.0) & (mag > 1e-9 * np.max(mag))
    fit_l = tail & (xi < 0)
    fit_r = tail & (xi > 0)
    rate_l = _fit_rate(s[fit_l], np.log(mag[fit_l]))
    rate_r = _fit_rate(s[fit_r], np.log(mag[fit_r]))
    if not (math.isfinite(rate_l) and math.isfinite(rate_r)):
        notes.append("tail window eps|xi| in [8, 30] too short for a decay fit")
    c1 = np.nanmax([rate_l, rate_r])
    c2 = np.nanmin([rate_l, rate_r])
    scaled = mag[live] / eps**2
    env_up = float(np.max(scaled * np.exp(c2 * s[live]))) if live.any() else float("nan")
    env_lo = float(np.min(scaled * np.exp(c1 * s[live]))) if live.any() else float("nan")

    curv_mask = live & (mag > 1e-200)
    curvature = float(np.max(np.abs(p.ddu[curv_mask]) / (eps * mag[curv_mask])))
    core = np.abs(xi) <= 1.0 / eps
    core_inf = float(np.min(mag[core]) / eps**2) if core.any() else float("nan")

    z = (p.u_minus - p.u) / eps
    zz = z * (1 - z)
    jac_mask = zz > 1e-8
    dz = -du / eps
    target = eps * float(p.flux.d2f1(p.u_minus)) / 2.0
    jac = float(np.max(np.abs(dz[jac_mask] / zz[jac_mask] - target)) / eps**2)

    mid = float(p.evaluate(0.0)) - 0.5 * (p.u_minus + p.u_plus)
    return ProfileReport(
        eps=eps,
        sigma=p.sigma,
        monotone=bool(np.all(du[interior] < 0) and np.all(np.diff(p.u) <= 0)),
        within_states=bool(np.all(p.u <= p.u_minus) and np.all(p.u >= p.u_plus)),
        midpoint_error=abs(mid),
        ode_residual=p.ode_residual(),
        sup_slope=float(np.max(mag) / eps**2),
        decay_rate_left=rate_l,
        decay_rate_right=rate_r,
        envelope_upper=env_up,
        envelope_lower=env_lo,
        curvature_ratio=curvature,
        core_slope_inf=core_inf,
        jacobian_defect=jac,
        notes=notes,
    )
