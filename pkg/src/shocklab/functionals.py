"""Functionals of the weighted relative entropy method and the shift ODE.

Everything is evaluated on a shifted field ``u^X(xi, x') = u(xi + X, x')``
against the profile. With ``d = eta'(u) - eta'(u~)`` the weighted entropy
``E = int a eta(u|u~)`` obeys

    dE/dt = Xdot * Y + B_I + B_O - G0 - D1 - D2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _fast
from . import entropy_flux as ef
from .errors import InversionError
from .grid import ChannelField, ChannelGrid
from .shock_profile import ShockProfile, Weight


@dataclass
class FunctionalReport:
    Y: float
    B_I: float
    B_O: float
    G0: float
    D1: float
    D2: float
    weighted_entropy: float

    @property
    def B(self) -> float:
        return self.B_I + self.B_O

    @property
    def D(self) -> float:
        return self.D1 + self.D2

    def as_dict(self) -> dict:
        out = asdict(self)
        out["B"] = self.B
        out["D"] = self.D
        return out


class ShockFrame:
    """Profile, weight and entropy data sampled on a channel grid.

    Profile tables are kept with shape ``(n_xi, 1, ...)`` so they broadcast
    against full fields.
    """

    def __init__(self, grid: ChannelGrid, profile: ShockProfile, weight: Weight, sys: ef.EntropySystem,
                 use_jit: bool = True):
        self.grid, self.profile, self.weight, self.sys = grid, profile, weight, sys
        shape = (grid.n_xi,) + (1,) * grid.d
        xi = grid.xi
        same = profile.xi.size == xi.size and np.allclose(profile.xi, xi, rtol=0, atol=1e-12 * grid.L)
        if same:
            ut, dut, ddut = profile.u, profile.du, profile.ddu
        else:
            ut = profile.evaluate(xi)
            dut = profile.evaluate(xi, 1)
            ddut = (profile.flux.df1(ut) - profile.sigma) * dut
        self.ut = np.asarray(ut, dtype=float).reshape(shape)
        self.dut = np.asarray(dut, dtype=float).reshape(shape)
        self.ddut = np.asarray(ddut, dtype=float).reshape(shape)
        lam, eps = weight.lam, profile.eps
        self.a = 1.0 + lam * (profile.u_minus - self.ut) / eps
        self.da = -lam / eps * self.dut
        e, f = sys.entropy, sys.flux
        self.eta1_t = e.d1(self.ut)
        self.eta2_t = e.d2(self.ut)
        self.mu_t = 1.0 / self.eta2_t
        self.f1_t = f.f1(self.ut)
        self.sigma = profile.sigma
        self.eps = eps
        self.lam = lam
        self.fast = _fast.get_kernels(sys.flux.kernel, sys.entropy.kernel) if use_jit else None
        if self.fast is not None:
            n = grid.n_xi
            m = int(np.prod(grid.shape[1:], dtype=int))
            self._flat = dict(
                ut=np.ascontiguousarray(self.ut.reshape(n)),
                dut=np.ascontiguousarray(self.dut.reshape(n)),
                ddut=np.ascontiguousarray(self.ddut.reshape(n)),
                a=np.ascontiguousarray(self.a.reshape(n)),
                da=np.ascontiguousarray(self.da.reshape(n)),
                wq=grid.xi_weights() / m,
            )
            self._d = np.empty((n, m))
            self._mu = np.empty((n, m))

    def run_fast(self, u: np.ndarray, full: bool):
        """Fused compiled evaluation; returns (Y, B_I, B_O, G0, D1, E)."""
        self.sys.check(u)
        fl = self._flat
        u2 = np.ascontiguousarray(u.reshape(self.grid.n_xi, -1))
        return self.fast[0](
            u2, fl["ut"], fl["dut"], fl["ddut"], fl["a"], fl["da"], fl["wq"], self.grid.h_xi, self.sigma,
            full, _fast.GL_X, _fast.GL_W, _fast.GL_N, _fast.GL_SPAN, self._d, self._mu,
        )

    @property
    def u_tilde_field(self) -> np.ndarray:
        return np.broadcast_to(self.ut, self.grid.shape).copy()

    def integrate(self, values) -> float:
        return self.grid.integrate_array(values)


def _yb_parts(frame: ShockFrame, u: np.ndarray):
    """Shared nodal quantities for Y and B."""
    sys = frame.sys
    e, f = sys.entropy, sys.flux
    ent = ef.relative_entropy(sys, u, frame.ut)
    d = e.d1(u) - frame.eta1_t
    return ent, d


def eval_Y(frame: ShockFrame, u: np.ndarray, ent: np.ndarray | None = None) -> float:
    if ent is None:
        ent = ef.relative_entropy(frame.sys, u, frame.ut)
    I = frame.integrate
    return -I(frame.da * ent) + I(frame.a * frame.eta2_t * frame.dut * (u - frame.ut))


def _eval_B(frame: ShockFrame, u: np.ndarray, d: np.ndarray, dxi_d: np.ndarray):
    sys = frame.sys
    e, f = sys.entropy, sys.flux
    I = frame.integrate
    a, da = frame.a, frame.da
    w = frame.eta2_t * frame.dut  # eta''(u~) u~'
    rel_etap = ef.relative_eta_prime(sys, u, frame.ut)
    bi = I(da * (ef.potential_F(sys, u, frame.ut) + d * (f.f1(u) - frame.f1_t) + frame.f1_t * rel_etap))
    bi -= I(a * w * ef.relative_flux(sys, u, frame.ut))
    mu = 1.0 / e.d2(u)
    dmu = mu - frame.mu_t
    bo = (
        -I(da * mu * d * dxi_d)
        - I(da * d * dmu * w)
        - I(a * dxi_d * dmu * w)
        + I(a * frame.ddut * rel_etap)
    )
    return bi, bo, mu


def eval_functionals(
    u_shifted: ChannelField | np.ndarray,
    profile: ShockProfile | None = None,
    weight: Weight | None = None,
    sys: ef.EntropySystem | None = None,
    *,
    frame: ShockFrame | None = None,
) -> FunctionalReport:
    """All functionals at an already shifted field."""
    if isinstance(u_shifted, ChannelField):
        grid, u = u_shifted.grid, u_shifted.values
    else:
        u = np.asarray(u_shifted, dtype=float)
        grid = frame.grid if frame is not None else None
    if frame is None:
        if grid is None:
            raise ValueError("pass a ChannelField or a prebuilt frame")
        frame = ShockFrame(grid, profile, weight, sys)
    g = frame.grid
    if frame.fast is not None:
        Y, bi, bo, G0, D1, E = frame.run_fast(u, True)
        D2 = 0.0
        if g.d:
            dd = frame._d.reshape(g.shape)
            mu = frame._mu.reshape(g.shape)
            for ax in range(1, g.d + 1):
                D2 += frame.integrate(frame.a * mu * g.diff_t(dd, ax) ** 2)
        return FunctionalReport(Y, bi, bo, G0, D1, D2, E)
    ent, d = _yb_parts(frame, u)
    dxi_d = g.diff_xi(d)
    bi, bo, mu = _eval_B(frame, u, d, dxi_d)
    I = frame.integrate
    D1 = I(frame.a * mu * dxi_d**2)
    D2 = 0.0
    for ax in range(1, g.d + 1):
        D2 += I(frame.a * mu * g.diff_t(d, ax) ** 2)
    return FunctionalReport(
        Y=eval_Y(frame, u, ent),
        B_I=bi,
        B_O=bo,
        G0=frame.sigma * I(frame.da * ent),
        D1=D1,
        D2=D2,
        weighted_entropy=I(frame.a * ent),
    )


def eval_YB(frame: ShockFrame, u: np.ndarray) -> tuple[float, float]:
    """Only Y and B = B_I + B_O, the inputs of the shift ODE."""
    if frame.fast is not None:
        Y, bi, bo, *_ = frame.run_fast(u, False)
        return Y, bi + bo
    ent, d = _yb_parts(frame, u)
    bi, bo, _ = _eval_B(frame, u, d, frame.grid.diff_xi(d))
    return eval_Y(frame, u, ent), bi + bo


def eval_Y_ablation(frame: ShockFrame, u: np.ndarray) -> float:
    """Y with weight ``a`` in place of ``a'`` in its first integral.

    Only used to show that this variant breaks the dissipation identity.
    """
    ent = ef.relative_entropy(frame.sys, u, frame.ut)
    I = frame.integrate
    return -I(frame.a * ent) + I(frame.a * frame.eta2_t * frame.dut * (u - frame.ut))


def dY_dX(frame: ShockFrame, u_shifted: np.ndarray) -> float:
    """Derivative of X -> Y(u^X) at the given shifted field."""
    g = frame.grid
    uxi = g.diff_xi(u_shifted)
    d = frame.sys.entropy.d1(u_shifted) - frame.eta1_t
    I = frame.integrate
    return -I(frame.da * d * uxi) + I(frame.a * frame.eta2_t * frame.dut * uxi)


# ---------------------------------------------------------------------------
# shift dynamics


def phi_eps(y, eps: float):
    """1/eps^2 for y <= -eps^2, -y/eps^4 in between, -1/eps^2 for y >= eps^2."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.clip(-np.asarray(y, dtype=float) / eps**4, -1.0 / eps**2, 1.0 / eps**2)


def shift_velocity(Y: float, B: float, eps: float) -> float:
    return float(phi_eps(Y, eps)) * (2.0 * abs(B) + 1.0)


@dataclass
class ShiftStep:
    X_new: float
    dXdt: float  # velocity used for the update (midpoint value)
    dXdt_start: float  # velocity at the start of the step
    Y_mid: float
    B_mid: float


def advance_shift(X: float, u: np.ndarray, dt: float, frame: ShockFrame,
                  YB_start: tuple[float, float] | None = None) -> ShiftStep:
    """One midpoint update of Xdot = Phi_eps(Y(u^X)) (2|B(u^X)| + 1) with u frozen."""
    g, eps = frame.grid, frame.eps
    Y0, B0 = YB_start if YB_start is not None else eval_YB(frame, g.shift_array(u, X))
    v0 = shift_velocity(Y0, B0, eps)
    Xh = X + 0.5 * dt * v0
    Yh, Bh = eval_YB(frame, g.shift_array(u, Xh))
    vh = shift_velocity(Yh, Bh, eps)
    return ShiftStep(X + dt * vh, vh, v0, Yh, Bh)


def shift_stiffness_dt(frame: ShockFrame, u_shifted: np.ndarray, Y: float, B: float, safety: float = 0.5) -> float:
    """Stable step for the shift feedback inside the linear branch of Phi_eps."""
    eps = frame.eps
    if abs(Y) >= 2 * eps**2:
        return math.inf
    rate = abs(dY_dX(frame, u_shifted)) * (2 * abs(B) + 1) / eps**4
    return safety / rate if rate > 0 else math.inf


@dataclass
class ShiftTrajectory:
    eps: float
    t: list[float] = field(default_factory=list)
    X: list[float] = field(default_factory=list)
    dXdt: list[float] = field(default_factory=list)
    B: list[float] = field(default_factory=list)

    def append(self, t, X, dXdt, B):
        self.t.append(t)
        self.X.append(X)
        self.dXdt.append(dXdt)
        self.B.append(B)

    def bound_violation(self) -> float:
        """max of |Xdot| / ((1 + 2|B|)/eps^2) - 1; <= 0 means the bound holds."""
        if not self.t:
            return -math.inf
        bound = (1 + 2 * np.abs(self.B)) / self.eps**2
        return float(np.max(np.abs(self.dXdt) / bound - 1.0))


# ---------------------------------------------------------------------------
# truncation


def psi_r(y, r: float):
    return np.clip(y, -r, r)


def invert_eta_prime(sys: ef.EntropySystem, target, lo, hi, tol: float = 1e-12, max_iter: int = 100):
    """Solve eta'(x) = target nodewise with x bracketed in [lo, hi]."""
    e = sys.entropy
    target = np.asarray(target, dtype=float)
    lo, hi = np.minimum(lo, hi).astype(float), np.maximum(lo, hi).astype(float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = e.d1(x) - target
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        xn = x - g / e.d2(x)
        out = (xn <= lo) | (xn >= hi)
        xn = np.where(out, 0.5 * (lo + hi), xn)
        if np.all(np.abs(xn - x) <= tol * (1 + np.abs(x))):
            return xn
        x = xn
    resid = np.max(np.abs(e.d1(x) - target))
    if resid > 1e-9 * (1 + np.max(np.abs(target))):
        raise InversionError(f"eta' inversion did not converge (residual {resid:.3g})")
    return x


def truncate_state(u, profile_values, sys: ef.EntropySystem, r: float):
    """u_bar_r with eta'(u_bar) - eta'(u~) = psi_r(eta'(u) - eta'(u~))."""
    if r <= 0:
        raise ValueError("r must be positive")
    values = u.values if isinstance(u, ChannelField) else np.asarray(u, dtype=float)
    ut = np.broadcast_to(profile_values, values.shape)
    e = sys.entropy
    y = e.d1(values) - e.d1(ut)
    inside = np.abs(y) <= r
    out = values.copy()
    if not inside.all():
        mask = ~inside
        target = e.d1(ut[mask]) + psi_r(y[mask], r)
        out[mask] = invert_eta_prime(sys, target, ut[mask], values[mask])
    return ChannelField(u.grid, out) if isinstance(u, ChannelField) else out


# ---------------------------------------------------------------------------
# diagnostics over sampled series


@dataclass
class IdentityResidual:
    stride: int
    spacing: float
    residual: float  # sup |dE/dt - rhs| / sup |rhs|
    abs_residual: float


def dissipation_identity_check(t, E, rhs, strides=(1,)) -> list[IdentityResidual]:
    """Compare central differences of E with rhs = Xdot Y + B - G0 - D.

    ``t`` must be uniformly spaced. For each stride ``s`` the difference
    uses samples ``s`` apart and is evaluated on the points common to all
    strides, so the residuals are comparable.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 samples")
    smax = max(strides)
    if t.size < 2 * smax + 1:
        raise ValueError("series too short for the requested strides")
    centre = np.arange(smax, t.size - smax)
    scale = float(np.max(np.abs(rhs[centre])))
    out = []
    for s in strides:
        dEdt = (E[centre + s] - E[centre - s]) / (t[centre + s] - t[centre - s])
        err = float(np.max(np.abs(dEdt - rhs[centre])))
        out.append(IdentityResidual(s, float(t[s] - t[0]), err / scale if scale > 0 else 0.0, err))
    return out


@dataclass
class EnergySmall:
    ratio: float
    precondition_ok: bool


def energysmall_check(frame: ShockFrame, u_shifted: np.ndarray) -> EnergySmall:
    """(int a' eta(u|u~)) * lambda / eps^2, flagged when |Y| > eps^2."""
    ent = ef.relative_entropy(frame.sys, u_shifted, frame.ut)
    Y = eval_Y(frame, u_shifted, ent)
    ratio = frame.integrate(frame.da * ent) * frame.lam / frame.eps**2
    return EnergySmall(ratio, abs(Y) <= frame.eps**2)
