"""Moving-frame solver for u_t = sigma u_xi - div F(u) + Laplacian(u).

The xi direction uses conservative flux differencing with a local
Lax-Friedrichs flux (MUSCL reconstruction by default, first order on
request) and central diffusion; Dirichlet ghosts come from the profile.
Periodic transverse diffusion is split off (Strang) and applied through
the exact semigroup of the discrete periodic Laplacian, which is positive
and so keeps the scheme monotone without a transverse step restriction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import _fast
from . import entropy_flux as ef
from .errors import BlowUpError, CFLError, GridMismatchError, ShiftTooLargeError
from .functionals import (
    FunctionalReport,
    ShiftTrajectory,
    ShockFrame,
    advance_shift,
    eval_functionals,
    eval_YB,
    shift_stiffness_dt,
    shift_velocity,
)
from .grid import ChannelField, ChannelGrid
from .shock_profile import ShockProfile, Weight

NG = 2  # ghost layers in xi


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    cfl_advective: float = 0.4
    cfl_diffusive: float = 0.4
    cadence: float = 0.0  # sampling interval; 0 samples every step
    scheme: str = "muscl"  # or "llf" (first order, monotone)
    time: str = "ssprk2"  # or "imex" (explicit advection, implicit diffusion)
    shift: bool = True
    track_extrema: bool = False
    track_energy: bool = False
    max_steps: int = 50_000_000

    def __post_init__(self):
        for name in ("cfl_advective", "cfl_diffusive"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.scheme not in ("muscl", "llf"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.time not in ("ssprk2", "imex"):
            raise ValueError(f"unknown time integrator {self.time!r}")
        if self.t_end < 0 or self.cadence < 0:
            raise ValueError("t_end and cadence must be non-negative")


@dataclass
class SimulationState:
    t: float
    u: np.ndarray
    X: float = 0.0
    steps: int = 0


@dataclass
class Sample:
    t: float
    X: float
    dXdt: float
    report: FunctionalReport
    L1: float
    L2: float
    Linf: float

    def row(self) -> dict:
        r = self.report
        return {
            "t": self.t, "X": self.X, "dXdt": self.dXdt, "Y": r.Y, "B_I": r.B_I, "B_O": r.B_O,
            "G0": r.G0, "D1": r.D1, "D2": r.D2, "weighted_entropy": r.weighted_entropy,
            "L1": self.L1, "L2": self.L2, "Linf": self.Linf,
        }


TRAJECTORY_COLUMNS = ["t", "X", "dXdt", "Y", "B_I", "B_O", "G0", "D1", "D2",
                      "weighted_entropy", "L1", "L2", "Linf"]


@dataclass
class Trajectory:
    samples: list[Sample] = field(default_factory=list)
    shift: ShiftTrajectory | None = None
    step_t: list[float] = field(default_factory=list)
    step_max: list[float] = field(default_factory=list)
    step_min: list[float] = field(default_factory=list)
    energy_t: list[float] = field(default_factory=list)
    energy_l2: list[float] = field(default_factory=list)  # int |u - u~|^2
    energy_grad: list[float] = field(default_factory=list)  # int_0^t int |grad(u - u~)|^2
    final: SimulationState | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([s.row()[name] for s in self.samples])

    def rhs_identity(self) -> np.ndarray:
        """Xdot Y + B - G0 - D at every sample."""
        return np.array([
            s.dXdt * s.report.Y + s.report.B - s.report.G0 - s.report.D for s in self.samples
        ])


# ---------------------------------------------------------------------------
# distances


def _check_same(u, v):
    if isinstance(u, ChannelField) and isinstance(v, ChannelField):
        if u.grid != v.grid:
            raise GridMismatchError("fields live on different grids")
        return u.grid, u.values - v.values
    raise TypeError("distances take two ChannelFields")


def l1_distance(u: ChannelField, v: ChannelField) -> float:
    g, w = _check_same(u, v)
    return g.integrate_array(np.abs(w))


def l2_distance(u: ChannelField, v: ChannelField) -> float:
    g, w = _check_same(u, v)
    return math.sqrt(g.integrate_array(w * w))


def linf_distance(u: ChannelField, v: ChannelField) -> float:
    _, w = _check_same(u, v)
    return float(np.max(np.abs(w)))


# ---------------------------------------------------------------------------
# spatial operators


def _mc_slope(um, u0, up):
    dl = u0 - um
    dr = up - u0
    dc = 0.5 * (dl + dr)
    s = np.sign(dc)
    mag = np.minimum(np.minimum(2 * np.abs(dl), 2 * np.abs(dr)), np.abs(dc))
    return np.where(dl * dr > 0, s * mag, 0.0)


class MovingFrameOperator:
    """Explicit right-hand side pieces on a fixed grid."""

    def __init__(self, grid: ChannelGrid, sys: ef.EntropySystem, profile: ShockProfile,
                 scheme: str = "muscl", forcing: Callable | None = None, use_jit: bool = True):
        self.grid, self.sys, self.profile, self.scheme = grid, sys, profile, scheme
        kern = _fast.get_kernels(sys.flux.kernel, sys.entropy.kernel) if use_jit else None
        self._rhs_xi = kern[1] if kern is not None else None
        self.forcing = forcing
        self.sigma = profile.sigma
        h = grid.h_xi
        gl = -grid.L - h * np.arange(NG, 0, -1)
        gr = grid.L + h * np.arange(1, NG + 1)
        shape = (NG,) + (1,) * grid.d
        self.ghost_left = profile.evaluate(gl).reshape(shape)
        self.ghost_right = profile.evaluate(gr).reshape(shape)
        self._coords = grid.coords()
        if grid.d:
            k = np.arange(grid.n_t)
            lam1 = -(4.0 / grid.h_t**2) * np.sin(np.pi * k / grid.n_t) ** 2
            self._eig = lam1[: grid.n_t // 2 + 1]  # rfft half spectrum on the last axis
            self._eig_full = lam1

    # -- pieces ----------------------------------------------------------
    def extend(self, u):
        g = self.grid
        gl = np.broadcast_to(self.ghost_left, (NG,) + u.shape[1:])
        gr = np.broadcast_to(self.ghost_right, (NG,) + u.shape[1:])
        return np.concatenate([gl, u, gr], axis=0)

    def g(self, u):
        return self.sys.flux.f1(u) - self.sigma * u

    def dg(self, u):
        return self.sys.flux.df1(u) - self.sigma

    def advection_xi(self, ue):
        """-(d/dxi) of g(u) = f1(u) - sigma u on the extended array."""
        h = self.grid.h_xi
        if self.scheme == "muscl":
            s = _mc_slope(ue[:-2], ue[1:-1], ue[2:])  # cells 1 .. n+2
            uL = ue[1:-2] + 0.5 * s[:-1]  # interfaces between cells i, i+1 for i=1..n+1
            uR = ue[2:-1] - 0.5 * s[1:]
        else:
            uL = ue[1:-2]
            uR = ue[2:-1]
        alpha = np.maximum(np.abs(self.dg(uL)), np.abs(self.dg(uR)))
        F = 0.5 * (self.g(uL) + self.g(uR)) - 0.5 * alpha * (uR - uL)
        return -(F[1:] - F[:-1]) / h

    def diffusion_xi(self, ue):
        h = self.grid.h_xi
        return (ue[NG + 1:-NG + 1 or None] - 2 * ue[NG:-NG] + ue[NG - 1:-NG - 1]) / (h * h)

    def advection_transverse(self, u):
        g = self.grid
        out = np.zeros_like(u)
        f = self.sys.flux
        if f.transverse_zero or g.d == 0:
            return out
        for ax, (fi, dfi) in zip(range(1, g.d + 1), ((f.f2, f.df2), (f.f3, f.df3))):
            up = np.roll(u, -1, axis=ax)
            alpha = np.maximum(np.abs(dfi(u)), np.abs(dfi(up)))
            F = 0.5 * (fi(u) + fi(up)) - 0.5 * alpha * (up - u)
            out -= (F - np.roll(F, 1, axis=ax)) / g.h_t
        return out

    def explicit_rhs(self, u, t, diffusion=True):
        ue = self.extend(u)
        if diffusion and self._rhs_xi is not None:
            n = self.grid.n_xi
            out = np.empty((n, ue[0].size))
            self._rhs_xi(ue.reshape(n + 2 * NG, -1), self.grid.h_xi, self.sigma, self.scheme == "muscl", out)
            r = out.reshape(u.shape)
            if not (self.sys.flux.transverse_zero or self.grid.d == 0):
                r = r + self.advection_transverse(u)
        else:
            r = self.advection_xi(ue) + self.advection_transverse(u)
            if diffusion:
                r = r + self.diffusion_xi(ue)
        if self.forcing is not None:
            r = r + self.forcing(t, *self._coords)
        return r

    def transverse_heat(self, u, tau):
        """Exact discrete periodic heat flow over time tau in all transverse axes."""
        g = self.grid
        if g.d == 0 or tau == 0:
            return u
        axes = tuple(range(1, g.d + 1))
        uh = np.fft.rfftn(u, axes=axes)
        if g.d == 1:
            mult = np.exp(tau * self._eig)[None, :]
        else:
            mult = np.exp(tau * (self._eig_full[:, None] + self._eig[None, :]))[None, :, :]
        return np.fft.irfftn(uh * mult, s=u.shape[1:], axes=axes)

    def implicit_diffusion(self, u, dt):
        """Backward Euler for the full Laplacian, one banded solve per transverse mode."""
        g = self.grid
        n, h = g.n_xi, g.h_xi
        r = dt / (h * h)
        if g.d:
            axes = tuple(range(1, g.d + 1))
            uh = np.fft.fftn(u, axes=axes)
            eig = self._eig_full if g.d == 1 else (self._eig_full[:, None] + self._eig_full[None, :])
            flat = uh.reshape(n, -1)
            eig = np.asarray(eig).reshape(-1)
        else:
            flat = u.reshape(n, 1).astype(complex)
            eig = np.zeros(1)
        out = np.empty_like(flat)
        gl = float(self.ghost_left[-1].ravel()[0])
        gr = float(self.ghost_right[0].ravel()[0])
        for m in range(flat.shape[1]):
            ab = np.zeros((3, n))
            ab[0, 1:] = -r
            ab[1, :] = 1 + 2 * r - dt * eig[m]
            ab[2, :-1] = -r
            rhs = flat[:, m].copy()
            if m == 0:
                # Dirichlet data lives in the mean mode only
                scale = 1.0 if g.d == 0 else g.n_t**g.d
                rhs[0] += r * gl * scale
                rhs[-1] += r * gr * scale
            out[:, m] = solve_banded((1, 1), ab, rhs)
        if g.d:
            return np.real(np.fft.ifftn(out.reshape(uh.shape), axes=tuple(range(1, g.d + 1))))
        return np.real(out[:, 0])

    # -- step sizes ------------------------------------------------------
    def max_speed_xi(self, u):
        ue = self.extend(u)
        return float(np.max(np.abs(self.dg(ue))))

    def max_speed_t(self, u):
        f = self.sys.flux
        if f.transverse_zero or self.grid.d == 0:
            return 0.0
        return float(max(np.max(np.abs(f.df2(u))), np.max(np.abs(f.df3(u))) if self.grid.d == 2 else 0.0))

    def stable_dt(self, u, cfg: SolverConfig) -> float:
        g = self.grid
        limits = [math.inf]
        a = self.max_speed_xi(u)
        if a > 0:
            limits.append(cfg.cfl_advective * g.h_xi / a)
        at = self.max_speed_t(u)
        if at > 0:
            limits.append(cfg.cfl_advective * g.h_t / at)
        if cfg.time == "ssprk2":
            limits.append(cfg.cfl_diffusive * g.h_xi**2 / 2.0)
        return min(limits)


# ---------------------------------------------------------------------------
# stepping


def step(state: SimulationState, dt: float, op: MovingFrameOperator, cfg: SolverConfig,
         check_cfl: bool = True) -> SimulationState:
    """Advance u by dt; raises CFLError when dt exceeds the explicit limit."""
    u, t = state.u, state.t
    if check_cfl:
        lim = op.stable_dt(u, cfg)
        if dt > lim * (1 + 1e-12):
            raise CFLError(f"dt={dt:.4g} exceeds the stability limit {lim:.4g}")
    if cfg.time == "ssprk2":
        v = op.transverse_heat(u, 0.5 * dt)
        v1 = v + dt * op.explicit_rhs(v, t)
        v2 = 0.5 * (v + v1 + dt * op.explicit_rhs(v1, t + dt))
        un = op.transverse_heat(v2, 0.5 * dt)
    else:
        v = u + dt * op.explicit_rhs(u, t, diffusion=False)
        un = op.implicit_diffusion(v, dt)
    if not np.all(np.isfinite(un)):
        raise BlowUpError(f"non-finite values after step at t={t + dt:.6g}")
    return SimulationState(t + dt, un, state.X, state.steps + 1)


def _sample(frame: ShockFrame, state: SimulationState, shift: bool) -> Sample:
    g = frame.grid
    us = g.shift_array(state.u, state.X)
    rep = eval_functionals(us, frame=frame)
    w = us - frame.ut
    return Sample(
        state.t, state.X, shift_velocity(rep.Y, rep.B, frame.eps) if shift else 0.0, rep,
        g.integrate_array(np.abs(w)),
        math.sqrt(g.integrate_array(w * w)),
        float(np.max(np.abs(w))),
    )


def simulate(u0, profile: ShockProfile, weight: Weight, sys: ef.EntropySystem, config: SolverConfig,
             grid: ChannelGrid | None = None, *, forcing: Callable | None = None,
             callback: Callable | None = None) -> Trajectory:
    """Evolve u0 to t_end with the shift ODE coupled step by step.

    Samples (functional report and norms of u^X - u~) are taken at t=0,
    every ``cadence`` time units (steps are shortened to land on them) and
    at t_end. ``callback(state, sample)`` runs after each sample.
    """
    if isinstance(u0, ChannelField):
        grid = u0.grid
        u = u0.values.copy()
    else:
        if grid is None:
            raise ValueError("grid is required when u0 is an array")
        u = np.array(np.broadcast_to(u0, grid.shape), dtype=float)
    if not np.all(np.isfinite(u)):
        raise BlowUpError("initial data is not finite")
    sys.check(u)
    frame = ShockFrame(grid, profile, weight, sys)
    op = MovingFrameOperator(grid, sys, profile, config.scheme, forcing)
    eps = profile.eps
    traj = Trajectory(shift=ShiftTrajectory(eps))
    state = SimulationState(0.0, u, 0.0, 0)

    def yb(st):
        return eval_YB(frame, grid.shift_array(st.u, st.X))

    s = _sample(frame, state, config.shift)
    Y0, B0 = (s.report.Y, s.report.B) if config.shift else (0.0, 0.0)
    traj.samples.append(s)
    if callback:
        callback(state, s)

    ut_full = frame.ut
    if config.track_extrema:
        traj.step_t.append(0.0)
        traj.step_max.append(float(u.max()))
        traj.step_min.append(float(u.min()))

    def grad_sq(vals):
        w = vals - ut_full
        tot = grid.integrate_array(grid.diff_xi(w) ** 2)
        for ax in range(1, grid.d + 1):
            tot += grid.integrate_array(grid.diff_t(w, ax) ** 2)
        return tot

    if config.track_energy:
        gs_prev = grad_sq(u)
        acc = 0.0
        traj.energy_t.append(0.0)
        traj.energy_l2.append(grid.integrate_array((u - ut_full) ** 2))
        traj.energy_grad.append(0.0)

    cadence = config.cadence
    next_sample = cadence if cadence > 0 else math.inf
    t_end = config.t_end
    tol = 1e-12 * max(1.0, t_end)
    while state.t < t_end - tol:
        if state.steps >= config.max_steps:
            raise RuntimeError("max_steps exceeded")
        dt = op.stable_dt(state.u, config)
        if config.shift:
            dt = min(dt, shift_stiffness_dt(frame, grid.shift_array(state.u, state.X), Y0, B0))
        target = min(next_sample, t_end)
        landing = False
        if state.t + dt >= target - tol:
            dt = target - state.t
            landing = True
        X_old = state.X
        if config.shift:
            sh = advance_shift(X_old, state.u, dt, frame, YB_start=(Y0, B0))
            X_new = sh.X_new
            traj.shift.append(state.t, X_old, sh.dXdt, sh.B_mid)
            if abs(X_new) >= 0.5 * grid.L:
                raise ShiftTooLargeError(f"shift {X_new:.4g} reached L/2 at t={state.t:.4g}")
        else:
            X_new = X_old
        state = step(state, dt, op, config, check_cfl=False)
        state.X = X_new
        if landing:
            state.t = target
        sample_now = cadence == 0 or (landing and target == next_sample) or state.t >= t_end - tol
        if config.shift and not sample_now:
            Y0, B0 = yb(state)
        if config.track_extrema:
            traj.step_t.append(state.t)
            traj.step_max.append(float(state.u.max()))
            traj.step_min.append(float(state.u.min()))
        if config.track_energy:
            gs = grad_sq(state.u)
            acc += 0.5 * dt * (gs_prev + gs)
            gs_prev = gs
            traj.energy_t.append(state.t)
            traj.energy_l2.append(grid.integrate_array((state.u - ut_full) ** 2))
            traj.energy_grad.append(acc)
        if sample_now:
            # the sample's report carries Y and B of the new state; reuse them for the next shift step
            s = _sample(frame, state, config.shift)
            if config.shift:
                Y0, B0 = s.report.Y, s.report.B
            traj.samples.append(s)
            if callback:
                callback(state, s)
            if landing and target == next_sample:
                next_sample += cadence
    traj.final = state
    return traj


def evolve_pair(u0, v0, profile: ShockProfile, sys: ef.EntropySystem, config: SolverConfig,
                grid: ChannelGrid, sample_every: float) -> tuple[np.ndarray, np.ndarray]:
    """Run two solutions with common step sizes; return (t, ||u - v||_1) samples."""
    op = MovingFrameOperator(grid, sys, profile, config.scheme)
    cfg = replace(config, shift=False)
    a = SimulationState(0.0, np.array(np.broadcast_to(u0, grid.shape), dtype=float))
    b = SimulationState(0.0, np.array(np.broadcast_to(v0, grid.shape), dtype=float))
    ts = [0.0]
    ds = [grid.integrate_array(np.abs(a.u - b.u))]
    next_sample = sample_every
    while a.t < cfg.t_end - 1e-12:
        dt = min(op.stable_dt(a.u, cfg), op.stable_dt(b.u, cfg))
        target = min(next_sample, cfg.t_end)
        landing = a.t + dt >= target - 1e-12
        if landing:
            dt = target - a.t
        a = step(a, dt, op, cfg, check_cfl=False)
        b = step(b, dt, op, cfg, check_cfl=False)
        if landing:
            a.t = b.t = target
            ts.append(target)
            ds.append(grid.integrate_array(np.abs(a.u - b.u)))
            next_sample += sample_every
    return np.array(ts), np.array(ds)
