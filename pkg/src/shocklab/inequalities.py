"""Numerical checks of the functional inequalities behind the contraction.

Test functions live on (0, 1) x T^d, sampled at midpoints in z (so the
weights z(1-z) and L(z) never hit the endpoints) and uniformly on the
unit torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConstraintError, QuadratureError


# ---------------------------------------------------------------------------
# test functions


@dataclass
class TestFunctionW:
    """Values and first derivatives of W on the (z, x') grid.

    ``dx`` holds one array per transverse axis. ``recipe`` records how the
    function was built so reports can be reproduced.
    """

    __test__ = False  # not a pytest class

    z: np.ndarray
    values: np.ndarray
    dz: np.ndarray
    dx: list[np.ndarray]
    d: int
    recipe: dict = field(default_factory=dict)

    @property
    def n_z(self) -> int:
        return self.z.size

    def integral(self, arr) -> float:
        """Midpoint rule in z times the transverse mean."""
        a = np.asarray(arr, dtype=float)
        return float(a.reshape(self.n_z, -1).mean(axis=1).sum() / self.n_z)

    def transverse_mean(self, arr) -> np.ndarray:
        return np.asarray(arr, dtype=float).reshape(self.n_z, -1).mean(axis=1)

    def zweight(self) -> np.ndarray:
        zz = self.z * (1 - self.z)
        return zz.reshape((self.n_z,) + (1,) * self.d)


def z_midpoints(n_z: int) -> np.ndarray:
    return (np.arange(n_z) + 0.5) / n_z


def torus_nodes(n_t: int) -> np.ndarray:
    return np.arange(n_t) / n_t


def from_callable(func, dz, dx=(), d: int = 0, n_z: int = 256, n_t: int = 32, recipe=None) -> TestFunctionW:
    """Sample a closed-form W and its derivatives; callables take (z, x2, x3)."""
    z = z_midpoints(n_z)
    axes = [z] + [torus_nodes(n_t)] * d
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    shape = (n_z,) + (n_t,) * d
    vals = np.broadcast_to(func(*grids), shape).astype(float)
    dzv = np.broadcast_to(dz(*grids), shape).astype(float)
    dxs = [np.broadcast_to(g(*grids), shape).astype(float) for g in dx]
    while len(dxs) < d:
        dxs.append(np.zeros(shape))
    return TestFunctionW(z, vals, dzv, dxs, d, recipe or {"kind": "callable"})


def constant(c: float, d: int = 0, n_z: int = 64, n_t: int = 8) -> TestFunctionW:
    return from_callable(lambda *g: np.full_like(g[0], c), lambda *g: np.zeros_like(g[0]),
                         d=d, n_z=n_z, n_t=n_t, recipe={"kind": "constant", "c": c})


def trig_chebyshev(coef: np.ndarray, d: int, n_z: int = 128, n_t: int = 16, offset: float = 0.0) -> TestFunctionW:
    """W = offset + sum_{j,k} coef[j, k...] T_j(2z - 1) phi_k(x').

    ``coef`` has shape (deg_z + 1, 2K + 1[, 2K + 1]); transverse index m maps
    to 1, cos(2 pi k x), sin(2 pi k x) for m = 0, 2k - 1, 2k.
    """
    z = z_midpoints(n_z)
    s = 2 * z - 1
    nz_modes = coef.shape[0]
    T = np.stack([C.chebval(s, np.eye(nz_modes)[j]) for j in range(nz_modes)])  # (J, n_z)
    dT = np.stack([2 * C.chebval(s, C.chebder(np.eye(nz_modes)[j])) for j in range(nz_modes)])
    x = torus_nodes(n_t)

    def basis(m):
        if m == 0:
            return np.ones_like(x), np.zeros_like(x)
        k = (m + 1) // 2
        w = 2 * np.pi * k
        if m % 2:
            return np.cos(w * x), -w * np.sin(w * x)
        return np.sin(w * x), w * np.cos(w * x)

    if d == 0:
        c = coef.reshape(nz_modes)
        vals = offset + c @ T
        return TestFunctionW(z, vals, c @ dT, [], 0, {"kind": "trig_chebyshev", "coef": coef.tolist(), "offset": offset})
    n_modes = coef.shape[1]
    B = [basis(m) for m in range(n_modes)]
    P = np.stack([b[0] for b in B])  # (M, n_t)
    dP = np.stack([b[1] for b in B])
    if d == 1:
        vals = offset + np.einsum("jm,jz,mx->zx", coef, T, P)
        dzv = np.einsum("jm,jz,mx->zx", coef, dT, P)
        dx = [np.einsum("jm,jz,mx->zx", coef, T, dP)]
    else:
        vals = offset + np.einsum("jmn,jz,mx,ny->zxy", coef, T, P, P)
        dzv = np.einsum("jmn,jz,mx,ny->zxy", coef, dT, P, P)
        dx = [np.einsum("jmn,jz,mx,ny->zxy", coef, T, dP, P), np.einsum("jmn,jz,mx,ny->zxy", coef, T, P, dP)]
    return TestFunctionW(z, vals, dzv, dx, d, {"kind": "trig_chebyshev", "coef": coef.tolist(), "offset": offset})


def scaled(W: TestFunctionW, factor: float, offset: float = 0.0) -> TestFunctionW:
    """offset + factor * W."""
    return TestFunctionW(W.z, offset + factor * W.values, factor * W.dz, [factor * g for g in W.dx], W.d,
                         dict(W.recipe, factor=factor, shift=offset))


def random_constrained_W(rng: np.random.Generator, eps: float, M: float, d: int = 1,
                         deg_z: int = 5, K: int = 2, n_z: int = 128, n_t: int = 16) -> TestFunctionW:
    """Random W whose mean sits near the circle int W^2 + 2 int W = 0.

    A zero-mean fluctuation (Chebyshev in z times trigonometric in x') is
    added to a mean drawn in [-2.2, 0.2], then the whole function is scaled
    down, if needed, until ||W||_inf <= 1/eps and int W^2 <= M.
    """
    shape = (deg_z + 1,) + (2 * K + 1,) * d
    coef = rng.normal(size=shape) / (1.0 + np.arange(deg_z + 1)).reshape((-1,) + (1,) * d) ** 1.5
    coef.flat[0] = 0.0
    F = trig_chebyshev(coef, d, n_z, n_t)
    F = scaled(F, 1.0, -F.integral(F.values))  # exact zero mean on the grid
    var = F.integral(F.values**2)
    mean = rng.uniform(-2.2, 0.2)
    # put part of the circle budget -(m^2 + 2m) into the fluctuation
    budget = max(-(mean**2 + 2 * mean), 0.0)
    if rng.uniform() < 0.5:
        target = budget  # mean and fluctuation sit on the circle
    else:
        target = rng.uniform(0.0, 1.0) * budget + rng.uniform(0.0, 0.05)
    amp = math.sqrt(target / var) if var > 0 else 0.0
    W = scaled(F, amp, mean)
    sup = float(np.max(np.abs(W.values)))
    l2 = W.integral(W.values**2)
    shrink = min(1.0, (1.0 / eps) / sup if sup > 0 else 1.0, math.sqrt(M / l2) if l2 > 0 else 1.0)
    if shrink < 1.0:
        W = scaled(W, shrink * (1 - 1e-12))
    W.recipe.update(mean=mean, amp=amp, shrink=shrink)
    return W


def random_trig_f(rng: np.random.Generator, d: int = 1, deg_z: int = 6, K: int = 3,
                  n_z: int = 256, n_t: int = 16) -> TestFunctionW:
    shape = (deg_z + 1,) + (2 * K + 1,) * d
    coef = rng.normal(size=shape)
    return trig_chebyshev(coef, d, n_z, n_t)


# ---------------------------------------------------------------------------
# the nonlinear Poincare-type functional


def check_constraints(W: TestFunctionW, eps: float, M: float) -> None:
    sup = float(np.max(np.abs(W.values)))
    l2 = W.integral(W.values**2)
    if sup > 1.0 / eps * (1 + 1e-12):
        raise ConstraintError(f"||W||_inf = {sup:.6g} exceeds 1/eps = {1 / eps:.6g}")
    if l2 > M * (1 + 1e-12):
        raise ConstraintError(f"int W^2 = {l2:.6g} exceeds M = {M:.6g}")


def eval_R(W: TestFunctionW, eps: float, delta: float, M: float | None = None) -> float:
    """R_{eps,delta}(W); constraints are checked when M is given."""
    if M is not None:
        check_constraints(W, eps, M)
    I = W.integral
    v = W.values
    w2 = I(v**2)
    w1 = I(v)
    grad_t = sum(I(g**2) for g in W.dx)
    return (
        -(w2 + 2 * w1) ** 2 / delta
        + (1 + delta) * w2
        + (2.0 / 3.0) * I(v**3)
        + delta * I(np.abs(v) ** 3)
        - (1 - delta) * I(W.zweight() * W.dz**2)
        - (1 - delta) / eps**1.5 * grad_t
    )


def R_constant(c: float, delta: float) -> float:
    """Closed form of R for a constant W = c (all gradients vanish)."""
    return -((c * c + 2 * c) ** 2) / delta + (1 + delta) * c * c + (2.0 / 3.0) * c**3 + delta * abs(c) ** 3


# ---------------------------------------------------------------------------
# pointwise deviation bound


def L_weight(z):
    """L(z) = -z - ln(1 - z)."""
    z = np.asarray(z, dtype=float)
    return -z - np.log1p(-z)


def pointwise_slack(f: TestFunctionW) -> np.ndarray:
    """RHS - LHS of the pointwise deviation bound at every grid node."""
    total = f.integral(f.values)
    D = f.integral(f.zweight() * f.dz**2)
    tm = f.transverse_mean(f.values).reshape((f.n_z,) + (1,) * f.d)
    root = np.sqrt(L_weight(f.z) + L_weight(1 - f.z)).reshape((f.n_z,) + (1,) * f.d)
    lhs = f.values - total
    rhs = root * math.sqrt(D) + f.values - tm
    return rhs - lhs


def pointwise_lemma_check(f: TestFunctionW) -> float:
    """Minimum slack over the grid; non-negative when the bound holds."""
    return float(np.min(pointwise_slack(f)))


# ---------------------------------------------------------------------------
# constants


def theta_constant(tol: float = 1e-10) -> tuple[float, float]:
    """(theta, quadrature value of int_0^1 (L(z) + L(1-z))^2 dz).

    The closed form theta^2 = 5 - pi^2/3 is checked against the quadrature.
    """
    def integrand(z):
        s = -1.0 - math.log1p(-z) - math.log(z)
        return s * s

    pieces = [integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-14, limit=400) for a, b in ((0, 0.5), (0.5, 1))]
    value = sum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    closed = 5.0 - math.pi**2 / 3.0
    if err > tol or abs(value - closed) > tol:
        raise QuadratureError(f"theta quadrature {value!r} (err {err:.2e}) disagrees with {closed!r}")
    return math.sqrt(closed), value


THETA = math.sqrt(5.0 - math.pi**2 / 3.0)


def g_poly(x, theta: float = THETA):
    """g(x) = 2x - 2x^2 - (4/3)x^3 + (7/5) theta (-x^2 - 2x)^{3/2} on [-2, 0]."""
    x = np.asarray(x, dtype=float)
    inner = np.clip(-x * x - 2 * x, 0.0, None)
    return 2 * x - 2 * x * x - (4.0 / 3.0) * x**3 + 1.4 * theta * inner**1.5


def g_poly_exact(x: Fraction) -> Fraction:
    """Polynomial part of g in exact arithmetic (the root term vanishes at -2 and 0)."""
    x = Fraction(x)
    if -x * x - 2 * x != 0:
        raise ValueError("exact evaluation only where the root term vanishes")
    return 2 * x - 2 * x * x - Fraction(4, 3) * x**3


def E_poly(z1, z2):
    return z1 * z1 + z2 * z2 + 2 * z1


def P_delta(z1, z2, delta: float, theta: float = THETA):
    a1 = np.abs(z1)
    return (
        (1 + delta) * (z1 * z1 + z2 * z2)
        + 2 * z1 * z2 * z2
        + (2.0 / 3.0) * z1**3
        + 6 * delta * (a1 * z2 * z2 + a1**3)
        - 2 * (1 - delta - (2.0 / 3.0 + delta) * 1.05 * theta * z2) * z2 * z2
    )


@dataclass
class AlgebraicReport:
    g_max_on_grid: float
    g_at_minus2: float
    g_at_0: float
    deltas: np.ndarray
    delta3: np.ndarray  # per delta; inf when the scanned region has no violation
    delta2: float  # largest delta on the grid with delta3 > 0 (nan if none)
    z1_range: tuple[float, float]
    z2_range: tuple[float, float]
    step: float

    @property
    def nonempty(self) -> bool:
        return bool(np.any(self.delta3 > 0))


def algebraic_suite(deltas=None, z1_range=(-3.0, 1.0), z2_range=(0.0, 3.0), step: float = 1e-3,
                    g_points: int = 10_000, violation_tol: float = 1e-13) -> AlgebraicReport:
    """Scan P_delta - E^2 over a (Z1, Z2) box and evaluate g on [-2, 0).

    For each delta, delta3 is the smallest |E| among grid points where
    P_delta - E^2 > violation_tol, so the inequality holds on
    {|E| < delta3} within the scanned grid.
    """
    if deltas is None:
        deltas = np.logspace(-3, math.log10(0.3), 12)
    deltas = np.asarray(deltas, dtype=float)
    xg = -2.0 + 2.0 * np.arange(g_points) / g_points  # [-2, 0)
    gmax = float(np.max(g_poly(xg)))
    z1 = np.arange(round((z1_range[1] - z1_range[0]) / step) + 1) * step + z1_range[0]
    z2 = np.arange(round((z2_range[1] - z2_range[0]) / step) + 1) * step + z2_range[0]
    d3 = np.full(deltas.size, math.inf)
    rows = 256
    for start in range(0, z1.size, rows):
        Z1 = z1[start:start + rows, None]
        E = E_poly(Z1, z2[None, :])
        absE = np.abs(E)
        for k, dl in enumerate(deltas):
            bad = P_delta(Z1, z2[None, :], dl) - E * E > violation_tol
            if bad.any():
                d3[k] = min(d3[k], float(absE[bad].min()))
    ok = deltas[d3 > 0]
    return AlgebraicReport(
        g_max_on_grid=gmax,
        g_at_minus2=float(g_poly(-2.0)),
        g_at_0=float(g_poly(0.0)),
        deltas=deltas,
        delta3=d3,
        delta2=float(ok.max()) if ok.size else float("nan"),
        z1_range=tuple(z1_range),
        z2_range=tuple(z2_range),
        step=step,
    )


# ---------------------------------------------------------------------------
# Poincare inequality on (0,1) x T^d


def poincare_slack(W: TestFunctionW) -> float:
    """(1/2) int z(1-z) W_z^2 + (1/4 pi^2) sum int |W_x|^2 - int |W - mean|^2."""
    I = W.integral
    mean = I(W.values)
    lhs = I((W.values - mean) ** 2)
    rhs = 0.5 * I(W.zweight() * W.dz**2) + sum(I(g**2) for g in W.dx) / (4 * math.pi**2)
    return rhs - lhs


# ---------------------------------------------------------------------------
# interpolation inequality on the channel


GN_EXPONENTS = tuple(Fraction(k + 1, k + 3) for k in range(3))


def gn_ratio(l2: float, l1: float, grad_l2: float) -> float:
    """||f||_2 / sum_k ||grad f||_2^{theta_k} ||f||_1^{1 - theta_k}."""
    denom = sum(grad_l2 ** float(t) * l1 ** (1 - float(t)) for t in GN_EXPONENTS)
    return l2 / denom


def gn_check(values: np.ndarray, grid) -> float:
    """C_eff of a field on a ChannelGrid, norms by the grid quadrature."""
    v = np.asarray(values, dtype=float)
    l2 = math.sqrt(grid.integrate_array(v * v))
    l1 = grid.integrate_array(np.abs(v))
    g2 = grid.integrate_array(grid.diff_xi(v) ** 2)
    for ax in range(1, grid.d + 1):
        g2 += grid.integrate_array(grid.diff_t(v, ax) ** 2)
    return gn_ratio(l2, l1, math.sqrt(g2))


def gaussian_norms(lam: float) -> tuple[float, float, float]:
    """Closed-form (||f||_2, ||f||_1, ||f'||_2) for f(xi) = exp(-(lam xi)^2)."""
    c = (math.pi / 2) ** 0.25
    return c / math.sqrt(lam), math.sqrt(math.pi) / lam, c * math.sqrt(lam)


# ---------------------------------------------------------------------------
# normalised perturbation from a simulation


def extract_W(u_shifted: np.ndarray, frame, n_z: int = 256, z_margin: float = 1e-6) -> TestFunctionW:
    """W(z, x') = (lam/eps) (u^X - u~)(xi(z), x') on a midpoint z grid.

    Points with z outside [z_margin, 1 - z_margin] are dropped from the
    grid (the profile tables cannot resolve z^{-1} there).
    """
    from .shock_profile import z_inverse

    grid, prof = frame.grid, frame.profile
    z = z_midpoints(n_z)
    z = z[(z > z_margin) & (z < 1 - z_margin)]
    xi = z_inverse(prof, z)
    w = (frame.lam / frame.eps) * (u_shifted - frame.ut)
    flat = w.reshape(grid.n_xi, -1)
    sp = CubicSpline(grid.xi, flat, axis=0)
    vals = sp(xi).reshape((z.size,) + grid.shape[1:])
    dz = np.gradient(vals, z, axis=0, edge_order=2)
    dx = []
    for ax in range(1, grid.d + 1):
        dx.append((np.roll(vals, -1, axis=ax) - np.roll(vals, 1, axis=ax)) / (2.0 * grid.h_t))
    return TestFunctionW(z, vals, dz, dx, grid.d, {"kind": "simulation"})
