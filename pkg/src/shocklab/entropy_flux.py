"""Fluxes, entropies and the relative quantities built from them.

Every callable here acts elementwise on floats or numpy arrays. The
relative form of a scalar function ``F`` is

    F(u|v) = F(u) - F(v) - F'(v) (u - v),

and it is evaluated without forming ``F(u) - F(v)`` whenever a direct
integral representation is available, so that nearby states do not lose
digits to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

ScalarMap = Callable[[np.ndarray], np.ndarray]


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class FluxSpec:
    """Flux ``F = (f1, f2, f3)`` with analytic derivatives of ``f1``.

    ``f2`` and ``f3`` are the transverse fluxes; ``transverse_zero`` lets
    the solver skip them entirely.
    """

    name: str
    f1: ScalarMap
    df1: ScalarMap
    d2f1: ScalarMap
    d3f1: ScalarMap
    f2: ScalarMap = _zero
    df2: ScalarMap = _zero
    f3: ScalarMap = _zero
    df3: ScalarMap = _zero
    growth_a: float = 1.0
    growth_b: float = 1.0
    transverse_zero: bool = True
    # (name, offset) of a compiled twin of f1, or None for custom fluxes
    kernel: tuple | None = None

    def with_speed_offset(self, c: float) -> "FluxSpec":
        """Return the flux ``f1(u) + c u`` (used to make the shock speed positive)."""
        f1, df1 = self.f1, self.df1
        return FluxSpec(
            name=f"{self.name}+{c:g}u",
            f1=lambda u: f1(u) + c * np.asarray(u, dtype=float),
            df1=lambda u: df1(u) + c,
            d2f1=self.d2f1,
            d3f1=self.d3f1,
            f2=self.f2,
            df2=self.df2,
            f3=self.f3,
            df3=self.df3,
            growth_a=self.growth_a + abs(c),
            growth_b=self.growth_b,
            transverse_zero=self.transverse_zero,
            kernel=None if self.kernel is None else (self.kernel[0], self.kernel[1] + c),
        )


@dataclass(frozen=True)
class EntropySpec:
    """Convex entropy with derivatives through order four."""

    name: str
    eta: ScalarMap
    d1: ScalarMap
    d2: ScalarMap
    d3: ScalarMap
    d4: ScalarMap
    alpha: float
    compliant: bool = True
    params: dict = field(default_factory=dict)
    kernel: tuple | None = None


@dataclass(frozen=True)
class EntropySystem:
    flux: FluxSpec
    entropy: EntropySpec
    q1_base: float = 0.0
    u_min: float = -5.0
    u_max: float = 5.0

    def check(self, *values) -> None:
        for v in values:
            arr = np.asarray(v, dtype=float)
            if arr.size == 0:
                continue
            lo, hi = np.nanmin(arr), np.nanmax(arr)
            if lo < self.u_min or hi > self.u_max:
                raise DomainError(
                    f"state range [{lo:.6g}, {hi:.6g}] leaves the configured "
                    f"interval [{self.u_min}, {self.u_max}]"
                )

    def mu(self, u):
        return 1.0 / self.entropy.d2(u)


# ---------------------------------------------------------------------------
# built-in fluxes and entropies


def burgers_flux() -> FluxSpec:
    return FluxSpec(
        name="burgers",
        f1=lambda u: 0.5 * np.square(u),
        df1=lambda u: np.asarray(u, dtype=float) * 1.0,
        d2f1=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        d3f1=_zero,
        growth_a=1.0,
        growth_b=1.0,
        kernel=("burgers", 0.0),
    )


def cubic_flux() -> FluxSpec:
    # u^4/4 + u^2/2 <= 2 e^{|u|}
    return FluxSpec(
        name="cubic",
        f1=lambda u: 0.25 * np.power(u, 4) + 0.5 * np.square(u),
        df1=lambda u: np.power(u, 3) + u,
        d2f1=lambda u: 3.0 * np.square(u) + 1.0,
        d3f1=lambda u: 6.0 * np.asarray(u, dtype=float),
        growth_a=2.0,
        growth_b=1.0,
        kernel=("cubic", 0.0),
    )


def exp_flux() -> FluxSpec:
    return FluxSpec(
        name="exp",
        f1=np.exp,
        df1=np.exp,
        d2f1=np.exp,
        d3f1=np.exp,
        growth_a=1.0,
        growth_b=1.0,
        kernel=("exp", 0.0),
    )


FLUXES: dict[str, Callable[[], FluxSpec]] = {
    "burgers": burgers_flux,
    "cubic": cubic_flux,
    "exp": exp_flux,
}


def make_flux(name: str, transverse: str = "zero") -> FluxSpec:
    """Build a registered flux; ``transverse`` names the map used for f2 and f3."""
    try:
        base = FLUXES[name]()
    except KeyError:
        raise KeyError(f"unknown flux {name!r}; choose from {sorted(FLUXES)}") from None
    if transverse == "zero":
        return base
    try:
        tr = FLUXES[transverse]()
    except KeyError:
        raise KeyError(f"unknown transverse flux {transverse!r}") from None
    return FluxSpec(
        name=f"{base.name}/{tr.name}",
        f1=base.f1,
        df1=base.df1,
        d2f1=base.d2f1,
        d3f1=base.d3f1,
        f2=tr.f1,
        df2=tr.df1,
        f3=tr.f1,
        df3=tr.df1,
        growth_a=max(base.growth_a, tr.growth_a),
        growth_b=max(base.growth_b, tr.growth_b),
        transverse_zero=False,
        kernel=base.kernel,
    )


def exp_quartic_entropy(b: float = 1.0) -> EntropySpec:
    """eta(u) = e^{bu} + e^{-bu} + u^4 + u^2."""
    b = float(b)
    if b <= 0:
        raise ValueError("entropy parameter b must be positive")

    def eta(u):
        return np.exp(b * u) + np.exp(-b * u) + np.power(u, 4) + np.square(u)

    def d1(u):
        return 2.0 * b * np.sinh(b * u) + 4.0 * np.power(u, 3) + 2.0 * u

    def d2(u):
        return 2.0 * b * b * np.cosh(b * u) + 12.0 * np.square(u) + 2.0

    def d3(u):
        return 2.0 * b**3 * np.sinh(b * u) + 24.0 * np.asarray(u, dtype=float)

    def d4(u):
        return 2.0 * b**4 * np.cosh(b * u) + 24.0

    # both minima sit at u = 0
    alpha = min(2 * b * b + 2.0, 2 * b**4 + 24.0)
    return EntropySpec("paper", eta, d1, d2, d3, d4, alpha=alpha, params={"b": b}, kernel=("paper", b))


def quadratic_entropy() -> EntropySpec:
    """eta(u) = u^2. Its fourth derivative vanishes, so it is diagnostics only."""
    return EntropySpec(
        "quadratic",
        eta=np.square,
        d1=lambda u: 2.0 * np.asarray(u, dtype=float),
        d2=lambda u: 2.0 * np.ones_like(np.asarray(u, dtype=float)),
        d3=_zero,
        d4=_zero,
        alpha=2.0,
        compliant=False,
        kernel=("quadratic", 0.0),
    )


def make_entropy(name: str, b: float = 1.0) -> EntropySpec:
    if name == "paper":
        return exp_quartic_entropy(b)
    if name == "quadratic":
        return quadratic_entropy()
    raise KeyError(f"unknown entropy {name!r}; choose from ['paper', 'quadratic']")


def make_system(flux="burgers", entropy="paper", b=1.0, transverse="zero", **kw) -> EntropySystem:
    flux = make_flux(flux, transverse) if isinstance(flux, str) else flux
    entropy = make_entropy(entropy, b) if isinstance(entropy, str) else entropy
    return EntropySystem(flux, entropy, **kw)


# ---------------------------------------------------------------------------
# relative quantities

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def _node_count(span: float) -> int:
    # Gauss-Legendre on entire integrands with growth rate <= ~2: error is
    # roughly span^{2n} / (2n)!, so these thresholds keep it below 1e-15.
    for limit, n in ((0.25, 5), (0.75, 7), (1.5, 9), (3.0, 12), (6.0, 16), (12.0, 24)):
        if span <= limit:
            return n
    return 40


def segment_integral(func: ScalarMap, v, u, n: int | None = None):
    """Elementwise integral of ``func`` over ``[v, u]`` by Gauss-Legendre."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    half = 0.5 * (u - v)
    mid = 0.5 * (u + v)
    if n is None:
        n = _node_count(2.0 * float(np.max(np.abs(half))) if half.size else 0.0)
    x, w = _gauss(n)
    total = np.zeros(np.broadcast(u, v).shape)
    for xk, wk in zip(x, w):
        total = total + wk * func(mid + half * xk)
    return half * total


def relative_entropy(sys: EntropySystem, u, v):
    """eta(u|v) = eta(u) - eta(v) - eta'(v)(u - v)."""
    sys.check(u, v)
    e = sys.entropy
    u = np.asarray(u, dtype=float)
    # Taylor remainder: eta(u|v) = int_v^u eta''(s) (u - s) ds, free of cancellation
    return segment_integral(lambda s: e.d2(s) * (u - s), v, u)


def relative_entropy_direct(sys: EntropySystem, u, v):
    """Textbook formula; used as an independent cross-check."""
    sys.check(u, v)
    e = sys.entropy
    return e.eta(u) - e.eta(v) - e.d1(v) * (np.asarray(u) - v)


def relative_flux(sys: EntropySystem, u, v):
    """f1(u|v)."""
    sys.check(u, v)
    f = sys.flux
    u = np.asarray(u, dtype=float)
    return segment_integral(lambda s: f.d2f1(s) * (u - s), v, u)


def relative_eta_prime(sys: EntropySystem, u, v):
    """(eta')(u|v) = eta'(u) - eta'(v) - eta''(v)(u - v)."""
    sys.check(u, v)
    e = sys.entropy
    u = np.asarray(u, dtype=float)
    return segment_integral(lambda s: e.d3(s) * (u - s), v, u)


def potential(sys: EntropySystem, u) -> float:
    """F(u) = -int_{base}^u eta''(s) f1(s) ds by adaptive quadrature (scalar)."""
    sys.check(u)
    e, f = sys.entropy, sys.flux
    val, err = integrate.quad(lambda s: e.d2(s) * f.f1(s), sys.q1_base, float(u), epsabs=1e-13, epsrel=1e-13, limit=200)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(f"potential quadrature failed at u={u} (err={err:.2e})")
    return -val


def entropy_flux(sys: EntropySystem, u) -> float:
    """q1(u) = int_{base}^u eta'(s) f1'(s) ds by adaptive quadrature (scalar)."""
    sys.check(u)
    e, f = sys.entropy, sys.flux
    val, err = integrate.quad(lambda s: e.d1(s) * f.df1(s), sys.q1_base, float(u), epsabs=1e-13, epsrel=1e-13, limit=200)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(f"entropy flux quadrature failed at u={u} (err={err:.2e})")
    return val


def entropy_flux_q1(sys: EntropySystem, u: float, v: float) -> float:
    """Relative entropy flux q1(u;v) = q1(u) - q1(v) - eta'(v)(f1(u) - f1(v))."""
    e, f = sys.entropy, sys.flux
    return entropy_flux(sys, u) - entropy_flux(sys, v) - float(e.d1(v) * (f.f1(u) - f.f1(v)))


def potential_F(sys: EntropySystem, u, v):
    """F(u|v) for F(u) = -int^u eta'' f1; elementwise and base-free.

    F(u|v) = -int_v^u [eta''(s) f1(s) - eta''(v) f1(v)] ds.
    """
    sys.check(u, v)
    e, f = sys.entropy, sys.flux
    gv = e.d2(v) * f.f1(v)
    return -segment_integral(lambda s: e.d2(s) * f.f1(s) - gv, v, u)


def relative_q1(sys: EntropySystem, u, v):
    """Vectorised q1(u;v) through its decomposition into F, f1 and eta' terms."""
    e, f = sys.entropy, sys.flux
    return (
        potential_F(sys, u, v)
        + (e.d1(u) - e.d1(v)) * (f.f1(u) - f.f1(v))
        + f.f1(v) * relative_eta_prime(sys, u, v)
    )


# ---------------------------------------------------------------------------
# hypothesis report


@dataclass
class HypothesisReport:
    theta_bound: float
    constants: dict[str, float]
    passed: dict[str, bool]
    notes: list[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def check_hypotheses(
    sys: EntropySystem,
    theta_bound: float,
    u_grid: np.ndarray | None = None,
    v_grid: np.ndarray | None = None,
) -> HypothesisReport:
    """Empirical constants of the entropy hypotheses on a sample grid.

    Each constant is the supremum over the grid of the defining ratio, i.e.
    the smallest constant that works there. Pairs with ``u == v`` are
    excluded (0/0).
    """
    if theta_bound <= 0:
        raise ValueError("theta_bound must be positive")
    if u_grid is None:
        u_grid = np.linspace(sys.u_min, sys.u_max, 401)
    if v_grid is None:
        v_grid = np.linspace(-theta_bound, theta_bound, 81)
    v_grid = v_grid[np.abs(v_grid) <= theta_bound]
    e, f = sys.entropy, sys.flux

    grid_u = np.asarray(u_grid, dtype=float)
    A2 = e.d2(grid_u)
    A4 = e.d4(grid_u)
    constants = {"A1_eta2_min": float(A2.min()), "A1_eta4_min": float(A4.min())}
    passed = {"A1": bool(A2.min() >= e.alpha * (1 - 1e-12) and A4.min() >= e.alpha * (1 - 1e-12))}
    notes = []
    if not passed["A1"]:
        notes.append(f"(A1) fails: min eta''={A2.min():.4g}, min eta''''={A4.min():.4g}, alpha={e.alpha:g}")

    U, V = np.meshgrid(grid_u, v_grid, indexing="ij")
    keep = np.abs(U - V) > 1e-12
    U, V = U[keep], V[keep]
    dp = np.abs(e.d1(U) - e.d1(V))
    inside = np.abs(U) <= 2 * theta_bound
    rel = relative_entropy(sys, U, V)
    ratios = {
        "A2_i": np.where(inside, dp**2, dp) / rel,
        "A2_ii": np.abs(f.f1(U) - f.f1(V)) / dp,
        "A2_iii": np.abs(e.d2(U) - e.d2(V)) / dp,
        "A2_iv": np.abs(e.eta(U) - e.eta(V)) / dp,
        "A2_v": np.abs(segment_integral(lambda s: e.d2(s) * f.f1(s), V, U)) / np.where(inside, dp, dp**2),
    }
    for key, r in ratios.items():
        bad = ~np.isfinite(r)
        if bad.any():
            notes.append(f"{key}: {int(bad.sum())} non-finite ratios")
        sup = float(np.max(r[~bad])) if (~bad).any() else float("nan")
        constants[key] = sup
        passed[key] = bool(math.isfinite(sup) and not bad.any())
    return HypothesisReport(theta_bound, constants, passed, notes)
