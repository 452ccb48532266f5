"""Compiled kernels for the built-in flux/entropy pairs.

The numpy implementations in ``functionals`` and ``solver`` are the
reference; these fused loops compute the same sums in one pass and are
used automatically when both specs carry a ``kernel`` tag. Set
``SHOCKLAB_NO_JIT=1`` to force the reference path.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

# Gauss-Legendre tables, padded; chosen per node by |u - v|
_LEVELS = (3, 5, 7, 9, 12, 16, 24, 40)
_SPANS = (0.02, 0.25, 0.75, 1.5, 3.0, 6.0, 12.0, np.inf)
_NMAX = max(_LEVELS)
GL_X = np.zeros((len(_LEVELS), _NMAX))
GL_W = np.zeros((len(_LEVELS), _NMAX))
for _k, _n in enumerate(_LEVELS):
    _x, _w = np.polynomial.legendre.leggauss(_n)
    GL_X[_k, :_n] = _x
    GL_W[_k, :_n] = _w
GL_N = np.array(_LEVELS, dtype=np.int64)
GL_SPAN = np.array(_SPANS)

_CACHE: dict = {}


def enabled() -> bool:
    return njit is not None and os.environ.get("SHOCKLAB_NO_JIT", "") not in ("1", "true", "yes")


def _flux_funcs(kernel):
    name, c = kernel
    c = float(c)
    if name == "burgers":
        def f(u):
            return 0.5 * u * u + c * u

        def df(u):
            return u + c

        def d2f(u):
            return 1.0
    elif name == "cubic":
        def f(u):
            u2 = u * u
            return 0.25 * u2 * u2 + 0.5 * u2 + c * u

        def df(u):
            return u * u * u + u + c

        def d2f(u):
            return 3.0 * u * u + 1.0
    elif name == "exp":
        def f(u):
            return math.exp(u) + c * u

        def df(u):
            return math.exp(u) + c

        def d2f(u):
            return math.exp(u)
    else:
        return None
    return njit(inline="always")(f), njit(inline="always")(df), njit(inline="always")(d2f)


def _entropy_funcs(kernel):
    name, b = kernel
    b = float(b)
    if name == "paper":
        def d12(u):
            bu = b * u
            u2 = u * u
            return 2.0 * b * math.sinh(bu) + 4.0 * u2 * u + 2.0 * u, 2.0 * b * b * math.cosh(bu) + 12.0 * u2 + 2.0

        def d123(u):
            # one exponential for all three derivatives (absolute error ~1e-16)
            e = math.exp(b * u)
            ei = 1.0 / e
            sh = 0.5 * (e - ei)
            ch = 0.5 * (e + ei)
            u2 = u * u
            return (2.0 * b * sh + 4.0 * u2 * u + 2.0 * u, 2.0 * b * b * ch + 12.0 * u2 + 2.0,
                    2.0 * b * b * b * sh + 24.0 * u)
    elif name == "quadratic":
        def d12(u):
            return 2.0 * u, 2.0

        def d123(u):
            return 2.0 * u, 2.0, 0.0
    else:
        return None
    return njit(inline="always")(d12), njit(inline="always")(d123)


def get_kernels(flux_kernel, entropy_kernel):
    """Compiled (functionals, rhs_xi) pair, or None when unavailable."""
    if not enabled() or flux_kernel is None or entropy_kernel is None:
        return None
    key = (tuple(flux_kernel), tuple(entropy_kernel))
    if key in _CACHE:
        return _CACHE[key]
    ff = _flux_funcs(flux_kernel)
    ee = _entropy_funcs(entropy_kernel)
    if ff is None or ee is None:
        _CACHE[key] = None
        return None
    f1, df1, d2f1 = ff
    d12, d123 = ee

    @njit(cache=False)
    def functionals(u, ut, dut, ddut, a, da, wq, h, sigma, full, gl_x, gl_w, gl_n, gl_span, d_out, mu_out):
        n, m = u.shape
        # pass 1: d = eta'(u) - eta'(u~) and mu(u)
        for i in range(n):
            e1t, e2t = d12(ut[i])
            for j in range(m):
                p1, p2, _ = d123(u[i, j])
                d_out[i, j] = p1 - e1t
                mu_out[i, j] = 1.0 / p2
        Y = 0.0
        BI = 0.0
        BO = 0.0
        G0 = 0.0
        D1 = 0.0
        E = 0.0
        inv2h = 0.5 / h
        for i in range(n):
            v = ut[i]
            e1t, e2t = d12(v)
            f1t = f1(v)
            mut = 1.0 / e2t
            w = e2t * dut[i]
            ai = a[i]
            dai = da[i]
            Wi = wq[i]
            for j in range(m):
                uu = u[i, j]
                dd = d_out[i, j]
                if i == 0:
                    dxd = (-3.0 * dd + 4.0 * d_out[1, j] - d_out[2, j]) * inv2h
                elif i == n - 1:
                    dxd = (3.0 * dd - 4.0 * d_out[n - 2, j] + d_out[n - 3, j]) * inv2h
                else:
                    dxd = (d_out[i + 1, j] - d_out[i - 1, j]) * inv2h
                delta = uu - v
                ent = 0.0
                etap = 0.0
                frel = 0.0
                Frel = 0.0
                if delta != 0.0:
                    span = abs(delta)
                    lev = 0
                    while span > gl_span[lev]:
                        lev += 1
                    half = 0.5 * delta
                    mid = 0.5 * (uu + v)
                    g0 = e2t * f1t
                    for k in range(gl_n[lev]):
                        s = mid + half * gl_x[lev, k]
                        wk = gl_w[lev, k]
                        q1, q2, q3 = d123(s)
                        r = uu - s
                        # relative forms as Taylor remainders int F''(s)(u - s) ds
                        ent += wk * q2 * r
                        etap += wk * q3 * r
                        frel += wk * d2f1(s) * r
                        Frel += wk * (q2 * f1(s) - g0)
                    ent *= half
                    etap *= half
                    frel *= half
                    Frel *= -half
                mu = mu_out[i, j]
                dmu = mu - mut
                Y += Wi * (-dai * ent + ai * w * delta)
                BI += Wi * (dai * (Frel + dd * (f1(uu) - f1t) + f1t * etap) - ai * w * frel)
                BO += Wi * (-dai * mu * dd * dxd - dai * dd * dmu * w - ai * dxd * dmu * w + ai * ddut[i] * etap)
                if full:
                    G0 += Wi * sigma * dai * ent
                    D1 += Wi * ai * mu * dxd * dxd
                    E += Wi * ai * ent
        return Y, BI, BO, G0, D1, E

    @njit(cache=False)
    def rhs_xi(ue, h, sigma, muscl, out):
        # ue has 2 ghost rows on each side; out receives advection + diffusion
        n = ue.shape[0] - 4
        m = ue.shape[1]
        inv_h = 1.0 / h
        inv_h2 = inv_h * inv_h
        for j in range(m):
            F_prev = 0.0
            for k in range(n + 1):
                # interface between extended cells c = k+1 and c+1
                c = k + 1
                if muscl:
                    sl = 0.0
                    dl = ue[c, j] - ue[c - 1, j]
                    dr = ue[c + 1, j] - ue[c, j]
                    if dl * dr > 0.0:
                        dc = 0.5 * (dl + dr)
                        mag = min(2.0 * abs(dl), 2.0 * abs(dr), abs(dc))
                        sl = mag if dc > 0 else -mag
                    sr = 0.0
                    dl2 = dr
                    dr2 = ue[c + 2, j] - ue[c + 1, j]
                    if dl2 * dr2 > 0.0:
                        dc2 = 0.5 * (dl2 + dr2)
                        mag2 = min(2.0 * abs(dl2), 2.0 * abs(dr2), abs(dc2))
                        sr = mag2 if dc2 > 0 else -mag2
                    uL = ue[c, j] + 0.5 * sl
                    uR = ue[c + 1, j] - 0.5 * sr
                else:
                    uL = ue[c, j]
                    uR = ue[c + 1, j]
                gL = f1(uL) - sigma * uL
                gR = f1(uR) - sigma * uR
                alpha = max(abs(df1(uL) - sigma), abs(df1(uR) - sigma))
                F = 0.5 * (gL + gR) - 0.5 * alpha * (uR - uL)
                if k > 0:
                    i = k - 1
                    out[i, j] = -(F - F_prev) * inv_h + (ue[i + 3, j] - 2.0 * ue[i + 2, j] + ue[i + 1, j]) * inv_h2
                F_prev = F
        return out

    pair = (functionals, rhs_xi)
    _CACHE[key] = pair
    return pair
