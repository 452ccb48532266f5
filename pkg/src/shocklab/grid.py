"""Discrete channel [-L, L] x T^d: quadrature, stencils, torus averages, shifts.

Arrays carry the xi axis first, followed by ``d`` periodic axes of
``n_t`` nodes each on the unit torus.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BlowUpError, GridMismatchError, ShiftTooLargeError

SNAPSHOT_MAGIC = b"SHKLAB01"
_HEADER = struct.Struct("<8s3i5d")


@dataclass(frozen=True)
class ChannelGrid:
    L: float
    n_xi: int
    d: int = 0
    n_t: int = 1

    def __post_init__(self):
        if self.n_xi < 16:
            raise ValueError("n_xi must be at least 16")
        if self.d not in (0, 1, 2):
            raise ValueError("transverse dimension d must be 0, 1 or 2")
        if self.d == 0 and self.n_t != 1:
            object.__setattr__(self, "n_t", 1)
        if self.d > 0 and self.n_t < 2:
            raise ValueError("n_t must be at least 2 when d > 0")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def h_xi(self) -> float:
        return 2.0 * self.L / (self.n_xi - 1)

    @property
    def h_t(self) -> float:
        return 1.0 / self.n_t

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_xi,) + (self.n_t,) * self.d

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_xi)

    @property
    def xt(self) -> np.ndarray:
        return np.arange(self.n_t) / self.n_t

    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (xi, x2, x3) for this grid."""
        axes = [self.xi] + [self.xt] * self.d
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def xi_weights(self) -> np.ndarray:
        w = np.full(self.n_xi, self.h_xi)
        w[0] = w[-1] = 0.5 * self.h_xi
        return w

    def expand(self, profile_values: np.ndarray) -> np.ndarray:
        """Broadcast a xi-profile to the full grid shape."""
        v = np.asarray(profile_values, dtype=float)
        return np.broadcast_to(v.reshape((self.n_xi,) + (1,) * self.d), self.shape)

    # -- array kernels ---------------------------------------------------
    def integrate_array(self, values: np.ndarray) -> float:
        v = np.asarray(values, dtype=float)
        if v.shape != self.shape:
            v = np.broadcast_to(v, self.shape)
        prof = v.reshape(self.n_xi, -1).mean(axis=1) if self.d else v
        return float(np.dot(self.xi_weights(), prof))

    def mean_transverse(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        return v.reshape(self.n_xi, -1).mean(axis=1) if self.d else v

    def diff_xi(self, values: np.ndarray) -> np.ndarray:
        return np.gradient(values, self.h_xi, axis=0, edge_order=2)

    def diff_t(self, values: np.ndarray, axis: int) -> np.ndarray:
        if axis > self.d:
            return np.zeros(self.shape)
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * self.h_t)

    def shift_array(self, values: np.ndarray, X: float) -> np.ndarray:
        """Values at xi + X by 4-point cubic Lagrange interpolation in xi.

        Stencil indices beyond the grid are clamped to the end nodes, which
        is exact for fields that are constant near the boundary.
        """
        if abs(X) >= 0.5 * self.L:
            raise ShiftTooLargeError(f"|X| = {abs(X):.4g} reaches L/2 = {0.5 * self.L:.4g}")
        if X == 0.0:
            return np.array(values, dtype=float, copy=True)
        s = X / self.h_xi
        k = int(np.floor(s))
        t = s - k
        w = (
            -t * (t - 1) * (t - 2) / 6.0,
            (t + 1) * (t - 1) * (t - 2) / 2.0,
            -(t + 1) * t * (t - 2) / 2.0,
            (t + 1) * t * (t - 1) / 6.0,
        )
        n = self.n_xi
        base = np.arange(n) + k
        out = np.zeros(values.shape)
        for off, wk in zip((-1, 0, 1, 2), w):
            idx = np.clip(base + off, 0, n - 1)
            out += wk * values[idx]
        return out


@dataclass(frozen=True)
class ChannelField:
    grid: ChannelGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            v = np.broadcast_to(v, self.grid.shape).copy()
        if not np.all(np.isfinite(v)):
            raise BlowUpError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: ChannelGrid, func) -> "ChannelField":
        return cls(grid, np.broadcast_to(func(*grid.coords()), grid.shape).copy())

    def __add__(self, other):
        return ChannelField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return ChannelField(self.grid, self.values - _vals(other, self.grid))


def _vals(other, grid):
    if isinstance(other, ChannelField):
        if other.grid != grid:
            raise GridMismatchError("fields live on different grids")
        return other.values
    return other


def integrate(field: ChannelField) -> float:
    """Trapezoid in xi times the transverse mean (unit torus measure)."""
    return field.grid.integrate_array(field.values)


def differentiate(field: ChannelField, axis: int) -> ChannelField:
    """Second-order derivative along ``axis`` (0 = xi, 1, 2 = periodic axes)."""
    g = field.grid
    if axis == 0:
        return ChannelField(g, g.diff_xi(field.values))
    if axis not in (1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    return ChannelField(g, g.diff_t(field.values, axis))


def torus_average(field: ChannelField) -> np.ndarray:
    if field.grid.d == 0:
        raise ValueError("torus average needs at least one transverse dimension")
    return field.grid.mean_transverse(field.values)


def shift_sample(field: ChannelField, X: float) -> ChannelField:
    return ChannelField(field.grid, field.grid.shift_array(field.values, X))


# ---------------------------------------------------------------------------
# snapshot io


def write_snapshot(path, field: ChannelField, t: float = 0.0, X: float = 0.0) -> Path:
    """Flat binary snapshot: header then row-major little-endian doubles."""
    g = field.grid
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, g.d, g.n_xi, g.n_t, g.L, g.h_xi, g.h_t, t, X))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> tuple[ChannelField, float, float]:
    raw = Path(path).read_bytes()
    magic, d, n_xi, n_t, L, _hx, _ht, t, X = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a shocklab snapshot")
    grid = ChannelGrid(L, n_xi, d, n_t)
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(grid.shape)
    return ChannelField(grid, vals.copy()), t, X


def write_field_csv(path, field: ChannelField) -> Path:
    g = field.grid
    if g.d > 1:
        raise ValueError("CSV export supports d <= 1 only")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if g.d == 0:
            w.writerow(["xi", "u"])
            for x, v in zip(g.xi, field.values):
                w.writerow([repr(float(x)), repr(float(v))])
        else:
            w.writerow(["xi", "x2", "u"])
            for i, x in enumerate(g.xi):
                for j, y in enumerate(g.xt):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(field.values[i, j]))])
    return path
