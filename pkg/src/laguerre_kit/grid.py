"""Quadrature grids on (0, inf)^n, time quadrature and sampled functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import UsageError

GL_ORDER = 16


def gauss_panels(breaks, order: int = GL_ORDER):
    """Composite Gauss-Legendre nodes and weights on consecutive panels."""
    b = np.asarray(breaks, dtype=float)
    g, w = np.polynomial.legendre.leggauss(order)
    lo, hi = b[:-1, None], b[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (g[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def log_linear_breaks(x_min=1e-8, x_switch=1.0, x_max=24.0, per_decade=2, width=0.25):
    """Geometric panel breaks on [x_min, x_switch], uniform ones on [x_switch, x_max]."""
    n_log = max(int(np.ceil(np.log10(x_switch / x_min) * per_decade)), 1)
    left = np.geomspace(x_min, x_switch, n_log + 1)
    n_lin = max(int(np.ceil((x_max - x_switch) / width)), 1)
    right = np.linspace(x_switch, x_max, n_lin + 1)
    return np.concatenate([left, right[1:]])


class Grid:
    """Composite Gauss-Legendre grid on [x_min, x_max] with a power-law tail on [0, x_min].

    Integrands are assumed to behave like a pure power of x on the first panel,
    which holds for every function built from Laguerre functions and heat
    kernels (a power times an even analytic function).
    """

    def __init__(self, breaks, order: int = GL_ORDER):
        b = np.asarray(breaks, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise UsageError("panel breaks must be positive and strictly increasing")
        self.breaks = b
        self.order = order
        self.nodes, self.weights = gauss_panels(b, order)

    @classmethod
    def default(cls, x_max: float = 24.0, x_min: float = 1e-8, **kw) -> "Grid":
        return cls(log_linear_breaks(x_min=x_min, x_max=x_max, **kw))

    @property
    def size(self) -> int:
        return self.nodes.size

    def tail(self, values):
        """Estimate of the integral over [0, x_min] from the first panel."""
        v = np.asarray(values, dtype=float)
        return self._tail(v[..., 0], v[..., self.order - 1])

    def _tail(self, f0, f1):
        x0, x1 = self.nodes[0], self.nodes[self.order - 1]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s = np.log(f1 / f0) / np.log(x1 / x0)
        ok = (f0 * f1 > 0) & np.isfinite(s)
        s = np.where(ok, np.maximum(s, -0.99), 0.0)
        a = self.breaks[0]
        return np.where(ok, f0 * (a / x0) ** s * a / (s + 1.0), 0.0)

    def project(self, values, table):
        """Integrals of values(..., x) * table(k, x) for every row k of ``table``."""
        v = np.asarray(values, dtype=float)
        T = np.asarray(table, dtype=float)
        main = v @ (T * self.weights).T
        o = self.order - 1
        f0 = v[..., None, 0] * T[:, 0]
        f1 = v[..., None, o] * T[:, o]
        return main + self._tail(f0, f1)

    def integrate(self, values, tail: bool = True):
        """Integral over (0, x_max) of samples given on the nodes (last axis)."""
        v = np.asarray(values, dtype=float)
        out = v @ self.weights
        if tail:
            out = out + self.tail(v)
        return out


class TensorGrid:
    """Tensor product of 1-D grids; values are arrays with one axis per coordinate."""

    def __init__(self, axes: Sequence[Grid]):
        self.axes = tuple(axes)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self):
        return tuple(g.size for g in self.axes)

    def mesh(self):
        return np.meshgrid(*[g.nodes for g in self.axes], indexing="ij")

    def integrate(self, values, tail: bool = True):
        out = np.asarray(values, dtype=float)
        for g in reversed(self.axes):
            out = g.integrate(out, tail=tail)
        return out


def as_tensor(grid) -> TensorGrid:
    return grid if isinstance(grid, TensorGrid) else TensorGrid([grid])


@dataclass
class GridFunction:
    """Real function sampled on a grid, optionally backed by a callable.

    When ``func`` is present, operators evaluate it off the grid (for local
    refinement around narrow kernels); otherwise a cubic spline in log x is
    used (1-D only).  ``jumps`` lists known discontinuities.
    """

    grid: object
    values: np.ndarray
    func: Optional[Callable] = None
    jumps: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = as_tensor(self.grid).shape
        if self.values.shape != shape:
            raise UsageError(f"values have shape {self.values.shape}, grid has {shape}")

    @classmethod
    def from_callable(cls, grid, func, jumps=()) -> "GridFunction":
        tg = as_tensor(grid)
        vals = func(*tg.mesh())
        vals = np.broadcast_to(np.asarray(vals, dtype=float), tg.shape).copy()
        return cls(grid, vals, func, tuple(jumps))

    @property
    def n(self) -> int:
        return as_tensor(self.grid).n

    def at(self, *coords):
        if self.func is not None:
            return np.asarray(self.func(*coords), dtype=float)
        if self.n != 1:
            raise UsageError("off-grid evaluation of an n-D sampled function needs func")
        g = self.grid if isinstance(self.grid, Grid) else self.grid.axes[0]
        spline = CubicSpline(np.log(g.nodes), self.values, extrapolate=True)
        x = np.asarray(coords[0], dtype=float)
        return np.where((x >= g.nodes[0]) & (x <= g.nodes[-1]), spline(np.log(x)), 0.0)

    def integral(self):
        return float(as_tensor(self.grid).integrate(self.values))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        f, g = self.func, other.func
        func = (lambda *c: f(*c) + g(*c)) if f is not None and g is not None else None
        return GridFunction(self.grid, self.values + other.values, func, tuple(sorted(set(self.jumps) | set(other.jumps))))

    def scale(self, a: float) -> "GridFunction":
        f = self.func
        func = (lambda *c: a * f(*c)) if f is not None else None
        return GridFunction(self.grid, a * self.values, func, self.jumps)


@dataclass
class TimeQuadrature:
    """Trapezoid rule in u = log t; ``weights`` integrate g(t) dt/t."""

    t_min: float = 1e-5
    t_max: float = 50.0
    count: int = 160
    nodes: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.count < 2 or not (0 < self.t_min < self.t_max):
            raise UsageError("time quadrature needs 0 < t_min < t_max and at least 2 nodes")
        u = np.linspace(np.log(self.t_min), np.log(self.t_max), self.count)
        h = u[1] - u[0]
        w = np.full(self.count, h)
        w[[0, -1]] *= 0.5
        self.nodes = np.exp(u)
        self.weights = w

    @property
    def adequate(self) -> bool:
        return self.t_min <= 1e-5 and self.t_max >= 50.0 and self.count >= 80


def local_breaks(base_breaks, centers, scale, lo=0.0, hi=None, reach=14.0):
    """Panel breaks refined around ``centers`` at multiples of ``scale``.

    Only the window [center - reach*scale, center + reach*scale] (clipped to
    [lo, hi]) is kept; the result always includes ``lo`` when positive.
    """
    b = np.asarray(base_breaks, dtype=float)
    hi = b[-1] if hi is None else hi
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    steps = scale * np.array([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 11.0, reach])
    pts = [b]
    for c in centers:
        pts.append(c + steps)
        pts.append(c - steps)
    allp = np.concatenate(pts)
    wlo = max(lo, b[0], centers.min() - reach * scale)
    whi = min(hi, centers.max() + reach * scale)
    allp = allp[(allp >= wlo) & (allp <= whi)]
    allp = np.unique(np.concatenate([allp, [wlo, whi]]))
    # drop slivers that only cost nodes
    keep = np.concatenate([[True], np.diff(allp) > 1e-12 * max(whi, 1.0)])
    return allp[keep]
