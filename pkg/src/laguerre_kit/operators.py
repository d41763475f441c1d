"""Grid-level operators: semigroup maximal function, Hardy-Littlewood maximal
functions, Riesz transform by time subordination, square functions and
weighted norms.

Kernel-route operators are one-dimensional.  Each inner integral
int K_t(x, y) f(y) dy is computed with Gauss-Legendre panels refined around
x at the kernel width sqrt(tanh 2t), so narrow kernels at small t are
resolved without a global fine grid.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, UsageError
from .grid import Grid, GridFunction, TimeQuadrature, as_tensor, gauss_panels, local_breaks
from .heat import (
    EnvelopeSpec,
    delta_heat_kernel_1d,
    dt_heat_kernel_1d,
    heat_kernel_1d,
    log_envelope_eval,
)
from .spectral import evaluate, expand
from .specfun import NuVector, as_nu, laguerre_function

__all__ = [
    "GridFunction",
    "TimeQuadrature",
    "kernel_apply",
    "semigroup_apply_quadrature",
    "maximal_semigroup",
    "gaussian_maximal",
    "tail_operators",
    "hl_maximal",
    "riesz_apply_quadrature",
    "square_S",
    "square_G",
    "weighted_lp_norm",
    "op_norm_probe",
    "default_test_family",
    "offdiag_norms",
]


def _grid1(f: GridFunction) -> Grid:
    tg = as_tensor(f.grid)
    if tg.n != 1:
        raise UsageError("kernel-route operators are implemented in one dimension")
    return tg.axes[0]


def _nu1(nu) -> float:
    nu = as_nu(nu)
    if nu.n != 1:
        raise UsageError("kernel-route operators are implemented in one dimension")
    return nu[0]


def _points(f: GridFunction, x_out):
    return _grid1(f).nodes if x_out is None else np.atleast_1d(np.asarray(x_out, dtype=float))


def _wrap(f: GridFunction, x_out, values, **meta):
    if x_out is not None:
        return values
    out = GridFunction(f.grid, values)
    out.meta = meta
    return out


def kernel_apply(kernel: Callable, f: GridFunction, x: float, t: float, absolute: bool = False) -> float:
    """int_0^inf kernel(x, y) f(y) dy for one point x and time t."""
    g = _grid1(f)
    scale = np.sqrt(np.tanh(2.0 * t))
    brk = local_breaks(g.breaks, [x], scale)
    if f.jumps:
        jumps = np.asarray(f.jumps, dtype=float)
        brk = np.unique(np.concatenate([brk, jumps[(jumps > brk[0]) & (jumps < brk[-1])]]))
    zg = Grid(brk)
    fy = f.at(zg.nodes)
    if absolute:
        fy = np.abs(fy)
    vals = kernel(x, zg.nodes) * fy
    return float(zg.integrate(vals, tail=brk[0] <= g.breaks[0]))


def semigroup_apply_quadrature(f: GridFunction, nu, t: float, x_out=None):
    """e^{-tL} f through the heat kernel."""
    nu = _nu1(nu)
    xs = _points(f, x_out)
    vals = np.array([kernel_apply(lambda a, b: heat_kernel_1d(nu, t, a, b), f, x, t) for x in xs])
    return _wrap(f, x_out, vals)


def maximal_semigroup(f: GridFunction, nu, tq: TimeQuadrature, x_out=None):
    """max over the time nodes of |e^{-tL} f|."""
    if len(tq.nodes) == 0:
        raise UsageError("empty time grid")
    nu = _nu1(nu)
    xs = _points(f, x_out)
    out = np.zeros(xs.size)
    for t in tq.nodes:
        for i, x in enumerate(xs):
            v = abs(kernel_apply(lambda a, b: heat_kernel_1d(nu, t, a, b), f, x, t))
            out[i] = max(out[i], v)
    return _wrap(f, x_out, out)


def gaussian_maximal(f: GridFunction, tq: TimeQuadrature, c: float = 4.0, x_out=None):
    """max over t of int t^{-1/2} exp(-|x-y|^2/(ct)) |f(y)| dy."""
    xs = _points(f, x_out)
    out = np.zeros(xs.size)
    for t in tq.nodes:
        k = lambda a, b, t=t: np.exp(-((a - b) ** 2) / (c * t)) / np.sqrt(t)
        for i, x in enumerate(xs):
            out[i] = max(out[i], kernel_apply(k, f, x, t, absolute=True))
    return _wrap(f, x_out, out)


def tail_operators(f: GridFunction, gamma: float, x_out=None):
    """The two tail operators of the maximal-function decomposition.

    T2 f(x) = int_0^{x/2} x^{-1} (x/y)^gamma |f(y)| dy,
    T3 f(x) = int_{x/2}^inf y^{-1} (y/x)^gamma |f(y)| dy.
    """
    g = _grid1(f)
    xs = _points(f, x_out)
    t2 = np.zeros(xs.size)
    t3 = np.zeros(xs.size)
    jumps = np.asarray(f.jumps, dtype=float)
    for i, x in enumerate(xs):
        h = 0.5 * x
        brk = np.unique(np.concatenate([g.breaks, [h], jumps]))
        brk = brk[(brk >= g.breaks[0]) & (brk <= g.breaks[-1])]
        zg = Grid(brk)
        y = zg.nodes
        fy = np.abs(f.at(y))
        lo = y < h
        w2 = np.where(lo, (x / y) ** gamma / x, 0.0)
        w3 = np.where(lo, 0.0, (y / x) ** gamma / y)
        t2[i] = zg.integrate(w2 * fy)
        t3[i] = zg.integrate(w3 * fy, tail=False)
    if x_out is not None:
        return t2, t3
    return GridFunction(f.grid, t2), GridFunction(f.grid, t3)


def hl_maximal(f: GridFunction, r: float = 1.0, x_out=None):
    """Discrete Hardy-Littlewood maximal function M_r f = sup_I (avg_I |f|^r)^{1/r}.

    Intervals I run over pairs of panel breaks of the grid, averages are exact
    panel quadratures; the value at x is the sup over intervals containing x.
    """
    if r < 1:
        raise DomainError("M_r needs r >= 1")
    g = _grid1(f)
    xs = _points(f, x_out)
    a = np.abs(f.values) ** r
    per_panel = (a * g.weights).reshape(-1, g.order).sum(axis=1)
    F = np.concatenate([[0.0], np.cumsum(per_panel)])
    B = g.breaks
    with np.errstate(invalid="ignore", divide="ignore"):
        A = (F[None, :] - F[:, None]) / (B[None, :] - B[:, None])
    m = B.size
    ii, jj = np.indices((m, m))
    A = np.where(jj > ii, A, -np.inf)
    # best[p] = max over a <= p < b of A[a, b]
    suffix = np.maximum.accumulate(A[:, ::-1], axis=1)[:, ::-1]
    best = np.full(m - 1, -np.inf)
    for p in range(m - 1):
        best[p] = suffix[: p + 1, p + 1].max()
    panel = np.clip(np.searchsorted(B, xs, side="right") - 1, 0, m - 2)
    vals = np.maximum(best[panel], 0.0) ** (1.0 / r)
    return _wrap(f, x_out, vals)


def _time_integral_delta(f, nu, tq, x_out, j, kind):
    if j != 0:
        raise UsageError("kernel-route operators are one-dimensional; use j = 0")
    nu = _nu1(nu)
    xs = _points(f, x_out)
    g = np.empty((tq.nodes.size, xs.size))
    for a, t in enumerate(tq.nodes):
        for i, x in enumerate(xs):
            g[a, i] = kernel_apply(lambda p, q, t=t: delta_heat_kernel_1d(nu, t, p, q), f, x, t)
    return xs, g


def riesz_apply_quadrature(f: GridFunction, nu, j: int = 0, tq: TimeQuadrature | None = None, x_out=None):
    """R f = pi^{-1/2} int_0^inf t^{1/2} delta e^{-tL} f dt/t, trapezoid in log t.

    The piece on (0, t_min) is added as 2 sqrt(t_min) g(t_min) / sqrt(pi); the
    neglected piece beyond t_max is bounded in meta['tail_estimate'].
    """
    tq = tq or TimeQuadrature()
    xs, g = _time_integral_delta(f, nu, tq, x_out, j, "riesz")
    t = tq.nodes
    body = (tq.weights * np.sqrt(t)) @ g
    small = 2.0 * np.sqrt(t[0]) * g[0]
    vals = (body + small) / np.sqrt(np.pi)
    lam0 = 2.0 * _nu1(nu) + 2.0
    tail = float(np.abs(g[-1]).max() * np.sqrt(t[-1]) / lam0 / np.sqrt(np.pi))
    meta = {"tail_estimate": tail, "adequate": tq.adequate, "small_t_correction": float(np.abs(small).max())}
    if x_out is not None:
        return vals
    out = GridFunction(f.grid, vals)
    out.meta = meta
    return out


def square_S(f: GridFunction, nu, j: int = 0, tq: TimeQuadrature | None = None, x_out=None):
    """S f = (int_0^inf |sqrt(t) delta e^{-tL} f|^2 dt/t)^{1/2}."""
    tq = tq or TimeQuadrature()
    xs, g = _time_integral_delta(f, nu, tq, x_out, j, "square")
    t = tq.nodes
    val = (tq.weights * t) @ (g * g) + t[0] * g[0] ** 2
    return _wrap(f, x_out, np.sqrt(val), adequate=tq.adequate)


def square_G(f: GridFunction, nu, tq: TimeQuadrature | None = None, x_out=None, N: int = 60, route: str = "spectral"):
    """G f = (int_0^inf |tL e^{-tL} f|^2 dt/t)^{1/2}.

    route='spectral' applies t lambda e^{-t lambda} to the expansion of f;
    route='kernel' uses -t d/dt of the heat kernel (one-dimensional only).
    """
    tq = tq or TimeQuadrature()
    nu = as_nu(nu)
    t = tq.nodes
    if route == "spectral":
        c = expand(f, nu, N)
        lam = c.eigenvalues
        if x_out is None:
            coords = as_tensor(f.grid).mesh()
        else:
            coords = [np.asarray(x_out, dtype=float)] if nu.n == 1 else list(x_out)
        h = np.stack([evaluate(c.replace(s * lam * np.exp(-s * lam) * c.values), *coords) for s in t])
    elif route == "kernel":
        n1 = _nu1(nu)
        xs = _points(f, x_out)
        h = np.empty((t.size, xs.size))
        for a, s in enumerate(t):
            for i, x in enumerate(xs):
                h[a, i] = -s * kernel_apply(lambda p, q, s=s: dt_heat_kernel_1d(n1, s, p, q), f, x, s)
    else:
        raise UsageError(f"unknown route {route!r}")
    val = np.tensordot(tq.weights, h * h, axes=1) + 0.5 * h[0] ** 2
    vals = np.sqrt(val)
    if x_out is not None:
        return vals
    return GridFunction(f.grid, vals.reshape(as_tensor(f.grid).shape))


def weighted_lp_norm(f: GridFunction, p: float, w=None) -> float:
    """(int |f|^p w)^{1/p}; ``w`` is None (Lebesgue), an array on the grid or a callable."""
    if not (0 < p < np.inf):
        raise DomainError("p must lie in (0, inf)")
    tg = as_tensor(f.grid)
    if w is None:
        wv = 1.0
    elif callable(w):
        wv = np.asarray(w(*tg.mesh()), dtype=float)
    else:
        wv = np.asarray(w, dtype=float)
    if np.any(np.asarray(wv) <= 0):
        raise DomainError("weights must be positive on the grid")
    return float(tg.integrate(np.abs(f.values) ** p * wv)) ** (1.0 / p)


def op_norm_probe(operator: Callable, p: float, w, test_family: Iterable[GridFunction], outputs=None) -> float:
    """Largest ||T f||_{p,w} / ||f||_{p,w} over the family: an empirical lower bound on the norm.

    ``outputs`` may hold precomputed T f for the same family (the operator is then not called).
    """
    fam = list(test_family)
    outs = list(outputs) if outputs is not None else [operator(f) for f in fam]
    best = 0.0
    for f, Tf in zip(fam, outs):
        den = weighted_lp_norm(f, p, w)
        if den > 0:
            best = max(best, weighted_lp_norm(Tf, p, w) / den)
    return best


def default_test_family(grid: Grid, nu: float, seed: int = 12345) -> list:
    """10 eigenfunctions, 5 log-normal bumps and 5 indicators (fixed seed)."""
    rng = np.random.default_rng(seed)
    fam = []
    for k in range(10):
        fam.append(GridFunction.from_callable(grid, lambda x, k=k: laguerre_function(k, nu, x)))
    for _ in range(5):
        m = float(np.exp(rng.uniform(np.log(0.05), np.log(3.0))))
        s = float(rng.uniform(0.15, 0.6))
        fam.append(GridFunction.from_callable(grid, lambda x, m=m, s=s: np.exp(-np.log(x / m) ** 2 / (2 * s * s))))
    for _ in range(5):
        a = float(np.exp(rng.uniform(np.log(1e-3), np.log(2.0))))
        b = a * float(rng.uniform(1.5, 4.0))
        fam.append(GridFunction.from_callable(grid, lambda x, a=a, b=b: ((x >= a) & (x <= b)).astype(float), jumps=(a, b)))
    return fam


def _interval_nodes(lo, hi, order=16):
    # geometric panels when the interval reaches towards 0, uniform otherwise
    if lo <= 0:
        brk = np.concatenate([np.geomspace(1e-8, min(hi, 1e-2), 13), np.linspace(min(hi, 1e-2), hi, 9)[1:]])
    else:
        brk = np.linspace(lo, hi, max(int(np.ceil((hi - lo) / 0.05)), 2) + 1)
    brk = np.unique(brk[brk <= hi])
    return gauss_panels(brk, order)


def annulus_parts(center: float, radius: float, j: int):
    """S_j(B) = 2^j B minus 2^{j-1} B, intersected with (0, inf), as a list of intervals."""
    big = (center - 2**j * radius, center + 2**j * radius)
    small = (center - 2 ** (j - 1) * radius, center + 2 ** (j - 1) * radius)
    parts = []
    if big[0] < small[0] and small[0] > 0:
        parts.append((max(big[0], 0.0), small[0]))
    parts.append((small[1], big[1]))
    return parts


def offdiag_norms(spec: EnvelopeSpec, t: float, ball=(1.0, 2.0), js=range(2, 7)) -> dict:
    """log of ||T_t||_{L^2(B) -> L^2(S_j(B))} for each j (largest singular value)."""
    if spec.kind != "T" or spec.n != 1:
        raise UsageError("off-diagonal norms are measured for the 1-D T kernel")
    center = 0.5 * (ball[0] + ball[1])
    rad = 0.5 * (ball[1] - ball[0])
    yb, wb = _interval_nodes(ball[0], ball[1])
    out = {}
    for j in js:
        xs, ws = [], []
        for lo, hi in annulus_parts(center, rad, j):
            x, w = _interval_nodes(lo, hi)
            xs.append(x)
            ws.append(w)
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        logk = log_envelope_eval(spec, t, x[:, None], yb[None, :])
        m = logk.max()
        M = np.sqrt(w)[:, None] * np.exp(logk - m) * np.sqrt(wb)[None, :]
        out[j] = float(m + np.log(np.linalg.norm(M, 2)))
    return out
