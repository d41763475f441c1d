"""Laguerre expansions: coefficients, semigroup, projections and the order-shifting operators."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .grid import Grid, GridFunction, TensorGrid, as_tensor
from .specfun import MultiIndex, NuVector, as_index, as_nu, eigenvalue, laguerre_function_table

__all__ = [
    "SpectralCoeffs",
    "eigenvalue",
    "expand",
    "synthesize",
    "evaluate",
    "projection",
    "semigroup_apply_spectral",
    "multiplier_apply",
    "riesz_apply_spectral",
    "delta_coeffs",
    "delta_star_coeffs",
    "apply_delta",
    "apply_delta_star",
    "check_commutation",
    "check_dual_commutation",
]


def _all_indices(n: int, N: int) -> np.ndarray:
    idx = [k for k in itertools.product(range(N + 1), repeat=n) if sum(k) <= N]
    return np.array(sorted(idx, key=lambda k: (sum(k), k)), dtype=int).reshape(-1, n)


@dataclass
class SpectralCoeffs:
    """Coefficients <f, phi_k^nu> for all |k| <= N, stored as parallel arrays."""

    nu: NuVector
    N: int
    indices: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nu = as_nu(self.nu)
        self.indices = np.asarray(self.indices, dtype=int).reshape(-1, self.nu.n)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.indices),):
            raise UsageError("one coefficient per index is required")
        if len(self.indices) and self.indices.sum(axis=1).max() > self.N:
            raise UsageError("an index exceeds the truncation degree")

    @classmethod
    def zeros(cls, nu, N: int) -> "SpectralCoeffs":
        nu = as_nu(nu)
        idx = _all_indices(nu.n, N)
        return cls(nu, N, idx, np.zeros(len(idx)))

    @classmethod
    def unit(cls, nu, N: int, k) -> "SpectralCoeffs":
        c = cls.zeros(nu, N)
        c.values[c.position(k)] = 1.0
        return c

    @classmethod
    def from_dict(cls, nu, N: int, coeffs: dict) -> "SpectralCoeffs":
        c = cls.zeros(nu, N)
        for k, v in coeffs.items():
            c.values[c.position(k)] = v
        return c

    def position(self, k) -> int:
        k = as_index(k)
        hit = np.nonzero((self.indices == np.array(k.values)).all(axis=1))[0]
        if hit.size == 0:
            raise UsageError(f"index {k.values} is not stored (N = {self.N})")
        return int(hit[0])

    def get(self, k) -> float:
        return float(self.values[self.position(k)])

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in k): float(c) for k, c in zip(self.indices, self.values)}

    @property
    def totals(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @property
    def eigenvalues(self) -> np.ndarray:
        return 4.0 * self.totals + 2.0 * self.nu.total + 2.0 * self.nu.n

    def norm2(self) -> float:
        return float(np.sum(self.values**2))

    def replace(self, values, nu=None, **meta) -> "SpectralCoeffs":
        m = dict(self.meta)
        m.update(meta)
        return SpectralCoeffs(self.nu if nu is None else nu, self.N, self.indices.copy(), values, m)


def _axes(grid):
    tg = as_tensor(grid)
    for g in tg.axes:
        if not isinstance(g, Grid):
            raise UsageError("expansion needs a grid that carries quadrature weights")
    return tg


def expand(f: GridFunction, nu, N: int) -> SpectralCoeffs:
    """Quadrature coefficients c_k = int f phi_k^nu for all |k| <= N."""
    nu = as_nu(nu)
    if not isinstance(f, GridFunction):
        raise UsageError("expand needs a GridFunction")
    tg = _axes(f.grid)
    if tg.n != nu.n:
        raise UsageError("grid dimension does not match nu")
    if N < 0 or N > 200 * nu.n:
        raise UsageError("truncation degree must lie in [0, 200 n]")
    arr = f.values
    for j in reversed(range(nu.n)):
        g = tg.axes[j]
        table = laguerre_function_table(N, nu[j], g.nodes)
        arr = g.project(arr, table)  # trailing axis now indexes k_j
        arr = np.moveaxis(arr, -1, 0)
    idx = _all_indices(nu.n, N)
    vals = arr[tuple(idx.T)]
    return SpectralCoeffs(nu, N, idx, vals)


def evaluate(c: SpectralCoeffs, *coords):
    """Sum of c_k phi_k^nu at arbitrary points (coords broadcast against each other)."""
    nu = c.nu
    if len(coords) != nu.n:
        raise UsageError("one coordinate array per dimension is required")
    arrays = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in coords])
    shape = arrays[0].shape
    flat = [a.ravel() for a in arrays]
    tables = [laguerre_function_table(c.N, nu[j], flat[j]) for j in range(nu.n)]
    out = np.zeros(flat[0].size)
    for k, v in zip(c.indices, c.values):
        if v == 0.0:
            continue
        term = np.full(flat[0].size, v)
        for j in range(nu.n):
            term *= tables[j][k[j]]
        out += term
    return out.reshape(shape)


def synthesize(c: SpectralCoeffs, grid) -> GridFunction:
    """GridFunction sum_k c_k phi_k^nu on ``grid``, carrying the exact series as its callable."""
    coeffs = c
    return GridFunction.from_callable(grid, lambda *x: evaluate(coeffs, *x))


def projection(c: SpectralCoeffs, ell: int) -> SpectralCoeffs:
    """Keep only the coefficients with |k| = ell."""
    if ell < 0 or ell > c.N:
        raise UsageError(f"level {ell} is outside 0..{c.N}")
    return c.replace(np.where(c.totals == ell, c.values, 0.0))


def multiplier_apply(c: SpectralCoeffs, m) -> SpectralCoeffs:
    """Spectral multiplier: c_k -> m(lambda_k) c_k."""
    return c.replace(np.asarray(m(c.eigenvalues), dtype=float) * c.values)


def semigroup_apply_spectral(c: SpectralCoeffs, t: float) -> SpectralCoeffs:
    if t <= 0:
        raise DomainError("semigroup time must be positive")
    out = multiplier_apply(c, lambda lam: np.exp(-t * lam))
    out.meta["tail_bound"] = float(np.exp(-4.0 * t * c.N))
    return out


def _shift(c: SpectralCoeffs, j: int, step: int, weights, new_nu) -> SpectralCoeffs:
    # move the coefficient at k to k + step*e_j, scaled by weights[k]
    out = SpectralCoeffs.zeros(new_nu, c.N)
    pos = {tuple(k): i for i, k in enumerate(out.indices)}
    for k, v, w in zip(c.indices, c.values, weights):
        if v == 0.0 or w == 0.0:
            continue
        m = list(k)
        m[j] += step
        if m[j] < 0:
            continue
        i = pos.get(tuple(m))
        if i is None:
            # would exceed the truncation degree; record the dropped mass
            out.meta["dropped"] = out.meta.get("dropped", 0.0) + (w * v) ** 2
            continue
        out.values[i] += w * v
    return out


def delta_coeffs(c: SpectralCoeffs, j: int) -> SpectralCoeffs:
    """delta_j in coefficients: phi_k^nu -> -2 sqrt(k_j) phi_{k-e_j}^{nu+e_j}."""
    w = -2.0 * np.sqrt(c.indices[:, j])
    return _shift(c, j, -1, w, c.nu.shift(j, 1))


def delta_star_coeffs(c: SpectralCoeffs, j: int) -> SpectralCoeffs:
    """delta_j^* from the basis of order nu+e_j to order nu: phi_m -> -2 sqrt(m_j+1) phi_{m+e_j}.

    ``c`` is expressed in the basis of order nu + e_j; components with nu_j - 1 <= -1
    have no lower order, and that case is rejected.
    """
    lower = c.nu.values[j] - 1.0
    if lower <= -1.0:
        raise DomainError("delta* would lower the order below -1")
    w = -2.0 * np.sqrt(c.indices[:, j] + 1.0)
    return _shift(c, j, 1, w, c.nu.shift(j, -1))


def riesz_apply_spectral(c: SpectralCoeffs, j: int = 0) -> SpectralCoeffs:
    """R^j = delta_j L^{-1/2}; result is in the basis of order nu + e_j."""
    w = -2.0 * np.sqrt(c.indices[:, j]) / np.sqrt(c.eigenvalues)
    return _shift(c, j, -1, w, c.nu.shift(j, 1))


# ---------------------------------------------------------------- stencils

STENCIL_REL = 1e-3


def _stencil_derivative(func, coords, j):
    # five-point central difference along axis j, step scaled to the distance from 0
    x = np.asarray(coords[j], dtype=float)
    h = STENCIL_REL * np.minimum(x, 1.0)
    vals = []
    for s in (-2, -1, 1, 2):
        cc = list(coords)
        cc[j] = x + s * h
        vals.append(np.asarray(func(*cc), dtype=float))
    return (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h)


def _fornberg_derivative(grid: Grid, values: np.ndarray) -> np.ndarray:
    # first derivative on arbitrary nodes from the 5 nearest neighbours
    x = grid.nodes
    out = np.empty_like(values)
    n = x.size
    for i in range(n):
        lo = min(max(i - 2, 0), n - 5)
        xs = x[lo : lo + 5]
        V = np.vander(xs - x[i], 5, increasing=True).T
        rhs = np.zeros(5)
        rhs[1] = 1.0
        w = np.linalg.solve(V, rhs)
        out[..., i] = values[..., lo : lo + 5] @ w
    return out


def _apply_first_order(f: GridFunction, nu, j: int, sign: float) -> GridFunction:
    # sign=+1: delta_j = d_j + x_j - (nu_j+1/2)/x_j ; sign=-1: delta_j^*
    nu = as_nu(nu)
    tg = as_tensor(f.grid)
    if tg.n != nu.n or not (0 <= j < nu.n):
        raise UsageError("coordinate index or dimension mismatch")
    if min(g.size for g in tg.axes) < 7:
        raise UsageError("grid too coarse for a five-point stencil (needs at least 7 points per axis)")
    a = nu[j] + 0.5
    if f.func is not None:
        src = f.func

        def func(*coords):
            xj = np.asarray(coords[j], dtype=float)
            d = _stencil_derivative(src, coords, j)
            return sign * d + (xj - a / xj) * np.asarray(src(*coords), dtype=float)

        return GridFunction.from_callable(f.grid, func)
    if tg.n != 1:
        raise UsageError("stencils on sampled n-D data need a callable")
    g = tg.axes[0]
    d = _fornberg_derivative(g, f.values)
    return GridFunction(f.grid, sign * d + (g.nodes - a / g.nodes) * f.values)


def apply_delta(f: GridFunction, nu, j: int = 0) -> GridFunction:
    """delta_j f by five-point stencils plus the multiplication terms."""
    return _apply_first_order(f, nu, j, 1.0)


def apply_delta_star(f: GridFunction, nu, j: int = 0) -> GridFunction:
    """delta_j^* f = -d_j f + (x_j - (nu_j+1/2)/x_j) f, the formal adjoint of delta_j."""
    return _apply_first_order(f, nu, j, -1.0)


def _sup_defect(a, b, mask=None):
    d = np.abs(np.asarray(a) - np.asarray(b))
    if mask is not None:
        d = d[mask]
    return float(d.max())


def _window(grid, lo=0.2, hi=5.0):
    tg = as_tensor(grid)
    masks = np.meshgrid(*[(g.nodes >= lo) & (g.nodes <= hi) for g in tg.axes], indexing="ij")
    return np.logical_and.reduce(masks)


def check_commutation(nu, j: int, t: float, f: GridFunction, N: int = 60, alpha: float = 2.0) -> dict:
    """Sup-norm defect of e^{-t(L_{nu+e_j}+alpha)} delta_j f = delta_j e^{-t L_nu} f.

    Left: stencil delta_j f, expanded in the basis of order nu+e_j, then damped.
    Right: f expanded in order nu, damped, then moved by the coefficient rule.
    The defect for the alternative shift 2 - 4 nu_j (nu_j < 0) is reported as a diagnostic.
    """
    nu = as_nu(nu)
    up = nu.shift(j, 1)
    df = apply_delta(f, nu, j)
    left_c = expand(df, up, N)
    right_c = delta_coeffs(semigroup_apply_spectral(expand(f, nu, N), t), j)
    mesh = as_tensor(f.grid).mesh()
    mask = _window(f.grid)
    right = evaluate(right_c, *mesh)

    def left_with(a):
        return evaluate(multiplier_apply(left_c, lambda lam: np.exp(-t * (lam + a))), *mesh)

    alt = 2.0 - 4.0 * nu[j] if nu[j] < 0 else 2.0
    scale = max(float(np.abs(right[mask]).max()), 1e-300)
    return {
        "alpha": alpha,
        "defect": _sup_defect(left_with(alpha), right, mask),
        "scale": scale,
        "alpha_alternative": alt,
        "defect_alternative": _sup_defect(left_with(alt), right, mask),
    }


def check_dual_commutation(nu, j: int, t: float, f: GridFunction, N: int = 60) -> dict:
    """Defect of e^{-tL_nu} L_nu^{-1/2} delta_j^* f = delta_j^* e^{-t(L_{nu+e_j}+2)} (L_{nu+e_j}+2)^{-1/2} f.

    f lives in order nu + e_j.  Left: stencil delta_j^* f expanded in order nu and
    damped spectrally.  Right: spectral damping in order nu+e_j followed by the
    stencil delta_j^*.
    """
    nu = as_nu(nu)
    up = nu.shift(j, 1)
    left_c = multiplier_apply(expand(apply_delta_star(f, nu, j), nu, N), lambda lam: np.exp(-t * lam) / np.sqrt(lam))
    damped = multiplier_apply(expand(f, up, N), lambda lam: np.exp(-t * (lam + 2.0)) / np.sqrt(lam + 2.0))
    right = apply_delta_star(synthesize(damped, f.grid), nu, j)
    mesh = as_tensor(f.grid).mesh()
    mask = _window(f.grid)
    left = evaluate(left_c, *mesh)
    return {"defect": _sup_defect(left, right.values, mask), "scale": float(np.abs(left[mask]).max())}
