"""Heat kernel of the Laguerre semigroup, its derivative kernels, envelopes and bound fitting.

With r = e^{-4t} the 1-D kernel is written in the overflow-free arrangement

    p_t(x, y) = sqrt(xy) csch(2t) exp(-coth(2t) (x-y)^2 / 2 - tanh(t) xy) e^{-z} I_nu(z),
    z = xy csch(2t),

which is the Mehler-type formula with 2 sqrt(r)/(1-r) = csch(2t),
(1+r)/(1-r) = coth(2t) and (1-sqrt r)/(1+sqrt r) = tanh(t).  Derivative
kernels are returned as p times a bracket built from the Bessel ratio
R = I_{nu+1}(z) / I_nu(z) = p^{nu+1} / p^nu.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, UsageError
from .grid import Grid, gauss_panels, local_breaks
from .specfun import NuVector, as_nu, bessel_i_scaled


def _check(nu, t, x, y):
    nu = np.asarray(nu, dtype=float)
    t, x, y = (np.asarray(a, dtype=float) for a in (t, x, y))
    if np.any(nu <= -1.0):
        raise DomainError("kernel order must exceed -1")
    if np.any(t <= 0) or np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("heat kernels need t > 0 and x, y > 0")
    return nu, t, x, y


def _out(v, *args):
    return float(v) if all(np.ndim(a) == 0 for a in args) else v


class _Parts:
    """Shared pieces of the closed forms at one broadcast set of (nu, t, x, y)."""

    def __init__(self, nu, t, x, y):
        self.nu, self.t, self.x, self.y = nu, t, x, y
        self.r = np.exp(-4.0 * t)
        self.one_minus_r = -np.expm1(-4.0 * t)
        # log csch(2t), stable for all t > 0
        self.log_csch = np.log(2.0) - 2.0 * t - np.log(self.one_minus_r)
        self.csch = np.exp(self.log_csch)
        self.coth = (1.0 + self.r) / self.one_minus_r
        self.z = x * y * self.csch
        self.ive = bessel_i_scaled(nu, self.z)
        self.log_p = (
            0.5 * (np.log(x) + np.log(y))
            + self.log_csch
            - 0.5 * self.coth * (x - y) ** 2
            - np.tanh(t) * x * y
            + np.log(self.ive)
        )
        self.p = np.exp(self.log_p)

    @property
    def ratio(self):
        if not hasattr(self, "_ratio"):
            self._ratio = bessel_i_scaled(self.nu + 1.0, self.z) / self.ive
        return self._ratio

    # brackets: derivative kernel = p^nu * bracket
    def delta_bracket(self):
        # x p - coth x p + csch y p^{nu+1}, with 1 - coth = -2r/(1-r)
        return self.csch * self.y * self.ratio - 2.0 * self.r / self.one_minus_r * self.x

    def delta_star_bracket(self):
        # delta* p^{nu+1} = (1 + coth) x p^{nu+1} - csch y p^nu
        return 2.0 / self.one_minus_r * self.x * self.ratio - self.csch * self.y

    def dt_bracket(self, nu_shift: float = 0.0, ratio=None):
        nu = self.nu + nu_shift
        R = self.ratio if ratio is None else ratio
        c2 = self.csch * self.csch
        return -2.0 * (nu + 1.0) * self.coth + c2 * (self.x**2 + self.y**2) - 2.0 * self.csch * self.coth * self.x * self.y * R


def heat_kernel_1d(nu, t, x, y):
    """p_t^nu(x, y) for nu > -1, t > 0, x, y > 0 (broadcasting)."""
    args = _check(nu, t, x, y)
    return _out(_Parts(*args).p, nu, t, x, y)


def log_heat_kernel_1d(nu, t, x, y):
    """log p_t^nu(x, y); finite where p itself would underflow."""
    return _out(_Parts(*_check(nu, t, x, y)).log_p, nu, t, x, y)


def delta_heat_kernel_1d(nu, t, x, y):
    """delta_x p_t^nu(x, y) with delta = d/dx + x - (nu + 1/2)/x."""
    P = _Parts(*_check(nu, t, x, y))
    return _out(P.p * P.delta_bracket(), nu, t, x, y)


def delta_star_heat_kernel_1d(nu, t, x, y):
    """delta*_x p_t^{nu+1}(x, y) with delta* = -d/dx + x - (nu + 1/2)/x."""
    P = _Parts(*_check(nu, t, x, y))
    return _out(P.p * P.delta_star_bracket(), nu, t, x, y)


def dt_heat_kernel_1d(nu, t, x, y):
    """Time derivative of p_t^nu(x, y)."""
    P = _Parts(*_check(nu, t, x, y))
    return _out(P.p * P.dt_bracket(), nu, t, x, y)


def _dcoth(P):
    # d/dt coth(2t) = -2 csch^2(2t)
    return -2.0 * P.csch**2


def _dcsch(P):
    # d/dt csch(2t) = -2 csch coth
    return -2.0 * P.csch * P.coth


def _delta_dt_bracket(P, Q):
    # delta d/dt p = p * bracket; p^{nu+1} = p R, d/dt p^{nu+1} = p R * (order nu+1 dt bracket)
    R = P.ratio
    return (
        -_dcoth(P) * P.x
        + (1.0 - P.coth) * P.x * P.dt_bracket()
        + _dcsch(P) * P.y * R
        + P.csch * P.y * R * Q.dt_bracket()
    )


def _delta_star_dt_bracket(P, Q, a):
    # d/dt [e^{-at} delta* p^{nu+1}] = e^{-at} p * bracket
    R = P.ratio
    D = P.delta_star_bracket()
    dD = _dcoth(P) * P.x * R + (1.0 + P.coth) * P.x * R * Q.dt_bracket() - _dcsch(P) * P.y - P.csch * P.y * P.dt_bracket()
    return np.exp(-a * P.t) * (dD - a * D)


def delta_dt_heat_kernel_1d(nu, t, x, y):
    """delta_x d/dt p_t^nu(x, y), the time derivative of the delta kernel."""
    nu_, t_, x_, y_ = _check(nu, t, x, y)
    P = _Parts(nu_, t_, x_, y_)
    Q = _Parts(nu_ + 1.0, t_, x_, y_)
    return _out(P.p * _delta_dt_bracket(P, Q), nu, t, x, y)


def delta_star_dt_heat_kernel_1d(nu, t, x, y, a: float = 2.0):
    """delta*_x d/dt [e^{-a t} p_t^{nu+1}(x, y)]."""
    nu_, t_, x_, y_ = _check(nu, t, x, y)
    P = _Parts(nu_, t_, x_, y_)
    Q = _Parts(nu_ + 1.0, t_, x_, y_)
    return _out(P.p * _delta_star_dt_bracket(P, Q, a), nu, t, x, y)


KERNEL_KINDS = ("p", "delta", "delta_star", "dt", "delta_dt", "delta_star_dt")


def log_abs_kernel_1d(kind: str, nu, t, x, y, a: float = 2.0):
    """log of |kernel| for any of KERNEL_KINDS; -inf where the kernel vanishes.

    Every kernel is p^nu times a bracket, so the logarithm never underflows.
    """
    P = _Parts(*_check(nu, t, x, y))
    if kind == "p":
        return P.log_p
    if kind == "delta":
        br = P.delta_bracket()
    elif kind == "delta_star":
        br = P.delta_star_bracket()
    elif kind == "dt":
        br = P.dt_bracket()
    elif kind in ("delta_dt", "delta_star_dt"):
        Q = _Parts(P.nu + 1.0, P.t, P.x, P.y)
        br = _delta_dt_bracket(P, Q) if kind == "delta_dt" else _delta_star_dt_bracket(P, Q, a)
    else:
        raise UsageError(f"unknown kernel kind {kind!r}")
    with np.errstate(divide="ignore"):
        return P.log_p + np.log(np.abs(br))


def log_abs_kernel_nd(kind: str, nu, t, x, y, j: int = 0):
    """n-D log|kernel| for kind 'p', 'dt' (d/dt of the product) or 'delta' (delta_j)."""
    nu = as_nu(nu)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    parts = [_Parts(*_check(nu[i], t, x[..., i], y[..., i])) for i in range(nu.n)]
    logp = sum(P.log_p for P in parts)
    if kind == "p":
        return logp
    if kind == "dt":
        br = sum(P.dt_bracket() for P in parts)
    elif kind == "delta":
        br = parts[j].delta_bracket()
    else:
        raise UsageError(f"unknown n-D kernel kind {kind!r}")
    with np.errstate(divide="ignore"):
        return logp + np.log(np.abs(br))


def dt_k_heat_kernel_1d(nu, t: float, x: float, y: float, k: int = 1, grid: Grid | None = None):
    """k-th time derivative of p_t^nu(x, y) at a single point.

    k = 1 is the closed form; k >= 2 composes k copies of the first derivative
    kernel at time t/k (d^k/dt^k e^{-tL} = (-L e^{-tL/k})^k) by quadrature.
    """
    if k < 1:
        raise DomainError("derivative order must be at least 1")
    if k == 1:
        return dt_heat_kernel_1d(nu, t, x, y)
    grid = grid or Grid.default(x_max=max(24.0, 2 * max(x, y) + 10))
    s = t / k
    scale = np.sqrt(s)
    brk = local_breaks(grid.breaks, [x, y], scale, reach=np.inf)
    zg = Grid(brk)
    z = zg.nodes
    vec = dt_heat_kernel_1d(nu, s, z, y)
    for _ in range(k - 2):
        mat = dt_heat_kernel_1d(nu, s, z[:, None], z[None, :])
        vec = mat @ (zg.weights * vec)
    first = dt_heat_kernel_1d(nu, s, x, z)
    return float(zg.integrate(first * vec))


@dataclass(frozen=True)
class KernelQuery:
    nu: NuVector
    t: float
    x: tuple
    y: tuple

    def __post_init__(self):
        nu = as_nu(self.nu)
        object.__setattr__(self, "nu", nu)
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        y = tuple(float(v) for v in np.atleast_1d(self.y))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != nu.n or len(y) != nu.n:
            raise UsageError("query points must match the dimension of nu")
        if self.t <= 0 or min(x + y) <= 0:
            raise DomainError("heat kernels need t > 0 and x, y in (0, inf)^n")

    @property
    def r(self) -> float:
        return float(np.exp(-4.0 * self.t))


def heat_kernel_nd(q: KernelQuery) -> float:
    """Product of the coordinate kernels."""
    out = 1.0
    for j in range(q.nu.n):
        out *= heat_kernel_1d(q.nu[j], q.t, q.x[j], q.y[j])
    return out


def heat_kernel_nd_array(nu, t, x, y):
    """Vectorised n-D kernel; x and y carry a trailing axis of length n."""
    nu = as_nu(nu)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = 1.0
    for j in range(nu.n):
        out = out * heat_kernel_1d(nu[j], t, x[..., j], y[..., j])
    return out


# ---------------------------------------------------------------- envelopes


@dataclass(frozen=True)
class EnvelopeSpec:
    """H_{t,a,c} (kind 'H') or T_{t,beta,sigma} (kind 'T') in n dimensions."""

    kind: str
    a_or_beta: float
    sigma: float = 0.0
    c: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.kind not in ("H", "T"):
            raise UsageError(f"unknown envelope kind {self.kind!r}")
        if not (0.0 <= self.a_or_beta < 0.5) or not (0.0 <= self.sigma < 0.5):
            raise DomainError("envelope exponents must lie in [0, 1/2)")
        if self.c <= 0 or self.n < 1:
            raise DomainError("envelope needs c > 0 and n >= 1")


def _coords(v, n):
    v = np.asarray(v, dtype=float)
    # 1-D inputs carry no coordinate axis; n-D inputs end with one of length n
    return v[..., None] if n == 1 else v


def log_envelope_eval(spec: EnvelopeSpec, t, x, y):
    t = np.asarray(t, dtype=float)
    x = _coords(x, spec.n)
    y = _coords(y, spec.n)
    st = np.sqrt(t)[..., None] if t.ndim else np.sqrt(t)
    tt = t[..., None] if t.ndim else t
    gauss = -((x - y) ** 2) / (spec.c * tt)
    if spec.kind == "H":
        a = spec.a_or_beta
        per = -0.5 * np.log(tt) + gauss + a * np.log1p(st / x) + a * np.log1p(st / y)
        return per.sum(axis=-1)
    beta, sigma = spec.a_or_beta, spec.sigma
    per = -0.5 * np.log(tt) + gauss + beta * np.log1p(st / x) + sigma * np.log1p(st / y)
    return per.sum(axis=-1)


def envelope_eval(spec: EnvelopeSpec, t, x, y):
    """Value of the envelope; x and y are scalars (n = 1) or arrays with trailing axis n."""
    v = np.exp(log_envelope_eval(spec, t, x, y))
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------- bound fitting


@dataclass
class SweepGrid:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    n: int = 1

    @classmethod
    def standard(cls, n: int = 1, points: int = 60) -> "SweepGrid":
        return cls(np.geomspace(1e-3, 10.0, 40), np.geomspace(1e-3, 8.0, points), np.geomspace(1e-3, 8.0, points), n)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "t": [float(self.t.min()), float(self.t.max()), int(self.t.size)],
            "x": [float(self.x.min()), float(self.x.max()), int(self.x.size)],
            "y": [float(self.y.min()), float(self.y.max()), int(self.y.size)],
        }

    def points(self):
        """Arrays (X, Y) broadcasting to all (x, y) pairs; trailing axis n when n > 1."""
        if self.n == 1:
            return self.x[:, None], self.y[None, :]
        X = np.stack(np.meshgrid(*([self.x] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        Y = np.stack(np.meshgrid(*([self.y] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        return X[:, None, :], Y[None, :, :]


@dataclass
class BoundReport:
    claim_id: str
    grid: dict
    best_C: float
    best_c: float
    worst_point: tuple
    violated: bool
    per_candidate: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "grid": self.grid,
            "best_C": self.best_C,
            "best_c": self.best_c,
            "worst_point": list(self.worst_point),
            "violated": self.violated,
            "per_candidate": {str(k): v for k, v in self.per_candidate.items()},
        }


DEFAULT_C = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


def fit_bound_constants(
    claim_id: str,
    kernel_evaluator: Callable,
    envelope_family: Callable,
    sweep_grid: SweepGrid,
    c_candidates: Sequence[float] = DEFAULT_C,
    log_space: bool = True,
) -> BoundReport:
    """Smallest C(c) with |kernel| <= C(c) * envelope_c on the sweep grid, minimised over c.

    ``kernel_evaluator(t, X, Y)`` and ``envelope_family(c)(t, X, Y)`` return
    log|kernel| and log envelope when ``log_space`` (the default), plain values
    otherwise.  Evaluation is chunked over the t axis.
    """
    if len(sweep_grid.t) == 0 or len(sweep_grid.x) == 0 or len(sweep_grid.y) == 0:
        raise UsageError("sweep grid is empty")
    cands = [float(c) for c in c_candidates]
    if not cands or min(cands) <= 0:
        raise UsageError("c candidates must be positive")
    X, Y = sweep_grid.points()
    best = {c: (-np.inf, None) for c in cands}
    envs = {c: envelope_family(c) for c in cands}
    for t in sweep_grid.t:
        k = np.asarray(kernel_evaluator(t, X, Y), dtype=float)
        if not log_space:
            with np.errstate(divide="ignore"):
                k = np.log(np.abs(k))
        for c in cands:
            e = np.asarray(envs[c](t, X, Y), dtype=float)
            if not log_space:
                with np.errstate(divide="ignore"):
                    e = np.log(e)
            with np.errstate(invalid="ignore"):
                lr = np.where(np.isneginf(k), -np.inf, k - e)
            lr = np.where(np.isnan(lr), np.inf, lr)
            i = int(np.argmax(lr))
            if lr.flat[i] > best[c][0]:
                idx = np.unravel_index(i, lr.shape)
                xi = X[idx[0], 0] if sweep_grid.n > 1 else X[idx[0], 0]
                yi = Y[0, idx[1]] if lr.ndim > 1 else Y[0, 0]
                best[c] = (float(lr.flat[i]), (float(t), np.atleast_1d(xi).tolist(), np.atleast_1d(yi).tolist()))
    with np.errstate(over="ignore"):
        per = {c: float(np.exp(v[0])) for c, v in best.items()}
    # among candidates tied up to rounding, the smallest c is the tighter envelope
    floor = min(best[c][0] for c in cands)
    c_star = min(c for c in cands if best[c][0] <= floor + 1e-9 * max(1.0, abs(floor)))
    C_star = per[c_star]
    violated = not np.isfinite(C_star)
    return BoundReport(claim_id, sweep_grid.summary(), C_star, c_star, best[c_star][1], violated, per)


__all__ = [
    "heat_kernel_1d",
    "log_heat_kernel_1d",
    "delta_heat_kernel_1d",
    "delta_star_heat_kernel_1d",
    "dt_heat_kernel_1d",
    "delta_dt_heat_kernel_1d",
    "delta_star_dt_heat_kernel_1d",
    "dt_k_heat_kernel_1d",
    "log_abs_kernel_1d",
    "log_abs_kernel_nd",
    "KernelQuery",
    "heat_kernel_nd",
    "heat_kernel_nd_array",
    "EnvelopeSpec",
    "envelope_eval",
    "log_envelope_eval",
    "SweepGrid",
    "BoundReport",
    "fit_bound_constants",
]
