"""Registry of the kernel upper bounds checked by constant fitting.

Every claim supplies log|kernel| and a family c -> log envelope; the sweep in
``fit_bound_constants`` reports the smallest C over the candidate decay
constants.  Two-dimensional claims are evaluated from per-coordinate tables
(the kernels are products and the envelopes factor), so the full 60-point
axes stay affordable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UsageError
from .grid import gauss_panels
from .heat import (
    DEFAULT_C,
    BoundReport,
    SweepGrid,
    _Parts,
    _check,
    _delta_dt_bracket,
    _delta_star_dt_bracket,
    fit_bound_constants,
    log_abs_kernel_1d,
)
from .specfun import as_nu

__all__ = ["Claim", "CLAIMS", "claim_ids", "run_claim", "default_claims", "composition_log_integral"]


def _gauss(t, x, y, c):
    return -((x - y) ** 2) / (c * t)


def _lf(t, x):
    return np.log1p(np.sqrt(t) / x)


# ---------------------------------------------------------------- 1-D families


def _prop31(case, nu, N=3.0):
    def kernel(t, X, Y):
        return log_abs_kernel_1d("p", nu, t, X, Y)

    g = as_nu(nu).gamma_max

    def family(c):
        def env(t, X, Y):
            base = -0.5 * t - 0.5 * np.log(t) + _gauss(t, X, Y, c)
            if case == "i":
                rho = lambda v: np.minimum(v, 1.0 / v)
                return base - (nu + 0.5) * np.log1p(np.sqrt(t) / rho(X) + np.sqrt(t) / rho(Y))
            if case == "ii":
                rho = lambda v: 1.0 / (1.0 + v)
                return base - N * np.log1p(np.sqrt(t) / rho(X) + np.sqrt(t) / rho(Y))
            return base + g * (_lf(t, X) + _lf(t, Y))

        return env

    return kernel, family


def _lem1(nu):
    g = as_nu(nu).gamma_max

    def kernel(t, X, Y):
        return log_abs_kernel_1d("p", nu, t, X, Y)

    def family(c):
        def env(t, X, Y):
            X, Y = np.broadcast_arrays(X, Y)
            gauss = -0.5 * np.log(t) + _gauss(t, X, Y, c)
            below = np.where(Y < X / 2, -np.log(X) + g * (np.log(X) - np.log(Y)), -np.inf)
            above = np.where(Y >= X / 2, -np.log(Y) + g * (np.log(Y) - np.log(X)), -np.inf)
            return np.logaddexp(gauss, np.logaddexp(below, above))

        return env

    return kernel, family


def _derivative(kind, nu, power, fx, fy, a=2.0):
    g = as_nu(nu).gamma_max

    def kernel(t, X, Y):
        return log_abs_kernel_1d(kind, nu, t, X, Y, a=a)

    def family(c):
        def env(t, X, Y):
            out = -power * np.log(t) + _gauss(t, X, Y, c)
            if fx:
                out = out + g * _lf(t, X)
            if fy:
                out = out + g * _lf(t, Y)
            return out

        return env

    return kernel, family


# ---------------------------------------------------------------- composition


def composition_log_integral(t: float, x, y, a: float, c: float = 1.0, z_range=(1e-4, 20.0)):
    """log of int H_{t,a,c}(x,z) H_{t,a,c}(z,y) dz over z in z_range.

    Uses (x-z)^2 + (z-y)^2 = 2(z-m)^2 + (x-y)^2/2 with m = (x+y)/2, so only the
    one-variable integral J(m) = int exp(-2(z-m)^2/(ct)) (1+sqrt t/z)^{2a} dz is
    computed (composite Gauss-Legendre refined at m).
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    m = 0.5 * (x + y)
    lo, hi = z_range
    # panels no wider than the Gaussian width, geometric towards the z^{-2a} corner
    sig = 0.5 * np.sqrt(c * t)
    left = np.geomspace(lo, 1.0, 17)
    right = np.arange(1.0, hi, min(sig, 0.25))
    mid = np.arange(lo, 1.0, sig) if sig < 0.1 else np.array([])
    z, w = gauss_panels(np.unique(np.concatenate([left, mid, right, [hi]])), 16)
    prof = 2.0 * a * np.log1p(np.sqrt(t) / z) + np.log(w)
    mu, inv = np.unique(m, return_inverse=True)
    logJ = np.empty(mu.size)
    step = max(1, int(2e7 // z.size))
    for s in range(0, mu.size, step):
        mm = mu[s : s + step, None]
        e = -2.0 * (z[None, :] - mm) ** 2 / (c * t) + prof[None, :]
        top = e.max(axis=1, keepdims=True)
        logJ[s : s + step] = top[:, 0] + np.log(np.exp(e - top).sum(axis=1))
    lj = logJ[inv].reshape(m.shape)
    return -np.log(t) + a * (_lf(t, x) + _lf(t, y)) - (x - y) ** 2 / (2.0 * c * t) + lj


def _composition(a, c_inner=1.0):
    def kernel(t, X, Y):
        return composition_log_integral(t, X, Y, a, c_inner)

    def family(c):
        def env(t, X, Y):
            return -0.5 * np.log(t) + _gauss(t, X, Y, c) + a * (_lf(t, X) + _lf(t, Y))

        return env

    return kernel, family


# ---------------------------------------------------------------- n-D (separable tables)


def _nd_tables(kind, nu, t, x, y, ell, a):
    # per coordinate j: log p_j on the (x, y) table and the brackets needed
    tabs = []
    for j in range(nu.n):
        P = _Parts(*_check(nu[j], t, x[:, None], y[None, :]))
        d = {"logp": P.log_p, "dt": P.dt_bracket()}
        if j == ell and kind in ("delta", "delta_dt"):
            d["b0"] = P.delta_bracket()
            if kind == "delta_dt":
                d["b1"] = _delta_dt_bracket(P, _Parts(P.nu + 1.0, P.t, P.x, P.y))
        if j == ell and kind in ("delta_star", "delta_star_dt"):
            # delta*_ell acts on the order nu_ell + 1 kernel; its closed form uses order nu_ell parts
            d["b0"] = np.exp(-a * t) * P.delta_star_bracket()
            if kind == "delta_star_dt":
                d["b1"] = _delta_star_dt_bracket(P, _Parts(P.nu + 1.0, P.t, P.x, P.y), a)
        tabs.append(d)
    return tabs


def _outer_sum(mats):
    # mats[j] indexed (i_j, k_j) -> array indexed (i_1..i_n, k_1..k_n)
    n = len(mats)
    out = 0.0
    for j, M in enumerate(mats):
        shape = [1] * (2 * n)
        shape[j] = M.shape[0]
        shape[n + j] = M.shape[1]
        out = out + M.reshape(shape)
    return out


def _nd_claim(kind, nu, sweep: SweepGrid, ell=0, a=2.0):
    nu = as_nu(nu)
    n = nu.n
    k = 1 if kind in ("dt", "delta_dt", "delta_star_dt") else 0
    power = k + (n / 2 if kind in ("p", "dt") else (n + 1) / 2)
    x, y = sweep.x, sweep.y
    M = x.size ** n

    def kernel(t, X, Y):
        tabs = _nd_tables(kind, nu, t, x, y, ell, a)
        logp = _outer_sum([d["logp"] for d in tabs])
        if kind == "p":
            out = logp
        else:
            dts = _outer_sum([d["dt"] if j != ell or kind == "dt" else np.zeros_like(d["dt"]) for j, d in enumerate(tabs)])
            if kind == "dt":
                br = dts
            else:
                b0 = _outer_sum([tabs[ell]["b0"] if j == ell else np.zeros_like(d["logp"]) for j, d in enumerate(tabs)])
                if k == 0:
                    br = b0
                else:
                    b1 = _outer_sum([tabs[ell]["b1"] if j == ell else np.zeros_like(d["logp"]) for j, d in enumerate(tabs)])
                    br = b1 + b0 * dts
            with np.errstate(divide="ignore"):
                out = logp + np.log(np.abs(br))
        return out.reshape(M, M)

    def family(c):
        def env(t, X, Y):
            mats = []
            for j in range(n):
                g = nu.gamma(j)
                e = _gauss(t, x[:, None], y[None, :], c) + g * _lf(t, x)[:, None]
                if not (kind.startswith("delta_star") and j == ell):
                    e = e + g * _lf(t, y)[None, :]
                mats.append(e)
            return (_outer_sum(mats) - power * np.log(t)).reshape(M, M)

        return env

    return kernel, family


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Claim:
    claim_id: str
    description: str
    default_nu: tuple
    builder: Callable
    n: int = 1


def _c(cid, desc, nu, builder, n=1):
    return Claim(cid, desc, tuple(np.atleast_1d(nu).tolist()), builder, n)


CLAIMS = {
    c.claim_id: c
    for c in [
        _c("prop31i", "p <= e^{-t/2} t^{-1/2} G (1+sqrt t/rho(x)+sqrt t/rho(y))^{-(nu+1/2)}, rho=min(x,1/x)", 0.7,
           lambda nu, s: _prop31("i", nu[0])),
        _c("prop31ii", "nu=-1/2: same with exponent -N, N=3, rho=1/(1+x)", -0.5, lambda nu, s: _prop31("ii", nu[0])),
        _c("prop31iii", "nu<-1/2: p <= e^{-t/2} t^{-1/2} G (1+sqrt t/x)^g (1+sqrt t/y)^g", -0.75,
           lambda nu, s: _prop31("iii", nu[0])),
        _c("lem1", "p <= t^{-1/2} G + x^{-1}(x/y)^g 1{y<x/2} + y^{-1}(y/x)^g 1{x/2<=y}", -0.75, lambda nu, s: _lem1(nu[0])),
        _c("delta", "|delta p| <= t^{-1} G (1+sqrt t/y)^g", -0.75,
           lambda nu, s: _derivative("delta", nu[0], 1.0, False, True)),
        _c("delta_star", "|delta* p^{nu+1}| <= t^{-1} G (1+sqrt t/x)^g", -0.75,
           lambda nu, s: _derivative("delta_star", nu[0], 1.0, True, False)),
        _c("dt", "|d_t p| <= t^{-3/2} G (1+sqrt t/x)^g (1+sqrt t/y)^g", -0.75,
           lambda nu, s: _derivative("dt", nu[0], 1.5, True, True)),
        _c("partial_k1", "k=1: |d_t p| <= t^{-3/2} G (1+sqrt t/x)^g (1+sqrt t/y)^g", -0.75,
           lambda nu, s: _derivative("dt", nu[0], 1.5, True, True)),
        _c("partial_k1_delta", "k=1: |delta d_t p| <= t^{-2} G (1+sqrt t/x)^g (1+sqrt t/y)^g", -0.75,
           lambda nu, s: _derivative("delta_dt", nu[0], 2.0, True, True)),
        _c("partial_k1_delta_star", "k=1, a=2: |delta* d_t[e^{-at} p^{nu+1}]| <= t^{-2} G (1+sqrt t/x)^g", -0.75,
           lambda nu, s: _derivative("delta_star_dt", nu[0], 2.0, True, False)),
        _c("compose_a0.1", "int H_{t,a,1}(x,z) H_{t,a,1}(z,y) dz <= C H_{t,a,c}, a=0.1", -0.75, lambda nu, s: _composition(0.1)),
        _c("compose_a0.25", "as above, a=0.25", -0.75, lambda nu, s: _composition(0.25)),
        _c("compose_a0.4", "as above, a=0.4", -0.75, lambda nu, s: _composition(0.4)),
        _c("nd_k0", "n=2: p <= t^{-n/2} G prod (1+sqrt t/x_j)^g_j (1+sqrt t/y_j)^g_j", (-0.75, 0.4),
           lambda nu, s: _nd_claim("p", nu, s), 2),
        _c("nd_k1", "n=2: |d_t p| <= t^{-1-n/2} G prod(...)", (-0.75, 0.4), lambda nu, s: _nd_claim("dt", nu, s), 2),
        _c("nd_delta_k0", "n=2: |delta_1 p| <= t^{-(n+1)/2} G prod(...)", (-0.75, 0.4),
           lambda nu, s: _nd_claim("delta", nu, s), 2),
        _c("nd_delta_k1", "n=2: |delta_1 d_t p| <= t^{-1-(n+1)/2} G prod(...)", (-0.75, 0.4),
           lambda nu, s: _nd_claim("delta_dt", nu, s), 2),
        _c("nd_delta_star_k0", "n=2, a=2: |delta_1^* e^{-at} p^{nu+e_1}| <= t^{-(n+1)/2} G (x_1 factor) prod_{j>1}(...)",
           (-0.75, 0.4), lambda nu, s: _nd_claim("delta_star", nu, s), 2),
        _c("nd_delta_star_k1", "n=2, a=2: |delta_1^* d_t[e^{-at} p^{nu+e_1}]| <= t^{-1-(n+1)/2} G ...", (-0.75, 0.4),
           lambda nu, s: _nd_claim("delta_star_dt", nu, s), 2),
    ]
}

# nu values swept for the derivative-kernel claims
DERIVATIVE_NUS = (-0.75, -0.5, -0.25, 0.7)


def claim_ids() -> list:
    return list(CLAIMS)


def run_claim(claim_id: str, nu=None, sweep: SweepGrid | None = None, c_candidates: Sequence[float] = DEFAULT_C) -> BoundReport:
    """Fit constants for one registered claim over ``sweep`` (the standard grid by default)."""
    if claim_id not in CLAIMS:
        raise UsageError(f"unknown claim {claim_id!r}; known: {', '.join(CLAIMS)}")
    cl = CLAIMS[claim_id]
    nu = as_nu(cl.default_nu if nu is None else nu)
    if nu.n != cl.n:
        raise UsageError(f"claim {claim_id} needs nu of dimension {cl.n}")
    sweep = sweep or SweepGrid.standard()
    # n-D claims use the axes of the sweep directly
    sweep = SweepGrid(sweep.t, sweep.x, sweep.y, cl.n)
    kernel, family = cl.builder(nu, sweep)
    label = f"{claim_id}[nu={','.join(f'{v:g}' for v in nu.values)}]"
    return fit_bound_constants(label, kernel, family, sweep, c_candidates)


def default_claims() -> list:
    """(claim_id, nu) pairs making up the kernel-bound acceptance item."""
    out = []
    for cid, cl in CLAIMS.items():
        if cid in ("delta", "delta_star", "dt"):
            out.extend((cid, (v,)) for v in DERIVATIVE_NUS)
        else:
            out.append((cid, cl.default_nu))
    return out
