"""Muckenhoupt and reverse Hoelder classes, gamma exponents and the admissible ranges.

Conventions: 1/0 = inf, ranges are open intervals, and RH_1 (the degenerate
class reached when gamma = 0) contains every weight.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, UnsupportedClaimError, UsageError
from .grid import Grid, TensorGrid, as_tensor
from .specfun import as_nu

__all__ = [
    "gamma_nu",
    "gamma_shift",
    "conjugate",
    "WeightSpec",
    "MembershipRecord",
    "power_weight_class",
    "ExponentRange",
    "theorem_range",
    "ap_rh_constants_grid",
    "refinement_study",
    "duality_check",
]


def gamma_nu(nu) -> float:
    return as_nu(nu).gamma_max


def gamma_shift(nu, j: int = 0) -> float:
    return as_nu(nu).shift(j, 1).gamma_max


def conjugate(s: float) -> float:
    """Hoelder conjugate s' = s/(s-1), with 1' = inf and inf' = 1."""
    if s == 1:
        return np.inf
    if np.isinf(s):
        return 1.0
    return s / (s - 1.0)


def _inv(g: float) -> float:
    return np.inf if g == 0 else 1.0 / g


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "power"
    sigma: float = 0.0
    values: Optional[tuple] = None

    def evaluate(self, *coords):
        if self.kind == "power":
            r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
            return r2 ** (0.5 * self.sigma)
        if self.kind == "grid":
            return np.asarray(self.values, dtype=float)
        raise UsageError(f"unknown weight kind {self.kind!r}")

    def log_evaluate(self, *coords):
        if self.kind == "power":
            r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
            return 0.5 * self.sigma * np.log(r2)
        v = self.evaluate(*coords)
        if np.any(v <= 0):
            raise DomainError("grid weight must be positive")
        return np.log(v)


@dataclass(frozen=True)
class MembershipRecord:
    sigma: float
    n: int
    p: Optional[float]
    q: Optional[float]
    in_Ap: Optional[bool]
    in_RHq: Optional[bool]


def power_weight_class(sigma: float, p: Optional[float] = None, q: Optional[float] = None, n: int = 1) -> MembershipRecord:
    """|x|^sigma in A_p iff -n < sigma < n(p-1); in RH_q iff sigma q > -n.

    q = 1 is accepted as the degenerate class RH_1 (all weights); p or q may be
    None to skip that half.
    """
    if p is not None and p <= 1:
        raise DomainError("A_p membership needs p > 1")
    if q is not None and q < 1:
        raise DomainError("RH_q membership needs q > 1")
    in_ap = None if p is None else bool(-n < sigma < (n * (p - 1) if np.isfinite(p) else np.inf))
    if q is None:
        in_rh = None
    elif q == 1:
        in_rh = True
    else:
        in_rh = bool(sigma * q > -n) if np.isfinite(q) else bool(sigma >= 0)
    return MembershipRecord(sigma, n, p, q, in_ap, in_rh)


@dataclass(frozen=True)
class ExponentRange:
    """Open range (p_lo, p_hi) with weight class A_{ap_index(p)} cap RH_{rh_index(p)}."""

    which: str
    p_lo: float
    p_hi: float
    gamma_lo: float
    gamma_hi: float

    def contains(self, p: float) -> bool:
        return self.p_lo < p < self.p_hi

    def ap_index(self, p: float) -> float:
        return (1.0 - self.gamma_lo) * p

    def rh_index(self, p: float) -> float:
        # (1/(p gamma))' = 1/(1 - p gamma); RH_1 when gamma = 0
        return conjugate(_inv(p * self.gamma_hi)) if self.gamma_hi > 0 else 1.0

    def describe(self, p: Optional[float] = None) -> str:
        g0, g1 = self.gamma_lo, self.gamma_hi
        ap = "A_p" if g0 == 0 else f"A_{{{1 - g0:g} p}}"
        rh = "" if g1 == 0 else f" cap RH_{{(1/({g1:g} p))'}}"
        text = f"p in ({self.p_lo:g}, {self.p_hi:g}), w in {ap}{rh}"
        if p is not None and self.contains(p):
            text += f"; at p={p:g}: A_{self.ap_index(p):g} cap RH_{self.rh_index(p):g}"
        return text

    def power_weight_admissible(self, sigma: float, p: float, n: int = 1) -> bool:
        """Whether |x|^sigma lies in the weight class at p (closed-form criteria)."""
        if not self.contains(p):
            return False
        rec = power_weight_class(sigma, self.ap_index(p), self.rh_index(p), n)
        return bool(rec.in_Ap and rec.in_RHq)


def theorem_range(nu, which: str, j: int = 0) -> ExponentRange:
    """Exponent range and weight classes for 'maximal', 'riesz', 'squareS' or 'squareG'."""
    nu = as_nu(nu)
    g = nu.gamma_max
    if which == "maximal":
        if nu.n != 1:
            raise UnsupportedClaimError("the weighted maximal theorem is established for n = 1 only")
        g_hi = g
    elif which in ("riesz", "squareS"):
        if not (0 <= j < nu.n):
            raise UsageError("coordinate index out of range")
        g_hi = nu.shift(j, 1).gamma_max
    elif which == "squareG":
        g_hi = g
    else:
        raise UsageError(f"unknown operator {which!r}")
    return ExponentRange(which, 1.0 / (1.0 - g), _inv(g_hi), g, g_hi)


# ---------------------------------------------------------------- empirical constants


@dataclass
class ConstantsRecord:
    Ap: float
    RHq: float
    Ap_interval: tuple
    RHq_interval: tuple


def _log_cube_integrals(grid, logw):
    # log of the integral of exp(logw) over every diagonal cube [B_a, B_b]^n
    tg = as_tensor(grid)
    g = tg.axes[0]
    if any(ax is not g and not np.array_equal(ax.breaks, g.breaks) for ax in tg.axes):
        raise UsageError("cubes need identical axes")
    m = g.breaks.size - 1
    o = g.order
    logw_ = np.log(g.weights)
    arr = logw
    for ax in range(tg.n):
        arr = np.moveaxis(arr, ax, -1)
        shp = arr.shape[:-1] + (m, o)
        arr = logsumexp(arr.reshape(shp) + logw_.reshape(m, o), axis=-1)
        arr = np.moveaxis(arr, -1, ax)
    # arr[p1, ..., pn] = log integral over a panel block; accumulate diagonal cubes
    out = np.full((m + 1, m + 1), -np.inf)
    for a in range(m):
        acc = -np.inf
        for b in range(a + 1, m + 1):
            if tg.n == 1:
                acc = np.logaddexp(acc, arr[b - 1])
            else:
                sl = tuple(slice(a, b) for _ in range(tg.n))
                acc = logsumexp(arr[sl])
            out[a, b] = acc
    return out


def ap_rh_constants_grid(w: WeightSpec, p: float, q: float, grid) -> ConstantsRecord:
    """Sup over grid intervals (diagonal cubes in n-D) of the A_p and RH_q quotients.

    Intervals run between panel breaks, so each contains at least one full
    panel of quadrature nodes.  Averages are formed in log space.
    """
    if p <= 1 or q <= 1:
        raise DomainError("constants need p > 1 and q > 1")
    tg = as_tensor(grid)
    mesh = tg.mesh()
    lw = np.asarray(w.log_evaluate(*mesh), dtype=float)
    B = tg.axes[0].breaks
    vol = np.log(np.abs(B[None, :] - B[:, None]) + 1e-300) * tg.n
    I1 = _log_cube_integrals(grid, lw) - vol
    Idual = _log_cube_integrals(grid, -lw / (p - 1.0)) - vol
    Iq = _log_cube_integrals(grid, q * lw) - vol
    valid = np.triu(np.ones_like(I1, dtype=bool), 1)
    with np.errstate(invalid="ignore"):
        la = np.where(valid, I1 + (p - 1.0) * Idual, -np.inf)
        lr = np.where(valid, Iq / q - I1, -np.inf)
    ia = np.unravel_index(np.argmax(la), la.shape)
    ir = np.unravel_index(np.argmax(lr), lr.shape)
    return ConstantsRecord(
        float(np.exp(la[ia])),
        float(np.exp(lr[ir])),
        (float(B[ia[0]]), float(B[ia[1]])),
        (float(B[ir[0]]), float(B[ir[1]])),
    )


def refinement_study(w: WeightSpec, p: float, q: float, x_mins=(1e-4, 1e-8, 1e-12, 1e-16, 1e-20, 1e-24), x_max: float = 8.0, n: int = 1) -> dict:
    """Constants on grids reaching closer to the origin, with a stabilisation verdict.

    A constant is declared stable when its last refinement increment does not
    exceed the previous one (increments of a divergent quotient grow
    geometrically, those of a convergent one shrink).
    """
    seqs = {"Ap": [], "RHq": []}
    for xm in x_mins:
        g = Grid(np.geomspace(xm, x_max, int(np.ceil(np.log10(x_max / xm) * 2)) + 1), order=8)
        grid = g if n == 1 else TensorGrid([g] * n)
        rec = ap_rh_constants_grid(w, p, q, grid)
        seqs["Ap"].append(rec.Ap)
        seqs["RHq"].append(rec.RHq)
    verdict = {}
    for key, seq in seqs.items():
        s = np.asarray(seq)
        d = np.diff(s)
        tol = 1e-9 * abs(s[-1])
        verdict[key] = bool(d[-1] <= max(d[-2], 0.0) + tol)
    return {"constants": seqs, "stable": verdict, "x_mins": list(x_mins)}


def duality_check(sigma: float, p: float, p0: float, q0: float, n: int = 1) -> dict:
    """Both sides of w in A_{p/p0} cap RH_{(q0/p)'} iff w^{1-p'} in A_{p'/q0'} cap RH_{(p0'/p')'}."""
    if not (1 < p0 < p < q0):
        raise DomainError("need 1 < p0 < p < q0")
    pp = conjugate(p)
    left = power_weight_class(sigma, p / p0, conjugate(q0 / p), n)
    dual_sigma = sigma * (1.0 - pp)
    right = power_weight_class(dual_sigma, pp / conjugate(q0), conjugate(conjugate(p0) / pp), n)
    lhs = bool(left.in_Ap and left.in_RHq)
    rhs = bool(right.in_Ap and right.in_RHq)
    return {"lhs": lhs, "rhs": rhs, "agree": lhs == rhs, "dual_sigma": dual_sigma}
