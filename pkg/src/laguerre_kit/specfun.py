"""Scaled modified Bessel functions, Laguerre polynomials and Laguerre functions.

All array routines broadcast over their arguments and return a Python float
when every input is scalar.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, UsageError

# switch from the power series to the asymptotic expansion above this argument
# (or above 2*alpha**2 when that is larger)
SERIES_LIMIT = 25.0
MAX_SERIES_TERMS = 500
LOG_SERIES_SWITCH = 300.0
MAX_ASYMPTOTIC_TERMS = 60


def _scalar_out(out, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(out)
    return out


@dataclass(frozen=True)
class NuVector:
    """Order parameter nu in (-1, inf)^n."""

    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))
        if len(vals) == 0:
            raise UsageError("nu must have at least one component")
        if any(not np.isfinite(v) or v <= -1.0 for v in vals):
            raise DomainError(f"every component of nu must exceed -1, got {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def total(self) -> float:
        # signed sum, the |nu| entering the eigenvalues
        return float(sum(self.values))

    def gamma(self, j: int) -> float:
        return max(-0.5 - self.values[j], 0.0)

    @property
    def gamma_max(self) -> float:
        return max(self.gamma(j) for j in range(self.n))

    def shift(self, j: int, step: int = 1) -> "NuVector":
        vals = list(self.values)
        vals[j] += step
        return NuVector(vals)

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class MultiIndex:
    values: tuple

    def __init__(self, values):
        vals = tuple(int(v) for v in np.atleast_1d(values))
        if any(v < 0 for v in vals):
            raise DomainError(f"multi-index entries must be non-negative, got {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def total(self) -> int:
        return sum(self.values)

    def shift(self, j: int, step: int) -> "MultiIndex | None":
        """Return k + step*e_j, or None when a component would go negative."""
        vals = list(self.values)
        vals[j] += step
        if vals[j] < 0:
            return None
        return MultiIndex(vals)

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self):
        return self.n


def as_nu(nu) -> NuVector:
    return nu if isinstance(nu, NuVector) else NuVector(nu)


def as_index(k) -> MultiIndex:
    return k if isinstance(k, MultiIndex) else MultiIndex(k)


def _bessel_series(alpha, z):
    # e^{-z} I_alpha(z) = e^{-z} (z/2)^alpha / Gamma(alpha+1) * sum_k q^k / (k! (alpha+1)_k)
    if np.any(z > LOG_SERIES_SWITCH):
        out = np.empty_like(z)
        hi = z > LOG_SERIES_SWITCH
        out[hi] = _bessel_peak_series(alpha[hi], z[hi])
        if (~hi).any():
            out[~hi] = _bessel_series(alpha[~hi], z[~hi])
        return out
    half = 0.5 * z
    lead = np.exp(alpha * np.log(half) - z - gammaln(alpha + 1.0))
    q = half * half
    term = np.ones_like(z)
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    for k in range(1, MAX_SERIES_TERMS):
        term = term * q / (k * (k + alpha))
        # Kahan step; all terms are positive so this only trims rounding
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if np.all(term <= 1e-17 * total):
            break
    return lead * total


def _bessel_peak_series(alpha, z):
    # the unscaled sum would overflow: anchor at the largest term (one log-gamma
    # evaluation) and walk outward with term ratios, all of modulus <= 1
    out = np.empty_like(z)
    for i, (a, zz) in enumerate(zip(alpha.ravel(), z.ravel())):
        q = 0.25 * zz * zz
        k0 = int(np.floor(0.5 * (np.sqrt(a * a + zz * zz) - a)))
        reach = int(12.0 * np.sqrt(k0 + 1.0)) + 60
        up = np.arange(k0 + 1, k0 + reach)
        down = np.arange(k0, 0, -1)[:reach]
        right = np.cumprod(q / (up * (up + a)))
        left = np.cumprod(down * (down + a) / q)
        log_peak = (a + 2 * k0) * np.log(0.5 * zz) - zz - gammaln(k0 + 1.0) - gammaln(a + k0 + 1.0)
        total = 1.0 + np.sum(right[::-1]) + np.sum(left[::-1])
        out.flat[i] = np.exp(log_peak) * total
    return out


def _bessel_asymptotic(alpha, z):
    # e^{-z} I_alpha(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(alpha) z^{-k}, truncated at the smallest term
    mu = 4.0 * alpha * alpha
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, MAX_ASYMPTOTIC_TERMS):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        grow = np.abs(nxt) >= np.abs(term)
        active &= ~grow
        term = np.where(active, nxt, term)
        total = total + np.where(active, nxt, 0.0)
        active &= np.abs(nxt) > 1e-17 * np.abs(total)
        if not active.any():
            break
    return total / np.sqrt(2.0 * np.pi * z)


def bessel_i_scaled(alpha, z):
    """Exponentially scaled modified Bessel function e^{-z} I_alpha(z).

    Parameters
    ----------
    alpha : float or array_like
        Order, alpha > -1.
    z : float or array_like
        Argument, z >= 0.

    Returns
    -------
    float or ndarray
        Finite for z > 0. At z = 0 the value is 1 for alpha = 0, 0 for
        alpha > 0 and +inf for -1 < alpha < 0.
    """
    a = np.asarray(alpha, dtype=float)
    zz = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a <= -1.0):
        raise DomainError("bessel_i_scaled requires alpha > -1")
    if np.any(~np.isfinite(zz)) or np.any(zz < 0.0):
        raise DomainError("bessel_i_scaled requires finite z >= 0")
    a_b, z_b = np.broadcast_arrays(a, zz)
    out = np.empty(a_b.shape)
    zero = z_b == 0.0
    big = z_b > np.maximum(SERIES_LIMIT, 2.0 * a_b * a_b)
    small = ~zero & ~big
    if zero.any():
        az = a_b[zero]
        out[zero] = np.where(az == 0.0, 1.0, np.where(az > 0.0, 0.0, np.inf))
    if small.any():
        out[small] = _bessel_series(a_b[small], z_b[small])
    if big.any():
        out[big] = _bessel_asymptotic(a_b[big], z_b[big])
    return _scalar_out(out, alpha, z)


def laguerre_polynomial(k: int, nu, x):
    """Generalized Laguerre polynomial L_k^nu(x) by forward recurrence."""
    if int(k) != k or k < 0:
        raise DomainError("degree k must be a non-negative integer")
    nu_a = np.asarray(nu, dtype=float)
    if np.any(nu_a <= -1.0):
        raise DomainError("laguerre_polynomial requires nu > -1")
    xx = np.asarray(x, dtype=float)
    prev = np.zeros(np.broadcast(nu_a, xx).shape)
    cur = np.ones_like(prev)
    for m in range(int(k)):
        prev, cur = cur, ((2 * m + 1 + nu_a - xx) * cur - (m + nu_a) * prev) / (m + 1)
    return _scalar_out(cur, nu, x)


def laguerre_function_table(kmax: int, nu: float, x) -> np.ndarray:
    """Rows phi_0^nu(x), ..., phi_kmax^nu(x) for a 1-D array x > 0.

    Uses the recurrence of the normalized functions, so no Laguerre value is
    ever formed without its Gaussian factor.
    """
    nu = float(nu)
    if nu <= -1.0:
        raise DomainError("nu must exceed -1")
    xx = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xx <= 0.0):
        raise DomainError("Laguerre functions are evaluated at x > 0 only")
    u = xx * xx
    table = np.empty((kmax + 1, xx.size))
    # mantissas times exp(scale) per column; phi_0 alone underflows for x^2 > ~1400
    scale = 0.5 * (np.log(2.0) - gammaln(nu + 1.0)) + (nu + 0.5) * np.log(xx) - 0.5 * u
    prev = np.zeros_like(u)
    cur = np.ones_like(u)
    with np.errstate(under="ignore"):
        table[0] = np.exp(scale)
        for k in range(kmax):
            if k == 0:
                nxt = (1.0 + nu - u) * cur / np.sqrt(1.0 + nu)
            else:
                nxt = ((2 * k + 1 + nu - u) * cur - np.sqrt(k * (k + nu)) * prev) / np.sqrt((k + 1) * (k + nu + 1))
            prev, cur = cur, nxt
            big = np.abs(cur) > 1e150
            if big.any():
                prev[big] *= 1e-150
                cur[big] *= 1e-150
                scale[big] += 150.0 * np.log(10.0)
            table[k + 1] = cur * np.exp(scale)
    return table


def laguerre_function(k: int, nu: float, x):
    """Laguerre function phi_k^nu(x) = c_k L_k^nu(x^2) x^{nu+1/2} e^{-x^2/2}, orthonormal on (0, inf)."""
    if int(k) != k or k < 0:
        raise DomainError("degree k must be a non-negative integer")
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0.0):
        raise DomainError("Laguerre functions are evaluated at x > 0 only")
    vals = laguerre_function_table(int(k), nu, xx.ravel())[-1].reshape(xx.shape)
    return _scalar_out(vals, x)


def laguerre_function_nd(k, nu, x):
    """Tensor-product Laguerre function; x has trailing dimension n."""
    k = as_index(k)
    nu = as_nu(nu)
    xx = np.asarray(x, dtype=float)
    if k.n != nu.n or xx.shape[-1:] != (nu.n,):
        raise UsageError(f"dimension mismatch: k has {k.n}, nu has {nu.n}, x has shape {xx.shape}")
    out = np.ones(xx.shape[:-1])
    for j in range(nu.n):
        out = out * laguerre_function(k[j], nu[j], xx[..., j])
    return float(out) if out.ndim == 0 else out


def eigenvalue(k, nu) -> float:
    """4|k| + 2(nu_1+...+nu_n) + 2n."""
    k = as_index(k)
    nu = as_nu(nu)
    if k.n != nu.n:
        raise UsageError("k and nu have different dimensions")
    return 4.0 * k.total + 2.0 * nu.total + 2.0 * nu.n


def gamma_of(nu: float) -> float:
    return max(-0.5 - float(nu), 0.0)


__all__ = [
    "NuVector",
    "MultiIndex",
    "as_nu",
    "as_index",
    "bessel_i_scaled",
    "laguerre_polynomial",
    "laguerre_function",
    "laguerre_function_table",
    "laguerre_function_nd",
    "eigenvalue",
    "gamma_of",
]
