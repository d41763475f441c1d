"""Kernel-route operators: semigroup, maximal functions, Riesz transforms, square functions, norms."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from laguerre_kit import DomainError, UsageError
from laguerre_kit.grid import Grid, GridFunction, TensorGrid, TimeQuadrature
from laguerre_kit.heat import EnvelopeSpec
from laguerre_kit.operators import (
    annulus_parts,
    default_test_family,
    gaussian_maximal,
    hl_maximal,
    kernel_apply,
    maximal_semigroup,
    offdiag_norms,
    op_norm_probe,
    riesz_apply_quadrature,
    semigroup_apply_quadrature,
    square_G,
    square_S,
    tail_operators,
    weighted_lp_norm,
)
from laguerre_kit.specfun import laguerre_function

XS = np.array([0.3, 1.0, 2.2])
SHORT_TQ = TimeQuadrature(1e-4, 20.0, 40)


def eig(k, nu, g=None, scale=1.0):
    g = g or Grid.default()
    return GridFunction.from_callable(g, lambda v: scale * laguerre_function(k, nu, v))


# ---------------------------------------------------------------- semigroup


@pytest.mark.parametrize("k", [0, 2])
@pytest.mark.parametrize("nu", [-0.75, 0.4])
def test_semigroup_quadrature_on_eigenfunctions(nu, k):
    t = 0.15
    got = semigroup_apply_quadrature(eig(k, nu), nu, t, XS)
    ref = np.exp(-t * (4 * k + 2 * nu + 2)) * laguerre_function(k, nu, XS)
    assert np.allclose(got, ref, atol=1e-9)


def test_semigroup_on_grid_returns_grid_function():
    g = Grid(np.linspace(0.5, 2.0, 4), order=4)
    f = GridFunction.from_callable(g, lambda v: laguerre_function(0, 0.2, v))
    out = semigroup_apply_quadrature(f, 0.2, 0.5)
    assert isinstance(out, GridFunction)
    assert out.values.shape == f.values.shape


def test_kernel_apply_requires_1d():
    g = Grid.default(x_max=8.0)
    f = GridFunction.from_callable(TensorGrid([g, g]), lambda x, y: np.exp(-x - y))
    with pytest.raises(UsageError):
        kernel_apply(lambda a, b: a * b, f, 1.0, 0.1)
    with pytest.raises(UsageError):
        semigroup_apply_quadrature(eig(0, 0.1), (0.1, 0.2), 0.1, XS)


# ---------------------------------------------------------------- maximal functions


def test_maximal_semigroup_on_ground_state():
    # e^{-tL} phi_0 = e^{-t lambda_0} phi_0 is largest at the smallest time node
    nu = -0.75
    got = maximal_semigroup(eig(0, nu), nu, SHORT_TQ, XS)
    ref = np.exp(-SHORT_TQ.nodes[0] * (2 * nu + 2)) * laguerre_function(0, nu, XS)
    assert np.allclose(got, ref, rtol=1e-8)


def test_maximal_semigroup_homogeneous_and_subadditive():
    nu = 0.4
    tq = TimeQuadrature(1e-3, 5.0, 12)
    f, g = eig(1, nu), eig(3, nu)
    Mf = maximal_semigroup(f, nu, tq, XS)
    Mg = maximal_semigroup(g, nu, tq, XS)
    assert np.allclose(maximal_semigroup(f.scale(-2.5), nu, tq, XS), 2.5 * Mf, rtol=1e-12)
    assert np.all(maximal_semigroup(f + g, nu, tq, XS) <= Mf + Mg + 1e-12)
    # dominates |f| up to the smallest time
    assert np.all(Mf >= np.abs(laguerre_function(1, nu, XS)) * 0.99)


def test_maximal_semigroup_empty_time_grid():
    tq = TimeQuadrature(1e-3, 1.0, 2)
    tq.nodes = np.array([])
    with pytest.raises(UsageError):
        maximal_semigroup(eig(0, 0.1), 0.1, tq, XS)


def test_gaussian_maximal_dominates_semigroup_for_nonnegative_order():
    # for nu >= -1/2 the kernel is bounded by a Gaussian with c = 4 up to a constant
    nu = 0.4
    tq = TimeQuadrature(1e-3, 5.0, 12)
    f = eig(2, nu)
    M = maximal_semigroup(f, nu, tq, XS)
    G = gaussian_maximal(f, tq, 4.0, XS)
    assert np.all(M <= 2.0 * G)


def test_hl_maximal_on_indicator():
    g = Grid([0.5, 1.0, 2.0, 3.0, 4.0, 5.0], order=8)
    f = GridFunction.from_callable(g, lambda v: ((v >= 1.0) & (v <= 2.0)).astype(float), jumps=(1.0, 2.0))
    M = hl_maximal(f, 1.0, np.array([1.5, 3.5, 4.5]))
    assert M[0] == pytest.approx(1.0)
    assert M[1] == pytest.approx(1.0 / 3.0)
    assert M[2] == pytest.approx(1.0 / 4.0)
    assert hl_maximal(f, 2.0, np.array([3.5]))[0] == pytest.approx(np.sqrt(1.0 / 3.0))
    with pytest.raises(DomainError):
        hl_maximal(f, 0.5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6), st.floats(1.0, 3.0))
def test_hl_maximal_dominates_panel_averages(vals, r):
    g = Grid(np.linspace(0.5, 3.5, 7), order=4)
    v = np.repeat(np.asarray(vals), 4)
    f = GridFunction(g, v)
    M = hl_maximal(f, r).values
    assert np.all(M + 1e-12 >= np.abs(v))
    assert np.all(M <= np.abs(v).max() + 1e-12)


def test_tail_operators_on_indicator():
    g = Grid.default(x_max=8.0)
    f = GridFunction.from_callable(g, lambda v: ((v >= 1.0) & (v <= 2.0)).astype(float), jumps=(1.0, 2.0))
    t2, t3 = tail_operators(f, 0.5, np.array([5.0, 1.0]))
    assert t2[0] == pytest.approx(5.0**-0.5 * 2 * (np.sqrt(2) - 1), rel=1e-10)
    assert t2[1] == pytest.approx(0.0, abs=1e-14)
    assert t3[1] == pytest.approx(2 * (np.sqrt(2) - 1), rel=1e-10)
    assert t3[0] == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------- Riesz and square functions


def test_riesz_closed_form_and_ground_state():
    xs = np.array([0.5, 1.5])
    R = riesz_apply_quadrature(eig(1, -0.5), -0.5, 0, None, xs)
    assert np.allclose(R, -2.0 / np.sqrt(5.0) * laguerre_function(0, 0.5, xs), rtol=1e-4)
    assert np.allclose(riesz_apply_quadrature(eig(0, -0.5), -0.5, 0, SHORT_TQ, xs), 0.0, atol=1e-9)
    with pytest.raises(UsageError):
        riesz_apply_quadrature(eig(1, -0.5), -0.5, 1, SHORT_TQ, xs)


def test_riesz_is_linear():
    xs = np.array([0.7])
    f, g = eig(1, 0.3), eig(2, 0.3)
    a = riesz_apply_quadrature(f.scale(2.0) + g, 0.3, 0, SHORT_TQ, xs)
    b = 2.0 * riesz_apply_quadrature(f, 0.3, 0, SHORT_TQ, xs) + riesz_apply_quadrature(g, 0.3, 0, SHORT_TQ, xs)
    assert np.allclose(a, b, rtol=1e-12)


def test_riesz_grid_output_carries_diagnostics():
    g = Grid(np.linspace(0.5, 2.0, 3), order=4)
    f = GridFunction.from_callable(g, lambda v: laguerre_function(1, -0.5, v))
    out = riesz_apply_quadrature(f, -0.5, 0, SHORT_TQ)
    assert set(out.meta) >= {"tail_estimate", "adequate", "small_t_correction"}
    assert out.meta["adequate"] is False


def test_square_functions():
    xs = np.array([0.5, 1.5])
    assert np.allclose(square_S(eig(0, -0.5), -0.5, 0, SHORT_TQ, xs), 0.0, atol=1e-9)
    S = square_S(eig(1, -0.5), -0.5, 0, None, xs)
    assert np.allclose(S, np.sqrt(0.4) * laguerre_function(0, 0.5, xs), rtol=1e-3)
    # G phi_k = |phi_k| / 2 since int (t lam)^2 e^{-2 t lam} dt/t = 1/4
    for k, nu in [(0, -0.75), (3, 0.4)]:
        G = square_G(eig(k, nu), nu, None, xs, N=10)
        assert np.allclose(G, 0.5 * np.abs(laguerre_function(k, nu, xs)), rtol=1e-3)
    with pytest.raises(UsageError):
        square_G(eig(0, 0.1), 0.1, SHORT_TQ, xs, route="other")


def test_square_G_2d_spectral():
    g = Grid.default(x_max=12.0)
    tg = TensorGrid([g, g])
    nu = (-0.5, 0.2)
    f = GridFunction.from_callable(tg, lambda x, y: laguerre_function(1, -0.5, x) * laguerre_function(0, 0.2, y))
    G = square_G(f, nu, None, [np.array([0.8]), np.array([1.3])], N=4)
    ref = 0.5 * abs(laguerre_function(1, -0.5, 0.8) * laguerre_function(0, 0.2, 1.3))
    assert G[0] == pytest.approx(ref, rel=1e-3)


# ---------------------------------------------------------------- norms and probes


def test_weighted_norms():
    g = Grid.default(x_max=40.0)
    assert weighted_lp_norm(eig(0, 0.3, g), 2.0) == pytest.approx(1.0, rel=1e-12)
    f = GridFunction.from_callable(g, lambda v: np.exp(-v))
    p, s = 3.0, 0.5
    ref = (gamma(s + 1) / p ** (s + 1)) ** (1 / p)
    assert weighted_lp_norm(f, p, lambda v: v**s) == pytest.approx(ref, rel=1e-9)
    assert weighted_lp_norm(f, p, g.nodes**s) == pytest.approx(ref, rel=1e-9)
    with pytest.raises(DomainError):
        weighted_lp_norm(f, 0.0)
    with pytest.raises(DomainError):
        weighted_lp_norm(f, 2.0, -np.ones(g.size))


def test_norm_probe():
    g = Grid.default()
    fam = default_test_family(g, -0.5)
    assert len(fam) == 20
    assert op_norm_probe(lambda f: f, 2.0, None, fam) == pytest.approx(1.0)
    outs = [f.scale(0.5) for f in fam]
    assert op_norm_probe(None, 1.5, lambda v: v**0.2, fam, outputs=outs) == pytest.approx(0.5)


def test_annulus_parts():
    # B = (1, 2): 4B = (-0.5, 3.5), 2B = (0.5, 2.5)
    assert annulus_parts(1.5, 0.5, 2) == [(0.0, 0.5), (2.5, 3.5)]
    assert annulus_parts(1.5, 0.5, 3) == [(3.5, 5.5)]
    assert annulus_parts(1.5, 0.5, 4) == [(5.5, 9.5)]


def test_offdiag_norms_decay():
    spec = EnvelopeSpec("T", 0.25, 0.25, 1.0, 1)
    n = offdiag_norms(spec, 0.2, (1.0, 2.0), range(2, 6))
    vals = [n[j] for j in range(2, 6)]
    assert all(np.diff(vals) < 0)
    with pytest.raises(UsageError):
        offdiag_norms(EnvelopeSpec("H", 0.25), 0.2)
