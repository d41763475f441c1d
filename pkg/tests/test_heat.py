"""Heat kernels, derivative kernels, envelopes and bound fitting."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from laguerre_kit import DomainError, UsageError
from laguerre_kit.checks import chapman_kolmogorov
from laguerre_kit.claims import CLAIMS, claim_ids, composition_log_integral, run_claim
from laguerre_kit.grid import Grid
from laguerre_kit.heat import (
    EnvelopeSpec,
    KernelQuery,
    SweepGrid,
    delta_dt_heat_kernel_1d,
    delta_heat_kernel_1d,
    delta_star_dt_heat_kernel_1d,
    delta_star_heat_kernel_1d,
    dt_heat_kernel_1d,
    dt_k_heat_kernel_1d,
    envelope_eval,
    fit_bound_constants,
    heat_kernel_1d,
    heat_kernel_nd,
    heat_kernel_nd_array,
    log_abs_kernel_1d,
    log_abs_kernel_nd,
    log_envelope_eval,
    log_heat_kernel_1d,
)
from laguerre_kit.specfun import laguerre_function

nus = st.floats(-0.95, 3.0)
pos = st.floats(0.05, 6.0)
times = st.floats(0.01, 3.0)


def d5(f, v, h):
    return (f(v - 2 * h) - 8 * f(v - h) + 8 * f(v + h) - f(v + 2 * h)) / (12 * h)


# ---------------------------------------------------------------- frozen kernel values


@pytest.mark.parametrize(
    "nu, t, x, y, ref",
    [
        # r-form of the kernel in mpmath at 40 digits
        (-0.5, 0.25, 1.0, 1.0, 0.44191421357031656854),
        (-0.75, 0.2, 0.8, 1.1, 0.42405332476716586171),
        (0.7, 0.001, 5.0, 5.01, 8.485048176069595613),
        (-0.9, 3.0, 0.01, 2.0, 0.074658551451633422156),
        (2.5, 0.05, 0.3, 0.35, 0.072061673498585728255),
        (0.4, 2e-4, 20.0, 20.003, 18.207298029698102586),
        (-0.3, 0.5, 30.0, 0.1, 1.2083602106690678144e-256),
    ],
)
def test_kernel_frozen(nu, t, x, y, ref):
    assert heat_kernel_1d(nu, t, x, y) == pytest.approx(ref, rel=1e-12)
    assert log_heat_kernel_1d(nu, t, x, y) == pytest.approx(np.log(ref), rel=1e-13, abs=1e-12)


def test_kernel_half_order_is_mehler_image_sum():
    # for nu = -1/2 the kernel is the even part of the Hermite (Mehler) kernel on (0, inf)
    t, x, y = 0.25, 1.0, 1.0
    s, c = np.sinh(2 * t), np.cosh(2 * t)

    def mehler(u, v):
        return np.exp(-((u * u + v * v) * c - 2 * u * v) / (2 * s)) / np.sqrt(2 * np.pi * s)

    ref = mehler(x, y) + mehler(x, -y)
    assert heat_kernel_1d(-0.5, t, x, y) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(0.44191421357031656854, rel=1e-14)


def test_kernel_reproduces_ground_state():
    # int p_t(x, y) phi_0(y) dy = e^{-t(2nu+2)} phi_0(x)
    nu, t, x = -0.75, 0.3, 1.2
    val = quad(lambda y: heat_kernel_1d(nu, t, x, y) * laguerre_function(0, nu, y), 0, 15, limit=200)[0]
    assert val == pytest.approx(np.exp(-t * (2 * nu + 2)) * laguerre_function(0, nu, x), rel=1e-9)
    assert val == pytest.approx(0.29729865849936728728, rel=1e-9)


@pytest.mark.parametrize("k", [0, 1, 4])
@pytest.mark.parametrize("nu", [-0.75, 0.4])
def test_kernel_eigen_reproduction_grid(nu, k):
    g = Grid.default()
    t = 0.2
    x = np.array([0.3, 1.0, 2.5])
    val = g.integrate(heat_kernel_1d(nu, t, x[:, None], g.nodes[None, :]) * laguerre_function(k, nu, g.nodes))
    assert np.allclose(val, np.exp(-t * (4 * k + 2 * nu + 2)) * laguerre_function(k, nu, x), atol=1e-10)


def test_kernel_domain():
    with pytest.raises(DomainError):
        heat_kernel_1d(-1.0, 0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        heat_kernel_1d(0.2, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        heat_kernel_1d(0.2, 0.1, 0.0, 1.0)


def test_kernel_broadcasting_and_scalar_output():
    v = heat_kernel_1d(0.2, 0.3, np.array([0.5, 1.0]), np.array([[1.0], [2.0]]))
    assert v.shape == (2, 2)
    assert isinstance(heat_kernel_1d(0.2, 0.3, 1.0, 2.0), float)


@settings(max_examples=80, deadline=None)
@given(nus, times, pos, pos)
def test_kernel_symmetric_positive(nu, t, x, y):
    # positivity in log form, p itself may underflow deep in the Gaussian tail
    a = log_heat_kernel_1d(nu, t, x, y)
    assert np.isfinite(a)
    assert a == pytest.approx(log_heat_kernel_1d(nu, t, y, x), rel=1e-13, abs=1e-12)
    assert heat_kernel_1d(nu, t, x, y) == pytest.approx(np.exp(a), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(nus, st.floats(0.05, 2.0), st.floats(0.3, 4.0), st.floats(0.3, 4.0))
def test_kernel_solves_heat_equation(nu, t, x, y):
    # d/dt p = p'' - x^2 p - (nu^2 - 1/4) p / x^2, second derivative from log p
    f = lambda v: log_heat_kernel_1d(nu, t, v, y)
    h = 1e-3 * min(x, np.sqrt(t))
    l1 = d5(f, x, h)
    l2 = (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)
    p = heat_kernel_1d(nu, t, x, y)
    rhs = p * (l2 + l1 * l1 - x * x - (nu * nu - 0.25) / (x * x))
    lhs = dt_heat_kernel_1d(nu, t, x, y)
    assert lhs == pytest.approx(rhs, rel=1e-4, abs=1e-6 * p * (1 + x * x + 1 / t))


# ---------------------------------------------------------------- derivative kernels


def test_derivative_kernels_frozen():
    # mpmath differentiation of the r-form kernel, 40 digits
    assert delta_heat_kernel_1d(-0.75, 0.2, 0.8, 1.1) == pytest.approx(0.7588259078907906191, rel=1e-11)
    assert delta_star_heat_kernel_1d(-0.6, 0.15, 1.0, 0.7) == pytest.approx(1.2653115584763961269, rel=1e-11)
    assert dt_heat_kernel_1d(-0.75, 0.3, 1.0, 1.0) == pytest.approx(-0.98560075989522594189, rel=1e-11)
    assert delta_dt_heat_kernel_1d(-0.75, 0.2, 0.8, 1.1) == pytest.approx(-4.61065105380607, rel=1e-11)
    assert delta_star_dt_heat_kernel_1d(-0.6, 0.15, 1.0, 0.7, a=2.0) == pytest.approx(-7.645865131696, rel=1e-11)


def test_second_time_derivative_by_composition():
    assert dt_k_heat_kernel_1d(-0.75, 0.4, 1.0, 1.2, k=2) == pytest.approx(2.7881253630401290604, rel=1e-7)
    with pytest.raises(DomainError):
        dt_k_heat_kernel_1d(-0.75, 0.4, 1.0, 1.2, k=0)


@settings(max_examples=60, deadline=None)
@given(nus, times, pos, pos)
def test_delta_kernel_matches_finite_difference(nu, t, x, y):
    h = 1e-3 * min(x, np.sqrt(t))
    p = heat_kernel_1d(nu, t, x, y)
    fd = p * (d5(lambda v: log_heat_kernel_1d(nu, t, v, y), x, h) + x - (nu + 0.5) / x)
    assert delta_heat_kernel_1d(nu, t, x, y) == pytest.approx(fd, rel=1e-5, abs=1e-9 * p / np.sqrt(t))


@settings(max_examples=60, deadline=None)
@given(nus, times, pos, pos)
def test_delta_star_kernel_matches_finite_difference(nu, t, x, y):
    # delta* acts on the order nu+1 kernel with the order nu operator
    h = 1e-3 * min(x, np.sqrt(t))
    q = heat_kernel_1d(nu + 1, t, x, y)
    fd = q * (-d5(lambda v: log_heat_kernel_1d(nu + 1, t, v, y), x, h) + x - (nu + 0.5) / x)
    assert delta_star_heat_kernel_1d(nu, t, x, y) == pytest.approx(fd, rel=1e-5, abs=1e-9 * q / np.sqrt(t))


@settings(max_examples=40, deadline=None)
@given(nus, st.floats(0.05, 2.0), pos, pos)
def test_mixed_kernels_match_time_differences(nu, t, x, y):
    h = 1e-4 * t
    fd = d5(lambda s: delta_heat_kernel_1d(nu, s, x, y), t, h)
    ref = delta_dt_heat_kernel_1d(nu, t, x, y)
    scale = abs(delta_heat_kernel_1d(nu, t, x, y)) / t + abs(ref)
    assert abs(ref - fd) <= 1e-6 * scale + 1e-300
    a = 2.0
    g = lambda s: np.exp(-a * s) * delta_star_heat_kernel_1d(nu, s, x, y)
    fd2 = d5(g, t, h)
    ref2 = delta_star_dt_heat_kernel_1d(nu, t, x, y, a=a)
    assert abs(ref2 - fd2) <= 1e-6 * (abs(g(t)) / t + abs(ref2)) + 1e-300


@pytest.mark.parametrize("kind", ["p", "delta", "delta_star", "dt", "delta_dt", "delta_star_dt"])
def test_log_abs_kernel_consistent(kind):
    f = {
        "p": heat_kernel_1d,
        "delta": delta_heat_kernel_1d,
        "delta_star": delta_star_heat_kernel_1d,
        "dt": dt_heat_kernel_1d,
        "delta_dt": delta_dt_heat_kernel_1d,
        "delta_star_dt": delta_star_dt_heat_kernel_1d,
    }[kind]
    nu, t = -0.6, 0.4
    x = np.array([[0.3], [1.0], [2.2]])
    y = np.array([[0.5, 1.4, 3.0]])
    assert np.allclose(log_abs_kernel_1d(kind, nu, t, x, y), np.log(np.abs(f(nu, t, x, y))), rtol=1e-12, atol=1e-12)


def test_log_abs_kernel_survives_underflow():
    v = log_abs_kernel_1d("delta", 0.3, 1e-3, 0.1, 6.0)
    assert np.isfinite(v) and v < -5000
    with pytest.raises(UsageError):
        log_abs_kernel_1d("nonsense", 0.3, 0.1, 1.0, 1.0)


# ---------------------------------------------------------------- n-D kernels


def test_nd_kernel_is_product():
    q = KernelQuery((-0.75, 0.4), 0.3, (0.8, 1.5), (1.1, 0.6))
    ref = heat_kernel_1d(-0.75, 0.3, 0.8, 1.1) * heat_kernel_1d(0.4, 0.3, 1.5, 0.6)
    assert heat_kernel_nd(q) == pytest.approx(ref, rel=1e-14)
    arr = heat_kernel_nd_array((-0.75, 0.4), 0.3, np.array([0.8, 1.5]), np.array([1.1, 0.6]))
    assert arr == pytest.approx(ref, rel=1e-14)
    assert q.r == pytest.approx(np.exp(-1.2))


def test_nd_query_validation():
    with pytest.raises(UsageError):
        KernelQuery((0.1, 0.2), 0.3, (1.0,), (1.0, 1.0))
    with pytest.raises(DomainError):
        KernelQuery((0.1,), -0.3, (1.0,), (1.0,))


def test_nd_log_kernels():
    nu = (-0.75, 0.4)
    x = np.array([0.8, 1.5])
    y = np.array([1.1, 0.6])
    t = 0.3
    p = heat_kernel_1d(-0.75, t, 0.8, 1.1) * heat_kernel_1d(0.4, t, 1.5, 0.6)
    assert log_abs_kernel_nd("p", nu, t, x, y) == pytest.approx(np.log(p), rel=1e-13)
    dtp = dt_heat_kernel_1d(-0.75, t, 0.8, 1.1) * heat_kernel_1d(0.4, t, 1.5, 0.6) + heat_kernel_1d(
        -0.75, t, 0.8, 1.1
    ) * dt_heat_kernel_1d(0.4, t, 1.5, 0.6)
    assert log_abs_kernel_nd("dt", nu, t, x, y) == pytest.approx(np.log(abs(dtp)), rel=1e-12)
    d1 = heat_kernel_1d(-0.75, t, 0.8, 1.1) * delta_heat_kernel_1d(0.4, t, 1.5, 0.6)
    assert log_abs_kernel_nd("delta", nu, t, x, y, j=1) == pytest.approx(np.log(abs(d1)), rel=1e-12)


# ---------------------------------------------------------------- semigroup property


@pytest.mark.parametrize("s, t", [(0.1, 0.2), (0.5, 0.5)])
@pytest.mark.parametrize("nu", [-0.75, 0.4])
def test_chapman_kolmogorov(nu, s, t):
    for x, y in [(0.3, 0.5), (1.0, 1.2), (0.6, 3.0)]:
        assert chapman_kolmogorov(nu, s, t, x, y) < 1e-8


# ---------------------------------------------------------------- envelopes


def test_envelope_frozen_and_trivial_cases():
    spec = EnvelopeSpec("H", 0.25, c=4.0)
    assert envelope_eval(spec, 0.25, 0.5, 2.0) == pytest.approx(0.26506501685349391619, rel=1e-14)
    g = EnvelopeSpec("H", 0.0, c=2.0)
    assert envelope_eval(g, 0.5, 1.0, 2.0) == pytest.approx(np.exp(-1.0) / np.sqrt(0.5), rel=1e-14)
    T = EnvelopeSpec("T", 0.25, 0.0, 1.0)
    assert envelope_eval(T, 0.25, 0.5, 0.5) == pytest.approx(2.0 * 2.0**0.25, rel=1e-14)


def test_envelope_nd_factorises():
    spec = EnvelopeSpec("H", 0.3, c=2.0, n=2)
    one = EnvelopeSpec("H", 0.3, c=2.0)
    x, y = np.array([0.4, 1.3]), np.array([0.9, 0.2])
    ref = envelope_eval(one, 0.2, 0.4, 0.9) * envelope_eval(one, 0.2, 1.3, 0.2)
    assert envelope_eval(spec, 0.2, x, y) == pytest.approx(ref, rel=1e-13)
    assert log_envelope_eval(spec, 0.2, x, y) == pytest.approx(np.log(ref), rel=1e-13)


def test_envelope_validation():
    with pytest.raises(UsageError):
        EnvelopeSpec("Q", 0.1)
    with pytest.raises(DomainError):
        EnvelopeSpec("H", 0.5)
    with pytest.raises(DomainError):
        EnvelopeSpec("H", 0.1, c=0.0)


# ---------------------------------------------------------------- bound fitting


def _small_sweep():
    return SweepGrid(np.geomspace(1e-2, 2.0, 6), np.geomspace(0.05, 4.0, 9), np.geomspace(0.05, 4.0, 9))


def test_fit_recovers_known_constant():
    spec = lambda c: (lambda t, X, Y: log_envelope_eval(EnvelopeSpec("H", 0.0, c=c), t, X, Y))
    kern = lambda t, X, Y: np.log(3.0) + log_envelope_eval(EnvelopeSpec("H", 0.0, c=4.0), t, X, Y)
    rep = fit_bound_constants("toy", kern, spec, _small_sweep(), (2.0, 4.0, 8.0))
    assert rep.best_c == 4.0
    assert rep.best_C == pytest.approx(3.0, rel=1e-12)
    assert rep.per_candidate[2.0] > 3.0
    assert not rep.violated
    assert rep.as_dict()["claim_id"] == "toy"


def test_fit_flags_unbounded_ratio():
    spec = lambda c: (lambda t, X, Y: np.zeros(np.broadcast_shapes(X.shape, Y.shape)))
    kern = lambda t, X, Y: np.where(X == Y, np.inf, 0.0)
    rep = fit_bound_constants("bad", kern, spec, _small_sweep(), (1.0,))
    assert rep.violated


def test_fit_usage_errors():
    env = lambda c: (lambda t, X, Y: 0.0 * X)
    with pytest.raises(UsageError):
        fit_bound_constants("x", lambda t, X, Y: 0.0 * X, env, SweepGrid(np.array([]), np.ones(2), np.ones(2)))
    with pytest.raises(UsageError):
        fit_bound_constants("x", lambda t, X, Y: 0.0 * X, env, _small_sweep(), (0.0,))


def test_claim_registry():
    ids = claim_ids()
    assert "prop31i" in ids and "nd_delta_star_k1" in ids
    assert all(CLAIMS[i].n in (1, 2) for i in ids)
    with pytest.raises(UsageError):
        run_claim("no-such-claim")


@pytest.mark.parametrize("cid", ["prop31i", "prop31ii", "prop31iii", "lem1", "delta", "dt", "partial_k1_delta_star"])
def test_claims_hold_on_small_sweep(cid):
    rep = run_claim(cid, sweep=_small_sweep())
    assert not rep.violated
    assert np.isfinite(rep.best_C)


def test_gaussian_constant_cannot_beat_four():
    # p_t decays like exp(-(x-y)^2/(4t)) as t -> 0, so only c >= 4 gives a finite constant
    sweep = SweepGrid(np.geomspace(1e-3, 1e-2, 4), np.linspace(1, 3, 21), np.linspace(1, 3, 21))
    rep = run_claim("prop31i", sweep=sweep, c_candidates=(1.0, 2.0, 4.0, 8.0))
    assert rep.per_candidate[1.0] > 1e100 and rep.per_candidate[2.0] > 1e100
    assert rep.per_candidate[4.0] < 10.0
    assert rep.best_c == 4.0


@pytest.mark.parametrize("a", [0.1, 0.4])
def test_composition_integral_matches_quad(a):
    t, x = 0.3, 0.7
    y = np.array([0.2, 1.5])
    got = composition_log_integral(t, x, y, a)
    for yi, g in zip(y, got):
        f = lambda z: envelope_eval(EnvelopeSpec("H", a, c=1.0), t, x, z) * envelope_eval(EnvelopeSpec("H", a, c=1.0), t, z, yi)
        ref = quad(f, 1e-4, 20, points=[x, yi], limit=400, epsabs=0, epsrel=1e-12)[0]
        assert np.exp(g) == pytest.approx(ref, rel=1e-9)
