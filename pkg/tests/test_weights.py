"""Weight classes, exponent ranges and empirical A_p / RH_q constants."""
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from laguerre_kit import DomainError, UsageError
from laguerre_kit.errors import UnsupportedClaimError
from laguerre_kit.grid import Grid, TensorGrid
from laguerre_kit.weights import (
    WeightSpec,
    ap_rh_constants_grid,
    conjugate,
    duality_check,
    gamma_nu,
    gamma_shift,
    power_weight_class,
    refinement_study,
    theorem_range,
)


def test_gamma_exponents():
    assert gamma_nu(-0.75) == pytest.approx(0.25)
    assert gamma_nu(0.3) == 0.0
    assert gamma_nu((-0.9, 0.3)) == pytest.approx(0.4)
    assert gamma_shift(-0.75) == 0.0
    assert gamma_shift((-0.5, -0.9), 0) == pytest.approx(0.4)


def test_conjugate():
    assert conjugate(2.0) == 2.0
    assert conjugate(3.0) == 1.5
    assert conjugate(1.0) == np.inf
    assert conjugate(np.inf) == 1.0


def test_power_weight_class_boundaries():
    assert power_weight_class(0.0, 2.0, 2.0).in_Ap
    assert not power_weight_class(-1.0, 2.0).in_Ap
    assert not power_weight_class(1.0, 2.0).in_Ap
    assert power_weight_class(0.99, 2.0).in_Ap
    assert power_weight_class(-0.4, q=2.0).in_RHq
    assert not power_weight_class(-0.5, q=2.0).in_RHq
    assert power_weight_class(-5.0, q=1.0).in_RHq
    assert power_weight_class(-1.5, 2.0, n=2).in_Ap
    assert power_weight_class(3.0, 2.0, 2.0).in_Ap is False
    rec = power_weight_class(0.5, None, None)
    assert rec.in_Ap is None and rec.in_RHq is None
    with pytest.raises(DomainError):
        power_weight_class(0.0, 1.0)
    with pytest.raises(DomainError):
        power_weight_class(0.0, 2.0, 0.5)


@pytest.mark.parametrize(
    "nu, which, j, lo, hi",
    [
        ((-0.75,), "maximal", 0, 4 / 3, 4.0),
        ((-0.75,), "riesz", 0, 4 / 3, np.inf),
        ((-0.5,), "maximal", 0, 1.0, np.inf),
        ((0.0,), "squareS", 0, 1.0, np.inf),
        ((-0.9, 0.2), "squareG", 0, 1 / 0.6, 2.5),
        ((-0.5, -0.9), "riesz", 1, 1 / 0.6, np.inf),
    ],
)
def test_theorem_ranges(nu, which, j, lo, hi):
    r = theorem_range(nu, which, j)
    assert r.p_lo == pytest.approx(lo)
    assert r.p_hi == pytest.approx(hi)


def test_theorem_range_errors():
    with pytest.raises(UnsupportedClaimError):
        theorem_range((-0.5, -0.5), "maximal")
    with pytest.raises(UsageError):
        theorem_range((-0.5,), "riesz", 1)
    with pytest.raises(UsageError):
        theorem_range((-0.5,), "nonsense")


def test_range_weight_classes():
    r = theorem_range(-0.75, "maximal")
    assert r.contains(2.0) and not r.contains(4.0) and not r.contains(4 / 3)
    assert r.ap_index(2.0) == pytest.approx(1.5)
    assert r.rh_index(2.0) == pytest.approx(2.0)
    assert r.power_weight_admissible(0.0, 2.0)
    # A_{1.5} holds, RH_2 fails: -0.6 * 2 <= -1
    assert not r.power_weight_admissible(-0.6, 2.0)
    assert not r.power_weight_admissible(0.0, 5.0)
    assert "RH" in r.describe(2.0)
    free = theorem_range(0.2, "riesz")
    assert free.rh_index(3.0) == 1.0
    assert free.describe() == "p in (1, inf), w in A_p"


def test_constants_for_constant_weight():
    g = Grid(np.geomspace(1e-3, 8.0, 9), order=8)
    rec = ap_rh_constants_grid(WeightSpec("power", 0.0), 2.0, 2.0, g)
    assert rec.Ap == pytest.approx(1.0, rel=1e-10)
    assert rec.RHq == pytest.approx(1.0, rel=1e-10)
    vals = WeightSpec("grid", values=tuple(np.ones(g.size)))
    assert ap_rh_constants_grid(vals, 3.0, 1.5, g).Ap == pytest.approx(1.0, rel=1e-10)


def test_constants_closed_form_on_origin_intervals():
    # w = x^s on [0, b]: A_2 quotient (1/(s+1)) (1/(1-s)), attained on intervals touching 0
    s = 0.5
    g = Grid(np.geomspace(1e-14, 8.0, 60), order=8)
    rec = ap_rh_constants_grid(WeightSpec("power", s), 2.0, 2.0, g)
    assert rec.Ap == pytest.approx(1.0 / ((s + 1.0) * (1.0 - s)), rel=1e-4)


def test_constants_2d_and_validation():
    g = Grid(np.geomspace(1e-2, 4.0, 6), order=4)
    rec = ap_rh_constants_grid(WeightSpec("power", 0.5), 2.0, 2.0, TensorGrid([g, g]))
    assert np.isfinite(rec.Ap) and rec.Ap >= 1.0
    h = Grid(np.geomspace(1e-2, 4.0, 7), order=4)
    with pytest.raises(UsageError):
        ap_rh_constants_grid(WeightSpec("power", 0.5), 2.0, 2.0, TensorGrid([g, h]))
    with pytest.raises(DomainError):
        ap_rh_constants_grid(WeightSpec("power", 0.5), 1.0, 2.0, g)
    with pytest.raises(UsageError):
        WeightSpec("other").evaluate(1.0)


@pytest.mark.parametrize(
    "sigma, p, q",
    [(0.5, 2.0, 2.0), (-0.4, 2.0, 2.0), (-0.6, 2.0, 2.0), (1.2, 2.0, 2.0), (-1.2, 3.0, 1.5), (2.5, 3.0, 4.0)],
)
def test_refinement_study_matches_closed_form(sigma, p, q):
    rec = power_weight_class(sigma, p, q)
    st_ = refinement_study(WeightSpec("power", sigma), p, q)["stable"]
    assert st_["Ap"] == rec.in_Ap
    assert st_["RHq"] == rec.in_RHq


@settings(max_examples=80, deadline=None)
@given(st.floats(-3.0, 6.0), st.floats(1.1, 2.0), st.floats(1.05, 3.0), st.floats(1.05, 3.0))
def test_duality_of_weight_classes(sigma, p0, a, b):
    p = p0 * a
    q0 = p * b
    d = duality_check(sigma, p, p0, q0)
    # stay off the class boundaries, where floating point decides
    pp = conjugate(p)
    edges = [-1.0, p / p0 - 1.0, -1.0 / conjugate(q0 / p)]
    assume(min(abs(sigma - e) for e in edges) > 1e-6)
    assert d["agree"]
    assert d["dual_sigma"] == pytest.approx(sigma * (1 - pp))


def test_duality_validation():
    with pytest.raises(DomainError):
        duality_check(0.0, 2.0, 3.0, 4.0)
