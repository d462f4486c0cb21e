import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustgrowth.domain import Interval, Simplex
from robustgrowth.errors import ValidationError
from robustgrowth.fields import finite_difference_div, finite_difference_grad, sqrt_spd
from robustgrowth.model import (
    check_assumptions,
    check_mass,
    cir,
    gaussian,
    random_interior_points,
    unit_interval_flat,
    zero_growth,
)
from robustgrowth.rank import ThetaParams, theta_model


def test_interval_elements_nest_and_exhaust():
    dom = Interval(0.0, math.inf, center=1.5, levels=10)
    prev = None
    for n in range(1, 11):
        a, b = dom.bounds(n)
        assert 0 < a < 1.5 < b
        if prev is not None:
            assert a < prev[0] and b > prev[1]
        prev = (a, b)
    assert dom.bounds(10)[0] == pytest.approx(1.5 * 2.0**-10)


def test_interval_rejects_bad_center():
    with pytest.raises(ValidationError):
        Interval(0.0, 1.0, center=2.0)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5))
def test_simplex_chart_round_trip(w):
    x = np.array(w) / np.sum(w)
    dom = Simplex(len(w))
    assert np.allclose(dom.from_reduced(dom.to_reduced(x)), x, atol=1e-15)
    P = dom.projector
    assert np.allclose(P @ P, P) and np.allclose(P @ np.ones(len(w)), 0)


@settings(max_examples=30)
@given(st.floats(0.1, 5.0), st.floats(-1.0, 1.0))
def test_sqrt_spd_squares_back(a, b):
    m = np.array([[a, b * math.sqrt(a)], [b * math.sqrt(a), 1.0 + b * b]])
    r = sqrt_spd(m[None])[0]
    assert np.allclose(r @ r, m, atol=1e-10)
    assert np.allclose(r, r.T)


def test_cir_ell_closed_form():
    # ell = A / x - B for the square-root model
    model = cir(3.0, 2.0)
    x = np.linspace(0.1, 5.0, 50)[:, None]
    assert np.allclose(model.ell(x)[:, 0], 3.0 / x[:, 0] - 2.0, rtol=1e-12)


def test_covariance_divergences_match_finite_differences():
    params = ThetaParams(3.0, 2.0, 1.0)
    model = theta_model(params, 3)
    x = np.random.default_rng(1).dirichlet(np.ones(3), 20)
    c = model.c
    num = np.stack([finite_difference_div(lambda y: c.value(y)[..., i, :], x) for i in range(3)],
                   axis=-1)
    assert np.allclose(num, c.div(x), atol=1e-6)
    num2 = finite_difference_div(lambda y: c.div(y), x)
    assert np.allclose(num2, c.div_div(x), atol=1e-5)


def test_density_log_gradient_matches_finite_difference():
    model = cir(3.0, 2.0)
    x = np.linspace(0.2, 4.0, 30)[:, None]
    num = finite_difference_grad(lambda y: model.p.log(y), x)
    assert np.allclose(num, model.p.grad_log(x), atol=1e-6)


@pytest.mark.parametrize("factory", [lambda: cir(3.0, 2.0), gaussian])
def test_presets_have_unit_mass(factory):
    masses, ok = check_mass(factory())
    assert ok and masses[-1] == pytest.approx(1.0, abs=1e-6)


def test_heavy_tailed_mass_matches_arctan():
    # p = 1 / (pi (1 + x^2)) puts (2 / pi) arctan(b) on [-b, b]
    model = zero_growth()
    masses, _ = check_mass(model)
    b = np.array([model.domain.bounds(n)[1] for n in range(1, len(masses) + 1)])
    assert np.allclose(masses, 2.0 / np.pi * np.arctan(b), rtol=1e-9)


def test_assumptions_hold_for_cir_and_fail_for_flat_interval():
    assert check_assumptions(cir(3.0, 2.0)).all_hold
    diag = check_assumptions(unit_interval_flat())
    assert diag.holds("i") and diag.holds("ii")
    assert not diag.holds("iii")


def test_cir_with_unit_shape_violates_integrability():
    # ell' c ell p is not integrable at 0 when A = 1
    diag = check_assumptions(cir(1.0, 2.0))
    assert not diag.holds("i")


def test_random_points_are_reproducible_and_interior():
    model = cir(3.0, 2.0)
    a = random_interior_points(model, 50, seed=4)
    b = random_interior_points(model, 50, seed=4)
    assert np.array_equal(a, b)
    assert np.all(model.domain.inside(a))
