import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustgrowth.analytic import (
    candidate_growth,
    classify,
    gradient_consistency,
    solve_gradient_case,
    solve_one_dim,
)
from robustgrowth.config import load_config
from robustgrowth.errors import AssumptionViolated, NotGradientCase
from robustgrowth.fields import ScalarField
from robustgrowth.model import cir, gaussian, model_from_config, unit_interval_flat, zero_growth
from robustgrowth.rank import ThetaParams, theta_model

# closed form xi^2 A B / (8 (A - 1)) evaluated by hand
CIR_TABLE = [
    (3.0, 2.0, 1.0, 0.375),
    (2.0, 1.0, 0.5, 0.0625),
    (5.0, 3.0, 2.0, 1.875),
    (4.0, 1.0, 1.0, 1.0 / 6.0),
]


@pytest.mark.parametrize("A,B,xi,lam", CIR_TABLE)
def test_cir_growth_rate(A, B, xi, lam):
    _, report = solve_one_dim(cir(A, B, xi))
    assert report.classification == "Finite"
    assert report.lam == pytest.approx(lam, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.5, 8.0), st.floats(0.3, 4.0), st.floats(0.3, 2.0))
def test_cir_growth_rate_property(A, B, xi):
    _, report = solve_one_dim(cir(A, B, xi))
    assert report.lam == pytest.approx(xi**2 * A * B / (8 * (A - 1)), rel=1e-6)


def test_gaussian_growth_rate():
    # ell = -x, so lambda = E[x^2] / 8
    _, report = solve_one_dim(gaussian())
    assert report.lam == pytest.approx(0.125, rel=1e-8)


def test_one_dim_strategy_is_half_ell():
    model = cir(3.0, 2.0)
    gen, _ = solve_one_dim(model)
    x = np.linspace(0.1, 4.0, 20)[:, None]
    assert np.allclose(gen.strategy(x)[:, 0], 0.5 * (3.0 / x[:, 0] - 2.0))


def test_one_dim_solver_refuses_ill_posed_model():
    with pytest.raises(AssumptionViolated) as info:
        solve_one_dim(unit_interval_flat())
    assert info.value.item == "iii"


def _power_exp_candidate(a, b):
    return ScalarField.from_log(
        lambda x: a * np.log(x[..., 0]) - b * x[..., 0],
        lambda x: a / x - b,
        lambda x: (-a / x**2)[..., None],
    )


def _cir_candidate_growth(a, b):
    # -E[(L u) / u] for u = x^a exp(-b x) under Gamma(3, 2) with c = x
    return 0.5 * (a - a * a + 2 * a * b - 1.5 * b * b)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (1.5, 0.5), (0.5, 0.2), (2.0, 1.5), (1.2, 0.8)])
def test_suboptimal_candidates_grow_slower(a, b):
    model = cir(3.0, 2.0)
    g = candidate_growth(model, _power_exp_candidate(a, b))
    assert g == pytest.approx(_cir_candidate_growth(a, b), abs=1e-7)
    assert g < 0.375


def test_optimal_candidate_attains_lambda():
    g = candidate_growth(cir(3.0, 2.0), _power_exp_candidate(1.5, 1.0))
    assert g == pytest.approx(0.375, rel=1e-7)


def test_classification_of_pathological_models():
    assert classify(cir(1.0, 2.0)).classification == "Infinite"
    assert classify(unit_interval_flat()).classification == "IllPosedOrEmpty"
    report = classify(zero_growth())
    assert report.classification == "Finite" and report.lam == pytest.approx(0.0, abs=1e-12)


def test_report_requires_lambda_exactly_when_finite():
    from robustgrowth.analytic import GrowthReport

    with pytest.raises(ValueError):
        GrowthReport("Finite", None, "closed_form_1d")
    with pytest.raises(ValueError):
        GrowthReport("Infinite", 1.0, "closed_form_1d")


def test_gradient_case_two_dim_matches_variational():
    from robustgrowth.variational import solve_variational

    model = model_from_config(load_config("gaussian2d_gradient"))
    _, quad = solve_gradient_case(model, model.potential)
    _, var = solve_variational(model, level=3, cells=96)
    assert quad.lam == pytest.approx(var.lam, rel=2e-2)


def test_gradient_case_rejects_wrong_potential():
    model = model_from_config(load_config("gaussian2d_gradient"))
    wrong = ScalarField.constant(0.0, 2)
    assert gradient_consistency(model, wrong) > 1e-3
    with pytest.raises(NotGradientCase):
        solve_gradient_case(model, wrong)


def test_theta_model_is_gradient_case():
    model = theta_model(ThetaParams(2.0, 2.0, 2.0), 3)
    assert gradient_consistency(model, model.potential) < 1e-10
