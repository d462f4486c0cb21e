from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustgrowth.errors import BadParams, TieDerivative
from robustgrowth.rank import (
    CutoffSpec,
    RankGrid,
    ThetaParams,
    boundary_strategy,
    eigen_lower_bound,
    fully_invested,
    modify,
    order,
    ordered_simplex_integral,
    pure_theta_inputs,
    rank_pipeline,
    rank_strategy,
    ranked_volatility_inputs,
    ranks,
    smoothstep,
    symmetrize,
    theta,
    theta_factors,
    theta_market_spec,
    theta_model,
    theta_potential,
)
from robustgrowth.simulate import reversing_drift

simplex_points = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4).map(
    lambda w: np.array(w) / np.sum(w))
valid_params = st.tuples(st.floats(1.0, 3.0), st.floats(0.0, 0.99), st.floats(0.0, 2.0)).map(
    lambda t: ThetaParams(t[0] * (1 + t[1]), t[0], max(t[2], 2.0 - t[0] * (1 + t[1]))))


@given(simplex_points)
def test_order_sorts_and_ranks_invert(x):
    xs, perm = order(x)
    assert np.all(np.diff(xs) >= 0)
    assert np.array_equal(x[perm], xs)
    assert np.array_equal(xs[ranks(perm)], x)


def test_order_keeps_ties_stable():
    xs, perm = order(np.array([0.3, 0.2, 0.3, 0.2]))
    assert perm.tolist() == [1, 3, 0, 2]


def test_ordered_simplex_has_volume_one_over_factorial():
    assert ordered_simplex_integral(lambda x: np.ones(len(x)), 2) == pytest.approx(0.5)
    assert ordered_simplex_integral(lambda x: np.ones(len(x)), 3) == pytest.approx(1.0 / 12.0)


def test_theta_hand_values():
    th = theta(ThetaParams(2.0, 2.0, 0.0))
    x = np.array([[0.5, 0.5]])
    assert np.array_equal(th.value(x)[0], [[0.25, 0.0625], [0.0625, 0.25]])
    assert np.array_equal(th.div(x)[0], [1.25, 1.25])
    assert np.linalg.eigvalsh(th.value(x)[0])[0] == 0.1875
    assert eigen_lower_bound(ThetaParams(), x)[0] == 0.1875


@settings(max_examples=60)
@given(valid_params, simplex_points)
def test_theta_is_permutation_equivariant(params, x):
    th = theta(params)
    v = th.value(x[None])[0]
    for s in permutations(range(len(x))):
        s = list(s)
        assert np.allclose(th.value(x[s][None])[0], v[np.ix_(s, s)], rtol=0, atol=1e-12)


@settings(max_examples=60)
@given(valid_params, simplex_points)
def test_theta_dominates_lower_bound(params, x):
    v = theta(params).value(x[None])[0]
    k = eigen_lower_bound(params, x[None])[0]
    assert np.linalg.eigvalsh(v)[0] >= k - 1e-12 * max(1.0, np.abs(v).max())


@settings(max_examples=60)
@given(valid_params, simplex_points)
def test_theta_divergence_is_theta_times_potential_gradient(params, x):
    th = theta(params)
    lhs = th.value(x[None])[0] @ theta_potential(params).grad(x[None])[0]
    assert np.allclose(lhs, th.div(x[None])[0], rtol=0, atol=1e-10)


@settings(max_examples=30)
@given(valid_params, simplex_points)
def test_theta_factors_are_bounded(params, x):
    # Y and Z stay bounded on the simplex
    Y, Z = theta_factors(params, x[None])
    S = params.A + params.C
    assert np.all(np.abs(Y) <= S * len(x) + 1e-9)
    assert np.all(Z <= 1.0 + 1e-12)


@pytest.mark.parametrize("A,B,C", [(1.0, 2.0, 0.0), (4.0, 2.0, 0.0), (1.5, 1.5, 0.0), (2.0, 2.0, -1.0)])
def test_invalid_theta_params(A, B, C):
    with pytest.raises(BadParams):
        ThetaParams(A, B, C)


def test_boundary_strategy_values():
    params = ThetaParams(K=0.3)
    x = np.array([[0.25, 0.75]])
    assert np.allclose(boundary_strategy(params, 2)(x), [[1.6, 0.8]])
    # fully invested: sum x_i theta_i = 1
    assert np.einsum("ni,ni->n", x, boundary_strategy(params)(x)) == pytest.approx(1.0)


def test_boundary_strategy_needs_small_exponent():
    with pytest.raises(BadParams):
        boundary_strategy(ThetaParams(K=0.6), 2)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), simplex_points.filter(lambda x: len(x) == 3))
def test_fully_invested_shift(v, x):
    out = fully_invested(np.array(v), x)
    assert float(x @ out) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-1.0, 2.0))
def test_smoothstep_range_and_ends(t):
    s, ds, dds = smoothstep(np.array(t))
    assert 0.0 <= s <= 1.0 and ds >= 0.0
    if t <= 0:
        assert s == 0.0 and ds == 0.0 and dds == 0.0
    if t >= 1:
        assert s == 1.0 and ds == 0.0 and dds == 0.0


def test_cutoff_derivatives_match_finite_differences():
    cut = CutoffSpec(0.1)
    x = np.array([[0.12, 0.3, 0.58], [0.05, 0.15, 0.8], [0.2, 0.23, 0.57]])
    chi, g, H = cut.evaluate(x)
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        cp, gp, _ = cut.evaluate(x + e)
        cm, gm, _ = cut.evaluate(x - e)
        assert np.allclose((cp - cm) / (2 * h), g[:, k], atol=1e-6)
        assert np.allclose((gp - gm) / (2 * h), H[:, :, k], atol=1e-4)


def test_blend_keeps_inputs_inside_and_theta_at_boundary():
    params = ThetaParams(2.0, 2.0, 2.0)
    inputs = ranked_volatility_inputs()
    mod = modify(inputs, CutoffSpec(0.1), params)
    inside = np.array([[0.3, 0.7]])
    assert np.array_equal(mod.kappa.value(inside), inputs.kappa.value(inside))
    assert np.array_equal(mod.q.value(inside), inputs.q.value(inside))
    edge = np.array([[0.01, 0.99]])
    assert np.array_equal(mod.kappa.value(edge), theta(params).value(edge))
    assert mod.mass() == pytest.approx(1.0, abs=1e-9)


def test_symmetrized_model_is_permutation_invariant():
    model = symmetrize(ranked_volatility_inputs())
    x = np.array([[0.3, 0.7]])
    y = x[:, ::-1]
    assert model.p.log(x) == pytest.approx(model.p.log(y))
    assert np.allclose(model.c.value(y)[0], model.c.value(x)[0][::-1, ::-1])


def test_derivative_at_tie_is_refused_without_blend():
    model = symmetrize(ranked_volatility_inputs())
    with pytest.raises(TieDerivative):
        model.c.div(np.array([[0.5, 0.5]]))


def test_theta_market_drift_is_reversing_drift():
    params = ThetaParams(2.0, 2.0, 2.0)
    spec = theta_market_spec(params, 3)
    x = np.random.default_rng(0).dirichlet(np.ones(3), 50)
    assert np.allclose(spec.drift(x), reversing_drift(theta_model(params, 3))(x), atol=1e-12)
    assert np.allclose(spec.drift(x).sum(axis=1), 0.0, atol=1e-14)


@pytest.fixture(scope="module")
def demo():
    inputs = ranked_volatility_inputs()
    return inputs, rank_pipeline(inputs, CutoffSpec(0.1), ThetaParams(2.0, 2.0, 2.0), RankGrid(5, 256))


def test_pipeline_rates_agree(demo):
    _, (_, report) = demo
    assert report.extra["relative_difference"] <= 1e-6


def test_pipeline_strategy_is_symmetric_and_invested(demo):
    _, (gen, _) = demo
    x = np.random.default_rng(2).dirichlet(np.ones(2), 100)
    assert np.allclose(gen.phi.value(x), gen.phi.value(x[:, ::-1]), atol=1e-12)
    s = rank_strategy(gen, x)
    assert np.allclose(np.einsum("ni,ni->n", x, s), 1.0)
    tie = rank_strategy(gen, np.array([[0.5, 0.5]]))
    assert abs(tie[0, 0] - tie[0, 1]) <= 1e-12


def test_pipeline_converges_under_refinement():
    inputs = ranked_volatility_inputs()
    lams = [rank_pipeline(inputs, CutoffSpec(0.1), ThetaParams(2.0, 2.0, 2.0), RankGrid(lv, 256))[1].lam
            for lv in (4, 6)]
    assert lams[1] == pytest.approx(lams[0], rel=2e-2)


def test_pure_theta_potential_is_log_power():
    # with uniform q the optimal phi is (A + C) sum log x up to a constant
    params = ThetaParams(2.0, 2.0, 0.0)
    gen, _ = rank_pipeline(pure_theta_inputs(params), None, params, RankGrid(4, 256))
    x = np.random.default_rng(5).dirichlet(np.ones(2) * 4, 200)
    diff = gen.phi.value(x) - theta_potential(params).value(x)
    assert np.ptp(diff) <= 1e-2
