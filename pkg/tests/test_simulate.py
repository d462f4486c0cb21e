import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from robustgrowth.analytic import solve_gradient_case, solve_one_dim
from robustgrowth.config import load_config
from robustgrowth.errors import AllPathsExploded, NotDivergenceFree, ValidationError
from robustgrowth.model import cir, model_from_config, random_interior_points, unit_interval_flat
from robustgrowth.pipeline import simulation_settings
from robustgrowth.simulate import (
    SdeSpec,
    batch_means,
    default_bins,
    linear_flux,
    model_sde,
    occupancy,
    perturbed_drift,
    reference_masses,
    reversing_drift,
    rotation_flux,
    sample_stationary,
    simulate,
    wealth,
    worst_case_drift,
)
from robustgrowth.fields import VectorField, finite_difference_div


@pytest.fixture(scope="module")
def planar():
    model = model_from_config(load_config("gaussian2d_gradient"))
    gen, report = solve_gradient_case(model, model.potential)
    return model, gen, report


@settings(max_examples=30)
@given(st.floats(-3.0, 3.0), st.integers(2, 6))
def test_batch_means_recovers_exact_slope(slope, n_paths):
    t = np.arange(2001) * 0.01
    series = np.tile(slope * t, (n_paths, 1))
    center, half, rates = batch_means(series, 0.01)
    assert center == pytest.approx(slope, abs=1e-10)
    assert half == pytest.approx(0.0, abs=1e-9)
    assert rates.size == 20 * n_paths


def test_batch_means_covers_drift_of_brownian_motion():
    rng = np.random.default_rng(11)
    dt, mu = 0.01, 0.3
    inc = mu * dt + np.sqrt(dt) * rng.standard_normal((8, 200_000))
    series = np.concatenate([np.zeros((8, 1)), np.cumsum(inc, axis=1)], axis=1)
    center, half, _ = batch_means(series, dt)
    assert abs(center - mu) <= half
    # 160 batch rates over spans of 90 time units, each with sd 1 / sqrt(90)
    expected = stats.t.ppf(0.975, 159) / np.sqrt(90.0) / np.sqrt(160.0)
    assert half == pytest.approx(expected, rel=0.2)


def test_reversing_equals_worst_case_in_gradient_case(planar):
    model, gen, _ = planar
    x = random_interior_points(model, 200, seed=3)
    assert np.allclose(reversing_drift(model)(x), worst_case_drift(model, gen)(x), atol=1e-12)


def test_reversing_equals_worst_case_in_one_dim():
    model = cir(3.0, 2.0)
    gen, _ = solve_one_dim(model)
    x = np.linspace(0.05, 6.0, 100)[:, None]
    assert np.allclose(reversing_drift(model)(x), worst_case_drift(model, gen)(x), atol=1e-12)


@pytest.mark.parametrize("make", [rotation_flux, lambda m: linear_flux(m, 1.0, 1)])
def test_stream_fluxes_are_divergence_free(planar, make):
    model, _, _ = planar
    gamma = make(model)
    x = random_interior_points(model, 100, seed=5)
    assert np.max(np.abs(finite_difference_div(gamma, x))) <= 1e-7
    assert np.allclose(gamma.over_density(x) * model.density_value(x)[:, None], gamma(x))


def test_perturbation_with_divergence_is_rejected(planar):
    model, _, _ = planar
    with pytest.raises(NotDivergenceFree):
        perturbed_drift(model, VectorField(lambda x: x.copy()))


def test_stationary_sampler_matches_gamma_law():
    model = cir(3.0, 2.0)
    x = sample_stationary(model, 4000, seed=2)[:, 0]
    assert stats.kstest(x, stats.gamma(3.0, scale=0.5).cdf).pvalue > 0.01


def test_simulation_is_reproducible_and_path_count_independent():
    model = cir(3.0, 2.0)
    gen, _ = solve_one_dim(model)
    spec = model_sde(model, worst_case_drift(model, gen), x0=np.array([1.5]), dt=1e-3, T=5.0, seed=9)
    a = simulate(spec, 3)
    b = simulate(spec, 3)
    c = simulate(spec, 5)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.states, c.states[:3])
    other = simulate(model_sde(model, worst_case_drift(model, gen), x0=np.array([1.5]), dt=1e-3,
                               T=5.0, seed=10), 3)
    assert not np.array_equal(a.states, other.states)


def test_start_outside_guard_is_rejected():
    model = cir(3.0, 2.0)
    with pytest.raises(ValidationError):
        SdeSpec(model.domain, reversing_drift(model), model.sqrt_cov, np.array([-1.0]))


def test_ito_and_functional_wealth_converge_as_step_shrinks():
    model = cir(3.0, 2.0)
    gen, _ = solve_one_dim(model)
    gaps = []
    for dt in (4e-3, 1e-3):
        spec = model_sde(model, worst_case_drift(model, gen), x0=np.array([1.5]), dt=dt, T=20.0, seed=4)
        gaps.append(wealth(simulate(spec, 6), gen, model).terminal_gap)
    assert gaps[1] < 0.75 * gaps[0]


def test_flat_unit_interval_explodes():
    cfg = load_config("unit_interval_flat")
    sim = simulation_settings(cfg)
    model = unit_interval_flat()
    spec = model_sde(model, reversing_drift(model), x0=np.array(sim["start"]), dt=sim["dt"],
                     T=sim["horizon"], seed=sim["seed"])
    bundle = simulate(spec, sim["paths"], record_every=100, raise_on_explosion=False)
    assert bundle.exploded.mean() >= 0.95
    assert np.all(np.isnan(bundle.states[bundle.exploded, -1]))
    with pytest.raises(AllPathsExploded) as info:
        simulate(spec, sim["paths"], record_every=100)
    assert info.value.bundle is not None


def test_equal_mass_bins_in_one_dim():
    model = cir(3.0, 2.0)
    masses = reference_masses(model, default_bins(model, 20))
    assert np.allclose(masses, 0.05, atol=1e-4)


def test_occupancy_of_independent_stationary_draws():
    # occupancy of exact draws from p has small total variation
    from robustgrowth.simulate import PathBundle

    model = cir(3.0, 2.0)
    x = stats.gamma(3.0, scale=0.5).rvs(size=(4, 20_000), random_state=1)[..., None]
    bundle = PathBundle(np.arange(20_000) * 1.0, x, np.zeros(4, bool), np.full(4, np.nan), 0, 1.0, 2e4)
    assert occupancy(bundle, model, burn_in=0.0).tv_distance < 0.02


def test_wealth_and_path_csv(tmp_path):
    model = cir(3.0, 2.0)
    gen, _ = solve_one_dim(model)
    spec = model_sde(model, worst_case_drift(model, gen), x0=np.array([1.5]), dt=1e-3, T=1.0, seed=1)
    bundle = simulate(spec, 2)
    ws = wealth(bundle, gen, model)
    ws.to_csv(tmp_path / "w.csv", every=10)
    bundle.to_csv(tmp_path / "p.csv", every=10)
    w = np.genfromtxt(tmp_path / "w.csv", delimiter=",", names=True)
    p = np.genfromtxt(tmp_path / "p.csv", delimiter=",", names=True)
    assert len(w) == 2 * 101 and len(p) == 2 * 101
    assert np.allclose(p["x1"][:101], bundle.states[0, ::10, 0])
