import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustgrowth.config import load_config
from robustgrowth.model import cir, gaussian, model_from_config
from robustgrowth.variational import (
    assemble,
    energy,
    flux_balance_diagnostic,
    lambda_from_phi,
    make_grid,
    objective,
    refinement_study,
    solve_phi,
    solve_variational,
)


@pytest.fixture(scope="module")
def cir_system():
    # element 5 is [0.047, 17.5]
    model = cir(3.0, 2.0)
    grid = make_grid(model, 5, 800)
    system = assemble(grid, model)
    return system, solve_phi(system)


@pytest.fixture(scope="module")
def planar_system():
    model = model_from_config(load_config("gaussian2d_gradient"))
    grid = make_grid(model, 2, 24)
    system = assemble(grid, model)
    return system, solve_phi(system, method="direct")


def test_assembled_matrix_is_symmetric_with_constant_kernel(planar_system):
    system, _ = planar_system
    A = system.A
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    assert np.allclose(A @ np.ones(system.n), 0.0, atol=1e-10)
    assert abs(system.b.sum()) <= 1e-10 * np.abs(system.b).sum()


@pytest.mark.parametrize("fixture", ["cir_system", "planar_system"])
def test_energy_identity_is_exact_on_the_grid(fixture, request):
    system, pot = request.getfixturevalue(fixture)
    J = objective(pot, system).J
    E = energy(pot, system)
    assert J + E == pytest.approx(system.ell_energy, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-3, 1.0))
def test_solution_minimizes_objective(cir_system, seed, scale):
    system, pot = cir_system
    noise = np.random.default_rng(seed).standard_normal(system.n) * scale
    assert objective(pot.values + noise, system).J >= objective(pot, system).J - 1e-12


def test_zero_right_hand_side_gives_zero_potential():
    model = model_from_config(load_config("zero_growth"))
    system = assemble(make_grid(model, 3, 200), model)
    pot = solve_phi(system)
    assert pot.iterations <= 1
    assert np.all(pot.values == 0.0)


def test_conjugate_gradients_agree_with_direct_solve(planar_system):
    system, direct = planar_system
    cg = solve_phi(system, method="cg", tol=1e-11)
    assert lambda_from_phi(cg) == pytest.approx(lambda_from_phi(direct), rel=1e-8)


def test_one_dim_variational_matches_closed_form():
    model = cir(3.0, 2.0)
    pot = solve_phi(assemble(make_grid(model, 8, 4000), model))
    assert lambda_from_phi(pot) == pytest.approx(0.375, rel=5e-3)


def test_truncated_growth_rate_increases_with_element():
    model = cir(3.0, 2.0)
    lams = [lambda_from_phi(solve_phi(assemble(make_grid(model, n, 4000), model))) for n in (4, 6, 8)]
    assert lams[0] < lams[1] < lams[2] < 0.375


def test_underflowing_density_is_reported():
    from robustgrowth.errors import NoConvergence

    model = cir(3.0, 2.0)
    with pytest.raises(NoConvergence):
        solve_phi(assemble(make_grid(model, 12, 800), model))


def test_gaussian_refinement_converges_at_second_order():
    table = refinement_study(gaussian(), levels=4, base_cells=100, element=4, reference=0.125)
    assert abs(table.lambdas[-1] - 0.125) <= 1e-3
    assert min(table.orders()) >= 1.5
    assert not table.non_monotone


def test_planar_variational_matches_quadrature():
    # gradient-case quadrature gives 0.33561 for the bundled planar model
    model = model_from_config(load_config("gaussian2d_gradient"))
    _, report = solve_variational(model, level=3, cells=96)
    assert report.lam == pytest.approx(0.33561, rel=5e-3)


def test_cir_flux_through_fixed_interval():
    # p c ell = (p c)' with p c = 4 x^3 exp(-2 x)
    model = cir(3.0, 2.0)
    grid = make_grid(model, cells=10, bounds=(np.array([0.05]), np.array([20.0])))

    def dpc(x):
        return 4.0 * math.exp(-2.0 * x) * (3.0 * x**2 - 2.0 * x**3)

    flux = flux_balance_diagnostic(None, model, grid)
    assert flux == pytest.approx(dpc(20.0) - dpc(0.05), rel=1e-10)
    assert flux == pytest.approx(-0.0262399, abs=1e-6)


def test_cir_flux_vanishes_along_exhaustion():
    model = cir(3.0, 2.0)
    fluxes = [abs(flux_balance_diagnostic(None, model, make_grid(model, n, 10))) for n in (4, 8, 12)]
    assert fluxes[0] > fluxes[1] > fluxes[2]
    assert fluxes[2] <= 1e-4


def test_potential_csv_round_trip(tmp_path, planar_system):
    _, pot = planar_system
    path = tmp_path / "phi.csv"
    pot.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert np.allclose(data["phi"], pot.values)
