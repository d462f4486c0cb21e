"""One test per acceptance criterion, each at its stated tolerance."""

from robustgrowth import acceptance
from robustgrowth.config import preset_names


def check(result, log):
    line = f"{result.line()}  ({result.runtime:.1f} s)"
    log.append(line)
    print(line)
    assert result.error is None, result.error
    assert result.passed, result.values


def test_criterion_1_cir_closed_form(acceptance_log):
    res = acceptance.run_criterion(1)
    check(res, acceptance_log)
    for row in res.values["cases"]:
        assert row["relative_error"] <= 1e-6


def test_criterion_2_variational_vs_analytic(acceptance_log):
    res = acceptance.run_criterion(2, preset="gaussian")
    check(res, acceptance_log)
    assert res.values["finest_error"] <= 1e-3 and min(res.values["orders"]) >= 1.5
    assert res.runtime < 30.0


def test_criterion_3_energy_identity_on_every_preset(acceptance_log):
    res = acceptance.criterion_3(preset_names())
    check(res, acceptance_log)
    assert len(res.values["presets"]) == len(preset_names())


def test_criterion_4_monte_carlo_growth(acceptance_log):
    res = acceptance.run_criterion(4)
    check(res, acceptance_log)
    v = res.values
    assert abs(v["ci_center"] - 0.375) <= v["ci_half_width"] <= 0.04
    assert res.runtime < 300.0


def test_criterion_5_robustness_across_models(acceptance_log):
    res = acceptance.run_criterion(5)
    check(res, acceptance_log)
    assert len(res.values["runs"]) == 3
    lam = res.values["lambda"]
    for run in res.values["runs"]:
        assert abs(run["ci_center"] - lam) <= run["ci_half_width"]


def test_criterion_6_occupancy(acceptance_log):
    res = acceptance.run_criterion(6)
    check(res, acceptance_log)
    assert res.values["tv_distance"] <= 0.05


def test_criterion_7_classification(acceptance_log):
    res = acceptance.run_criterion(7)
    check(res, acceptance_log)
    assert res.runtime < 5.0


def test_criterion_8_theta_properties(acceptance_log):
    res = acceptance.run_criterion(8)
    check(res, acceptance_log)
    assert res.values["hand"]["exact"]


def test_criterion_9_rank_pipeline(acceptance_log):
    res = acceptance.run_criterion(9, preset="rank_demo")
    check(res, acceptance_log)
    v = res.values
    assert v["relative_difference"] <= 1e-6
    assert v["permutation_defect"] <= 1e-8 and v["tie_defect"] <= 1e-6
    assert v["theta_market"]["exploded"] == 0


def test_criterion_10_determinism(acceptance_log):
    res = acceptance.run_criterion(10)
    check(res, acceptance_log)
