"""Configuration-driven runs shared by the command line and the acceptance suite."""

import csv
from pathlib import Path

import numpy as np

from .analytic import classify, solve_gradient_case, solve_one_dim
from .errors import ValidationError
from .model import model_from_config
from .rank import (
    THETA_MARKET_BUDGET,
    CutoffSpec,
    RankGrid,
    ThetaParams,
    modify,
    rank_pipeline,
    ranked_volatility_inputs,
    strategy_table as rank_strategy_table,
    symmetrize,
    theta_market_spec,
)
from .simulate import (
    linear_flux,
    model_sde,
    occupancy,
    perturbed_drift,
    reversing_drift,
    rotation_flux,
    simulate,
    wealth,
    worst_case_drift,
)
from .variational import assemble, energy, make_grid, objective, solve_phi, solve_variational


def is_rank(cfg):
    return "rank" in cfg


def rank_setup(cfg, grid_level=None):
    """Inputs, cutoff, theta parameters and grid of a rank configuration."""
    r = cfg["rank"]
    inputs = ranked_volatility_inputs(r["sigmas"], r["exponents"])
    params = ThetaParams(**r["theta"])
    cutoff = CutoffSpec(r["delta"])
    g = r.get("grid", {})
    grid = RankGrid(int(grid_level or g.get("level", 6)), int(g.get("cells", 512)))
    return inputs, cutoff, params, grid


def model_for(cfg):
    """The market model described by a configuration."""
    if is_rank(cfg):
        inputs, cutoff, params, _ = rank_setup(cfg)
        return symmetrize(modify(inputs, cutoff, params))
    return model_from_config(cfg)


def solver_grid(cfg, model, grid_level=None):
    s = cfg.get("solver", {})
    if is_rank(cfg):
        _, _, _, g = rank_setup(cfg, grid_level)
        return g.level, g.cells
    level = grid_level or s.get("grid_level") or max(1, model.domain.levels // 3)
    cells = s.get("cells") or (2000 if model.reduced_dim == 1 else 96)
    return int(level), int(cells)


def solve_config(cfg, grid_level=None):
    """Generating function and growth report for a configuration.

    One-dimensional models use the closed form, models with a known
    gradient potential use quadrature, the rest the variational solver.
    """
    if is_rank(cfg):
        inputs, cutoff, params, grid = rank_setup(cfg, grid_level)
        return rank_pipeline(inputs, cutoff, params, grid)
    model = model_from_config(cfg)
    if model.reduced_dim == 1 and not model.is_simplex:
        return solve_one_dim(model)
    if model.potential is not None:
        return solve_gradient_case(model, model.potential)
    level, cells = solver_grid(cfg, model, grid_level)
    return solve_variational(model, level=level, cells=cells)


def classify_config(cfg, grid_level=None):
    if is_rank(cfg):
        _, report = solve_config(cfg, grid_level)
        return report
    model = model_from_config(cfg)
    return classify(model, simulation=cfg.get("assumptions"), grid_level=grid_level)


def energy_identity(cfg, grid_level=None):
    """Terms of ``J(phi) + int grad phi' c grad phi p = int ell' c ell p`` on the solver grid."""
    model = model_for(cfg)
    level, cells = solver_grid(cfg, model, grid_level)
    grid = make_grid(model, level, cells)
    system = assemble(grid, model)
    pot = solve_phi(system)
    J = objective(pot, system).J
    E = energy(pot, system)
    L = system.ell_energy
    h = grid.spacing
    defect = abs(J + E - L)
    return {"J": J, "energy": E, "ell_energy": L, "h": h, "defect": defect, "bound": 5.0 * h * L,
            "element": level, "cells": cells}


def strategy_table(model, gen, n=201):
    """Points of the third element with ``phi`` and the strategy ``grad phi / 2``."""
    dom = model.domain
    if model.reduced_dim == 1 and not model.is_simplex:
        lo, hi = dom.element(min(3, dom.levels))
        x = np.linspace(lo[0], hi[0], n)[:, None]
    else:
        lo, hi = dom.element(min(3, dom.levels))
        k = int(round(n ** (1.0 / model.reduced_dim)))
        axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
        y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        if model.is_simplex:
            y = y[y.sum(axis=1) <= 1.0 - dom.eps(min(3, dom.levels))]
        x = model.to_ambient(y)
    return x, gen.phi.value(x), gen.strategy(x)


def write_strategy_csv(path, x, phi, strat):
    d = x.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k + 1}" for k in range(d)] + ["phi"] + [f"strategy{k + 1}" for k in range(d)])
        for a, v, s in zip(x, phi, strat):
            w.writerow([repr(float(t)) for t in a] + [repr(float(v))] + [repr(float(t)) for t in s])


def simulation_settings(cfg, seed=None, dt=None, horizon=None, paths=None):
    sim = dict(cfg.get("simulation") or {})
    if not sim:
        raise ValidationError("configuration has no simulation block")
    sim.setdefault("drift", "worst_case")
    sim.setdefault("start", "stationary")
    sim.setdefault("dt", 1e-3)
    sim.setdefault("horizon", 2000.0)
    sim.setdefault("paths", 8)
    sim.setdefault("seed", 0)
    sim.setdefault("record_every", 1)
    sim.setdefault("burn_in", 0.1)
    sim.setdefault("csv_every", 1000)
    for key, val in (("seed", seed), ("dt", dt), ("horizon", horizon), ("paths", paths)):
        if val is not None:
            sim[key] = val
    if sim["dt"] > sim["horizon"]:
        raise ValidationError("simulation.dt: must not exceed the horizon")
    return sim


def _flux(model, spec):
    if spec["kind"] == "rotation":
        return rotation_flux(model, spec.get("strength", 1.0))
    return linear_flux(model, spec.get("strength", 1.0), spec.get("axis", 0))


def simulation_runs(cfg, out=None, seed=None, dt=None, horizon=None, paths=None, keep=False):
    """Simulate the configured drift and its perturbations.

    Returns
    -------
    summary : dict
        JSON-ready summary.
    objects : list
        ``(bundle, wealth, occupancy)`` per run when `keep`, else empty.
    """
    if is_rank(cfg):
        raise ValidationError("rank configurations are simulated by rank-demo")
    sim = simulation_settings(cfg, seed, dt, horizon, paths)
    model = model_from_config(cfg)
    gen, lam = None, None
    if sim["drift"] == "worst_case" or sim.get("perturbations"):
        gen, report = solve_config(cfg)
        lam = report.lam
    drifts = [(sim["drift"], worst_case_drift(model, gen) if sim["drift"] == "worst_case"
               else reversing_drift(model))]
    for pert in sim.get("perturbations", []):
        drifts.append((f"perturbed_{pert['kind']}", perturbed_drift(model, _flux(model, pert))))
    start = sim["start"]
    x0 = start if isinstance(start, str) else np.asarray(start, dtype=float)
    runs, objects = [], []
    for name, drift in drifts:
        spec = model_sde(model, drift, x0=x0, dt=sim["dt"], T=sim["horizon"], seed=sim["seed"],
                         n_paths=sim["paths"])
        bundle = simulate(spec, sim["paths"], record_every=sim["record_every"])
        run = {"drift": name, "exploded": int(bundle.exploded.sum()), "growth": {}}
        ws = occ = None
        if gen is not None and not bundle.exploded.all():
            ws = wealth(bundle, gen, model)
            run["growth"] = ws.summary()
            if lam is not None:
                run["growth"]["contains_lambda"] = bool(ws.contains(lam))
        if not bundle.exploded.all():
            occ = occupancy(bundle, model, bins=_bins(model, sim), burn_in=sim["burn_in"])
            run["occupancy"] = occ.summary()
        if out is not None:
            every = int(sim["csv_every"])
            if ws is not None:
                ws.to_csv(Path(out) / f"wealth_{name}.csv", every=every)
            if occ is not None:
                occ.to_csv(Path(out) / f"occupancy_{name}.csv")
        runs.append(run)
        if keep:
            objects.append((bundle, ws, occ))
    summary = {"config": cfg["name"], "seed": sim["seed"], "dt": sim["dt"], "horizon": sim["horizon"],
               "paths": sim["paths"], "lambda": lam, "runs": runs}
    return summary, objects


def _bins(model, sim):
    from .simulate import default_bins

    return default_bins(model, sim.get("bins"))


def theta_market_run(cfg=None, seed=None):
    """Zero-explosion check of the theta market with the configured exponents."""
    budget = dict(THETA_MARKET_BUDGET)
    params = ThetaParams(2.0, 2.0, 2.0)
    d = 2
    if cfg is not None and is_rank(cfg):
        params = ThetaParams(**cfg["rank"]["theta"])
        d = len(cfg["rank"]["sigmas"])
        for key in ("dt", "horizon", "paths", "seed"):
            if key in cfg.get("simulation", {}):
                budget[key] = cfg["simulation"][key]
    if seed is not None:
        budget["seed"] = seed
    spec = theta_market_spec(params, d, dt=budget["dt"], T=budget["horizon"], seed=budget["seed"])
    bundle = simulate(spec, budget["paths"], record_every=max(1, spec.n_steps // 1000),
                      raise_on_explosion=False)
    return {"paths": budget["paths"], "horizon": budget["horizon"], "dt": budget["dt"],
            "seed": budget["seed"], "exploded": int(bundle.exploded.sum()),
            "min_coordinate": float(np.nanmin(bundle.states))}


def rank_demo(cfg, out=None, grid_level=None, seed=None):
    """Rank pipeline outputs: both growth rates, parameters and a strategy table."""
    inputs, cutoff, params, grid = rank_setup(cfg, grid_level)
    gen, report = rank_pipeline(inputs, cutoff, params, grid)
    doc = {
        "lambda_ranked": report.extra["lambda_ranked"],
        "lambda_simplex": report.extra["lambda_simplex"],
        "relative_difference": report.extra["relative_difference"],
        "theta_params": params.to_dict(),
        "cutoff": cutoff.to_dict(),
        "grid": {"level": grid.level, "cells": grid.cells, "h": report.extra["h"]},
        "theta_market": theta_market_run(cfg, seed),
        "config": cfg["name"],
    }
    if out is not None:
        rank_strategy_table(gen, inputs.d, path=Path(out) / "rank_strategy.csv")
    return doc, gen, report
