"""One strategy, several markets.

The strategy generated by the optimal potential earns the same long-run
growth under the worst-case diffusion and under drifts perturbed by
divergence-free fluxes, since all of them share the covariance and the
invariant density. A short horizon keeps this demo quick; the acceptance
suite runs the full one.
"""

from robustgrowth import load_config
from robustgrowth.pipeline import simulation_runs

cfg = load_config("gaussian2d_gradient")
summary, _ = simulation_runs(cfg, horizon=200.0, paths=4)
print(f"lambda = {summary['lambda']:.4f}")
for run in summary["runs"]:
    g = run["growth"]
    print(f"{run['drift']:>20s}: {g['ci_center']:.4f} +/- {g['ci_half_width']:.4f}  "
          f"(occupancy TV {run['occupancy']['tv_distance']:.3f})")
