"""The variational solver against two independent answers.

On the real line with a standard normal density the solver converges to
1/8 at second order. On the bundled planar gradient model it agrees with
quadrature of the closed-form potential.
"""

from robustgrowth import load_config, model_from_config, refinement_study, solve_gradient_case
from robustgrowth.model import gaussian
from robustgrowth.variational import solve_variational

table = refinement_study(gaussian(), levels=4, base_cells=100, element=4, reference=0.125)
print("cells     h          lambda        error      order")
for row in table.rows:
    order = "" if row["error_order"] is None else f"{row['error_order']:.3f}"
    print(f"{row['cells']:5d}  {row['h']:.3e}  {row['lambda']:.10f}  {row['error']:.2e}  {order}")

model = model_from_config(load_config("gaussian2d_gradient"))
_, quad = solve_gradient_case(model, model.potential)
_, var = solve_variational(model, level=3, cells=96)
print(f"\nplanar model: quadrature {quad.lam:.5f}, variational {var.lam:.5f}")
print(f"energy identity terms: J={var.extra['objective']:.6f}, "
      f"8 lambda={8 * var.lam:.6f}, int ell'c ell p={var.extra['ell_energy']:.6f}")
