"""Square-root model: the growth rate in closed form and why it is optimal.

With ``c(x) = xi^2 x`` and a Gamma(A, B) invariant density the optimal
generating function is ``u = sqrt(p c)``, so the strategy is ``ell / 2`` with
``ell = A / x - B``. Candidates ``u = x^a exp(-b x)`` other than ``a = A / 2``,
``b = B / 2`` grow strictly slower.
"""

import numpy as np

from robustgrowth import candidate_growth, solve_one_dim
from robustgrowth.fields import ScalarField
from robustgrowth.model import cir

for A, B, xi in [(3.0, 2.0, 1.0), (2.0, 1.0, 0.5), (5.0, 3.0, 2.0)]:
    _, report = solve_one_dim(cir(A, B, xi))
    print(f"A={A:g} B={B:g} xi={xi:g}: lambda={report.lam:.10f}  "
          f"formula={xi**2 * A * B / (8 * (A - 1)):.10f}")

model = cir(3.0, 2.0)
print("\ncandidate u = x^a exp(-b x) for the A=3, B=2 model")
for a, b in [(1.5, 1.0), (1.0, 1.0), (1.5, 0.5), (2.0, 1.5)]:
    u = ScalarField.from_log(lambda x, a=a, b=b: a * np.log(x[..., 0]) - b * x[..., 0],
                             lambda x, a=a, b=b: a / x - b,
                             lambda x, a=a: (-a / x**2)[..., None])
    print(f"  a={a:g} b={b:g}: growth {candidate_growth(model, u):.6f}")
