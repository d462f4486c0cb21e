"""Market models: a domain, a covariance field and a limiting density.

The drift characteristic ``ell = grad p / p + c^{-1} div c`` is the single
derived field every solver works with. On the simplex it is projected onto
the zero-sum tangent space, and all solvers then work in the reduced chart
``y = x[:-1]``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .domain import Box, Interval, Simplex, uniform_points
from .errors import NonpositiveDensity, SingularCovariance, ValidationError
from .fields import CovarianceField, ScalarField, as_points, constant_covariance, sqrt_spd
from .quadrature import (
    ExhaustionSequence,
    endpoint_divergence,
    exhaustion_integral,
)

CONDITION_CAP = 1e12


@dataclass(frozen=True)
class MarketModel:
    """The triple (domain, covariance, density).

    Parameters
    ----------
    domain : Interval, Box or Simplex
    c : CovarianceField
    p : ScalarField
        Probability density (Lebesgue in the reduced chart on the simplex).
    mass_tolerance : float
        Allowed mass defect of `p` on the largest element.
    potential : ScalarField, optional
        A known ``H`` with ``c^{-1} div c = grad H``, if the model is of
        gradient type.
    name : str
    """

    domain: object
    c: CovarianceField
    p: ScalarField
    mass_tolerance: float = 1e-6
    potential: Optional[ScalarField] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def reduced_dim(self):
        return self.domain.reduced_dim

    @property
    def is_simplex(self):
        return self.domain.kind == "simplex"

    # -- basic fields -----------------------------------------------------
    def log_density(self, x):
        x = as_points(x, self.dim)
        lp = self.p.log(x)
        if np.any(~np.isfinite(lp)) and np.any(self.p.value(x) <= 0):
            raise NonpositiveDensity("density is not positive at a queried point")
        return lp

    def c_inv_div(self, x):
        """``c^{-1} div c`` (tangent pseudo-inverse on a badly conditioned simplex)."""
        x = as_points(x, self.dim)
        c = self.c.value(x)
        v = self.c.div(x)
        if self.dim == 1:
            if np.any(c[..., 0, 0] <= 0):
                raise SingularCovariance("covariance is not positive")
            return v / c[..., 0]
        _check_condition(self._tangent(c), self.is_simplex)
        if self.is_simplex:
            full = np.linalg.cond(c)
            if np.all(full < CONDITION_CAP):
                return np.linalg.solve(c, v[..., None])[..., 0]
            ct = self._tangent(c)
            return np.einsum("...ij,...j->...i", np.linalg.pinv(ct, hermitian=True), v)
        return np.linalg.solve(c, v[..., None])[..., 0]

    def ell(self, x):
        """Drift characteristic at points ``x`` (tangent-projected on the simplex)."""
        x = as_points(x, self.dim)
        self.log_density(x)
        out = self.p.grad_log(x) + self.c_inv_div(x)
        if self.is_simplex:
            out = out - out.mean(axis=-1, keepdims=True)
        return out

    def _tangent(self, c):
        if not self.is_simplex:
            return c
        P = self.domain.projector
        return P @ c @ P

    def cov(self, x):
        """Covariance acting on tangent vectors (``P c P`` on the simplex)."""
        return self._tangent(self.c.value(as_points(x, self.dim)))

    def sqrt_cov(self, x):
        return sqrt_spd(self.cov(x))

    # -- reduced chart ----------------------------------------------------
    def to_ambient(self, y):
        if self.is_simplex:
            return self.domain.from_reduced(y)
        return np.asarray(y, dtype=float)

    def to_chart(self, x):
        if self.is_simplex:
            return self.domain.to_reduced(x)
        return np.asarray(x, dtype=float)

    def reduced_cov(self, x):
        """``G^{-1} Q' c Q G^{-1}``, the covariance of the reduced coordinates."""
        c = self.c.value(as_points(x, self.dim))
        if not self.is_simplex:
            return c
        Q = self.domain.chart_matrix
        Gi = np.linalg.inv(self.domain.metric)
        M = Gi @ Q.T
        return M @ c @ M.T

    def reduced_ell(self, x):
        ell = self.ell(x)
        if not self.is_simplex:
            return ell
        return ell[..., :-1] - ell[..., -1:]

    def reduced_grad_to_ambient(self, g):
        """Tangent ambient gradient from a reduced one (identity off the simplex)."""
        if not self.is_simplex:
            return g
        M = self.domain.chart_matrix @ np.linalg.inv(self.domain.metric)
        return np.einsum("ij,...j->...i", M, g)

    def ambient_grad_to_reduced(self, g):
        if not self.is_simplex:
            return g
        return g[..., :-1] - g[..., -1:]

    # -- derived integrands ----------------------------------------------
    def ell_energy_density(self, x):
        """``ell' c ell p`` at ambient points."""
        x = as_points(x, self.dim)
        ly = self.reduced_ell(x)
        C = self.reduced_cov(x)
        q = np.einsum("...i,...ij,...j->...", ly, C, ly)
        return q * np.exp(self.log_density(x))

    def flux(self, x):
        """Reduced flux ``p c ell`` (the ambient one off the simplex)."""
        x = as_points(x, self.dim)
        ly = self.reduced_ell(x)
        C = self.reduced_cov(x)
        return np.exp(self.log_density(x))[..., None] * np.einsum("...ij,...j->...i", C, ly)

    def flux_divergence(self, x, h=1e-6):
        """``div(p c ell)``.

        Closed form ``tr(c D^2 p) + 2 grad p . div c + p div div c`` off the
        simplex; centered differences of the reduced flux on it.
        """
        x = as_points(x, self.dim)
        if not self.is_simplex:
            g = self.p.grad_log(x)
            Hl = self.p.hess_log(x) + g[..., :, None] * g[..., None, :]
            c = self.c.value(x)
            val = (np.einsum("...ij,...ij->...", c, Hl)
                   + 2.0 * np.einsum("...i,...i->...", g, self.c.div(x))
                   + self.c.div_div(x))
            return np.exp(self.log_density(x)) * val
        y = self.to_chart(x)
        out = np.zeros(x.shape[:-1])
        for k in range(self.reduced_dim):
            e = np.zeros(self.reduced_dim)
            e[k] = h
            out += (self.flux(self.to_ambient(y + e))[..., k]
                    - self.flux(self.to_ambient(y - e))[..., k]) / (2 * h)
        return out

    def density_value(self, x):
        return np.exp(self.log_density(as_points(x, self.dim)))


def _check_condition(c, tangent):
    d = c.shape[-1]
    if d == 1:
        return
    w = np.linalg.eigvalsh(c)
    if tangent:
        w = w[..., 1:]
    lo = w[..., 0]
    if np.any(lo <= 0) or np.any(w[..., -1] / lo > CONDITION_CAP):
        raise SingularCovariance("covariance is singular on the tangent space")


def ell_field(model):
    """The drift characteristic of `model` as a vector field."""
    from .fields import VectorField

    return VectorField(model.ell)


# -- assumption diagnostics -----------------------------------------------

@dataclass
class Diagnostics:
    """Outcome of the three well-posedness checks.

    Attributes
    ----------
    items : dict
        Keys ``"i"``, ``"ii"``, ``"iii"``; each value holds ``holds`` (bool
        or None), ``method`` and the quadrature or simulation evidence.
    notes : list of str
    """

    items: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def holds(self, item):
        return bool(self.items.get(item, {}).get("holds"))

    @property
    def all_hold(self):
        return all(self.holds(k) for k in ("i", "ii", "iii"))

    def to_dict(self):
        out = {}
        for k, v in self.items.items():
            out[k] = {
                key: (val.to_dict() if isinstance(val, ExhaustionSequence) else val)
                for key, val in v.items()
            }
        return {"items": out, "notes": list(self.notes)}


def check_assumptions(model, grid=None, levels=None, simulation=None):
    """Run the three well-posedness checks on `model`.

    Parameters
    ----------
    model : MarketModel
    grid : Grid, optional
        Only used to pick the number of exhaustion levels it covers.
    levels : int, optional
    simulation : dict, optional
        Budget for the empirical non-explosion test in dimension >= 2
        (keys ``paths``, ``horizon``, ``dt``, ``seed``).

    Returns
    -------
    Diagnostics
    """
    if grid is not None and levels is None:
        levels = None if model.reduced_dim == 1 else grid.level
    diag = Diagnostics()
    seq_i = exhaustion_integral(model.ell_energy_density, model.domain, levels)
    diag.items["i"] = {"holds": seq_i.converged, "method": "quadrature", "sequence": seq_i}

    def positive_part(x):
        return np.maximum(model.flux_divergence(x), 0.0)

    seq_ii = exhaustion_integral(positive_part, model.domain, levels)
    diag.items["ii"] = {"holds": seq_ii.converged, "method": "quadrature", "sequence": seq_ii}

    if model.reduced_dim == 1 and not model.is_simplex:
        dom = model.domain if model.domain.kind == "interval" else model.domain.axes[0]
        lo, hi = endpoint_divergence(lambda x: reciprocal_pc(model, x), dom, levels)
        diag.items["iii"] = {
            "holds": (not lo.converged) and (not hi.converged),
            "method": "exact",
            "lower": lo,
            "upper": hi,
        }
    else:
        diag.items["iii"] = _empirical_nonexplosion(model, simulation or {})
    return diag


def reciprocal_pc(model, x):
    """``1 / (p c)`` in one dimension, overflow mapped to ``inf``."""
    x = as_points(x, 1)
    with np.errstate(over="ignore"):
        return np.exp(-model.log_density(x) - np.log(model.c.value(x)[..., 0, 0]))


def _empirical_nonexplosion(model, budget):
    from .simulate import model_sde, reversing_drift, simulate
    from .errors import AllPathsExploded

    n_paths = int(budget.get("paths", 4))
    spec = model_sde(
        model,
        reversing_drift(model),
        x0="stationary",
        dt=float(budget.get("dt", 1e-3)),
        T=float(budget.get("horizon", 10.0)),
        seed=int(budget.get("seed", 0)),
        n_paths=n_paths,
    )
    try:
        bundle = simulate(spec, n_paths, record_every=max(1, spec.n_steps))
    except AllPathsExploded as err:
        bundle = err.bundle
    exits = int(np.sum(bundle.exploded))
    return {
        "holds": exits == 0,
        "method": "empirical",
        "paths": n_paths,
        "horizon": spec.T,
        "exits": exits,
    }


def check_mass(model, levels=None):
    """Mass of `p` over successive elements.

    Returns
    -------
    partials : ndarray
    ok : bool
        Masses nondecreasing and the last one within ``mass_tolerance`` of 1.
    """
    seq = exhaustion_integral(model.density_value, model.domain, levels)
    m = seq.partials
    tol = model.mass_tolerance
    ok = bool(np.all(np.diff(m) >= -1e-12) and (1 - tol <= m[-1] <= 1 + tol))
    return m, ok


# -- closed-form presets ----------------------------------------------------

def gamma_density(shape, rate):
    """Gamma density with shape `shape` and rate `rate` on ``(0, inf)``."""
    a, b = float(shape), float(rate)
    const = a * math.log(b) - special.gammaln(a)

    def log(x):
        return const + (a - 1) * np.log(x[..., 0]) - b * x[..., 0]

    def grad_log(x):
        return (a - 1) / x - b

    def hess_log(x):
        return (-(a - 1) / x**2)[..., None]

    return ScalarField.from_log(log, grad_log, hess_log)


def normal_density(mean, std):
    """Product of independent normal densities."""
    mu = np.atleast_1d(np.asarray(mean, dtype=float))
    s = np.broadcast_to(np.atleast_1d(np.asarray(std, dtype=float)), mu.shape).copy()
    const = -np.sum(np.log(s)) - 0.5 * mu.size * math.log(2 * math.pi)

    def log(x):
        return const - 0.5 * np.sum(((x - mu) / s) ** 2, axis=-1)

    def grad_log(x):
        return -(x - mu) / s**2

    def hess_log(x):
        return np.broadcast_to(np.diag(-1.0 / s**2), x.shape + (mu.size,)).copy()

    return ScalarField.from_log(log, grad_log, hess_log, smoothness=100)


def truncated_normal_density(mean, std, lower, upper):
    """Product of normals truncated to a finite box."""
    mu = np.atleast_1d(np.asarray(mean, dtype=float))
    s = np.broadcast_to(np.atleast_1d(np.asarray(std, dtype=float)), mu.shape).copy()
    lo = np.broadcast_to(np.asarray(lower, dtype=float), mu.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), mu.shape)
    z = special.ndtr((hi - mu) / s) - special.ndtr((lo - mu) / s)
    base = normal_density(mu, s)
    shift = -float(np.sum(np.log(z)))
    return ScalarField.from_log(lambda x: base.log_fn(x) + shift, base.grad_log_fn, base.hess_log_fn,
                                smoothness=100)


def cir_covariance(xi):
    """``c(x) = xi^2 x`` on the half line."""
    k = float(xi) ** 2

    def value(x):
        return k * x[..., None]

    def div(x):
        return np.full(x.shape, k)

    def div_div(x):
        return np.zeros(x.shape[:-1])

    return CovarianceField(value, div, div_div, smoothness=100)


def polynomial_covariance(coefficients):
    """One-dimensional ``c(x) = sum_k a_k x^k``."""
    poly = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
    d1, d2 = poly.deriv(1), poly.deriv(2)

    def value(x):
        return poly(x)[..., None]

    def div(x):
        return d1(x)

    def div_div(x):
        return d2(x[..., 0])

    return CovarianceField(value, div, div_div, smoothness=100)


def reciprocal_density(c):
    """One-dimensional ``p = 1 / c`` for a scalar covariance field."""

    def log(x):
        return -np.log(c.value(x)[..., 0, 0])

    def grad_log(x):
        return -c.div(x) / c.value(x)[..., 0]

    def hess_log(x):
        cv = c.value(x)[..., 0, 0]
        g = c.div(x)[..., 0] / cv
        return (-(c.div_div(x) / cv - g**2))[..., None, None]

    return ScalarField.from_log(log, grad_log, hess_log, smoothness=c.smoothness)


def bump_potential(amplitude, width=1.0, center=None, d=2):
    """``H(x) = a exp(-|x - m|^2 / (2 w^2))``."""
    a, w = float(amplitude), float(width)
    m = np.zeros(d) if center is None else np.asarray(center, dtype=float)

    def value(x):
        return a * np.exp(-0.5 * np.sum((x - m) ** 2, axis=-1) / w**2)

    def grad(x):
        return -value(x)[..., None] * (x - m) / w**2

    def hess(x):
        z = (x - m) / w**2
        eye = np.eye(x.shape[-1])
        return value(x)[..., None, None] * (z[..., :, None] * z[..., None, :] - eye / w**2)

    return ScalarField(value, grad, hess, smoothness=100)


def exp_potential_covariance(base, potential):
    """``c(x) = exp(H(x)) C0``; then ``c^{-1} div c = grad H``."""
    C0 = np.asarray(base, dtype=float)

    def value(x):
        return np.exp(potential.value(x))[..., None, None] * C0

    def div(x):
        return np.exp(potential.value(x))[..., None] * np.einsum("ij,...j->...i", C0, potential.grad(x))

    def div_div(x):
        g = potential.grad(x)
        val = (np.einsum("...i,ij,...j->...", g, C0, g)
               + np.einsum("ij,...ij->...", C0, potential.hess(x)))
        return np.exp(potential.value(x)) * val

    return CovarianceField(value, div, div_div, smoothness=potential.smoothness)


def log_potential_1d(c):
    """``H = log c`` for a one-dimensional covariance (always a gradient case)."""

    def value(x):
        return np.log(c.value(x)[..., 0, 0])

    def grad(x):
        return c.div(x) / c.value(x)[..., 0]

    def hess(x):
        cv = c.value(x)[..., 0, 0]
        g = c.div(x)[..., 0] / cv
        return (c.div_div(x) / cv - g**2)[..., None, None]

    return ScalarField(value, grad, hess, smoothness=c.smoothness)


def cir(A, B, xi=1.0, levels=12):
    """Square-root diffusion covariance with a Gamma(A, B) density."""
    dom = Interval(0.0, math.inf, center=float(A) / float(B), scale=1.0, levels=levels)
    return MarketModel(dom, cir_covariance(xi), gamma_density(A, B), name=f"cir_A{A}_B{B}_xi{xi}",
                       meta={"A": A, "B": B, "xi": xi})


def gaussian(mean=0.0, std=1.0, variance=1.0):
    """Whole line, constant covariance, normal density."""
    c = constant_covariance([[variance]])
    return MarketModel(Interval(-math.inf, math.inf, center=float(mean), scale=float(std)),
                       c, normal_density([mean], [std]), name="gaussian")


def unit_interval_flat():
    """``E = (0, 1)`` with ``p = c = 1`` (an ill-posed model)."""
    return MarketModel(Interval(0.0, 1.0), constant_covariance([[1.0]]),
                       ScalarField.constant(1.0, 1), name="unit_interval_flat")


def zero_growth():
    """``c = pi (1 + x^2)`` and ``p = 1 / c`` on the whole line."""
    c = polynomial_covariance([math.pi, 0.0, math.pi])
    return MarketModel(Interval(-math.inf, math.inf), c, reciprocal_density(c), name="zero_growth")


# -- configuration ------------------------------------------------------------

def _num(v):
    if isinstance(v, str):
        return {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}[v]
    return -math.inf if v is None else float(v)


def build_domain(spec):
    kind = spec["kind"]
    levels = int(spec.get("levels", 12))
    if kind == "interval":
        lower = _num(spec.get("lower", "-inf"))
        upper = spec.get("upper", "inf")
        upper = math.inf if upper is None else _num(upper)
        return Interval(lower, upper, center=spec.get("center"), scale=float(spec.get("scale", 1.0)),
                        levels=levels)
    if kind == "box":
        axes = []
        for ax in spec["axes"]:
            up = ax.get("upper", "inf")
            axes.append(Interval(_num(ax.get("lower", "-inf")), math.inf if up is None else _num(up),
                                 center=ax.get("center"), scale=float(ax.get("scale", 1.0)),
                                 levels=levels))
        return Box(tuple(axes))
    if kind == "simplex":
        return Simplex(int(spec["d"]), spec.get("eps0"), levels)
    raise ValidationError(f"unknown domain kind {kind!r}")


def build_covariance(spec, domain):
    """Covariance field and, when known, its gradient potential."""
    kind = spec["kind"]
    d = domain.dim
    if kind == "constant":
        v = np.asarray(spec["value"], dtype=float)
        mat = v * np.eye(d) if v.ndim == 0 else v
        return constant_covariance(mat), ScalarField.constant(0.0, d)
    if kind == "cir":
        c = cir_covariance(spec.get("xi", 1.0))
        return c, log_potential_1d(c)
    if kind == "polynomial":
        c = polynomial_covariance(spec["coefficients"])
        return c, log_potential_1d(c)
    if kind == "exp_bump":
        H = bump_potential(spec.get("amplitude", 0.5), spec.get("width", 1.0), spec.get("center"), d)
        return exp_potential_covariance(spec["base"], H), H
    if kind == "theta":
        from .rank import ThetaParams, theta, theta_potential

        params = ThetaParams(spec["A"], spec["B"], spec["C"])
        return theta(params), theta_potential(params)
    raise ValidationError(f"unknown covariance kind {kind!r}")


def build_density(spec, domain, c):
    kind = spec["kind"]
    d = domain.dim
    if kind == "gamma":
        return gamma_density(spec["shape"], spec["rate"])
    if kind == "normal":
        return normal_density(spec.get("mean", np.zeros(d).tolist()), spec.get("std", 1.0))
    if kind == "truncated_normal":
        lo, hi = zip(*[(ax.lower, ax.upper) for ax in _axes(domain)])
        return truncated_normal_density(spec.get("mean", 0.0), spec.get("std", 1.0), lo, hi)
    if kind == "uniform":
        if domain.kind == "simplex":
            return ScalarField.constant(math.factorial(d - 1), d)
        vol = float(np.prod([ax.upper - ax.lower for ax in _axes(domain)]))
        if not math.isfinite(vol):
            raise ValidationError("uniform density needs a bounded domain")
        return ScalarField.constant(1.0 / vol, d)
    if kind == "reciprocal_covariance":
        if d != 1:
            raise ValidationError("reciprocal_covariance density is one-dimensional")
        return reciprocal_density(c)
    raise ValidationError(f"unknown density kind {kind!r}")


def _axes(domain):
    return (domain,) if domain.kind == "interval" else domain.axes


def model_from_config(cfg):
    """Build a :class:`MarketModel` from a parsed configuration dictionary."""
    domain = build_domain(cfg["domain"])
    c, H = build_covariance(cfg["covariance"], domain)
    p = build_density(cfg["density"], domain, c)
    return MarketModel(domain, c, p, mass_tolerance=float(cfg.get("mass_tolerance", 1e-6)),
                       potential=H, name=cfg.get("name", ""))


def random_interior_points(model, n, seed=0, level=None):
    """Reproducible uniform points inside an exhaustion element."""
    return uniform_points(model.domain, n, np.random.default_rng(seed), level)
