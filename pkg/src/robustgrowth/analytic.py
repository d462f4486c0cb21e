"""Closed-form growth rates, candidate lower bounds and the classifier.

In one dimension the optimal generating function is ``sqrt(p c)``. When
``c^{-1} div c = grad H`` for a known potential ``H`` it is
``sqrt(p) exp(H / 2)``. In both cases the rate is one eighth of a weighted
squared gradient norm, so only quadrature is needed.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AssumptionViolated,
    NotGradientCase,
    NotInDomainD,
    NumericalError,
)
from .fields import ScalarField, VectorField, as_points
from .model import Diagnostics, check_assumptions, random_interior_points
from .quadrature import exhaustion_integral

FINITE = "Finite"
INFINITE = "Infinite"
ILL_POSED = "IllPosedOrEmpty"

# candidate growth is declared infinite once the negative part passes this
INFINITE_CAP = 1e6


@dataclass
class GrowthReport:
    """Classification of a model with its growth rate when finite.

    Attributes
    ----------
    classification : str
        ``"Finite"``, ``"Infinite"`` or ``"IllPosedOrEmpty"``.
    lam : float or None
        Robust growth rate (present iff finite).
    method : str
        ``closed_form_1d``, ``gradient_case``, ``variational`` or
        ``candidate_bound``.
    diagnostics : Diagnostics
    extra : dict
        Additional JSON-ready details.
    """

    classification: str
    lam: Optional[float]
    method: str
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.lam is not None) != (self.classification == FINITE):
            raise ValueError("lambda must be present exactly for finite reports")
        if self.lam is not None and self.lam < 0:
            if self.lam > -1e-12:
                self.lam = 0.0
            else:
                raise ValueError("growth rate must be nonnegative")

    def to_dict(self):
        diag = self.diagnostics.to_dict()
        diag.update(self.extra)
        return {
            "classification": self.classification,
            "lambda": None if self.lam is None else float(self.lam),
            "method": self.method,
            "diagnostics": diag,
        }


@dataclass
class GeneratingFunction:
    """``u = exp(phi / 2)`` and its strategy ``grad u / u = grad phi / 2``.

    Parameters
    ----------
    phi : ScalarField
    model : MarketModel, optional
        Needed for tangent projection on the simplex and for the generator.
    """

    phi: ScalarField
    model: Optional[object] = None

    @property
    def u(self):
        phi = self.phi
        return ScalarField.from_log(
            lambda x: 0.5 * phi.value(x),
            lambda x: 0.5 * phi.grad(x),
            lambda x: 0.5 * phi.hess(x),
            smoothness=phi.smoothness,
        )

    def grad_phi(self, x):
        g = self.phi.grad(as_points(x))
        if self.model is not None and self.model.is_simplex:
            g = g - g.mean(axis=-1, keepdims=True)
        return g

    @property
    def strategy(self):
        return VectorField(lambda x: 0.5 * self.grad_phi(x))

    def generator_ratio(self, x):
        """``(L u) / u`` with ``L = tr(c D^2) / 2``."""
        x = as_points(x)
        c = self.model.cov(x)
        g = self.grad_phi(x)
        hess = self.phi.hess(x)
        if self.model.is_simplex:
            P = self.model.domain.projector
            hess = P @ hess @ P
        return (0.25 * np.einsum("...ij,...ij->...", c, hess)
                + 0.125 * np.einsum("...i,...ij,...j->...", g, c, g))


def _phi_from_parts(log_p_field, H):
    return ScalarField(
        lambda x: log_p_field.log(x) + H.value(x),
        lambda x: log_p_field.grad_log(x) + H.grad(x),
        lambda x: log_p_field.hess_log(x) + H.hess(x),
        smoothness=min(log_p_field.smoothness, H.smoothness),
    )


def one_dim_phi(model):
    """``phi = log(p c)`` for a one-dimensional model."""
    c = model.c

    def value(x):
        return model.p.log(x) + np.log(c.value(x)[..., 0, 0])

    def grad(x):
        x = as_points(x, 1)
        return model.p.grad_log(x) + model.c_inv_div(x)

    def hess(x):
        cv = c.value(x)[..., 0, 0]
        g = c.div(x)[..., 0] / cv
        return model.p.hess_log(x) + (c.div_div(x) / cv - g**2)[..., None, None]

    return ScalarField(value, grad, hess, smoothness=min(model.p.smoothness, c.smoothness))


def solve_one_dim(model, diagnostics=None, levels=None):
    """Optimal generating function and growth rate of a 1-D model.

    Parameters
    ----------
    model : MarketModel
        Interval domain.
    diagnostics : Diagnostics, optional
        Reuse an earlier :func:`check_assumptions` result.

    Returns
    -------
    GeneratingFunction, GrowthReport

    Raises
    ------
    AssumptionViolated
        With the failing item when a well-posedness check fails.
    """
    if model.reduced_dim != 1 or model.is_simplex:
        raise ValueError("solve_one_dim needs a one-dimensional interval model")
    diag = diagnostics or check_assumptions(model, levels=levels)
    for item in ("i", "ii", "iii"):
        if not diag.holds(item):
            raise AssumptionViolated(item, diag)
    seq = diag.items["i"]["sequence"]
    lam = seq.limit / 8.0
    gen = GeneratingFunction(one_dim_phi(model), model)
    return gen, GrowthReport(FINITE, lam, "closed_form_1d", diag)


def gradient_consistency(model, H, n_points=200, seed=0):
    """Largest relative defect of ``c^{-1} div c = grad H`` at random points."""
    x = random_interior_points(model, n_points, seed)
    lhs = model.c_inv_div(x)
    rhs = H.grad(x)
    if model.is_simplex:
        lhs = lhs - lhs.mean(axis=-1, keepdims=True)
        rhs = rhs - rhs.mean(axis=-1, keepdims=True)
    err = np.linalg.norm(lhs - rhs, axis=-1) / np.maximum(1.0, np.linalg.norm(rhs, axis=-1))
    return float(err.max())


def solve_gradient_case(model, H, diagnostics=None, levels=None, tol=1e-6):
    """Growth rate for a model with ``c^{-1} div c = grad H``.

    Raises
    ------
    NotGradientCase
        When the identity fails at random interior points.
    """
    defect = gradient_consistency(model, H)
    if defect > tol:
        raise NotGradientCase(f"c^-1 div c differs from grad H by {defect:.3g}")
    gen = GeneratingFunction(_phi_from_parts(model.p, H), model)

    def integrand(x):
        g = model.ambient_grad_to_reduced(gen.grad_phi(x))
        C = model.reduced_cov(x)
        return np.einsum("...i,...ij,...j->...", g, C, g) * model.density_value(x)

    seq = exhaustion_integral(integrand, model.domain, levels)
    diag = diagnostics or Diagnostics()
    diag.items.setdefault("i", {"holds": seq.converged, "method": "quadrature", "sequence": seq})
    extra = {"gradient_defect": defect}
    if not seq.converged:
        return gen, GrowthReport(INFINITE, None, "gradient_case", diag, extra)
    return gen, GrowthReport(FINITE, seq.limit / 8.0, "gradient_case", diag, extra)


def _negative_part_infinite(seq):
    p = seq.partials
    if not seq.converged:
        return True
    rel = np.diff(p)[-1] / max(p[-2], 1e-300)
    return bool(p[-1] > INFINITE_CAP and rel > 0.01)


def candidate_growth(model, u, levels=None, return_parts=False):
    """Growth guaranteed by the strategy generated by a candidate ``u``.

    Returns ``-int (L u / u) p`` or ``inf`` when the negative part of
    ``L u / u`` is not integrable.

    Raises
    ------
    NotInDomainD
        If the positive part of ``L u / u`` is not integrable.
    """
    gen = GeneratingFunction(
        ScalarField(lambda x: 2.0 * u.log(x), lambda x: 2.0 * u.grad_log(x),
                    lambda x: 2.0 * u.hess_log(x)),
        model,
    )

    def ratio(x):
        return gen.generator_ratio(x) * model.density_value(x)

    pos = exhaustion_integral(lambda x: np.maximum(ratio(x), 0.0), model.domain, levels)
    if not pos.converged:
        raise NotInDomainD("positive part of L u / u is not integrable")
    neg = exhaustion_integral(lambda x: np.maximum(-ratio(x), 0.0), model.domain, levels)
    if _negative_part_infinite(neg):
        value = math.inf
    else:
        total = exhaustion_integral(ratio, model.domain, levels)
        value = -total.limit
    if return_parts:
        return value, {"positive": pos, "negative": neg}
    return value


def classify(model, simulation=None, levels=None, grid_level=None):
    """Classify a model as finite, infinite or ill-posed.

    Always returns a report; when no branch can be certified the report is
    ``Infinite`` with ``certain: false`` in its diagnostics.
    """
    try:
        return _classify(model, simulation, levels, grid_level)
    except NumericalError as err:
        diag = Diagnostics(notes=[f"{type(err).__name__}: {err}"])
        return GrowthReport(INFINITE, None, "candidate_bound", diag, {"certain": False})


def _classify(model, simulation, levels, grid_level):
    one_dim = model.reduced_dim == 1 and not model.is_simplex
    diag = check_assumptions(model, levels=levels, simulation=simulation)
    if one_dim:
        iii = diag.items["iii"]
        if iii["lower"].converged or iii["upper"].converged:
            return GrowthReport(ILL_POSED, None, "closed_form_1d", diag, {"certain": True})
        u = ScalarField.from_log(
            lambda x: 0.5 * (model.p.log(x) + np.log(model.c.value(x)[..., 0, 0])),
            lambda x: 0.5 * model.ell(x),
            lambda x: 0.5 * one_dim_phi(model).hess(x),
        )
        try:
            g = candidate_growth(model, u, levels)
        except NotInDomainD:
            g = None
        if g is not None and math.isinf(g):
            return GrowthReport(INFINITE, None, "candidate_bound", diag, {"certain": True})
        if diag.all_hold:
            _, report = solve_one_dim(model, diag)
            report.extra["certain"] = True
            return report
        return GrowthReport(INFINITE, None, "candidate_bound", diag, {"certain": False})
    if not diag.all_hold:
        return GrowthReport(INFINITE, None, "candidate_bound", diag, {"certain": False})
    if model.potential is not None:
        try:
            _, report = solve_gradient_case(model, model.potential, diag, levels)
            report.extra["certain"] = diag.items["iii"]["method"] != "empirical"
            return report
        except NotGradientCase:
            pass
    from .variational import solve_variational

    _, report = solve_variational(model, level=grid_level, diagnostics=diag)
    report.extra["certain"] = False
    return report
