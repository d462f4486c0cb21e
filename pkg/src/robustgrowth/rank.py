"""Rank-based models on the simplex.

A rank-based model is specified on the ordered simplex
``{x^1 <= ... <= x^d}`` by a covariance ``kappa`` and a density ``q`` and
extended to the whole simplex by sorting. Near the boundary of the ordered
simplex (small coordinates, rank ties) the pair is blended into the
explicit family ``theta`` so that the extension is smooth across ties and
the model is well posed.
"""

import csv
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Optional

import numpy as np
from scipy import integrate

from .analytic import FINITE, GeneratingFunction, GrowthReport
from .domain import Simplex
from .errors import BadParams, TieDerivative, ValidationError
from .fields import CovarianceField, ScalarField, VectorField, as_points, sqrt_spd
from .model import Diagnostics, MarketModel

TIE_TOL = 1e-9


# -- ordering ------------------------------------------------------------------

def order(x):
    """Sort simplex points ascending.

    Returns
    -------
    ordered : ndarray
        ``x`` sorted along the last axis.
    perm : ndarray of int
        ``perm[k]`` is the index of the coordinate in slot ``k``, so
        ``x[perm] == ordered``. Ties keep the original index order. The rank
        of coordinate ``i`` is ``argsort(perm)[i]``.
    """
    x = as_points(x)
    perm = np.argsort(x, axis=-1, kind="stable")
    return np.take_along_axis(x, perm, axis=-1), perm


def ranks(perm):
    """Inverse permutation: the slot of each original coordinate."""
    return np.argsort(perm, axis=-1, kind="stable")


def _gather_vec(v, r):
    return np.take_along_axis(v, r, axis=-1)


def _gather_mat(m, r):
    rows = np.take_along_axis(m, r[..., :, None], axis=-2)
    return np.take_along_axis(rows, r[..., None, :], axis=-1)


def _tie_gap(ordered):
    return np.min(np.diff(ordered, axis=-1), axis=-1)


# -- inputs --------------------------------------------------------------------

def ordered_simplex_integral(f, d, epsrel=1e-10):
    """Integral over the ordered simplex in the reduced chart ``y = x[:-1]``.

    Parameters
    ----------
    f : callable
        Vectorized on ambient points ``(n, d)``.
    d : int
        2 or 3.
    """
    if d == 2:
        val, _ = integrate.quad(lambda t: float(f(np.array([[t, 1.0 - t]]))[0]), 0.0, 0.5,
                                epsabs=1e-13, epsrel=epsrel, limit=200)
        return val
    if d == 3:
        def g(b, a):
            return float(f(np.array([[a, b, 1.0 - a - b]]))[0])

        val, _ = integrate.dblquad(g, 0.0, 1.0 / 3.0, lambda a: a, lambda a: 0.5 * (1.0 - a),
                                   epsabs=1e-12, epsrel=epsrel)
        return val
    raise ValidationError("ordered simplex quadrature is implemented for d = 2 and 3")


@dataclass(frozen=True)
class RankInputs:
    """Covariance and density on the ordered simplex.

    Attributes
    ----------
    kappa : CovarianceField
        Evaluated at ordered points only.
    q : ScalarField
        Density on the ordered simplex (reduced chart), unit mass.
    d : int
    tie_smooth : bool
        The symmetrized fields are C^2 across rank ties (true after the
        boundary blend), so derivatives may be taken there.
    """

    kappa: CovarianceField
    q: ScalarField
    d: int
    tie_smooth: bool = False

    def mass(self):
        return ordered_simplex_integral(self.q.value, self.d)

    def validate(self, mass_tol=1e-6, n_points=200, seed=0):
        """Check unit mass and tangent positive definiteness of ``kappa``."""
        m = self.mass()
        if abs(m - 1.0) > mass_tol:
            raise ValidationError(f"q has mass {m:.9g}, not 1")
        x, _ = order(Simplex(self.d).from_reduced(_random_reduced(self.d, n_points, seed)))
        P = Simplex(self.d).projector
        Q = P[:, :-1]
        k = np.einsum("ai,nab,bj->nij", Q, self.kappa.value(x), Q)
        if np.min(np.linalg.eigvalsh(k)) <= 0:
            raise ValidationError("kappa is not positive definite on the tangent space")
        if np.any(self.q.value(x) <= 0):
            raise ValidationError("q is not positive")
        return m


def _random_reduced(d, n, seed):
    u = np.random.default_rng(seed).dirichlet(np.ones(d), size=n)
    return u[:, :-1]


def symmetrize(inputs):
    """Extend ``(kappa, q)`` to a model on the whole simplex by sorting.

    ``c[i, j](x) = kappa[r_i, r_j](sorted x)`` and ``p(x) = q(sorted x) / d!``
    where ``r`` are the ranks. Derivatives use the locally constant
    permutation.

    Raises
    ------
    TieDerivative
        When a derivative is requested within ``1e-9`` of a rank tie and the
        inputs are not flagged ``tie_smooth``.
    """
    d = inputs.d
    log_fact = math.log(math.factorial(d))
    kappa, q = inputs.kappa, inputs.q

    def sorted_ranks(x, derivative):
        xs, perm = order(x)
        if derivative and not inputs.tie_smooth and np.any(_tie_gap(xs) <= TIE_TOL):
            raise TieDerivative("derivative requested at a rank tie")
        return xs, ranks(perm)

    def c_value(x):
        xs, r = sorted_ranks(x, False)
        return _gather_mat(kappa.value(xs), r)

    def c_div(x):
        xs, r = sorted_ranks(x, True)
        return _gather_vec(kappa.div(xs), r)

    def c_div_div(x):
        xs, _ = sorted_ranks(x, True)
        return kappa.div_div(xs)

    def p_log(x):
        xs, _ = sorted_ranks(x, False)
        return q.log(xs) - log_fact

    def p_grad_log(x):
        xs, r = sorted_ranks(x, True)
        return _gather_vec(q.grad_log(xs), r)

    def p_hess_log(x):
        xs, r = sorted_ranks(x, True)
        return _gather_mat(q.hess_log(xs), r)

    c = CovarianceField(c_value, c_div, c_div_div, smoothness=kappa.smoothness)
    p = ScalarField.from_log(p_log, p_grad_log, p_hess_log, smoothness=q.smoothness)
    return MarketModel(Simplex(d), c, p, name="symmetrized")


# -- the theta family -----------------------------------------------------------

@dataclass(frozen=True)
class ThetaParams:
    """Exponents of the boundary covariance ``theta``.

    Parameters
    ----------
    A, B, C : float
        Need ``C >= 0``, ``B <= A < 2B`` and ``A + C >= 2``.
    K : float, optional
        Exponent of the near-boundary generating function ``(prod x)^K``;
        defaults to ``min((A + C) / 2, 0.9 / d)``.
    """

    A: float = 2.0
    B: float = 2.0
    C: float = 0.0
    K: Optional[float] = None

    def __post_init__(self):
        failures = []
        if not self.C >= 0:
            failures.append("C >= 0")
        if not self.B <= self.A < 2 * self.B:
            failures.append("B <= A < 2B")
        if not self.A + self.C >= 2:
            failures.append("A + C >= 2")
        if self.K is not None and not self.K > 0:
            failures.append("K > 0")
        if failures:
            raise BadParams(failures)

    def exponent(self, d):
        """``K`` for dimension `d`, checking ``K d < 1``."""
        K = min((self.A + self.C) / 2.0, 0.9 / d) if self.K is None else float(self.K)
        if not K * d < 1:
            raise BadParams([f"K d < 1 (K = {K}, d = {d})"])
        return K

    def to_dict(self):
        return {"A": float(self.A), "B": float(self.B), "C": float(self.C),
                "K": None if self.K is None else float(self.K)}


def _pairwise(x, e):
    """``prod_{l != i, j} x_l^e`` as a ``(..., d, d)`` array (diagonal unused)."""
    xe = x**e
    total = np.prod(xe, axis=-1)[..., None, None]
    return total / (xe[..., :, None] * xe[..., None, :])


def theta(params):
    """The explicit covariance ``theta`` with closed-form divergences."""
    A, B, C = float(params.A), float(params.B), float(params.C)
    S = A + C

    def value(x):
        x = as_points(x)
        pc = np.prod(x**C, axis=-1)[..., None, None]
        ps = np.prod(x**(S - B), axis=-1)[..., None, None]
        xb = x**B
        out = xb[..., :, None] * xb[..., None, :] * ps
        d = x.shape[-1]
        idx = np.arange(d)
        out[..., idx, idx] = (x**A * pc[..., 0])
        return out

    def _parts(x):
        d = x.shape[-1]
        others_c = np.prod(x**C, axis=-1)[..., None] / x**C
        pair = _pairwise(x, S - B) * (x**(S - 1))[..., None, :]
        pair[..., np.arange(d), np.arange(d)] = 0.0
        return others_c, pair.sum(axis=-1)

    def div(x):
        x = as_points(x)
        others_c, cross = _parts(x)
        return S * (x**(S - 1) * others_c + x**S * cross)

    def div_div(x):
        x = as_points(x)
        others_c, cross = _parts(x)
        return S * np.sum((S - 1) * x**(S - 2) * others_c + S * x**(S - 1) * cross, axis=-1)

    return CovarianceField(value, div, div_div, smoothness=100)


def theta_potential(params):
    """``H(x) = (A + C) sum log x``, the potential of ``theta^{-1} div theta``."""
    S = float(params.A + params.C)

    def value(x):
        return S * np.sum(np.log(x), axis=-1)

    def grad(x):
        return S / x

    def hess(x):
        return -S * np.einsum("...i,ij->...ij", 1.0 / x**2, np.eye(x.shape[-1]))

    return ScalarField(value, grad, hess, smoothness=100)


def eigen_lower_bound(params, x):
    """``k(x) = prod x^C (1 - max x^(2B - A)) min(1, min x^A)``."""
    x = as_points(x)
    A, B, C = params.A, params.B, params.C
    return (np.prod(x**C, axis=-1) * (1.0 - np.max(x, axis=-1) ** (2 * B - A))
            * np.minimum(1.0, np.min(x, axis=-1) ** A))


def theta_factors(params, x):
    """``Y, Z`` with ``div theta_i = x_i Y_i`` and ``theta_ii = x_i^2 Z_i^2``."""
    x = as_points(x)
    th = theta(params)
    Y = th.div(x) / x
    Z = np.sqrt(np.einsum("...ii->...i", th.value(x))) / x
    return Y, Z


def theta_model(params, d):
    """Model ``(theta, uniform)`` on the simplex; its reversing drift is ``div theta / 2``."""
    dens = ScalarField.constant(float(math.factorial(d - 1)), d)
    return MarketModel(Simplex(d), theta(params), dens, potential=theta_potential(params),
                       name="theta")


def theta_market_spec(params, d=2, x0=None, dt=1e-3, T=50.0, seed=0, guard=None):
    """Euler-Maruyama problem for the theta market on the simplex.

    Off the simplex the drift is ``div theta / 2 = theta grad H / 2``. On
    the simplex both factors are taken on the tangent space, which makes
    this the reversing diffusion of :func:`theta_model`; the dispersion is
    the square root of ``P theta P``.
    """
    from .simulate import SdeSpec

    th = theta(params)
    dom = Simplex(d)
    P = dom.projector
    S = float(params.A + params.C)

    def tangent_theta(x):
        return P @ th.value(x) @ P

    def drift(x):
        return 0.5 * np.einsum("nij,nj->ni", tangent_theta(x), (S / x) @ P)

    def dispersion(x):
        return sqrt_spd(tangent_theta(x))

    x0 = np.full(d, 1.0 / d) if x0 is None else np.asarray(x0, dtype=float)
    return SdeSpec(dom, drift, dispersion, x0, dt, T, seed, guard, True)


# exponents of the bundled rank demo; with C = 0 the tangent noise does not
# vanish at the boundary and Euler steps of size 1e-3 overshoot it
THETA_MARKET_PARAMS = {"A": 2.0, "B": 2.0, "C": 2.0}
THETA_MARKET_BUDGET = {"paths": 8, "horizon": 50.0, "dt": 1e-3, "seed": 0}


# -- boundary modification ---------------------------------------------------------

def smoothstep(t):
    """Quintic smoothstep on [0, 1] with first and second derivatives."""
    t = np.clip(t, 0.0, 1.0)
    s = t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    ds = 30.0 * t**2 * (1.0 - t) ** 2
    dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return s, ds, dds


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth cutoff: 1 at distance >= delta from the ordered boundary, 0 within delta / 3.

    The profile is a product over the facets of the ordered simplex of a
    quintic smoothstep in the distance to that facet.
    """

    delta: float = 0.1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError("cutoff delta must be positive")

    def facet_normals(self, d):
        """Rows ``a`` with ``a . x`` the distance to each facet."""
        rows = [np.eye(d)[0] / math.sqrt(1.0 - 1.0 / d)]
        for i in range(d - 1):
            v = np.zeros(d)
            v[i], v[i + 1] = -1.0, 1.0
            rows.append(v / math.sqrt(2.0))
        return np.array(rows)

    def distance(self, x):
        """Distance of ordered points to the boundary of the ordered simplex."""
        x = as_points(x)
        return np.min(x @ self.facet_normals(x.shape[-1]).T, axis=-1)

    def evaluate(self, x):
        """Value, gradient and Hessian of the cutoff at ordered points."""
        x = as_points(x)
        d = x.shape[-1]
        a = self.facet_normals(d)
        w = 2.0 * self.delta / 3.0
        t = (x @ a.T - self.delta / 3.0) / w
        s, ds, dds = smoothstep(t)
        nf = a.shape[0]
        chi = np.prod(s, axis=-1)
        grad = np.zeros(x.shape)
        hess = np.zeros(x.shape + (d,))
        for f in range(nf):
            rest = np.prod(np.delete(s, f, axis=-1), axis=-1)
            grad += (ds[..., f] * rest / w)[..., None] * a[f]
            hess += (dds[..., f] * rest / w**2)[..., None, None] * np.outer(a[f], a[f])
            for g in range(nf):
                if g == f:
                    continue
                rest2 = np.prod(np.delete(s, [f, g], axis=-1), axis=-1)
                hess += (ds[..., f] * ds[..., g] * rest2 / w**2)[..., None, None] * np.outer(a[f], a[g])
        return chi, grad, hess

    def to_dict(self):
        return {"delta": self.delta, "band": [self.delta / 3.0, self.delta], "profile": "quintic_smoothstep"}


def modify(inputs, cutoff, params):
    """Blend ``(kappa, q)`` into ``(theta, constant)`` near the ordered boundary.

    ``kappa_V = chi kappa + (1 - chi) theta`` and
    ``q_V = chi q + (1 - chi) m`` with the constant ``m`` fixing unit mass.
    Where ``chi = 1`` the original values are returned unchanged.
    """
    d = inputs.d
    th = theta(params)
    kappa, q = inputs.kappa, inputs.q

    def chi_only(x):
        return cutoff.evaluate(x)[0]

    inner = ordered_simplex_integral(lambda x: chi_only(x) * q.value(x), d)
    outer = ordered_simplex_integral(lambda x: 1.0 - chi_only(x), d)
    level = (1.0 - inner) / outer
    if not level > 0:
        raise ValidationError("cutoff leaves no mass for the boundary region")

    def blend(x, a, b):
        chi = cutoff.evaluate(x)[0]
        shape = chi.shape + (1,) * (np.ndim(a) - chi.ndim)
        chi = chi.reshape(shape)
        return np.where(chi == 1.0, a, chi * a + (1.0 - chi) * b)

    def k_value(x):
        x = as_points(x)
        return blend(x, kappa.value(x), th.value(x))

    def k_div(x):
        x = as_points(x)
        chi, g, _ = cutoff.evaluate(x)
        diff = kappa.value(x) - th.value(x)
        base = blend(x, kappa.div(x), th.div(x))
        return base + np.einsum("...ij,...j->...i", diff, g)

    def k_div_div(x):
        x = as_points(x)
        chi, g, H = cutoff.evaluate(x)
        diff = kappa.value(x) - th.value(x)
        base = blend(x, kappa.div_div(x), th.div_div(x))
        return (base + 2.0 * np.einsum("...i,...i->...", g, kappa.div(x) - th.div(x))
                + np.einsum("...ij,...ij->...", H, diff))

    def q_value(x):
        x = as_points(x)
        return blend(x, q.value(x), np.full(x.shape[:-1], level))

    def q_grad(x):
        x = as_points(x)
        chi, g, _ = cutoff.evaluate(x)
        return chi[..., None] * q.grad(x) + (q.value(x) - level)[..., None] * g

    def q_hess(x):
        x = as_points(x)
        chi, g, H = cutoff.evaluate(x)
        qg = q.grad(x)
        return (chi[..., None, None] * q.hess(x) + g[..., :, None] * qg[..., None, :]
                + qg[..., :, None] * g[..., None, :] + (q.value(x) - level)[..., None, None] * H)

    def q_log(x):
        return np.log(q_value(x))

    def q_grad_log(x):
        return q_grad(x) / q_value(x)[..., None]

    def q_hess_log(x):
        v = q_value(x)[..., None, None]
        gl = q_grad_log(x)
        return q_hess(x) / v - gl[..., :, None] * gl[..., None, :]

    k_new = CovarianceField(k_value, k_div, k_div_div, smoothness=min(2, kappa.smoothness))
    q_new = ScalarField(q_value, q_grad, q_hess, q_log, q_grad_log, q_hess_log,
                        smoothness=min(2, q.smoothness))
    return RankInputs(k_new, q_new, d, tie_smooth=True)


def boundary_strategy(params, d=None):
    """``x -> K / x + (1 - K d)``: generated by ``(prod x)^K`` and fully invested."""
    if d is not None:
        params.exponent(d)

    def fn(x):
        K = params.exponent(x.shape[-1])
        return K / x + (1.0 - K * x.shape[-1])

    return VectorField(fn)


def fully_invested(theta_vec, x):
    """Shift a strategy along ``1`` so that ``sum x_i theta_i = 1``."""
    return theta_vec + (1.0 - np.einsum("...i,...i->...", x, theta_vec))[..., None]


# -- pipeline -----------------------------------------------------------------------

def _symmetric_phi(phi, d):
    """Average of a field over all coordinate permutations."""
    perms = [np.array(s) for s in permutations(range(d))]

    def value(x):
        x = as_points(x, d)
        return sum(phi.value(x[..., s]) for s in perms) / len(perms)

    def grad(x):
        x = as_points(x, d)
        total = np.zeros(x.shape)
        for s in perms:
            g = phi.grad(x[..., s])
            # d/dx_i phi(x[s]) = g_k where s[k] = i
            total += g[..., np.argsort(s)]
        return total / len(perms)

    def hess(x):
        x = as_points(x, d)
        H = np.empty(x.shape + (d,))
        h = 1e-5
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            H[..., :, k] = (grad(x + e) - grad(x - e)) / (2 * h)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    return ScalarField(value, grad, hess, smoothness=0)


@dataclass
class RankGrid:
    """Element level and cells per reduced axis for the rank pipeline."""

    level: int = 6
    cells: int = 512


def rank_pipeline(inputs, cutoff=None, params=None, grid=None, tol=1e-9):
    """Growth rate and strategy of a rank-based model.

    Steps: blend near the boundary (unless `cutoff` is None), symmetrize,
    solve the variational problem on the simplex, average the potential
    over coordinate permutations, and evaluate the growth rate both on the
    simplex and on the ordered simplex (restricted Gauss points with weight
    ``d!``, using ``kappa`` and ``q`` directly).

    Returns
    -------
    GeneratingFunction, GrowthReport
        The report's extra holds ``lambda_simplex``, ``lambda_ranked`` and
        their relative difference.
    """
    from .variational import DiscretePotential, assemble, energy, make_grid, solve_phi

    grid = grid or RankGrid()
    params = params or ThetaParams()
    model_inputs = inputs if cutoff is None else modify(inputs, cutoff, params)
    model = symmetrize(model_inputs)
    d = inputs.d
    g = make_grid(model, grid.level, grid.cells)
    system = assemble(g, model)
    pot = solve_phi(system, tol=tol)
    raw = pot.generating_function().phi
    nodes = g.node_points()
    sym_field = _symmetric_phi(raw, d)
    sym_values = sym_field.value(nodes)
    sym_values = sym_values - sym_values.mean()
    sym = DiscretePotential(sym_values, system, pot.iterations, pot.residual)
    lam_simplex = energy(sym, system) / 8.0
    lam_ranked = _ordered_energy(sym, system, model_inputs) / 8.0
    phi = _symmetric_phi(sym.generating_function().phi, d)
    gen = GeneratingFunction(phi, model)
    rel = abs(lam_simplex - lam_ranked) / max(abs(lam_simplex), 1e-300)
    extra = {
        "lambda_simplex": lam_simplex,
        "lambda_ranked": lam_ranked,
        "relative_difference": rel,
        "element": g.level,
        "h": g.spacing,
        "symmetry_defect": float(np.max(np.abs(sym_values - (pot.values - pot.values.mean())))),
        "theta_params": params.to_dict(),
        "cutoff": None if cutoff is None else cutoff.to_dict(),
    }
    report = GrowthReport(FINITE, lam_simplex, "variational", Diagnostics(), extra)
    report.potential = sym
    report.model = model
    return gen, report


def _ordered_energy(pot, system, inputs):
    """``d! * sum`` over Gauss points of ordered cells, with ``kappa`` and ``q``."""
    from .variational import _reference_basis

    grid = system.grid
    model = system.model
    m = grid.m
    gps, _, _ = _reference_basis(m, grid.h)
    y = grid.lower + (grid.cells[:, None, :] + gps[None]) * grid.h
    x = model.to_ambient(y.reshape(-1, m))
    ordered = np.all(np.diff(x, axis=-1) >= 0, axis=-1)
    xo = x[ordered]
    Q = model.domain.chart_matrix
    Ginv = np.linalg.inv(model.domain.metric)
    M = Q @ Ginv
    kr = np.einsum("ai,nab,bj->nij", M, inputs.kappa.value(xo), M)
    w = inputs.q.value(xo) * grid.cell_volume / len(gps)
    grads = system.gauss_gradients(pot.values).reshape(-1, m)[ordered]
    return float(np.sum(w * np.einsum("ni,nij,nj->n", grads, kr, grads)))


def rank_strategy(gen, x):
    """Fully invested strategy ``grad phi / 2`` shifted along ``1``."""
    x = as_points(x)
    return fully_invested(0.5 * gen.grad_phi(x), x)


def strategy_table(gen, d=2, n=101, path=None):
    """Strategy on the slice ``x = (t, ..., t, 1 - (d-1) t)``; optionally written to CSV."""
    t = np.linspace(0.0, 1.0 / (d - 1), n + 2)[1:-1]
    x = np.concatenate([np.repeat(t[:, None], d - 1, axis=1), (1.0 - (d - 1) * t)[:, None]], axis=1)
    s = rank_strategy(gen, x)
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k + 1}" for k in range(d)] + [f"strategy{k + 1}" for k in range(d)])
            for a, b in zip(x, s):
                w.writerow([repr(float(v)) for v in a] + [repr(float(v)) for v in b])
    return x, s


# -- demo inputs ------------------------------------------------------------------------

def ranked_volatility_inputs(sigmas=(1.0, 0.6), exponents=(2.0, 3.0)):
    """``kappa = diag(sigma_k^2 x_k^2)`` and ``q`` proportional to ``prod x_k^a_k`` on ordered points."""
    sig2 = np.asarray(sigmas, dtype=float) ** 2
    a = np.asarray(exponents, dtype=float)
    d = len(sig2)

    def kv(x):
        return np.einsum("...i,ij->...ij", sig2 * x**2, np.eye(d))

    def kdiv(x):
        return 2.0 * sig2 * x

    def kdd(x):
        return np.full(x.shape[:-1], 2.0 * sig2.sum())

    kappa = CovarianceField(kv, kdiv, kdd, smoothness=100)

    def raw_log(x):
        return np.sum(a * np.log(x), axis=-1)

    Z = ordered_simplex_integral(lambda x: np.exp(raw_log(x)), d)
    logZ = math.log(Z)
    q = ScalarField.from_log(
        lambda x: raw_log(x) - logZ,
        lambda x: a / x,
        lambda x: np.einsum("...i,ij->...ij", -a / x**2, np.eye(d)),
        smoothness=100,
    )
    return RankInputs(kappa, q, d)


def pure_theta_inputs(params, d=2):
    """``kappa = theta`` and uniform ``q`` on the ordered simplex."""
    return RankInputs(theta(params), ScalarField.constant(float(math.factorial(d) * math.factorial(d - 1)), d),
                      d, tie_smooth=True)
