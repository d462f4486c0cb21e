"""Euler-Maruyama simulation of model diffusions and wealth accounting.

Drifts covered: the worst-case drift ``c grad u / u``, the reversing drift
``(c grad p / p + div c) / 2`` and divergence-free perturbations of the
latter, all of which keep ``p`` invariant. Wealth of a generated strategy
is computed both from the stochastic integral and from the pathwise
functional identity; the two must agree as ``dt -> 0``.
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import AllPathsExploded, NotDivergenceFree, ValidationError
from .fields import VectorField, as_points, finite_difference_div
from .model import random_interior_points
from .quadrature import _quad, _scalarize, midpoint_box

NOISE_CHUNK = 4096
BURN_IN = 0.1
N_BATCHES = 20


# -- drifts -------------------------------------------------------------------

def worst_case_drift(model, gen):
    """``x -> c(x) grad phi(x) / 2`` (tangent covariance on the simplex)."""

    def fn(x):
        return 0.5 * np.einsum("...ij,...j->...i", model.cov(x), gen.grad_phi(x))

    return VectorField(fn)


def reversing_drift(model):
    """``x -> (c grad p / p + div c) / 2``; ``c_T ell / 2`` on the simplex."""

    def fn(x):
        x = as_points(x, model.dim)
        if model.is_simplex:
            return 0.5 * np.einsum("...ij,...j->...i", model.cov(x), model.ell(x))
        c = model.c.value(x)
        return 0.5 * (np.einsum("...ij,...j->...i", c, model.p.grad_log(x)) + model.c.div(x))

    return VectorField(fn)


@dataclass(frozen=True)
class StreamFlux:
    """Planar flux ``gamma = (d2 psi, -d1 psi)`` with ``psi = s p g``.

    It is divergence free by construction. ``over_density`` returns
    ``gamma / p`` without dividing by a possibly underflowing density.

    Parameters
    ----------
    model : MarketModel
        Two-dimensional model supplying ``p``.
    g, grad_g : callable
        Shape function and its gradient.
    strength : float
    """

    model: object
    g: object
    grad_g: object
    strength: float = 1.0

    def over_density(self, x):
        x = as_points(x, 2)
        gl = self.model.p.grad_log(x)
        gv = self.g(x)
        dg = self.grad_g(x)
        a = gv * gl[..., 1] + dg[..., 1]
        b = -(gv * gl[..., 0] + dg[..., 0])
        return self.strength * np.stack([a, b], axis=-1)

    def __call__(self, x):
        x = as_points(x, 2)
        return self.model.density_value(x)[..., None] * self.over_density(x)


def rotation_flux(model, strength=1.0):
    """Stream function ``s p``: a rigid rotation of the density level sets."""
    return StreamFlux(model, lambda x: np.ones(x.shape[:-1]), lambda x: np.zeros(x.shape), strength)


def linear_flux(model, strength=1.0, axis=0):
    """Stream function ``s p x^axis``."""

    def grad_g(x):
        out = np.zeros(x.shape)
        out[..., axis] = 1.0
        return out

    return StreamFlux(model, lambda x: x[..., axis], grad_g, strength)


def perturbed_drift(model, gamma, n_check=200, seed=0, tol=1e-6, h=1e-5):
    """Reversing drift plus ``gamma / p`` for a divergence-free flux ``gamma``.

    Raises
    ------
    NotDivergenceFree
        If the centered-difference divergence of ``gamma`` exceeds `tol` at
        random interior points.
    """
    pts = random_interior_points(model, n_check, seed)
    div = finite_difference_div(lambda x: gamma(x), pts, h)
    if np.max(np.abs(div)) > tol:
        raise NotDivergenceFree(f"max |div gamma| = {np.max(np.abs(div)):.3g}")
    over = getattr(gamma, "over_density", None)
    if over is None:
        def over(x):
            return gamma(x) / model.density_value(x)[..., None]
    ratio = over(pts)
    if not np.all(np.isfinite(ratio)):
        raise ValidationError("gamma / p is not finite on the guard element")
    base = reversing_drift(model)
    return VectorField(lambda x: base(x) + over(x))


# -- specification and simulation --------------------------------------------

@dataclass
class SdeSpec:
    """Euler-Maruyama problem.

    Attributes
    ----------
    domain : Interval, Box or Simplex
    drift : callable
        ``(n, d) -> (n, d)``.
    dispersion : callable
        ``(n, d) -> (n, d, d)``, a square root of the covariance.
    x0 : ndarray
        Start point ``(d,)`` or one per path ``(n_paths, d)``.
    dt, T : float
    seed : int
    guard : int
        Exhaustion element whose exit aborts a path.
    renormalize : bool
        Project back onto the simplex after every step.
    """

    domain: object
    drift: object
    dispersion: object
    x0: np.ndarray
    dt: float = 1e-3
    T: float = 2000.0
    seed: int = 0
    guard: Optional[int] = None
    renormalize: Optional[bool] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.guard is None:
            self.guard = self.domain.levels
        if self.renormalize is None:
            self.renormalize = self.domain.kind == "simplex"
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T):
            raise ValidationError("need 0 < dt <= T")
        x0 = np.atleast_2d(self.x0)
        if not np.all(self.domain.inside(x0, self.guard)):
            raise ValidationError("x0 must lie in the guard element")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))


def guard_predicate(domain, guard):
    """Fast membership test for the guard element (False for NaN rows)."""
    if domain.kind == "simplex":
        return lambda x: domain.inside(x, guard)
    lo, hi = domain.element(guard)
    if lo.size == 1:
        a, b = float(lo[0]), float(hi[0])
        return lambda x: (x[:, 0] >= a) & (x[:, 0] <= b)
    return lambda x: np.all((x >= lo) & (x <= hi), axis=-1)


def sample_stationary(model, n, seed=0, level=None):
    """Draw `n` points from ``p``: inverse CDF in 1-D, rejection otherwise."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    dom = model.domain
    if model.reduced_dim == 1 and not model.is_simplex:
        grid, cdf = tabulated_cdf(model)
        return np.interp(rng.random(n), cdf, grid)[:, None]
    level = level or min(dom.levels, 5)
    probe = random_interior_points(model, 20_000, seed=int(seed) + 7, level=level)
    bound = 1.5 * float(np.max(model.density_value(probe)))
    out = []
    while sum(len(o) for o in out) < n:
        cand = random_interior_points(model, 4096, seed=int(rng.integers(2**31)), level=level)
        keep = rng.random(len(cand)) * bound < model.density_value(cand)
        out.append(cand[keep])
    return np.concatenate(out)[:n]


def tabulated_cdf(model, per_piece=400):
    """Cumulative distribution of a 1-D density on the largest element."""
    dom = model.domain if model.domain.kind == "interval" else model.domain.axes[0]
    ends = sorted({v for n in range(1, dom.levels + 1) for v in dom.bounds(n)})
    pts = np.unique(np.concatenate([np.linspace(a, b, per_piece) for a, b in zip(ends[:-1], ends[1:])]))
    dens = model.density_value(pts[:, None])
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(pts))])
    return pts, cdf / cdf[-1]


def model_sde(model, drift, x0="stationary", dt=1e-3, T=2000.0, seed=0, guard=None, n_paths=8):
    """Specification for a diffusion with the model's covariance."""
    if isinstance(x0, str):
        if x0 != "stationary":
            raise ValidationError(f"unknown start {x0!r}")
        x0 = sample_stationary(model, n_paths, seed)
        guard = guard or model.domain.levels
        inside = model.domain.inside(x0, guard)
        x0[~inside] = np.median(x0[inside], axis=0) if inside.any() else x0[~inside]
    return SdeSpec(model.domain, drift, model.sqrt_cov, np.asarray(x0, dtype=float), dt, T, seed, guard)


@dataclass
class PathBundle:
    """Recorded trajectories.

    Attributes
    ----------
    times : ndarray
        ``(n_rec,)`` recording times.
    states : ndarray
        ``(n_paths, n_rec, d)``; NaN after a path's exit.
    exploded : ndarray of bool
    exit_time : ndarray
        NaN for surviving paths.
    """

    times: np.ndarray
    states: np.ndarray
    exploded: np.ndarray
    exit_time: np.ndarray
    seed: int
    dt: float
    T: float
    record_every: int = 1

    @property
    def n_paths(self):
        return self.states.shape[0]

    def to_csv(self, path, every=1):
        d = self.states.shape[2]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "time"] + [f"x{k + 1}" for k in range(d)])
            for i in range(self.n_paths):
                for j in range(0, len(self.times), every):
                    w.writerow([i, repr(float(self.times[j]))] + [repr(float(v)) for v in self.states[i, j]])


def simulate(spec, n_paths, record_every=1, raise_on_explosion=True):
    """Euler-Maruyama paths with an exit guard.

    Each path draws its Gaussian increments from its own stream, spawned
    from ``spec.seed`` by path index, in fixed-size chunks; results do not
    depend on how many paths are run together.

    Raises
    ------
    AllPathsExploded
        If every path leaves the guard element before ``T / 2`` (and
        `raise_on_explosion`); the bundle is attached to the error.
    """
    dom = spec.domain
    x0 = np.broadcast_to(np.atleast_2d(spec.x0), (n_paths, dom.dim)).astype(float)
    d = x0.shape[1]
    n_steps = spec.n_steps
    dt = spec.dt
    sq = math.sqrt(dt)
    n_rec = n_steps // record_every + 1
    states = np.empty((n_paths, n_rec, d))
    states[:, 0] = x0
    gens = [np.random.default_rng(s) for s in np.random.SeedSequence(int(spec.seed)).spawn(n_paths)]
    alive = np.ones(n_paths, dtype=bool)
    exit_time = np.full(n_paths, np.nan)
    x = x0.copy()
    inside = guard_predicate(dom, spec.guard)
    rec = 1
    step = 0
    while step < n_steps and alive.any():
        k = min(NOISE_CHUNK, n_steps - step)
        noise = np.stack([g.standard_normal((k, d)) for g in gens], axis=1) * sq
        for j in range(k):
            b = spec.drift(x)
            s = spec.dispersion(x)
            if d == 1:
                x = x + b * dt + s[:, :, 0] * noise[j]
            else:
                x = x + b * dt + np.einsum("nij,nj->ni", s, noise[j])
            if spec.renormalize:
                x = x / x.sum(axis=1, keepdims=True)
            step += 1
            ok = inside(x)
            if not ok[alive].all():
                dead = alive & ~ok
                exit_time[dead] = step * dt
                alive &= ok
                x[dead] = x0[dead]
            if step % record_every == 0:
                states[:, rec] = np.where(alive[:, None], x, np.nan)
                rec += 1
    if rec < n_rec:
        states[:, rec:] = np.nan
    bundle = PathBundle(np.arange(n_rec) * dt * record_every, states, ~alive, exit_time,
                        spec.seed, dt, spec.T, record_every)
    if raise_on_explosion and not alive.any() and np.nanmax(exit_time) < spec.T / 2:
        raise AllPathsExploded(f"all {n_paths} paths left the guard element before T/2", bundle)
    return bundle


# -- wealth --------------------------------------------------------------------

def batch_means(series, dt_rec, burn_in=BURN_IN, n_batches=N_BATCHES, level=0.95):
    """Batch-means confidence interval for the long-run slope of `series`.

    Parameters
    ----------
    series : ndarray
        ``(n_paths, n_rec)`` cumulative series.
    dt_rec : float
        Time between records.

    Returns
    -------
    center, half_width : float
    rates : ndarray
        Slope over each batch of each path.
    """
    n_rec = series.shape[1]
    start = int(math.ceil(burn_in * (n_rec - 1)))
    edges = np.linspace(start, n_rec - 1, n_batches + 1).round().astype(int)
    span = np.diff(edges) * dt_rec
    rates = (series[:, edges[1:]] - series[:, edges[:-1]]) / span
    rates = rates[np.all(np.isfinite(rates), axis=1)].ravel()
    n = rates.size
    if n < 2:
        return float("nan"), float("nan"), rates
    center = float(np.mean(rates))
    half = float(stats.t.ppf(0.5 + level / 2, n - 1) * np.std(rates, ddof=1) / math.sqrt(n))
    return center, half, rates


@dataclass
class WealthSeries:
    """Log-wealth of a generated strategy along simulated paths.

    Attributes
    ----------
    times : ndarray
    log_wealth_ito, log_wealth_functional : ndarray
        ``(n_paths, n_rec)``; NaN after a path's exit.
    growth_estimate : float
        Mean over surviving paths of terminal log-wealth over ``T``.
    batch_ci : float
        95% batch-means half-width; the interval is centered at
        ``ci_center``.
    terminal_gap : float
        Root mean square terminal difference of the two accountings.
    """

    times: np.ndarray
    log_wealth_ito: np.ndarray
    log_wealth_functional: np.ndarray
    growth_estimate: float
    growth_functional: float
    ci_center: float
    batch_ci: float
    terminal_gap: float

    def contains(self, value):
        return abs(value - self.ci_center) <= self.batch_ci

    def summary(self):
        return {
            "growth_estimate": self.growth_estimate,
            "growth_functional": self.growth_functional,
            "ci_center": self.ci_center,
            "ci_half_width": self.batch_ci,
            "terminal_gap": self.terminal_gap,
        }

    def to_csv(self, path, every=1):
        n_paths = self.log_wealth_ito.shape[0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "time", "log_wealth_ito", "log_wealth_functional"])
            for i in range(n_paths):
                for j in range(0, len(self.times), every):
                    w.writerow([i, repr(float(self.times[j])), repr(float(self.log_wealth_ito[i, j])),
                                repr(float(self.log_wealth_functional[i, j]))])


def wealth(paths, gen, model, chunk=200_000):
    """Both log-wealth accountings of the strategy generated by `gen`.

    The stochastic integral uses left-point sums over the recorded
    increments, so ``record_every = 1`` gives the exact discrete wealth.
    """
    X = paths.states
    n_paths, n_rec, d = X.shape
    dt = paths.dt * paths.record_every
    ito = np.zeros((n_paths, n_rec))
    func = np.zeros((n_paths, n_rec))
    phi0 = gen.phi.value(X[:, :1].reshape(-1, d)).reshape(n_paths)
    for i in range(n_paths):
        acc_i, acc_f = 0.0, 0.0
        for s in range(0, n_rec - 1, chunk):
            e = min(s + chunk, n_rec - 1)
            xs = X[i, s:e]
            good = np.all(np.isfinite(xs), axis=1)
            xs_eval = np.where(good[:, None], xs, X[i, 0])
            dx = X[i, s + 1:e + 1] - xs
            theta = gen.strategy(xs_eval)
            c = model.cov(xs_eval)
            inc = (np.einsum("ni,ni->n", theta, dx)
                   - 0.5 * np.einsum("ni,nij,nj->n", theta, c, theta) * dt)
            gen_ratio = gen.generator_ratio(xs_eval) * dt
            inc = np.where(good, inc, np.nan)
            gen_ratio = np.where(good, gen_ratio, np.nan)
            ito[i, s + 1:e + 1] = acc_i + np.cumsum(inc)
            cum_g = acc_f + np.cumsum(gen_ratio)
            acc_i = ito[i, e]
            acc_f = cum_g[-1]
            nxt = X[i, s + 1:e + 1]
            ok = np.all(np.isfinite(nxt), axis=1)
            phi = np.full(len(nxt), np.nan)
            if ok.any():
                phi[ok] = gen.phi.value(nxt[ok])
            func[i, s + 1:e + 1] = 0.5 * (phi - phi0[i]) - cum_g
    T = paths.times[-1]
    keep = ~paths.exploded
    g_ito = float(np.mean(ito[keep, -1]) / T) if keep.any() else float("nan")
    g_fun = float(np.mean(func[keep, -1]) / T) if keep.any() else float("nan")
    center, half, _ = batch_means(ito[keep], dt)
    gap = float(np.sqrt(np.mean((ito[keep, -1] - func[keep, -1]) ** 2))) if keep.any() else float("nan")
    return WealthSeries(paths.times, ito, func, g_ito, g_fun, center, half, gap)


# -- occupancy -------------------------------------------------------------------

@dataclass
class OccupancyHistogram:
    """Time-averaged bin masses against the reference masses of ``p``.

    For ``d >= 2`` the bins are the product of per-axis ``edges`` (reduced
    chart on the simplex) and the masses are flattened in C order.
    """

    edges: list
    empirical: np.ndarray
    reference: np.ndarray
    tv_distance: float
    burn_in: float = BURN_IN

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if len(self.edges) == 1:
                e = self.edges[0]
                w.writerow(["left", "right", "empirical_mass", "reference_mass"])
                for k in range(len(self.empirical)):
                    w.writerow([repr(float(e[k])), repr(float(e[k + 1])),
                                repr(float(self.empirical[k])), repr(float(self.reference[k]))])
            else:
                shape = tuple(len(e) - 1 for e in self.edges)
                m = len(shape)
                w.writerow([f"{s}{k + 1}" for k in range(m) for s in ("left", "right")]
                           + ["empirical_mass", "reference_mass"])
                for flat, idx in enumerate(np.ndindex(*shape)):
                    row = []
                    for k, i in enumerate(idx):
                        row += [repr(float(self.edges[k][i])), repr(float(self.edges[k][i + 1]))]
                    w.writerow(row + [repr(float(self.empirical[flat])), repr(float(self.reference[flat]))])

    def summary(self):
        return {"tv_distance": self.tv_distance, "bins": int(self.empirical.size), "burn_in": self.burn_in}


def default_bins(model, n_bins=None):
    """Equal-mass bins in 1-D; equal-width inner bins per axis otherwise."""
    if model.reduced_dim == 1 and not model.is_simplex:
        n_bins = n_bins or 20
        grid, cdf = tabulated_cdf(model)
        inner = np.interp(np.arange(1, n_bins) / n_bins, cdf, grid)
        dom = model.domain if model.domain.kind == "interval" else model.domain.axes[0]
        return [np.concatenate([[dom.lower], inner, [dom.upper]])]
    n_bins = n_bins or 8
    if model.is_simplex:
        return [np.linspace(0.0, 1.0, n_bins + 1) for _ in range(model.reduced_dim)]
    lo, hi = model.domain.element(min(3, model.domain.levels))
    out = []
    for k, ax in enumerate(model.domain.axes):
        e = np.linspace(lo[k], hi[k], n_bins + 1)
        e[0], e[-1] = ax.lower, ax.upper
        out.append(e)
    return out


def _bin_index(edges, y):
    idx = np.zeros(len(y), dtype=np.int64)
    for k, e in enumerate(edges):
        i = np.clip(np.searchsorted(e, y[:, k], side="right") - 1, 0, len(e) - 2)
        idx = idx * (len(e) - 1) + i
    return idx


def reference_masses(model, edges):
    """Mass of ``p`` in each bin (normalized to sum to one)."""
    shape = tuple(len(e) - 1 for e in edges)
    if len(edges) == 1 and not model.is_simplex:
        g = _scalarize(model.density_value)
        e = edges[0]
        mass = np.array([_quad(g, e[k], e[k + 1])[0] for k in range(len(e) - 1)])
        return mass / mass.sum()
    dom = model.domain
    lv = min(dom.levels, 6)
    box_lo, box_hi = dom.element(lv) if not model.is_simplex else (np.zeros(model.reduced_dim),
                                                                    np.ones(model.reduced_dim))

    def f(y):
        x = model.to_ambient(y)
        if model.is_simplex:
            ok = np.all(x > 0, axis=-1)
            out = np.zeros(len(y))
            out[ok] = model.density_value(x[ok])
            return out
        return model.density_value(x)

    mass = np.zeros(int(np.prod(shape)))
    for flat, idx in enumerate(np.ndindex(*shape)):
        lo = np.array([max(edges[k][i], box_lo[k]) for k, i in enumerate(idx)])
        hi = np.array([min(edges[k][i + 1], box_hi[k]) for k, i in enumerate(idx)])
        if np.all(hi > lo):
            mass[flat] = midpoint_box(f, lo, hi, 16)
    return mass / mass.sum()


def occupancy(paths, model, bins=None, burn_in=BURN_IN):
    """Occupancy histogram of the surviving paths after a burn-in fraction."""
    edges = default_bins(model) if bins is None else [np.asarray(e, dtype=float) for e in
                                                       (bins if isinstance(bins, (list, tuple)) else [bins])]
    n_rec = paths.states.shape[1]
    start = int(math.ceil(burn_in * (n_rec - 1)))
    n_bins = int(np.prod([len(e) - 1 for e in edges]))
    masses = []
    for i in np.flatnonzero(~paths.exploded):
        y = model.to_chart(paths.states[i, start:])
        counts = np.bincount(_bin_index(edges, y), minlength=n_bins).astype(float)
        masses.append(counts / counts.sum())
    emp = np.mean(masses, axis=0) if masses else np.full(n_bins, np.nan)
    ref = reference_masses(model, edges)
    tv = 0.5 * float(np.sum(np.abs(emp - ref)))
    return OccupancyHistogram(edges, emp, ref, tv, burn_in)
