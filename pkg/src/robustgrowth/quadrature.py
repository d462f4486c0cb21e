"""Quadrature over exhaustion elements and a tail test for their limits.

One-dimensional integrals use adaptive Gauss-Kronrod (``scipy.integrate.quad``)
piece by piece between consecutive element endpoints. Higher dimensional
integrals use a tensor midpoint rule with one Richardson step, on boxes
directly and on simplices through collapsed (Duffy) coordinates.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import GridTooCoarse

# a tail ratio at or above this value means the increments do not shrink
RATIO_CAP = 0.9
# increments below this fraction of the running total count as exhausted
NEGLIGIBLE = 1e-12
# absolute floor for adaptive quadrature (integrands of pure rounding noise)
EPSABS = 1e-14


@dataclass
class ExhaustionSequence:
    """Integrals over successive elements and what they say about the limit.

    Attributes
    ----------
    partials : ndarray
        Integral over ``E_1, E_2, ...``.
    status : str
        ``"converged"`` or ``"divergent"``.
    limit : float
        Integral over the whole domain (``inf`` when divergent).
    ratio : float
        Largest ratio of consecutive tail increments.
    """

    partials: np.ndarray
    status: str
    limit: float
    ratio: float

    @property
    def converged(self):
        return self.status == "converged"

    def to_dict(self):
        return {
            "partials": [float(v) for v in self.partials],
            "status": self.status,
            "limit": _json_float(self.limit),
            "ratio": _json_float(self.ratio),
        }


def _json_float(v):
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def classify_tail(partials, ratio_cap=RATIO_CAP, window=3):
    """Decide whether a sequence of exhaustion integrals converges.

    The last `window` increments are compared. Increments that are all
    negligible, or that shrink by a factor below `ratio_cap` at every step,
    indicate convergence; increments that never shrink below `ratio_cap`
    indicate divergence.

    Returns
    -------
    status : str
    ratio : float
        Largest observed ratio (0 when increments vanish).

    Raises
    ------
    GridTooCoarse
        When the increments neither shrink nor grow consistently.
    """
    partials = np.asarray(partials, dtype=float)
    if partials.size < window + 1:
        raise ValueError("need more exhaustion levels than the tail window")
    if not np.all(np.isfinite(partials)):
        return "divergent", math.inf
    inc = np.abs(np.diff(partials))[-window:]
    # an increment is negligible against the partial sums reached so far, so
    # that a single explosive last step does not hide the growth before it
    scale = np.maximum(np.maximum.accumulate(np.abs(partials))[1:][-window:], 1e-300)
    small = inc <= NEGLIGIBLE * scale
    if np.all(small):
        return "converged", 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = inc[1:] / inc[:-1]
    r = np.where(small[1:], 0.0, r)
    ratio = float(np.nanmax(r))
    if np.all(r < ratio_cap):
        return "converged", ratio
    if np.all(r >= ratio_cap):
        return "divergent", ratio
    raise GridTooCoarse(
        f"exhaustion increments oscillate (ratios {np.round(r, 4).tolist()})"
    )


def _scalarize(f):
    def g(t):
        return float(f(np.array([[t]]))[0])

    return g


def _quad(g, a, b, epsrel=1e-11):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(g, a, b, epsabs=EPSABS, epsrel=epsrel, limit=400)
            return val, True
        except integrate.IntegrationWarning:
            pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, a, b, epsabs=EPSABS, epsrel=epsrel, limit=400)
    return val, False


def interval_exhaustion(f, domain, levels=None, epsrel=1e-11):
    """Integrate a vectorized 1-D integrand over the elements of an interval.

    Parameters
    ----------
    f : callable
        Maps points of shape ``(n, 1)`` to values of shape ``(n,)``.
    domain : Interval
    levels : int, optional
        Number of elements, default all of them.

    Returns
    -------
    ExhaustionSequence
    """
    levels = levels or domain.levels
    g = _scalarize(f)
    ends = [domain.bounds(n) for n in range(1, levels + 1)]
    left = [a for a, _ in ends]
    right = [b for _, b in ends]
    core, _ = _quad(g, left[0], right[0], epsrel)
    partials = [core]
    lo_pieces, hi_pieces = [], []
    for n in range(1, levels):
        lo_pieces.append(_quad(g, left[n], left[n - 1], epsrel)[0])
        hi_pieces.append(_quad(g, right[n - 1], right[n], epsrel)[0])
        partials.append(partials[-1] + lo_pieces[-1] + hi_pieces[-1])
    partials = np.array(partials)
    status, ratio = classify_tail(partials)
    if status == "divergent":
        return ExhaustionSequence(partials, status, math.inf, ratio)
    limit = partials[-1]
    ok = True
    if left[-1] > domain.lower:
        val, good = _quad(g, domain.lower, left[-1], epsrel)
        limit += val
        ok &= good
    if right[-1] < domain.upper:
        val, good = _quad(g, right[-1], domain.upper, epsrel)
        limit += val
        ok &= good
    if not ok:
        # fall back to a geometric tail estimate from the last increment
        inc = abs(partials[-1] - partials[-2])
        limit = partials[-1] + (inc * ratio / (1 - ratio) if ratio > 0 else 0.0)
    return ExhaustionSequence(partials, status, float(limit), ratio)


def endpoint_divergence(f, domain, levels=None):
    """Test divergence of ``int f`` towards each endpoint separately.

    Returns a pair of :class:`ExhaustionSequence` for the lower and the
    upper end, each integrating from the exhaustion center outwards.
    """
    levels = levels or domain.levels
    g = _scalarize(f)
    out = []
    for side in (0, 1):
        pts = [domain.bounds(n)[side] for n in range(1, levels + 1)]
        partial = [abs(_quad(g, min(pts[0], domain.center), max(pts[0], domain.center))[0])]
        for n in range(1, levels):
            a, b = sorted((pts[n - 1], pts[n]))
            partial.append(partial[-1] + abs(_quad(g, a, b)[0]))
        partial = np.array(partial)
        status, ratio = classify_tail(partial)
        out.append(ExhaustionSequence(partial, status,
                                      math.inf if status == "divergent" else partial[-1], ratio))
    return tuple(out)


def midpoint_box(f, lo, hi, cells):
    """Tensor midpoint rule with one Richardson step.

    Parameters
    ----------
    f : callable
        Vectorized integrand on points ``(n, d)``.
    lo, hi : array_like
        Box corners.
    cells : int or sequence of int
        Coarse number of cells per axis; the fine rule doubles it.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    cells = np.broadcast_to(np.asarray(cells, dtype=int), lo.shape)

    def rule(m):
        axes = [lo[k] + (np.arange(m[k]) + 0.5) * (hi[k] - lo[k]) / m[k] for k in range(lo.size)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)
        vol = np.prod((hi - lo) / m)
        return _chunked_sum(f, mesh) * vol

    coarse = rule(cells)
    fine = rule(2 * cells)
    return (4.0 * fine - coarse) / 3.0


def _chunked_sum(f, pts, chunk=200_000):
    total = 0.0
    for s in range(0, len(pts), chunk):
        total += float(np.sum(f(pts[s:s + chunk])))
    return total


def simplex_reduced_points(m, cells):
    """Collapsed-coordinate midpoint nodes of the unit m-simplex.

    Returns points ``u`` of shape ``(n, m)`` in ``{u >= 0, sum u <= 1}``
    and their weights (including the Jacobian).
    """
    s_axes = [(np.arange(cells) + 0.5) / cells] * m
    s = np.stack(np.meshgrid(*s_axes, indexing="ij"), axis=-1).reshape(-1, m)
    u = np.empty_like(s)
    rest = np.ones(len(s))
    jac = np.ones(len(s))
    for k in range(m):
        u[:, k] = s[:, k] * rest
        if k < m - 1:
            jac *= (1.0 - s[:, k]) ** (m - 1 - k)
        rest = rest * (1.0 - s[:, k])
    return u, jac / cells**m


def midpoint_simplex(f, d, eps, cells=128):
    """Integrate over ``{x in simplex : min x >= eps}`` in reduced coordinates.

    `f` takes ambient points ``(n, d)``; the measure is Lebesgue in the
    first ``d - 1`` coordinates.
    """
    m = d - 1
    scale = 1.0 - d * eps

    def rule(c):
        u, w = simplex_reduced_points(m, c)
        y = eps + scale * u
        x = np.concatenate([y, 1.0 - y.sum(axis=1, keepdims=True)], axis=1)
        total = 0.0
        for s in range(0, len(x), 200_000):
            total += float(np.sum(f(x[s:s + 200_000]) * w[s:s + 200_000]))
        return total * scale**m

    coarse = rule(cells)
    fine = rule(2 * cells)
    return (4.0 * fine - coarse) / 3.0


def element_integral(f, domain, n, cells=None, spacing=0.1):
    """Integral of `f` over the n-th element of a box or simplex domain."""
    if domain.kind == "simplex":
        return midpoint_simplex(f, domain.d, domain.eps(n), cells or 128)
    lo, hi = domain.element(n)
    if cells is None:
        cells = [
            int(min(512, max(64, math.ceil((b - a) / spacing))))
            if not (math.isfinite(ax.lower) and math.isfinite(ax.upper)) else 128
            for a, b, ax in zip(lo, hi, domain.axes)
        ]
    return midpoint_box(f, lo, hi, cells)


def exhaustion_integral(f, domain, levels=None, cells=None, min_levels=5):
    """Partial integrals over successive elements with an early stop.

    One-dimensional domains are delegated to :func:`interval_exhaustion`.
    Otherwise levels are added until the tail is negligible (after at least
    `min_levels`) or `levels` is reached.
    """
    if domain.kind == "interval":
        return interval_exhaustion(f, domain, levels)
    if domain.kind == "box" and domain.dim == 1:
        return interval_exhaustion(f, domain.axes[0], levels)
    levels = levels or min(domain.levels, 8)
    partials = []
    for n in range(1, levels + 1):
        partials.append(element_integral(f, domain, n, cells))
        if n >= min_levels:
            inc = np.abs(np.diff(partials))[-3:]
            if np.all(inc <= NEGLIGIBLE * max(abs(partials[-1]), 1e-300)):
                break
    partials = np.array(partials)
    status, ratio = classify_tail(partials)
    if status == "divergent":
        return ExhaustionSequence(partials, status, math.inf, ratio)
    inc = abs(partials[-1] - partials[-2])
    tail = inc * ratio / (1 - ratio) if ratio > 0 else 0.0
    return ExhaustionSequence(partials, status, float(partials[-1] + tail), ratio)
