"""State domains and their exhaustions by nested compact elements.

Three kinds are supported: an interval on the extended real line, a box
(product of intervals) and the open unit simplex in ``d`` coordinates.
Elements are indexed ``n = 1 .. levels`` and grow with ``n``.

Simplex densities are understood with respect to Lebesgue measure in the
first ``d - 1`` coordinates (the reduced chart), so the uniform density on
the simplex equals ``(d - 1)!``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

DEFAULT_LEVELS = 12


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lower, upper)`` with ``lower``/``upper`` possibly infinite.

    Parameters
    ----------
    lower, upper : float
        Endpoints, ``-inf``/``inf`` allowed.
    center : float, optional
        Anchor point of the exhaustion; defaults to the midpoint of a
        bounded interval, ``lower + 1`` or ``upper - 1`` for half lines and
        0 for the whole line.
    scale : float
        Half-width of the first element on infinite sides.
    levels : int
        Number of exhaustion elements.
    """

    lower: float = -math.inf
    upper: float = math.inf
    center: float = None
    scale: float = 1.0
    levels: int = DEFAULT_LEVELS
    kind: str = field(default="interval", init=False)

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValidationError(f"interval needs lower < upper, got ({self.lower}, {self.upper})")
        if self.center is None:
            lo, hi = self.lower, self.upper
            if math.isfinite(lo) and math.isfinite(hi):
                c = 0.5 * (lo + hi)
            elif math.isfinite(lo):
                c = lo + 1.0
            elif math.isfinite(hi):
                c = hi - 1.0
            else:
                c = 0.0
            object.__setattr__(self, "center", c)
        if not self.lower < self.center < self.upper:
            raise ValidationError("exhaustion center must be interior")
        if self.scale <= 0 or self.levels < 1:
            raise ValidationError("scale must be positive and levels >= 1")

    dim = 1
    reduced_dim = 1

    def bounds(self, n):
        """Endpoints ``(a_n, b_n)`` of the n-th element."""
        if math.isfinite(self.lower):
            a = self.lower + (self.center - self.lower) * 2.0 ** (-n)
        else:
            a = self.center - self.scale * 2.0 ** (n - 1)
        if math.isfinite(self.upper):
            b = self.upper - (self.upper - self.center) * 2.0 ** (-n)
        else:
            b = self.center + self.scale * 2.0 ** (n - 1)
        return a, b

    def element(self, n):
        a, b = self.bounds(n)
        return np.array([a]), np.array([b])

    def inside(self, x, n=None):
        x = np.asarray(x, dtype=float)[..., 0]
        if n is None:
            return (x > self.lower) & (x < self.upper)
        a, b = self.bounds(n)
        return (x >= a) & (x <= b)


@dataclass(frozen=True)
class Box:
    """Product of open intervals."""

    axes: tuple
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if len(self.axes) < 1:
            raise ValidationError("box needs at least one axis")
        if len({ax.levels for ax in self.axes}) != 1:
            raise ValidationError("box axes must share the number of levels")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def reduced_dim(self):
        return len(self.axes)

    @property
    def levels(self):
        return self.axes[0].levels

    def element(self, n):
        b = [ax.bounds(n) for ax in self.axes]
        return np.array([t[0] for t in b]), np.array([t[1] for t in b])

    def inside(self, x, n=None):
        x = np.asarray(x, dtype=float)
        if n is None:
            lo = np.array([ax.lower for ax in self.axes])
            hi = np.array([ax.upper for ax in self.axes])
            return np.all((x > lo) & (x < hi), axis=-1)
        lo, hi = self.element(n)
        return np.all((x >= lo) & (x <= hi), axis=-1)


@dataclass(frozen=True)
class Simplex:
    """Open unit simplex ``{x in R^d : sum x = 1, min x > 0}``.

    Elements are ``{min_i x^i >= eps0 / 2**n}``.
    """

    d: int
    eps0: float = None
    levels: int = DEFAULT_LEVELS
    kind: str = field(default="simplex", init=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError("simplex needs d >= 2")
        if self.eps0 is None:
            object.__setattr__(self, "eps0", 0.5 / self.d)
        if not 0 < self.eps0 < 1.0 / self.d:
            raise ValidationError("simplex eps0 must lie in (0, 1/d)")

    @property
    def dim(self):
        return self.d

    @property
    def reduced_dim(self):
        return self.d - 1

    def eps(self, n):
        return self.eps0 * 2.0 ** (-n)

    def element(self, n):
        """Bounding box of the n-th element in reduced coordinates."""
        e = self.eps(n)
        m = self.d - 1
        return np.full(m, e), np.full(m, 1.0 - m * e)

    def inside(self, x, n=None):
        x = np.asarray(x, dtype=float)
        on_plane = np.abs(x.sum(axis=-1) - 1.0) <= 1e-9
        if n is None:
            return on_plane & (x.min(axis=-1) > 0)
        return on_plane & (x.min(axis=-1) >= self.eps(n))

    # chart ---------------------------------------------------------------
    def to_reduced(self, x):
        return np.asarray(x, dtype=float)[..., :-1]

    def from_reduced(self, y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([y, 1.0 - y.sum(axis=-1, keepdims=True)], axis=-1)

    @property
    def chart_matrix(self):
        """``Q = dx/dy``, shape ``(d, d-1)``."""
        m = self.d - 1
        return np.vstack([np.eye(m), -np.ones((1, m))])

    @property
    def metric(self):
        """``G = Q'Q``."""
        q = self.chart_matrix
        return q.T @ q

    @property
    def projector(self):
        """Orthogonal projector onto the zero-sum tangent space."""
        d = self.d
        return np.eye(d) - np.ones((d, d)) / d


def to_reduced(domain, x):
    if domain.kind == "simplex":
        return domain.to_reduced(x)
    return np.asarray(x, dtype=float)


def from_reduced(domain, y):
    if domain.kind == "simplex":
        return domain.from_reduced(y)
    return np.asarray(y, dtype=float)


def uniform_points(domain, n_points, rng, level=None):
    """Uniform random points in an exhaustion element (default: the third)."""
    if level is None:
        level = min(3, domain.levels)
    if domain.kind == "simplex":
        e = domain.eps(level)
        u = rng.dirichlet(np.ones(domain.d), size=n_points)
        return e + (1.0 - domain.d * e) * u
    lo, hi = domain.element(level)
    return lo + (hi - lo) * rng.random((n_points, len(lo)))
