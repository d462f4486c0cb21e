"""Scalar, vector and covariance fields with analytic derivatives.

Every callable is vectorized over leading axes: points have shape
``(..., d)``, scalar values ``(...)``, gradients ``(..., d)`` and matrices
``(..., d, d)``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


def as_points(x, d=None):
    """Return `x` as a float array of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if d is not None and x.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {x.shape}")
    return x


def _outer(g):
    return g[..., :, None] * g[..., None, :]


@dataclass(frozen=True)
class ScalarField:
    """A C^k scalar field with value, gradient and Hessian.

    Fields that may underflow (densities far in the tails) should be built
    with :meth:`from_log` so that log-derivatives stay exact.

    Attributes
    ----------
    value, grad, hess : callable
        Point arrays to values, gradients and Hessians.
    log_fn, grad_log_fn, hess_log_fn : callable, optional
        Log-space counterparts; derived from the plain ones when missing.
    smoothness : int
        Declared order of differentiability.
    """

    value: Callable
    grad: Callable
    hess: Callable
    log_fn: Optional[Callable] = None
    grad_log_fn: Optional[Callable] = None
    hess_log_fn: Optional[Callable] = None
    smoothness: int = 2

    @classmethod
    def from_log(cls, log, grad_log, hess_log, smoothness=2):
        """Build a positive field ``exp(log)`` from its log and log-derivatives."""

        def value(x):
            return np.exp(log(x))

        def grad(x):
            return value(x)[..., None] * grad_log(x)

        def hess(x):
            g = grad_log(x)
            return value(x)[..., None, None] * (hess_log(x) + _outer(g))

        return cls(value, grad, hess, log, grad_log, hess_log, smoothness)

    @classmethod
    def constant(cls, value, d):
        """Constant field; its log is only available for positive values."""
        v = float(value)

        def val(x):
            return np.full(np.shape(x)[:-1], v)

        def grad(x):
            return np.zeros(np.shape(x))

        def hess(x):
            return np.zeros(np.shape(x) + (d,))

        if v > 0:
            lv = np.log(v)
            return cls(val, grad, hess, lambda x: np.full(np.shape(x)[:-1], lv),
                       grad, hess, smoothness=100)
        return cls(val, grad, hess, smoothness=100)

    def __call__(self, x):
        return self.value(as_points(x))

    def log(self, x):
        x = as_points(x)
        if self.log_fn is not None:
            return self.log_fn(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.value(x))

    def grad_log(self, x):
        x = as_points(x)
        if self.grad_log_fn is not None:
            return self.grad_log_fn(x)
        return self.grad(x) / self.value(x)[..., None]

    def hess_log(self, x):
        x = as_points(x)
        if self.hess_log_fn is not None:
            return self.hess_log_fn(x)
        v = self.value(x)[..., None, None]
        g = self.grad(x) / v[..., 0]
        return self.hess(x) / v - _outer(g)

    def scaled(self, k):
        """Return ``k * self`` for a constant ``k > 0``."""
        k = float(k)
        lk = np.log(k)
        return ScalarField(
            lambda x: k * self.value(x),
            lambda x: k * self.grad(x),
            lambda x: k * self.hess(x),
            lambda x: lk + self.log(x),
            self.grad_log,
            self.hess_log,
            self.smoothness,
        )


@dataclass(frozen=True)
class VectorField:
    """A vector valued field ``x -> (..., d)``."""

    fn: Callable

    def __call__(self, x):
        return self.fn(as_points(x))


def sqrt_spd(m):
    """Symmetric positive semidefinite square root of a batch of matrices.

    Closed forms are used for 1x1 and 2x2 blocks (they dominate simulation
    cost); larger blocks go through an eigendecomposition.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[-1]
    if d == 1:
        return np.sqrt(np.maximum(m, 0.0))
    if d == 2:
        a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
        s = np.sqrt(np.maximum(a * c - b * b, 0.0))
        t = np.sqrt(np.maximum(a + c + 2.0 * s, 0.0))
        t = np.where(t > 0, t, 1.0)
        out = np.empty_like(m)
        out[..., 0, 0] = (a + s) / t
        out[..., 1, 1] = (c + s) / t
        out[..., 0, 1] = out[..., 1, 0] = b / t
        return out
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.maximum(w, 0.0))
    return np.einsum("...ik,...k,...jk->...ij", v, w, v)


@dataclass(frozen=True)
class CovarianceField:
    """Symmetric matrix field with its row divergence and double divergence.

    Attributes
    ----------
    value : callable
        ``x -> (..., d, d)``.
    div : callable
        ``x -> (..., d)`` with ``div[i] = sum_j d_j c[i, j]``.
    div_div : callable
        ``x -> (...)`` with ``sum_ij d_i d_j c[i, j]``.
    """

    value: Callable
    div: Callable
    div_div: Callable
    smoothness: int = 2

    def __call__(self, x):
        return self.value(as_points(x))

    def sqrt(self, x):
        return sqrt_spd(self.value(as_points(x)))


def constant_covariance(matrix):
    """Spatially constant covariance."""
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    d = mat.shape[0]

    def value(x):
        return np.broadcast_to(mat, np.shape(x)[:-1] + (d, d)).copy()

    def div(x):
        return np.zeros(np.shape(x))

    def div_div(x):
        return np.zeros(np.shape(x)[:-1])

    return CovarianceField(value, div, div_div, smoothness=100)


def finite_difference_grad(f, x, h=1e-5):
    """Centered finite-difference gradient of a scalar callable.

    Used by diagnostics and by the tests as an independent oracle.
    """
    x = as_points(x)
    d = x.shape[-1]
    out = np.empty(x.shape)
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        out[..., k] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def finite_difference_div(f, x, h=1e-5):
    """Centered finite-difference divergence of a vector callable."""
    x = as_points(x)
    d = x.shape[-1]
    out = np.zeros(x.shape[:-1])
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        out += (f(x + e)[..., k] - f(x - e)[..., k]) / (2 * h)
    return out
