"""Discrete minimization of ``J(phi) = int (grad phi - ell)' c (grad phi - ell) p``.

The potential is continuous and multilinear on each cell of a Cartesian
lattice covering an exhaustion element (reduced chart on the simplex).
Cell integrals use tensor Gauss-Legendre points, so the stiffness matrix is
symmetric positive semidefinite, its kernel is the constants, and the
zero conormal flux condition on the element boundary is natural. Row ``i``
of the system is the flux balance of ``p c (grad phi - ell)`` over the dual
cell of node ``i``.
"""

import csv
import math
import warnings
from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import linalg as splinalg

from .analytic import FINITE, INFINITE, GeneratingFunction, GrowthReport
from .errors import NoConvergence, NonSymmetricAssembly
from .fields import ScalarField, as_points
from .model import Diagnostics
from .quadrature import exhaustion_integral

DIRECT_LIMIT = 200_000
GAUSS_1D = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


@dataclass
class Grid:
    """Active cells and nodes of a lattice covering one exhaustion element.

    Attributes
    ----------
    level : int
        Exhaustion element index.
    lower, h : ndarray
        Lattice origin and spacing per reduced axis.
    shape : tuple
        Number of cells per axis.
    cells : ndarray
        ``(n_cells, m)`` lattice indices of active cells.
    nodes : ndarray
        ``(n_nodes, m)`` lattice indices of active nodes.
    cell_nodes : ndarray
        ``(n_cells, 2**m)`` node ids of each cell's corners.
    faces : dict
        Boundary faces: ``centers``, unit ``normals`` and ``areas``.
    """

    domain: object
    level: int
    lower: np.ndarray
    h: np.ndarray
    shape: tuple
    cells: np.ndarray
    nodes: np.ndarray
    cell_nodes: np.ndarray
    node_lookup: np.ndarray
    faces: dict

    @property
    def m(self):
        return len(self.shape)

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def spacing(self):
        return float(np.max(self.h))

    def node_coords(self):
        """Reduced coordinates of active nodes."""
        return self.lower + self.nodes * self.h

    def node_points(self):
        """Ambient coordinates of active nodes."""
        y = self.node_coords()
        if self.domain.kind == "simplex":
            return self.domain.from_reduced(y)
        return y


def _corner_offsets(m):
    return np.array(list(product((0, 1), repeat=m)), dtype=int)


def make_grid(model, level=None, cells=64, bounds=None):
    """Lattice on the exhaustion element `level` of the model's domain.

    Parameters
    ----------
    model : MarketModel
    level : int, optional
        Element index; defaults to the domain's largest element.
    cells : int or sequence of int
        Cells per reduced axis.
    bounds : tuple of arrays, optional
        Explicit reduced box ``(lo, hi)`` overriding the element (intervals
        and boxes only).
    """
    dom = model.domain
    level = dom.levels if level is None else int(level)
    m = model.reduced_dim
    shape = tuple(int(c) for c in np.broadcast_to(np.asarray(cells), (m,)))
    simplex = dom.kind == "simplex"
    if bounds is not None:
        lo, hi = (np.asarray(b, dtype=float).reshape(m) for b in bounds)
    else:
        lo, hi = dom.element(level)
    h = (hi - lo) / np.array(shape)
    all_cells = np.array(list(np.ndindex(*shape)), dtype=int).reshape(-1, m)
    offsets = _corner_offsets(m)
    if simplex:
        eps = dom.eps(level)
        corner_sum = (lo + (all_cells[:, None, :] + offsets[None]) * h).sum(axis=-1)
        active = np.all(corner_sum <= 1.0 - eps + 1e-12, axis=1)
        cells_idx = all_cells[active]
    else:
        cells_idx = all_cells
    node_shape = tuple(s + 1 for s in shape)
    used = np.zeros(node_shape, dtype=bool)
    corners = cells_idx[:, None, :] + offsets[None]
    used[tuple(corners.reshape(-1, m).T)] = True
    lookup = -np.ones(node_shape, dtype=np.int64)
    nodes = np.argwhere(used)
    lookup[tuple(nodes.T)] = np.arange(len(nodes))
    cell_nodes = lookup[tuple(corners.reshape(-1, m).T)].reshape(len(cells_idx), -1)
    faces = _boundary_faces(cells_idx, shape, lo, h)
    return Grid(dom, level, lo, h, shape, cells_idx, nodes, cell_nodes, lookup, faces)


def _boundary_faces(cells_idx, shape, lo, h):
    m = len(shape)
    active = np.zeros(shape, dtype=bool)
    active[tuple(cells_idx.T)] = True
    centers, normals, areas = [], [], []
    for k in range(m):
        for sgn in (-1, 1):
            nb = cells_idx.copy()
            nb[:, k] += sgn
            inside = (nb[:, k] >= 0) & (nb[:, k] < shape[k])
            has_nb = np.zeros(len(nb), dtype=bool)
            has_nb[inside] = active[tuple(nb[inside].T)]
            sel = cells_idx[~has_nb]
            c = lo + (sel + 0.5) * h
            c[:, k] += sgn * 0.5 * h[k]
            n = np.zeros((len(sel), m))
            n[:, k] = sgn
            centers.append(c)
            normals.append(n)
            areas.append(np.full(len(sel), np.prod(np.delete(h, k))))
    return {
        "centers": np.concatenate(centers),
        "normals": np.concatenate(normals),
        "areas": np.concatenate(areas),
    }


def _reference_basis(m, h):
    """Shape values and reduced gradients of the corner basis at Gauss points."""
    offsets = _corner_offsets(m)
    gps = np.array(list(product(GAUSS_1D, repeat=m)))
    n_g, n_c = len(gps), len(offsets)
    N = np.ones((n_g, n_c))
    B = np.ones((n_g, m, n_c))
    for a, off in enumerate(offsets):
        for k in range(m):
            val = np.where(off[k] == 1, gps[:, k], 1.0 - gps[:, k])
            der = (1.0 if off[k] == 1 else -1.0) / h[k]
            N[:, a] *= val
            for j in range(m):
                B[:, j, a] *= der if j == k else val
    return gps, N, B


@dataclass
class LinearSystem:
    """Assembled stiffness matrix, load vector and the Gauss point data.

    ``W`` holds Gauss weight times cell volume times density, ``C`` the
    reduced covariance and ``ell`` the reduced drift characteristic at each
    Gauss point.
    """

    A: sparse.csr_matrix
    b: np.ndarray
    grid: Grid
    model: object
    W: np.ndarray
    C: np.ndarray
    ell: np.ndarray
    B: np.ndarray
    ell_energy: float

    @property
    def n(self):
        return self.A.shape[0]

    def gauss_gradients(self, values):
        """Reduced gradient of the discrete potential at every Gauss point."""
        return np.einsum("gia,ca->cgi", self.B, values[self.grid.cell_nodes])


def assemble(grid, model, chunk=50_000):
    """Assemble the flux-balance system of the Euler-Lagrange equation.

    Raises
    ------
    NonSymmetricAssembly
        If the matrix is not symmetric to ``1e-10`` relative.
    """
    m = grid.m
    gps, _, B = _reference_basis(m, grid.h)
    n_c = len(grid.cells)
    n_g = len(gps)
    y = grid.lower + (grid.cells[:, None, :] + gps[None]) * grid.h
    flat = y.reshape(-1, m)
    logp = np.empty(len(flat))
    C = np.empty((len(flat), m, m))
    ell = np.empty((len(flat), m))
    for s in range(0, len(flat), chunk):
        x = model.to_ambient(flat[s:s + chunk])
        logp[s:s + chunk] = model.log_density(x)
        C[s:s + chunk] = model.reduced_cov(x)
        ell[s:s + chunk] = model.reduced_ell(x)
    W = (np.exp(logp) * grid.cell_volume / n_g).reshape(n_c, n_g)
    C = C.reshape(n_c, n_g, m, m)
    ell = ell.reshape(n_c, n_g, m)
    Ke = np.einsum("cg,gia,cgij,gjb->cab", W, B, C, B)
    fe = np.einsum("cg,gia,cgij,cgj->ca", W, B, C, ell)
    L = float(np.einsum("cg,cgi,cgij,cgj->", W, ell, C, ell))
    n = len(grid.nodes)
    rows = np.repeat(grid.cell_nodes, grid.cell_nodes.shape[1], axis=1).ravel()
    cols = np.tile(grid.cell_nodes, (1, grid.cell_nodes.shape[1])).ravel()
    A = sparse.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    b = np.bincount(grid.cell_nodes.ravel(), weights=fe.ravel(), minlength=n)
    defect = abs(A - A.T).max() if n > 0 else 0.0
    if defect > 1e-10 * max(abs(A).max(), 1e-300):
        raise NonSymmetricAssembly(f"symmetry defect {defect:.3g}")
    return LinearSystem(A, b, grid, model, W, C, ell, B, L)


@dataclass
class DiscretePotential:
    """Mean-zero nodal potential with reconstructed gradients.

    Attributes
    ----------
    values : ndarray
        Nodal values, mean zero.
    system : LinearSystem
    iterations : int
    residual : float
        Final relative residual.
    """

    values: np.ndarray
    system: LinearSystem
    iterations: int = 0
    residual: float = 0.0

    @property
    def grid(self):
        return self.system.grid

    def cell_gradients(self):
        """Reduced gradient at each cell center."""
        grid = self.grid
        m = grid.m
        offsets = _corner_offsets(m)
        v = self.values[grid.cell_nodes]
        g = np.zeros((len(grid.cells), m))
        for k in range(m):
            sign = np.where(offsets[:, k] == 1, 1.0, -1.0) / (2 ** (m - 1) * grid.h[k])
            g[:, k] = v @ sign
        return g

    def node_gradients(self):
        """Reduced gradient at nodes, averaged over the adjacent cells."""
        grid = self.grid
        m = grid.m
        offsets = _corner_offsets(m)
        v = self.values[grid.cell_nodes]
        acc = np.zeros((len(grid.nodes), m))
        cnt = np.zeros(len(grid.nodes))
        for a, off in enumerate(offsets):
            # gradient of the cell interpolant evaluated at corner `off`
            g = np.zeros((len(grid.cells), m))
            for k in range(m):
                hi = off.copy()
                lo = off.copy()
                hi[k], lo[k] = 1, 0
                ia = _corner_id(hi)
                ib = _corner_id(lo)
                g[:, k] = (v[:, ia] - v[:, ib]) / grid.h[k]
            np.add.at(acc, grid.cell_nodes[:, a], g)
            np.add.at(cnt, grid.cell_nodes[:, a], 1.0)
        return acc / cnt[:, None]

    def gradient_norms(self):
        """Ambient norm of the tangent gradient at nodes."""
        g = self.system.model.reduced_grad_to_ambient(self.node_gradients())
        return np.linalg.norm(g, axis=-1)

    def to_csv(self, path):
        pts = self.grid.node_points()
        norms = self.gradient_norms()
        d = pts.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k + 1}" for k in range(d)] + ["phi", "grad_norm"])
            for x, v, g in zip(pts, self.values, norms):
                w.writerow([repr(float(t)) for t in x] + [repr(float(v)), repr(float(g))])

    def generating_function(self):
        """Continuous extension (multilinear interpolation) as a generating function."""
        return GeneratingFunction(_interpolated_phi(self), self.system.model)


def _corner_id(off):
    m = len(off)
    return int(sum(int(b) << (m - 1 - k) for k, b in enumerate(off)))


def _lattice_array(grid, nodal):
    """Scatter nodal data onto the full lattice, filling gaps by nearest node."""
    shape = grid.node_lookup.shape
    extra = nodal.shape[1:]
    full = np.zeros(shape + extra)
    full[tuple(grid.nodes.T)] = nodal
    missing = grid.node_lookup < 0
    if missing.any():
        _, idx = ndimage.distance_transform_edt(missing, return_indices=True)
        full = full[tuple(idx)]
    return full


def _interpolated_phi(pot):
    grid = pot.grid
    model = pot.system.model
    axes = [grid.lower[k] + grid.h[k] * np.arange(grid.shape[k] + 1) for k in range(grid.m)]
    lo = np.array([a[0] for a in axes])
    hi = np.array([a[-1] for a in axes])
    f_val = RegularGridInterpolator(axes, _lattice_array(grid, pot.values))
    f_grad = RegularGridInterpolator(axes, _lattice_array(grid, pot.node_gradients()))
    step = 0.5 * grid.h

    def reduced(x):
        return np.clip(model.to_chart(as_points(x, model.dim)), lo, hi)

    def value(x):
        y = reduced(x)
        return f_val(y.reshape(-1, grid.m)).reshape(y.shape[:-1])

    def grad_reduced(y):
        return f_grad(np.clip(y, lo, hi).reshape(-1, grid.m)).reshape(y.shape)

    def grad(x):
        return model.reduced_grad_to_ambient(grad_reduced(reduced(x)))

    def hess(x):
        y = reduced(x)
        Hy = np.empty(y.shape + (grid.m,))
        for k in range(grid.m):
            e = np.zeros(grid.m)
            e[k] = step[k]
            Hy[..., :, k] = (grad_reduced(y + e) - grad_reduced(y - e)) / (2 * step[k])
        Hy = 0.5 * (Hy + np.swapaxes(Hy, -1, -2))
        if not model.is_simplex:
            return Hy
        M = model.domain.chart_matrix @ np.linalg.inv(model.domain.metric)
        return np.einsum("ai,...ij,bj->...ab", M, Hy, M)

    return ScalarField(value, grad, hess, smoothness=0)


def solve_phi(system, tol=1e-9, max_iter=None, method="auto"):
    """Solve the singular consistent system on the mean-zero subspace.

    Parameters
    ----------
    system : LinearSystem
    tol : float
        Relative residual target.
    max_iter : int, optional
        Default ``10 * n``.
    method : {"auto", "cg", "direct"}
        Jacobi-preconditioned conjugate gradients from zero, or a sparse
        direct solve with the first node pinned. ``"auto"`` picks the direct
        solve up to ``DIRECT_LIMIT`` unknowns: conjugate gradients meet the
        residual target but leave large errors in nodal values where the
        density is tiny.

    Raises
    ------
    NoConvergence
    """
    A, b = system.A, system.b
    n = system.n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return DiscretePotential(np.zeros(n), system, 0, 0.0)
    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "cg"
    if method == "direct":
        keep = np.arange(1, n)
        sol = np.zeros(n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", splinalg.MatrixRankWarning)
            sol[keep] = splinalg.spsolve(A[keep][:, keep].tocsc(), b[keep])
        if not np.all(np.isfinite(sol)):
            raise NoConvergence("singular system: the density underflows on part of the grid; "
                                "use a smaller element", math.inf)
        x = sol
        its = 1
    else:
        diag = A.diagonal()
        M = sparse.diags(1.0 / np.where(diag > 0, diag, 1.0))
        count = [0]

        def cb(_):
            count[0] += 1

        max_iter = max_iter or 10 * n
        x = np.zeros(n)
        # the recursive residual drifts from the true one on stiff problems,
        # so restart from the current iterate until the true residual is met
        for _ in range(5):
            left = max_iter - count[0]
            if left <= 0:
                break
            x, info = splinalg.cg(A, b, x0=x, rtol=tol, atol=0.0, maxiter=left, M=M, callback=cb)
            if np.linalg.norm(b - A @ x) <= tol * bnorm:
                break
        its = count[0]
        res = float(np.linalg.norm(b - A @ x)) / bnorm
        if res > tol:
            raise NoConvergence(f"conjugate gradients stopped after {its} iterations, "
                                f"relative residual {res:.3g}", res)
    x = x - x.mean()
    res = float(np.linalg.norm(b - A @ x)) / bnorm
    return DiscretePotential(x, system, its, res)


@dataclass
class ObjectiveValue:
    """Value of ``J`` at a discrete potential."""

    J: float


def objective(values, system):
    """``J(phi)`` by Gauss quadrature of the cell integrands."""
    if isinstance(values, DiscretePotential):
        values = values.values
    r = system.gauss_gradients(values) - system.ell
    J = float(np.einsum("cg,cgi,cgij,cgj->", system.W, r, system.C, r))
    return ObjectiveValue(max(J, 0.0))


def energy(values, system):
    """``int grad phi' c grad phi p`` by the same quadrature."""
    if isinstance(values, DiscretePotential):
        values = values.values
    g = system.gauss_gradients(values)
    return float(np.einsum("cg,cgi,cgij,cgj->", system.W, g, system.C, g))


def lambda_from_phi(phi, model=None, grid=None):
    """Growth rate ``(1/8) int grad phi' c grad phi p`` of a discrete potential."""
    system = phi.system
    if grid is not None and grid is not system.grid:
        system = assemble(grid, model or system.model)
    return energy(phi.values, system) / 8.0


def flux_balance_diagnostic(phi, model, grid):
    """Total outward flux of ``p c ell`` through the boundary of the element."""
    faces = grid.faces
    x = model.to_ambient(faces["centers"])
    F = model.flux(x)
    return float(np.sum(faces["areas"] * np.einsum("fi,fi->f", F, faces["normals"])))


@dataclass
class ConvergenceTable:
    """Growth rates under grid refinement.

    Attributes
    ----------
    rows : list of dict
        ``level``, ``cells``, ``h``, ``lambda``, ``increment``, ``order`` and,
        with a reference value, ``error`` and ``error_order``.
    non_monotone : bool
        Increments grew across the last two refinements.
    """

    rows: list
    non_monotone: bool
    reference: Optional[float] = None

    @property
    def lambdas(self):
        return np.array([r["lambda"] for r in self.rows])

    def orders(self, against_reference=True):
        key = "error_order" if against_reference and self.reference is not None else "order"
        return [r[key] for r in self.rows if r.get(key) is not None]

    def to_csv(self, path):
        keys = ["level", "element", "cells", "h", "lambda", "increment", "order", "error", "error_order"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for r in self.rows:
                w.writerow(["" if r.get(k) is None else r.get(k) for k in keys])


def refinement_study(model, levels=4, base_cells=100, element=None, reference=None,
                     grow_domain=False, tol=1e-9, method="auto"):
    """Growth rate on successively refined grids.

    The element is fixed (``element``, default the domain's middle one) and
    the spacing halves per level; with ``grow_domain`` the element index
    also increases by one per level.
    """
    if levels < 2:
        raise ValueError("need at least two levels")
    dom = model.domain
    element = element or max(1, dom.levels // 3)
    rows = []
    for k in range(levels):
        n_el = element + k if grow_domain else element
        cells = base_cells * 2**k
        grid = make_grid(model, n_el, cells)
        pot = solve_phi(assemble(grid, model), tol=tol, method=method)
        lam = lambda_from_phi(pot)
        row = {"level": k, "element": n_el, "cells": cells, "h": grid.spacing, "lambda": lam,
               "increment": None, "order": None, "error": None, "error_order": None}
        if rows:
            row["increment"] = abs(lam - rows[-1]["lambda"])
            prev = rows[-1]["increment"]
            if prev:
                row["order"] = math.log2(prev / row["increment"]) if row["increment"] > 0 else math.inf
        if reference is not None:
            row["error"] = abs(lam - reference)
            if rows and rows[-1]["error"]:
                row["error_order"] = (math.log2(rows[-1]["error"] / row["error"])
                                      if row["error"] > 0 else math.inf)
        rows.append(row)
    incs = [r["increment"] for r in rows if r["increment"] is not None]
    non_mono = len(incs) >= 2 and incs[-1] > incs[-2]
    return ConvergenceTable(rows, non_mono, reference)


def solve_variational(model, level=None, cells=None, diagnostics=None, tol=1e-9, method="auto"):
    """Solve on one element and package the result as a growth report.

    Returns
    -------
    GeneratingFunction, GrowthReport
        The report's ``extra`` holds the element, spacing, iterations and
        the discrete energy identity terms.
    """
    dom = model.domain
    if level is None:
        level = dom.levels if dom.kind == "simplex" else max(1, dom.levels // 3)
    if cells is None:
        cells = 2000 if model.reduced_dim == 1 else 128
    grid = make_grid(model, level, cells)
    system = assemble(grid, model)
    pot = solve_phi(system, tol=tol, method=method)
    lam = lambda_from_phi(pot)
    J = objective(pot, system).J
    extra = {
        "element": grid.level,
        "h": grid.spacing,
        "iterations": pot.iterations,
        "residual": pot.residual,
        "objective": J,
        "ell_energy": system.ell_energy,
        "flux": flux_balance_diagnostic(pot, model, grid),
    }
    diag = diagnostics or Diagnostics()
    if not math.isfinite(lam):
        return pot.generating_function(), GrowthReport(INFINITE, None, "variational", diag, extra)
    report = GrowthReport(FINITE, lam, "variational", diag, extra)
    report.potential = pot
    return pot.generating_function(), report


def ell_energy_limit(model, levels=None):
    """Independent quadrature of ``int ell' c ell p`` over the exhaustion."""
    return exhaustion_integral(model.ell_energy_density, model.domain, levels)
