"""Piecewise-linear finite elements for the Dirichlet and mixed eigenproblems.

The smallest eigenvalue of ``K u = lambda M u`` is computed by inverse
iteration on the Cholesky-style factorization of ``K`` (shift 0 is a valid
shift-invert target because eliminating the Dirichlet nodes leaves ``K``
positive definite).  Conforming P1 elements with the consistent mass
matrix over-estimate the eigenvalue and converge at order h^2 on nested
dyadic meshes, which a two-point Richardson step then removes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import Polygon, RegularPolygonSpec, TriangleSpec, make_regular_polygon
from .meshing import Mesh, locate_points, mesh_polygon, mesh_triangle, refine


@dataclass(frozen=True)
class EigenResult:
    """Smallest discrete eigenpair on the free (non-Dirichlet) nodes."""

    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    free_nodes: np.ndarray | None = None


@dataclass(frozen=True)
class ConvergenceSeries:
    """Eigenvalues on nested meshes plus the Richardson limit.

    ``levels`` holds (level, h_max, eigenvalue) per refinement;
    ``error_estimate`` is the distance from the last level to the
    extrapolated limit, a conservative bound for the limit's own error.
    The finest-level mesh, eigenpair and full nodal vector are attached
    for downstream trace and transplant work.
    """

    levels: list[tuple[int, float, float]]
    extrapolated: float
    error_estimate: float
    mesh: Mesh
    eigen: EigenResult
    nodal: np.ndarray
    snapshots: list | None = None  # per-level (mesh, nodal) when requested

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, _, v in self.levels])

    def observed_orders(self) -> np.ndarray:
        """log2 ratios of successive eigenvalue decrements (2.0 = clean h^2)."""
        v = self.values
        d = v[:-1] - v[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log2(d[:-1] / d[1:]) / np.diff(
                [lv for lv, _, _ in self.levels]
            )[1:]


# ---------------------------------------------------------------------------
# assembly


def assemble_full(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Unconstrained P1 stiffness and consistent mass matrices."""
    tri = mesh.elements
    p = mesh.nodes[tri]
    # gradient coefficients: grad(phi_i) = (b_i, c_i) / (2A)
    b = p[:, [1, 2, 0], 1] - p[:, [2, 0, 1], 1]
    c = p[:, [2, 0, 1], 0] - p[:, [1, 2, 0], 0]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area2 <= 0.0):
        raise ValueError("mesh has inverted elements")
    k_local = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
        2.0 * area2[:, None, None]
    )
    m_local = (area2 / 24.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((k_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((m_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    # symmetrize away assembly-order roundoff
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    return K, M


def assemble(mesh: Mesh):
    """Stiffness, mass and the free-node index after Dirichlet elimination."""
    K, M = assemble_full(mesh)
    fixed = mesh.dirichlet_nodes()
    free = np.setdiff1d(np.arange(mesh.n_nodes), fixed)
    if len(free) == 0:
        raise ValueError("no free nodes: every node carries a Dirichlet condition")
    if len(fixed) > 0:
        K = K[free][:, free]
        M = M[free][:, free]
    return K.tocsr(), M.tocsr(), free


def rayleigh_quotient(mesh: Mesh, nodal: np.ndarray) -> float:
    """Dirichlet-energy quotient of a nodal function on the mesh."""
    K, M = assemble_full(mesh)
    u = np.asarray(nodal, dtype=float)
    return float((u @ (K @ u)) / (u @ (M @ u)))


# ---------------------------------------------------------------------------
# eigen solver


def smallest_eigenpair(
    K: sp.spmatrix,
    M: sp.spmatrix,
    tol: float = 1e-10,
    maxiter: int = 500,
    x0: np.ndarray | None = None,
) -> EigenResult:
    """Smallest generalized eigenpair by zero-shift inverse iteration.

    ``K`` is factorized once; each step solves ``K y = M x`` and
    renormalizes in the M-norm.  Convergence is declared on the relative
    residual ``|K u - lambda M u| / (lambda |M u|)``; a stagnating
    Rayleigh quotient (relative change below ``1e-3 * tol``) also stops
    the iteration once the residual has hit its rounding floor.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    n = K.shape[0]
    lu = splu(K.tocsc())
    diag = np.abs(lu.U.diagonal())
    if diag.min() < 1e-12 * diag.max():
        raise RuntimeError(
            "stiffness factorization is singular; are Dirichlet constraints missing?"
        )

    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    mx = M @ x
    x /= np.sqrt(x @ mx)

    lam_old = np.inf
    for it in range(1, maxiter + 1):
        y = lu.solve(M @ x)
        my = M @ y
        nrm = np.sqrt(y @ my)
        y /= nrm
        my /= nrm
        ky = K @ y
        lam = float(y @ ky)
        resid = float(np.linalg.norm(ky - lam * my) / (lam * np.linalg.norm(my)))
        x = y
        if resid <= tol:
            break
        if it >= 3 and abs(lam - lam_old) <= 1e-3 * tol * lam:
            break
        lam_old = lam
    else:
        raise RuntimeError(f"inverse iteration did not converge in {maxiter} steps")

    if float(my.sum()) < 0.0:  # fix the overall sign: positive mean
        x = -x
    return EigenResult(value=lam, vector=x, residual=resid, iterations=it, free_nodes=None)


def _edge_parents(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    # endpoints of the unique edges, in the order refine() appends midpoints
    n = mesh.n_nodes
    pairs = np.sort(mesh.elements[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    ukeys = np.unique(pairs[:, 0] * np.int64(n) + pairs[:, 1])
    return ukeys // n, ukeys % n


def prolong(mesh: Mesh, nodal: np.ndarray) -> np.ndarray:
    """Interpolate a nodal vector onto the 4-way refinement of ``mesh``."""
    ua, ub = _edge_parents(mesh)
    return np.concatenate([nodal, 0.5 * (nodal[ua] + nodal[ub])])


def _solve_series(base: Mesh, levels, tol: float, keep_all: bool = False) -> ConvergenceSeries:
    levels = [int(l) for l in levels]
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("need at least two strictly increasing refinement levels")
    if levels[0] < base.level:
        raise ValueError("requested level below the coarse mesh level")

    mesh = base
    records = []
    nodal = None
    finest = None
    snapshots = [] if keep_all else None
    for target in levels:
        while mesh.level < target:
            old = mesh
            mesh = refine(old)
            if nodal is not None:
                nodal = prolong(old, nodal)
        K, M, free = assemble(mesh)
        x0 = nodal[free] if nodal is not None else None
        res = smallest_eigenpair(K, M, tol=tol, x0=x0)
        res = EigenResult(res.value, res.vector, res.residual, res.iterations, free)
        nodal = np.zeros(mesh.n_nodes)
        nodal[free] = res.vector
        records.append((mesh.level, mesh.h_max(), res.value))
        finest = res
        if keep_all:
            snapshots.append((mesh, nodal))

    (l_prev, _, v_prev), (l_last, _, v_last) = records[-2], records[-1]
    factor = 4.0 ** (l_last - l_prev) - 1.0
    extrapolated = v_last + (v_last - v_prev) / factor
    return ConvergenceSeries(
        levels=records,
        extrapolated=extrapolated,
        error_estimate=abs(v_last - extrapolated),
        mesh=mesh,
        eigen=finest,
        nodal=nodal,
        snapshots=snapshots,
    )


def solve_polygon(shape, levels, tol: float = 1e-10, keep_all: bool = False) -> ConvergenceSeries:
    """First Dirichlet eigenvalue series on a polygon (all edges clamped)."""
    if isinstance(shape, RegularPolygonSpec):
        shape = make_regular_polygon(shape)
    if not isinstance(shape, Polygon):
        raise TypeError("expected a RegularPolygonSpec or Polygon")
    return _solve_series(mesh_polygon(shape, 0), levels, tol, keep_all)


def solve_triangle(
    spec: TriangleSpec, levels, tol: float = 1e-10, keep_all: bool = False
) -> ConvergenceSeries:
    """Mixed eigenvalue series on the reduced triangle.

    Dirichlet data on the cathetus opposite the apex, natural Neumann
    data on the hypotenuse and the horizontal cathetus.
    """
    return _solve_series(mesh_triangle(spec, 0), levels, tol, keep_all)


# ---------------------------------------------------------------------------
# point evaluation


def nodal_values(result: EigenResult, mesh: Mesh) -> np.ndarray:
    """Expand a free-node eigenvector to all mesh nodes (zeros on Dirichlet)."""
    u = np.zeros(mesh.n_nodes)
    u[result.free_nodes] = result.vector
    return u


def eigenfunction_eval(result, mesh: Mesh, points, with_gradients: bool = True):
    """Piecewise-linear values (and element-constant gradients) at points.

    ``result`` may be an EigenResult or a full nodal vector.  The sign is
    normalized so the function is positive at the domain's interior
    centroid.  Points outside the meshed domain raise ValueError.
    """
    if isinstance(result, EigenResult):
        u = nodal_values(result, mesh)
    else:
        u = np.asarray(result, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    areas = mesh.element_areas()
    centroid = (mesh.barycenters() * areas[:, None]).sum(axis=0) / areas.sum()
    sign_probe = _eval_at(mesh, u, centroid[None, :])[0][0]
    sign = -1.0 if sign_probe < 0.0 else 1.0

    values, grads = _eval_at(mesh, u, pts)
    if not with_gradients:
        return sign * values
    return sign * values, sign * grads


def _eval_at(mesh: Mesh, u: np.ndarray, pts: np.ndarray):
    elem, lam = locate_points(mesh, pts)
    tri = mesh.elements[elem]
    vals = np.sum(u[tri] * lam, axis=1)
    p = mesh.nodes[tri]
    b = p[:, [1, 2, 0], 1] - p[:, [2, 0, 1], 1]
    c = p[:, [2, 0, 1], 0] - p[:, [1, 2, 0], 0]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    gx = np.sum(u[tri] * b, axis=1) / area2
    gy = np.sum(u[tri] * c, axis=1) / area2
    return vals, np.column_stack([gx, gy])
