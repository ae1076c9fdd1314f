"""Deterministic conforming triangulations with uniform dyadic refinement.

The coarse mesh of a polygon is the fan from its area centroid (which
must see the whole boundary, i.e. the polygon must be star-shaped about
it); the coarse mesh of a reduced triangle is the triangle itself.
Refinement splits every element into four congruent children through the
edge midpoints, so the maximum element diameter halves per level and
eigenvalues converge at a known second-order rate.

Children of element ``k`` occupy slots ``4k .. 4k+3`` of the refined
element array and new nodes are appended after the old ones.  Those two
facts make point location exact: a query point descends the refinement
tree in barycentric coordinates without any searching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DIRICHLET, NEUMANN, Polygon, TriangleSpec, make_triangle


@dataclass(frozen=True)
class Mesh:
    """Triangulation with tagged boundary edges.

    ``boundary_edges[i]`` is an oriented node pair lying on the domain
    boundary and ``boundary_tags[i]`` is its condition ("dirichlet" or
    "neumann").  ``coarse_elements`` keeps the level-0 connectivity so
    refined meshes can locate points by tree descent.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    level: int
    coarse_elements: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_areas(self) -> np.ndarray:
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def area(self) -> float:
        return float(np.sum(self.element_areas()))

    def h_max(self) -> float:
        p = self.nodes[self.elements]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
        return float(np.sqrt(np.max(np.sum(e * e, axis=-1))))

    def dirichlet_nodes(self) -> np.ndarray:
        mask = self.boundary_tags == DIRICHLET
        if not np.any(mask):
            return np.empty(0, dtype=self.elements.dtype)
        return np.unique(self.boundary_edges[mask])

    def barycenters(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)


def mesh_polygon(poly: Polygon, level: int = 0) -> Mesh:
    """Fan triangulation from the centroid, refined ``level`` times.

    Outer edges inherit the polygon's edge tags when present, otherwise
    they are all Dirichlet.  Raises if the polygon is not star-shaped
    about its centroid (every fan triangle must have positive area).
    """
    if level < 0:
        raise ValueError("refinement level must be >= 0")
    m = len(poly)
    nodes = np.vstack([poly.centroid, poly.vertices])
    idx = np.arange(m)
    elements = np.column_stack([np.zeros(m, dtype=np.int64), idx + 1, (idx + 1) % m + 1])
    mesh = Mesh(
        nodes=nodes,
        elements=elements,
        boundary_edges=elements[:, 1:].copy(),
        boundary_tags=np.array(
            poly.edge_tags if poly.edge_tags is not None else [DIRICHLET] * m
        ),
        level=0,
        coarse_elements=elements,
    )
    areas = mesh.element_areas()
    if np.any(areas <= 0.0):
        raise ValueError("polygon is not star-shaped about its centroid; cannot fan")
    if abs(mesh.area - poly.area) > 1e-12 * poly.area:
        raise ValueError("fan triangulation does not cover the polygon")
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def mesh_triangle(spec: TriangleSpec, level: int = 0) -> Mesh:
    """Single-element coarse mesh of the reduced triangle.

    The cathetus opposite the apex is Dirichlet; hypotenuse and the
    horizontal cathetus are Neumann.
    """
    if level < 0:
        raise ValueError("refinement level must be >= 0")
    tri = make_triangle(spec)
    elements = np.array([[0, 1, 2]], dtype=np.int64)
    mesh = Mesh(
        nodes=tri.vertices.copy(),
        elements=elements,
        boundary_edges=np.array([[0, 1], [1, 2], [2, 0]], dtype=np.int64),
        boundary_tags=np.array([NEUMANN, DIRICHLET, NEUMANN]),
        level=0,
        coarse_elements=elements,
    )
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Uniform 4-way refinement; boundary tags are inherited, never redetected."""
    tri = mesh.elements
    n = mesh.n_nodes
    m = len(tri)

    # unique edges via a combined integer key (both node ids < n)
    pairs = np.sort(tri[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    keys = pairs[:, 0] * np.int64(n) + pairs[:, 1]
    ukeys, inverse = np.unique(keys, return_inverse=True)
    ua, ub = ukeys // n, ukeys % n
    midpoints = 0.5 * (mesh.nodes[ua] + mesh.nodes[ub])
    mid_idx = (n + inverse).reshape(m, 3)  # per-element midpoints mab, mbc, mca

    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    mab, mbc, mca = mid_idx[:, 0], mid_idx[:, 1], mid_idx[:, 2]
    children = np.empty((m, 4, 3), dtype=tri.dtype)
    children[:, 0] = np.column_stack([a, mab, mca])
    children[:, 1] = np.column_stack([mab, b, mbc])
    children[:, 2] = np.column_stack([mca, mbc, c])
    children[:, 3] = np.column_stack([mab, mbc, mca])

    be = mesh.boundary_edges
    bkeys = np.sort(be, axis=1)
    bkeys = bkeys[:, 0] * np.int64(n) + bkeys[:, 1]
    bmid = n + np.searchsorted(ukeys, bkeys)
    new_edges = np.empty((2 * len(be), 2), dtype=be.dtype)
    new_edges[0::2, 0] = be[:, 0]
    new_edges[0::2, 1] = bmid
    new_edges[1::2, 0] = bmid
    new_edges[1::2, 1] = be[:, 1]

    return Mesh(
        nodes=np.vstack([mesh.nodes, midpoints]),
        elements=children.reshape(-1, 3),
        boundary_edges=new_edges,
        boundary_tags=np.repeat(mesh.boundary_tags, 2),
        level=mesh.level + 1,
        coarse_elements=mesh.coarse_elements,
    )


# ---------------------------------------------------------------------------
# point location


def _barycentric(nodes, elements, points):
    """Barycentric coordinates of each point w.r.t. each element."""
    p = nodes[elements]  # (m, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    rel = points[:, None, :] - p[None, :, 0, :]
    lb = (rel[:, :, 0] * d2[None, :, 1] - rel[:, :, 1] * d2[None, :, 0]) / det
    lc = (d1[None, :, 0] * rel[:, :, 1] - d1[None, :, 1] * rel[:, :, 0]) / det
    return np.stack([1.0 - lb - lc, lb, lc], axis=-1)  # (npts, m, 3)


def locate_points(mesh: Mesh, points) -> tuple[np.ndarray, np.ndarray]:
    """Containing element and barycentric coordinates for each point.

    Exact O(level) tree descent per point; raises for points outside the
    meshed domain (beyond a relative tolerance).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scale = float(np.max(np.abs(mesh.nodes))) or 1.0
    lam_all = _barycentric(mesh.nodes, mesh.coarse_elements, pts)
    worst = lam_all.min(axis=-1)
    elem = np.argmax(worst, axis=1)
    best = worst[np.arange(len(pts)), elem]
    if np.any(best < -1e-9):
        bad = pts[best < -1e-9][0]
        raise ValueError(f"point {bad} lies outside the meshed domain")
    lam = lam_all[np.arange(len(pts)), elem]
    lam = np.clip(lam, 0.0, 1.0)
    lam /= lam.sum(axis=1, keepdims=True)

    elem = elem.astype(np.int64)
    for _ in range(mesh.level):
        la, lb, lc = lam[:, 0], lam[:, 1], lam[:, 2]
        child = np.full(len(pts), 3, dtype=np.int64)
        child[lc >= 0.5] = 2
        child[lb >= 0.5] = 1
        child[la >= 0.5] = 0
        new = np.empty_like(lam)
        m0, m1, m2, m3 = child == 0, child == 1, child == 2, child == 3
        new[m0, 0] = 2 * la[m0] - 1
        new[m0, 1] = 2 * lb[m0]
        new[m0, 2] = 2 * lc[m0]
        new[m1, 0] = 2 * la[m1]
        new[m1, 1] = 2 * lb[m1] - 1
        new[m1, 2] = 2 * lc[m1]
        new[m2, 0] = 2 * la[m2]
        new[m2, 1] = 2 * lb[m2]
        new[m2, 2] = 2 * lc[m2] - 1
        new[m3, 0] = 1 - 2 * lc[m3]
        new[m3, 1] = 1 - 2 * la[m3]
        new[m3, 2] = 1 - 2 * lb[m3]
        lam = np.clip(new, 0.0, 1.0)
        lam /= lam.sum(axis=1, keepdims=True)
        elem = 4 * elem + child
    _ = scale
    return elem, lam


# ---------------------------------------------------------------------------
# diagnostics and serialization


def check_conforming(mesh: Mesh) -> None:
    """Raise AssertionError unless the mesh is a conforming triangulation."""
    n = mesh.n_nodes
    pairs = np.sort(mesh.elements[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    keys = pairs[:, 0] * np.int64(n) + pairs[:, 1]
    _, counts = np.unique(keys, return_counts=True)
    if not np.all((counts == 1) | (counts == 2)):
        raise AssertionError("an edge is shared by more than two elements")
    bkeys = np.sort(mesh.boundary_edges, axis=1)
    bkeys = bkeys[:, 0] * np.int64(n) + bkeys[:, 1]
    ukeys, counts = np.unique(keys, return_counts=True)
    boundary_set = set(ukeys[counts == 1].tolist())
    if boundary_set != set(bkeys.tolist()):
        raise AssertionError("tagged boundary does not match the mesh boundary")
    if np.any(mesh.element_areas() <= 0.0):
        raise AssertionError("element with non-positive area")


def dump_mesh(mesh: Mesh) -> str:
    """Text dump with ``nodes``, ``elements`` and ``boundary`` sections."""
    lines = [f"# level: {mesh.level}", f"nodes {mesh.n_nodes}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes]
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.elements]
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [
        f"{i} {j} {tag}"
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags)
    ]
    return "\n".join(lines) + "\n"
