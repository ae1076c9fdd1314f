"""Exact constructions for regular polygons, reduced right triangles, and
the planar polygon type shared by the whole package.

Conventions
-----------
* Polygons are counter-clockwise lists of vertices with positive signed
  area; regular polygons default to the first vertex on the positive
  x-axis (phase 0).
* The reduced triangle T(alpha, r) lives in a canonical frame: right
  angle at (r cos(alpha), 0), apex angle alpha at the origin, hypotenuse
  of length r from the origin to (r cos(alpha), r sin(alpha)).  Its three
  boundary parts carry fixed roles: the vertical cathetus is the
  Dirichlet part, hypotenuse and horizontal cathetus are Neumann.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class RegularPolygonSpec:
    """Parametric regular polygon: ``n`` sides, circumradius ``r``.

    Vertex k sits at angle ``phase + 2*pi*k/n`` and distance ``r`` from
    ``center``.
    """

    n: int
    r: float
    center: tuple[float, float] = (0.0, 0.0)
    phase: float = 0.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"regular polygon needs n >= 3 sides, got {self.n}")
        if self.r <= 0.0:
            raise ValueError(f"circumradius must be positive, got {self.r}")


@dataclass(frozen=True)
class TriangleSpec:
    """Right triangle with hypotenuse ``r`` and acute apex angle ``alpha``."""

    alpha: float
    r: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5 * np.pi:
            raise ValueError(f"apex angle must lie in (0, pi/2), got {self.alpha}")
        if self.r <= 0.0:
            raise ValueError(f"hypotenuse length must be positive, got {self.r}")

    @property
    def vertices(self) -> np.ndarray:
        """Canonical-frame vertices (apex, right-angle corner, top corner)."""
        ca, sa = np.cos(self.alpha), np.sin(self.alpha)
        return np.array(
            [[0.0, 0.0], [self.r * ca, 0.0], [self.r * ca, self.r * sa]]
        )

    # edge i joins vertex i to vertex i+1 (mod 3):
    #   edge 0 = horizontal cathetus (Neumann), edge 1 = vertical cathetus
    #   opposite the apex (Dirichlet), edge 2 = hypotenuse (Neumann)
    edge_tags = (NEUMANN, DIRICHLET, NEUMANN)


@dataclass(frozen=True)
class DihedralElement:
    """One rotation or reflection of the symmetry group of a regular n-gon."""

    kind: str  # "rotation" | "reflection"
    k: int
    matrix: np.ndarray = field(repr=False)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.matrix.T


# ---------------------------------------------------------------------------
# polygon


class Polygon:
    """Simple counter-clockwise polygon with optional per-edge tags."""

    def __init__(self, vertices, edge_tags=None, check_simple: bool = True):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs an (m, 2) array of at least 3 vertices")
        self.vertices = v
        if self.signed_area() <= 0.0:
            raise ValueError("polygon must be counter-clockwise with positive area")
        if check_simple and not self._is_simple():
            raise ValueError("polygon is self-intersecting")
        if edge_tags is not None:
            edge_tags = tuple(edge_tags)
            if len(edge_tags) != len(v):
                raise ValueError("need one tag per edge")
        self.edge_tags = edge_tags

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({len(self)} vertices, area={self.area:.6g})"

    def signed_area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def area(self) -> float:
        return self.signed_area()

    @property
    def centroid(self) -> np.ndarray:
        """Area centroid (shoelace moments)."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return (v + w).T @ cross / (6.0 * self.signed_area())

    def edges(self) -> np.ndarray:
        """(m, 2, 2) array of directed edges."""
        return np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)

    @property
    def is_convex(self) -> bool:
        v = self.vertices
        d = np.roll(v, -1, axis=0) - v
        cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
        return bool(np.all(cross > -1e-14 * np.max(np.abs(v))))

    def _is_simple(self) -> bool:
        # O(m^2) proper-intersection test between non-adjacent edges; the
        # polygons handled here stay small (<= a few hundred vertices).
        e = self.edges()
        m = len(e)
        for i in range(m):
            p, q = e[i]
            for j in range(i + 1, m):
                if j == i or (j + 1) % m == i or (i + 1) % m == j:
                    continue
                a, b = e[j]
                if _segments_cross(p, q, a, b):
                    return False
        return True

    def transformed(self, matrix=None, shift=None) -> "Polygon":
        v = self.vertices
        if matrix is not None:
            v = v @ np.asarray(matrix).T
        if shift is not None:
            v = v + np.asarray(shift)
        return Polygon(v, edge_tags=self.edge_tags, check_simple=False)

    def rotated(self, angle: float) -> "Polygon":
        c, s = np.cos(angle), np.sin(angle)
        return self.transformed(matrix=np.array([[c, -s], [s, c]]))


def _segments_cross(p, q, a, b) -> bool:
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    d1, d2 = orient(p, q, a), orient(p, q, b)
    d3, d4 = orient(a, b, p), orient(a, b, q)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


# ---------------------------------------------------------------------------
# constructors and closed forms


def make_regular_polygon(spec: RegularPolygonSpec) -> Polygon:
    """Vertices of the regular n-gon, one exact angle per vertex."""
    k = np.arange(spec.n)
    ang = spec.phase + _TWO_PI * k / spec.n
    v = np.column_stack([np.cos(ang), np.sin(ang)]) * spec.r + np.asarray(spec.center)
    return Polygon(v, check_simple=False)


def regular_metrics(spec: RegularPolygonSpec) -> dict:
    """Closed-form side length, inradius, area, and central angle."""
    n, r = spec.n, spec.r
    s, c = np.sin(np.pi / n), np.cos(np.pi / n)
    return {
        "area": n * r * r * s * c,
        "side_length": 2.0 * r * s,
        "inradius": r * c,
        "central_angle": _TWO_PI / n,
    }


def make_triangle(spec: TriangleSpec) -> Polygon:
    """Canonical-frame reduced triangle with tagged boundary parts."""
    return Polygon(spec.vertices, edge_tags=TriangleSpec.edge_tags, check_simple=False)


def dihedral_group(n: int) -> list[DihedralElement]:
    """All 2n symmetries of the regular n-gon (phase 0 frame).

    Rotation k is by angle 2*pi*k/n; reflection k has axis at angle
    pi*k/n.  Every element maps the vertex set of the phase-0 n-gon to
    itself.
    """
    if n < 3:
        raise ValueError(f"dihedral group needs n >= 3, got {n}")
    elements = []
    for k in range(1, n + 1):
        c, s = np.cos(_TWO_PI * k / n), np.sin(_TWO_PI * k / n)
        elements.append(DihedralElement("rotation", k, np.array([[c, -s], [s, c]])))
    for k in range(1, n + 1):
        c, s = np.cos(_TWO_PI * k / n), np.sin(_TWO_PI * k / n)
        elements.append(DihedralElement("reflection", k, np.array([[c, s], [s, -c]])))
    return elements


# ---------------------------------------------------------------------------
# containment


def point_margins(outer: Polygon, points) -> np.ndarray:
    """Signed distance of each point to the inside of a convex polygon.

    The margin of a point is the minimum over the outer polygon's edge
    half-planes of the distance to the edge line, positive inside.
    """
    if not outer.is_convex:
        raise ValueError("containment margin requires a convex outer polygon")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = outer.vertices
    d = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(d[:, 0], d[:, 1])
    # left-of-edge distance: cross(edge, p - v) / |edge|
    rel0 = pts[:, None, 0] - v[None, :, 0]
    rel1 = pts[:, None, 1] - v[None, :, 1]
    cross = d[None, :, 0] * rel1 - d[None, :, 1] * rel0
    return np.min(cross / lengths[None, :], axis=1)


def contains_with_margin(outer: Polygon, inner: Polygon) -> float:
    """Worst-case margin of the inner polygon's vertices inside ``outer``.

    Negative if any vertex lies outside.  For a convex inner polygon a
    positive value certifies containment of the whole piece.
    """
    return float(np.min(point_margins(outer, inner.vertices)))


# ---------------------------------------------------------------------------
# polygon dump format


def dump_polygon(poly: Polygon, header: dict | None = None) -> str:
    """Serialize a polygon: '#' header lines, then one 'x y' per vertex."""
    lines = []
    for key, val in (header or {}).items():
        lines.append(f"# {key}: {val}")
    if poly.edge_tags is not None:
        lines.append(f"# edge_tags: {' '.join(poly.edge_tags)}")
    for x, y in poly.vertices:
        lines.append(f"{x!r} {y!r}")
    return "\n".join(lines) + "\n"


def load_polygon(text: str) -> Polygon:
    """Parse the dump format produced by :func:`dump_polygon`."""
    tags = None
    verts = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("edge_tags:"):
                tags = body.split(":", 1)[1].split()
            continue
        x, y = line.split()
        verts.append((float(x), float(y)))
    return Polygon(np.array(verts), edge_tags=tags)
