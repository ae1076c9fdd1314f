"""Rearranging a regular n-gon into a polygon strictly inside the (n+1)-gon.

The n-gon is cut into 2n pieces: along each side an isosceles triangle
with apex at the center, apex angle ``delta = 2pi/n - 2pi/(n+1)``, and
base on the side, symmetric about the side's apothem; what remains are n
congruent convex quadrilaterals, each spanning a central angle
``2pi/(n+1)`` and carrying one corner.  Rotating the quadrilaterals into
contiguous positions and stacking all n triangles in the one remaining
``2pi/(n+1)`` sector produces a polygon D of the same area.  The corners
of D land exactly on n vertices of the circumscribed (n+1)-gon, all other
vertices stay strictly inside, and every glued interface consists of two
congruent center-to-boundary cut segments, so a dihedrally symmetric
function transplants continuously.

``certify`` measures all of that on the actual floating-point
construction: area preservation, angular tiling (disjointness), cut
matching, the dihedral relation between glued source cuts, interior
margins, and the corner/vertex coincidences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import solve_polygon, solve_triangle
from .geometry import (
    Polygon,
    RegularPolygonSpec,
    TriangleSpec,
    dihedral_group,
    make_regular_polygon,
    point_margins,
)
from .meshing import mesh_polygon

_TWO_PI = 2.0 * np.pi


def cut_angle(n: int) -> float:
    """Apex angle of the cut triangles: difference of the central angles."""
    return _TWO_PI / n - _TWO_PI / (n + 1)


@dataclass(frozen=True)
class Piece:
    """One dissection piece with its source position and applied rotation."""

    kind: str  # "triangle" | "quad"
    index: int
    source: Polygon
    rotation: float
    moved: Polygon

    # outer endpoints of the two radial cut edges, in source position
    @property
    def lead_cut(self) -> np.ndarray:
        # triangles: (O, c-, c+); quads: (O, c+, corner, c-)
        return self.source.vertices[1]

    @property
    def trail_cut(self) -> np.ndarray:
        return self.source.vertices[-1]


@dataclass
class Certificates:
    area_match: float
    containment_margin: float
    corner_alignment: float
    disjointness: bool
    tiling_defect: float
    cut_matching: float
    group_consistent: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class DissectionResult:
    n: int
    r: float
    delta: float
    triangles: list[Piece]
    quads: list[Piece]
    assembled: Polygon
    certificates: Certificates | None = None

    @property
    def pieces(self) -> list[Piece]:
        """All pieces in assembled circular order: quads then triangles."""
        return self.quads + self.triangles


def build_dissection(n: int, r: float = 1.0, delta: float | None = None) -> DissectionResult:
    """Cut the n-gon and rotate the pieces into assembled position.

    ``delta`` overrides the exact cut angle (used by negative controls);
    the assembly then still tiles and preserves area, but the corners no
    longer meet the (n+1)-gon's vertices and certification fails.
    """
    if n < 3:
        raise ValueError(f"dissection needs n >= 3, got {n}")
    if r <= 0.0:
        raise ValueError(f"circumradius must be positive, got {r}")
    d = cut_angle(n) if delta is None else float(delta)
    if not 0.0 < d < _TWO_PI / n:
        raise ValueError("cut angle must lie in (0, 2*pi/n)")
    q = _TWO_PI / n - d  # central angle spanned by each quadrilateral

    rho_cut = r * np.cos(np.pi / n) / np.cos(0.5 * d)  # cut endpoint radius

    def ray(angle, radius):
        return radius * np.array([np.cos(angle), np.sin(angle)])

    apothem = (2.0 * np.arange(n) + 1.0) * np.pi / n
    corners = [ray(_TWO_PI * k / n, r) for k in range(n)]
    cut_lo = [ray(a - 0.5 * d, rho_cut) for a in apothem]
    cut_hi = [ray(a + 0.5 * d, rho_cut) for a in apothem]
    origin = np.zeros(2)

    tris, quads = [], []
    for k in range(n):
        src_t = Polygon([origin, cut_lo[k], cut_hi[k]], check_simple=False)
        rot_t = d + (n - k) * q
        tris.append(Piece("triangle", k, src_t, rot_t, src_t.rotated(rot_t)))

        src_q = Polygon(
            [origin, cut_hi[k], corners[(k + 1) % n], cut_lo[(k + 1) % n]],
            check_simple=False,
        )
        rot_q = -k * d
        quads.append(Piece("quad", k, src_q, rot_q, src_q.rotated(rot_q)))

    # assembled boundary: each quad contributes its leading cut endpoint and
    # its corner; each triangle contributes its leading base corner
    boundary = []
    for piece in quads:
        boundary.append(piece.moved.vertices[1])
        boundary.append(piece.moved.vertices[2])
    for piece in tris:
        boundary.append(piece.moved.vertices[1])
    assembled = Polygon(np.array(boundary))

    return DissectionResult(n=n, r=r, delta=d, triangles=tris, quads=quads, assembled=assembled)


# ---------------------------------------------------------------------------
# certification


def _radial_span(piece: Piece) -> tuple[float, float]:
    """(start angle, width) of a moved piece's angular sector about the center."""
    lead = piece.moved.vertices[1]
    trail = piece.moved.vertices[-1]
    start = float(np.arctan2(lead[1], lead[0]))
    width = float(np.mod(np.arctan2(trail[1], trail[0]) - start, _TWO_PI))
    return start, width


def certify(result: DissectionResult) -> Certificates:
    """Run every geometric certificate on a built dissection."""
    n, r = result.n, result.r
    fail: list[str] = []

    # (a) area preservation
    exact = n * r * r * np.sin(np.pi / n) * np.cos(np.pi / n)
    piece_sum = sum(p.moved.area for p in result.pieces)
    area_match = max(
        abs(piece_sum - exact) / exact,
        abs(result.assembled.area - exact) / exact,
    )
    if area_match > 1e-12:
        fail.append(f"area mismatch {area_match:.3e}")

    # (b) interior disjointness: the 2n moved wedges tile the full angle
    spans = [_radial_span(p) for p in result.pieces]
    defect = 0.0
    for (s0, w0), (s1, _) in zip(spans, spans[1:] + spans[:1]):
        defect = max(defect, abs(float(np.mod(s1 - s0 - w0 + np.pi, _TWO_PI) - np.pi)))
    total = sum(w for _, w in spans)
    defect = max(defect, abs(total - _TWO_PI))
    disjoint = defect <= 1e-10 and abs(piece_sum - result.assembled.area) <= 1e-12 * exact
    if not disjoint:
        fail.append(f"tiling defect {defect:.3e}")

    # (c) containment in the aligned (n+1)-gon with the same circumradius.
    # The n corners of D touch the outer polygon exactly at n of its
    # vertices, so they are checked for coincidence; every other vertex
    # must have strictly positive margin.
    corner0 = result.quads[0].moved.vertices[2]
    outer = make_regular_polygon(
        RegularPolygonSpec(n + 1, r, phase=float(np.arctan2(corner0[1], corner0[0])))
    )
    margin = np.inf
    alignment = 0.0
    for piece in result.pieces:
        verts = piece.moved.vertices
        radius = np.hypot(verts[:, 0], verts[:, 1])
        tangent = radius >= r * (1.0 - 1e-9)
        if np.any(~tangent):
            margin = min(margin, float(np.min(point_margins(outer, verts[~tangent]))))
        for v in verts[tangent]:
            dist = float(np.min(np.hypot(*(outer.vertices - v).T)))
            alignment = max(alignment, dist)
    if not margin > 0.0:
        fail.append(f"interior vertex outside the (n+1)-gon, margin {margin:.3e}")
    if alignment > 1e-10 * r:
        fail.append(f"corner misses an (n+1)-gon vertex by {alignment:.3e}")

    # (d) cut matching: glued interfaces carry congruent center-to-boundary
    # segments; compare the moved outer endpoints pointwise
    pieces = result.pieces
    cut = 0.0
    group = dihedral_group(n)
    group_ok = True
    for a, b in zip(pieces, pieces[1:] + pieces[:1]):
        pa = a.trail_cut @ _rotmat(a.rotation).T
        pb = b.lead_cut @ _rotmat(b.rotation).T
        cut = max(cut, float(np.hypot(*(pa - pb))))
        # glued source segments must be related by a dihedral symmetry,
        # otherwise transplanted traces need not agree along the cut
        images = np.array([g.apply(a.trail_cut) for g in group])
        if np.min(np.hypot(*(images - b.lead_cut).T)) > 1e-10 * r:
            group_ok = False
    if cut > 1e-10 * r:
        fail.append(f"cut segments misaligned by {cut:.3e}")
    if not group_ok:
        fail.append("glued cuts not related by a dihedral symmetry")

    certs = Certificates(
        area_match=area_match,
        containment_margin=float(margin),
        corner_alignment=alignment,
        disjointness=disjoint,
        tiling_defect=defect,
        cut_matching=cut,
        group_consistent=group_ok,
        failures=fail,
    )
    result.certificates = certs
    return certs


def _rotmat(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# the eigenvalue sandwich


def eigen_sandwich(n: int, r: float = 1.0, levels=range(4, 7), tol: float = 1e-10) -> dict:
    """Certify lambda(P_{n+1}) < lambda(D) < lambda(P_n) with error budgets.

    The endpoint eigenvalues come from the reduced-triangle solver, the
    middle one from a direct Dirichlet solve on the assembled polygon.
    An inequality is certified when the gap exceeds three times the
    combined error estimates.
    """
    result = build_dissection(n, r)
    lam_n = solve_triangle(TriangleSpec(np.pi / n, r), levels, tol=tol)
    lam_next = solve_triangle(TriangleSpec(np.pi / (n + 1), r), levels, tol=tol)
    lam_d = solve_polygon(result.assembled, levels, tol=tol)

    gap_lo = lam_d.extrapolated - lam_next.extrapolated
    gap_hi = lam_n.extrapolated - lam_d.extrapolated
    ok_lo = gap_lo > 3.0 * (lam_d.error_estimate + lam_next.error_estimate)
    ok_hi = gap_hi > 3.0 * (lam_n.error_estimate + lam_d.error_estimate)
    return {
        "lambda_next": lam_next.extrapolated,
        "lambda_d": lam_d.extrapolated,
        "lambda_n": lam_n.extrapolated,
        "err_next": lam_next.error_estimate,
        "err_d": lam_d.error_estimate,
        "err_n": lam_n.error_estimate,
        "gap_low": gap_lo,
        "gap_high": gap_hi,
        "certified": bool(ok_lo and ok_hi),
        "dissection": result,
        "series_d": lam_d,
    }


# ---------------------------------------------------------------------------
# transplanted integrals


def transplant_map(result: DissectionResult, points) -> np.ndarray:
    """Map points of the assembled polygon back into the source n-gon."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = result.n, result.delta
    q = _TWO_PI / n - d
    start = (np.pi / n) + 0.5 * d  # leading cut angle of quad 0
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]) - start, _TWO_PI)

    rotations = np.empty(len(pts))
    quad_zone = theta < n * q
    idx_q = np.minimum((theta[quad_zone] / q).astype(int), n - 1)
    rotations[quad_zone] = -idx_q * d
    idx_t = np.minimum(((theta[~quad_zone] - n * q) / d).astype(int), n - 1)
    rotations[~quad_zone] = d + (n - idx_t) * q

    c, s = np.cos(-rotations), np.sin(-rotations)
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([c * x - s * y, s * x + c * y])


def transplant_integrals(result: DissectionResult, unfolded, level: int = 5) -> dict:
    """Quadrature check that the transplant preserves mass and energy.

    ``unfolded`` is the source polygon eigenfunction (an
    ``UnfoldedEigenfunction``).  Both integrals over the assembled
    polygon are evaluated with the 3-point edge-midpoint rule on a fan
    mesh that knows nothing about the piece structure, and compared with
    the exact integrals over the source polygon (2n copies of the
    triangle values).  Agreement is limited by the O(h) crossing of cut
    lines, hence "quadrature tolerance".
    """
    mesh = mesh_polygon(result.assembled, level)
    tri = mesh.nodes[mesh.elements]
    areas = mesh.element_areas()
    mids = 0.5 * (tri + np.roll(tri, -1, axis=1))  # edge midpoints, (m, 3, 2)
    qpts = mids.reshape(-1, 2)
    weights = np.repeat(areas / 3.0, 3)

    source_pts = transplant_map(result, qpts)
    vals = unfolded(source_pts)
    grads = unfolded.gradient_norm(source_pts)
    mass_quad = float(np.sum(weights * vals**2))
    energy_quad = float(np.sum(weights * grads**2))

    tmesh = unfolded.mesh
    from .fem import assemble_full  # local import to avoid a cycle at module load

    K, M = assemble_full(tmesh)
    u = unfolded.nodal
    mass_exact = 2 * result.n * float(u @ (M @ u))
    energy_exact = 2 * result.n * float(u @ (K @ u))
    return {
        "mass_quad": mass_quad,
        "mass_exact": mass_exact,
        "energy_quad": energy_quad,
        "energy_exact": energy_exact,
        "mass_ratio": mass_quad / mass_exact,
        "energy_ratio": energy_quad / energy_exact,
    }
