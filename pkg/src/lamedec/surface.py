"""Surface differential geometry on triangulated boundaries.

Provides the first fundamental form of a triangle patch, surface gradients of
nodal fields, the half-trace curvature scalar of the normal field (equal to
the mean curvature: 0 on flat pieces, 1/R on a sphere of radius R), and
classification of boundary patches for the two decoupling-admissibility
conditions (flat patches for the third-kind condition, vanishing curvature
scalar for the fourth-kind one).
"""

from dataclasses import dataclass
import csv

import numpy as np

from .errors import GeometryError

DEFAULT_TOL_FLAT = 1e-8       # radians; a patch is flat if normals agree this tightly
DEFAULT_TOL_CURVATURE = 1e-6  # absolute bound on |curvature| for admissibility
DEFAULT_CREASE_ANGLE = 0.7    # radians; vertices on sharper creases leave the statistics


@dataclass(frozen=True)
class SurfacePatch:
    """Affine parametrization of one triangle over the unit reference triangle."""

    points: np.ndarray    # (3, 3) vertex coordinates
    tangents: np.ndarray  # (3, 2) columns d x/d u_1, d x/d u_2
    metric: np.ndarray    # (2, 2) first fundamental matrix
    metric_det: float
    metric_inv: np.ndarray
    normal: np.ndarray    # unit normal (t1 x t2 direction)
    area: float


def first_fundamental_form(tri):
    """First fundamental form of a triangle, mapped from the unit reference triangle.

    Raises GeometryError for degenerate triangles (area <= 1e-14 * diameter^2).
    """
    pts = np.asarray(tri, dtype=float).reshape(3, 3)
    t1 = pts[1] - pts[0]
    t2 = pts[2] - pts[0]
    cross = np.cross(t1, t2)
    two_area = np.linalg.norm(cross)
    diam2 = max(
        np.dot(t1, t1), np.dot(t2, t2),
        np.dot(pts[2] - pts[1], pts[2] - pts[1]))
    if two_area <= 2e-14 * diam2:
        raise GeometryError("degenerate triangle: area below 1e-14 * diameter^2")
    tangents = np.stack((t1, t2), axis=1)
    g = tangents.T @ tangents
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det
    return SurfacePatch(points=pts, tangents=tangents, metric=g,
                        metric_det=det, metric_inv=ginv,
                        normal=cross / two_area, area=0.5 * two_area)


def surface_gradient(patch, values):
    """Surface gradient of a nodal (P1) field on one triangle patch.

    The result is tangent to the triangle plane and exact for affine fields.
    """
    v = np.asarray(values, dtype=float).reshape(3)
    dphi = np.array([v[1] - v[0], v[2] - v[0]])
    return patch.tangents @ (patch.metric_inv @ dphi)


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex curvature scalar with exclusion flags.

    ``excluded`` marks rim vertices of open surfaces and crease vertices
    (adjacent-normal spread above the crease angle); their values are not
    meaningful for smooth-piece statistics.
    """

    values: np.ndarray    # (nv,) curvature scalar; only surface vertices meaningful
    excluded: np.ndarray  # (nv,) bool
    on_surface: np.ndarray

    def included_ids(self):
        return np.nonzero(self.on_surface & ~self.excluded)[0]


def _facet_curvature(surface):
    """Half-trace of surface gradients of the vertex-normal components, per facet."""
    nf = surface.facets.shape[0]
    vals = np.empty(nf)
    for fi in range(nf):
        patch = first_fundamental_form(surface.vertices[surface.facets[fi]])
        nodal = surface.vertex_normals[surface.facets[fi]]  # (3 vertices, 3 components)
        s = 0.0
        for comp in range(3):
            s += surface_gradient(patch, nodal[:, comp])[comp]
        vals[fi] = 0.5 * s
    return vals


def _normal_spread(surface, vertex):
    """Largest angle between adjacent facet normals and their mean at a vertex."""
    ids = surface.vertex_facets[vertex]
    if not ids:
        return 0.0
    normals = surface.facet_normals[list(ids)]
    mean = normals.mean(axis=0)
    nrm = np.linalg.norm(mean)
    if nrm == 0.0:
        return np.pi
    mean /= nrm
    cos = np.clip(normals @ mean, -1.0, 1.0)
    return float(np.arccos(cos.min()))


def vertex_mean_curvature(surface, crease_angle=DEFAULT_CREASE_ANGLE):
    """Curvature scalar at every surface vertex.

    Per-facet values are area-weighted averaged onto vertices (ascending facet
    index, so the reduction is deterministic). The averaged normal is only a
    meaningful curvature sample on smooth pieces, so rim vertices of open
    surfaces and vertices across creases sharper than ``crease_angle`` are
    flagged excluded, and facets touching such vertices carry the crease
    pollution into their neighbors and are left out of the averages. A smooth
    vertex whose every adjacent facet touches a crease has no reliable sample
    and is excluded as well.
    """
    nv = surface.vertices.shape[0]
    facet_vals = _facet_curvature(surface)

    smooth = np.zeros(nv, dtype=bool)
    for vtx in range(nv):
        if surface.vertex_facets[vtx]:
            smooth[vtx] = (not surface.rim_vertices[vtx]
                           and _normal_spread(surface, vtx) <= crease_angle)
    facet_ok = smooth[surface.facets].all(axis=1)

    values = np.zeros(nv)
    excluded = np.zeros(nv, dtype=bool)
    for vtx in range(nv):
        ids = [fi for fi in surface.vertex_facets[vtx] if facet_ok[fi]]
        if not smooth[vtx] or not ids:
            excluded[vtx] = surface.on_surface[vtx]
            continue
        w = surface.facet_areas[ids]
        values[vtx] = float(np.dot(w, facet_vals[ids]) / w.sum())
    return CurvatureField(values=values, excluded=excluded, on_surface=surface.on_surface.copy())


@dataclass(frozen=True)
class BoundaryPatch:
    """A label-connected component of the boundary facets."""

    patch_id: int
    label: int
    facet_ids: np.ndarray
    area: float
    mean_normal: np.ndarray
    flat: bool
    max_normal_angle: float
    interior_vertex_ids: np.ndarray
    max_abs_curvature: float


@dataclass(frozen=True)
class AdmissibilityReport:
    """Geometric admissibility of the two decoupling conditions."""

    patches: tuple
    curvature: CurvatureField
    tol_flat: float
    tol_curvature: float
    third_kind_admissible: bool   # all patches flat (polyhedral boundary)
    fourth_kind_admissible: bool  # curvature scalar vanishes on every patch

    @property
    def max_abs_curvature(self):
        return max((p.max_abs_curvature for p in self.patches), default=0.0)


def _connected_components(facets, facet_ids):
    """Split a facet id set into edge-connected components (deterministic order)."""
    edge_map = {}
    for fi in facet_ids:
        a, b, c = facets[fi]
        for e in ((a, b), (b, c), (a, c)):
            edge_map.setdefault((min(e), max(e)), []).append(fi)
    adj = {fi: set() for fi in facet_ids}
    for members in edge_map.values():
        for x in members:
            for y in members:
                if x != y:
                    adj[x].add(y)
    seen = set()
    comps = []
    for fi in sorted(facet_ids):
        if fi in seen:
            continue
        stack = [fi]
        comp = []
        seen.add(fi)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in sorted(adj[cur]):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        comps.append(np.array(sorted(comp), dtype=np.int64))
    return comps


def classify_boundary(surface, tol_flat=DEFAULT_TOL_FLAT,
                      tol_curvature=DEFAULT_TOL_CURVATURE,
                      crease_angle=DEFAULT_CREASE_ANGLE):
    """Partition the boundary into label-connected patches and judge admissibility.

    A patch is flat when every facet normal lies within ``tol_flat`` radians of
    the patch mean. The fourth-kind verdict requires max |curvature| <=
    ``tol_curvature`` on each patch's interior vertices; the third-kind verdict
    requires all patches flat.
    """
    curvature = vertex_mean_curvature(surface, crease_angle=crease_angle)

    # Vertices adjacent to facets of several patches are excluded from patch
    # statistics; build the vertex -> patch map as we go.
    patches = []
    vertex_patches = {}
    pid = 0
    for label in sorted(set(int(x) for x in surface.facet_labels)):
        ids = np.nonzero(surface.facet_labels == label)[0]
        for comp in _connected_components(surface.facets, list(ids)):
            normals = surface.facet_normals[comp]
            areas = surface.facet_areas[comp]
            mean = normals.mean(axis=0)
            nrm = np.linalg.norm(mean)
            mean = mean / nrm if nrm > 0 else mean
            cos = np.clip(normals @ mean, -1.0, 1.0)
            max_angle = float(np.arccos(cos.min())) if nrm > 0 else np.pi
            for vtx in set(int(v) for v in surface.facets[comp].reshape(-1)):
                vertex_patches.setdefault(vtx, set()).add(pid)
            patches.append(dict(patch_id=pid, label=label, facet_ids=comp,
                                area=float(areas.sum()), mean_normal=mean,
                                flat=max_angle <= tol_flat,
                                max_normal_angle=max_angle))
            pid += 1

    built = []
    for p in patches:
        interior = []
        for vtx in sorted(set(int(v) for v in surface.facets[p["facet_ids"]].reshape(-1))):
            if vertex_patches[vtx] == {p["patch_id"]} and not curvature.excluded[vtx]:
                interior.append(vtx)
        interior = np.array(interior, dtype=np.int64)
        max_abs = float(np.abs(curvature.values[interior]).max()) if interior.size else 0.0
        built.append(BoundaryPatch(
            patch_id=p["patch_id"], label=p["label"], facet_ids=p["facet_ids"],
            area=p["area"], mean_normal=p["mean_normal"], flat=p["flat"],
            max_normal_angle=p["max_normal_angle"],
            interior_vertex_ids=interior, max_abs_curvature=max_abs))

    return AdmissibilityReport(
        patches=tuple(built), curvature=curvature,
        tol_flat=tol_flat, tol_curvature=tol_curvature,
        third_kind_admissible=all(p.flat for p in built),
        fourth_kind_admissible=all(p.max_abs_curvature <= tol_curvature for p in built))


def _vertex_patch_id(report, surface):
    """Patch id per vertex, -1 when the vertex touches several patches."""
    nv = surface.vertices.shape[0]
    out = np.full(nv, -1, dtype=np.int64)
    counts = np.zeros(nv, dtype=np.int64)
    for p in report.patches:
        for vtx in set(int(v) for v in surface.facets[p.facet_ids].reshape(-1)):
            counts[vtx] += 1
            out[vtx] = p.patch_id
    out[counts != 1] = -1
    return out


def write_curvature_report(surface, report, path):
    """CSV report: one row per surface vertex, then per-patch summaries and verdicts."""
    vp = _vertex_patch_id(report, surface)
    curvature = report.curvature
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "id", "x", "y", "z", "curvature", "patch", "flat"])
        for vtx in np.nonzero(surface.on_surface)[0]:
            x, y, z = surface.vertices[vtx]
            cur = "" if curvature.excluded[vtx] else f"{curvature.values[vtx]:.17g}"
            pid = "" if vp[vtx] < 0 else str(int(vp[vtx]))
            w.writerow(["vertex", int(vtx), f"{x:.17g}", f"{y:.17g}", f"{z:.17g}",
                        cur, pid, ""])
        for p in report.patches:
            w.writerow(["patch", p.patch_id, "", "", "",
                        f"{p.max_abs_curvature:.17g}", str(p.label),
                        "1" if p.flat else "0"])
        w.writerow(["verdict", "third_kind", "", "", "",
                    "", "", "1" if report.third_kind_admissible else "0"])
        w.writerow(["verdict", "fourth_kind", "", "", "",
                    "", "", "1" if report.fourth_kind_admissible else "0"])
