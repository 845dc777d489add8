"""Matrix and load assembly over constrained DOF maps.

All volume integrals use the fixed 14-point degree-5 tet rule, all surface
integrals the 7-point degree-5 triangle rule. Local element matrices are
built symmetric, rotated into the boundary frames, mirrored so symmetry is
bitwise exact, and scattered as triplets; the canonical triplet reduction in
``linalg.csr_from_triplets`` then makes the global matrix bitwise symmetric
and independent of element order.
"""

import numpy as np

from ..errors import ValidationError
from ..linalg import csr_from_triplets
from .dofmap import DofMap
from .reference import basis_count, reference_shape, tet_quadrature, tri_quadrature

MATRIX_KINDS = ("mass", "divdiv", "curlcurl", "gradgrad")


def _geometry(mesh):
    v = mesh.vertices[mesh.tets]
    jac = np.transpose(v[:, 1:] - v[:, :1], (0, 2, 1))   # columns v_i - v_0
    det = np.linalg.det(jac)
    jinv = np.linalg.inv(jac)
    return jac, det, jinv


class VolumeTables:
    """Per-(mesh, order) quadrature tables: basis values and physical gradients."""

    def __init__(self, mesh, order):
        self.mesh = mesh
        self.order = order
        self.jac, self.det, self.jinv = _geometry(mesh)
        self.qp, self.qw = tet_quadrature()
        self.vals, gref = reference_shape(order, self.qp)     # (nq,nbf), (nq,nbf,3)
        self.grads = np.einsum("qaj,eji->eqai", gref, self.jinv)
        v0 = mesh.vertices[mesh.tets[:, 0]]
        self.points = v0[:, None, :] + np.einsum("eij,qj->eqi", self.jac, self.qp)
        self.weights = self.qw[None, :] * self.det[:, None]   # (ne, nq): sum = volume

    @property
    def nbf(self):
        return basis_count(self.order)


def volume_tables(dm):
    key = "volume_tables"
    if key not in dm._cache:
        dm._cache[key] = VolumeTables(dm.mesh, dm.order)
    return dm._cache[key]


def _mirror_sym(mats):
    """Force bitwise symmetry of a batch of local matrices."""
    lower = np.tril(mats, -1)
    diag = mats * np.eye(mats.shape[-1])[None]
    return lower + np.transpose(lower, (0, 2, 1)) + diag


def _local_matrices(tab, kind, value_kind):
    w = tab.weights                       # (ne, nq)
    if kind == "mass":
        mref = np.einsum("q,qa,qb->ab", tab.qw, tab.vals, tab.vals)
        loc = tab.det[:, None, None] * mref[None]
        if value_kind == "scalar":
            return loc
        ne, nbf = loc.shape[0], loc.shape[1]
        out = np.zeros((ne, nbf, 3, nbf, 3))
        for i in range(3):
            out[:, :, i, :, i] = loc
        return out.reshape(ne, nbf * 3, nbf * 3)

    if kind == "gradgrad":
        loc = np.einsum("eq,eqai,eqbi->eab", w, tab.grads, tab.grads)
        if value_kind == "scalar":
            return loc
        ne, nbf = loc.shape[0], loc.shape[1]
        out = np.zeros((ne, nbf, 3, nbf, 3))
        for i in range(3):
            out[:, :, i, :, i] = loc
        return out.reshape(ne, nbf * 3, nbf * 3)

    # divdiv / curlcurl act on vector fields built from scalar basis times e_i.
    t = np.einsum("eq,eqai,eqbj->eaibj", w, tab.grads, tab.grads)
    if kind == "divdiv":
        ne, nbf = t.shape[0], t.shape[1]
        return t.reshape(ne, nbf * 3, nbf * 3)
    if kind == "curlcurl":
        gg = np.einsum("eaibi->eab", t)
        ne, nbf = t.shape[0], t.shape[1]
        out = np.zeros((ne, nbf, 3, nbf, 3))
        for i in range(3):
            out[:, :, i, :, i] = gg
        out -= np.transpose(t, (0, 1, 4, 3, 2))   # subtract T[a,j,b,i]
        return out.reshape(ne, nbf * 3, nbf * 3)
    raise ValidationError(f"unknown matrix kind '{kind}'")


def _rotate_local(dm, loc):
    """Rotate local vector matrices into the per-node boundary frames."""
    ne, nloc = loc.shape[0], loc.shape[1]
    nbf = nloc // 3
    rn = dm.frames[dm.elem_nodes]                     # (ne, nbf, 3, 3)
    a5 = loc.reshape(ne, nbf, 3, nbf, 3)
    a5 = np.einsum("eaxi,eaibj,ebyj->eaxby", rn, a5, rn)
    return a5.reshape(ne, nloc, nloc)


def _element_dofs(dm):
    """Rotated global dof ids per element, shape (ne, nbf * ncomp)."""
    if dm.value_kind == "scalar":
        return dm.elem_nodes
    return (3 * dm.elem_nodes[:, :, None] + np.arange(3)[None, None, :]).reshape(
        dm.elem_nodes.shape[0], -1)


def assemble_matrix(dm: DofMap, kind: str):
    """Assemble one of mass/divdiv/curlcurl/gradgrad over the free dofs."""
    if kind not in MATRIX_KINDS:
        raise ValidationError(f"unknown matrix kind '{kind}'")
    if kind in ("divdiv", "curlcurl") and dm.value_kind != "vector3":
        raise ValidationError(f"matrix kind '{kind}' needs a vector3 space")

    tab = volume_tables(dm)
    loc = _local_matrices(tab, kind, dm.value_kind)
    if dm.value_kind == "vector3" and dm.constraint != "none":
        loc = _rotate_local(dm, loc)
    loc = _mirror_sym(loc)

    gdof = dm.free_index[_element_dofs(dm)]           # (ne, nloc), -1 = constrained
    ne, nloc = gdof.shape
    rows = np.broadcast_to(gdof[:, :, None], (ne, nloc, nloc))
    cols = np.broadcast_to(gdof[:, None, :], (ne, nloc, nloc))
    keep = (rows >= 0) & (cols >= 0)
    return csr_from_triplets(dm.n_free, rows[keep], cols[keep], loc[keep])


def _evaluate_callable(func, points, vector):
    """Evaluate a field callback on an (..., 3) point array."""
    flat = points.reshape(-1, 3)
    out = np.asarray(func(flat), dtype=float)
    if vector:
        return out.reshape(points.shape[:-1] + (3,))
    return out.reshape(points.shape[:-1])


def assemble_load(dm: DofMap, f):
    """Load vector of (f, phi_i) over the free dofs; f may be a FieldFunction."""
    value = getattr(f, "value", f)
    tab = volume_tables(dm)
    vector = dm.value_kind == "vector3"
    fv = _evaluate_callable(value, tab.points, vector)
    if vector:
        b = np.einsum("eq,qa,eqi->eai", tab.weights, tab.vals, fv)
        b = np.einsum("eaxi,eai->eax", dm.frames[dm.elem_nodes], b)
        b = b.reshape(b.shape[0], -1)
    else:
        b = np.einsum("eq,qa,eq->ea", tab.weights, tab.vals, fv)

    gdof = dm.free_index[_element_dofs(dm)]
    out = np.zeros(dm.n_free)
    keep = gdof >= 0
    np.add.at(out, gdof[keep], b[keep])
    return out


class BoundaryTables:
    """Facet quadrature with one-sided (owning-element) basis data.

    ``weights[f, q]`` sum to the facet area; ``vals``/``grads`` are the
    owning tet's shape functions and physical gradients evaluated at the
    facet quadrature points, so traces and one-sided derivatives of any
    discrete field are linear combinations with the element coefficients.
    """

    def __init__(self, dm):
        mesh = dm.mesh
        self.dm = dm
        facets = mesh.boundary_facets
        nf = facets.shape[0]
        qp, qw = tri_quadrature()
        nq = qp.shape[0]

        p = mesh.vertices[facets]                      # (nf, 3, 3)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        cross = np.cross(e1, e2)
        norm = np.linalg.norm(cross, axis=1)
        normals = cross / norm[:, None]
        tet_cent = mesh.vertices[mesh.tets].mean(axis=1)[mesh.facet_tets]
        fac_cent = p.mean(axis=1)
        flip = np.sum(normals * (fac_cent - tet_cent), axis=1) < 0.0
        self.normals = np.where(flip[:, None], -normals, normals)

        self.points = (p[:, None, 0, :]
                       + qp[None, :, 0, None] * e1[:, None, :]
                       + qp[None, :, 1, None] * e2[:, None, :])   # (nf, nq, 3)
        self.weights = qw[None, :] * norm[:, None]     # sums to the facet area
        self.owners = mesh.facet_tets

        tab = volume_tables(dm)
        v0 = mesh.vertices[mesh.tets[self.owners, 0]]
        xi = np.einsum("fij,fqj->fqi", tab.jinv[self.owners], self.points - v0[:, None, :])
        vals, gref = reference_shape(dm.order, xi.reshape(-1, 3))
        nbf = basis_count(dm.order)
        self.vals = vals.reshape(nf, nq, nbf)
        gref = gref.reshape(nf, nq, nbf, 3)
        self.grads = np.einsum("fqaj,fji->fqai", gref, tab.jinv[self.owners])
        self.elem_nodes = dm.elem_nodes[self.owners]   # (nf, nbf)


def boundary_tables(dm):
    key = "boundary_tables"
    if key not in dm._cache:
        dm._cache[key] = BoundaryTables(dm)
    return dm._cache[key]


def assemble_boundary_load(dm: DofMap, data):
    """Surface load <data, phi_i> over the free dofs.

    ``data(points, normals)`` returns scalar or vector values at the facet
    quadrature points (flattened); used for Neumann and natural boundary data.
    """
    bt = boundary_tables(dm)
    nf, nq = bt.weights.shape
    flat_pts = bt.points.reshape(-1, 3)
    flat_nrm = np.repeat(bt.normals, nq, axis=0)
    raw = np.asarray(data(flat_pts, flat_nrm), dtype=float)
    vector = dm.value_kind == "vector3"
    if vector:
        dv = raw.reshape(nf, nq, 3)
        b = np.einsum("fq,fqa,fqi->fai", bt.weights, bt.vals, dv)
        b = np.einsum("faxi,fai->fax", dm.frames[bt.elem_nodes], b)
        b = b.reshape(nf, -1)
    else:
        dv = raw.reshape(nf, nq)
        b = np.einsum("fq,fqa,fq->fa", bt.weights, bt.vals, dv)

    gdof = dm.free_index[_element_dofs_boundary(dm, bt)]
    out = np.zeros(dm.n_free)
    keep = gdof >= 0
    np.add.at(out, gdof[keep], b[keep])
    return out


def _element_dofs_boundary(dm, bt):
    if dm.value_kind == "scalar":
        return bt.elem_nodes
    return (3 * bt.elem_nodes[:, :, None] + np.arange(3)[None, None, :]).reshape(
        bt.elem_nodes.shape[0], -1)


def volume_integral(tab: VolumeTables, values):
    """Integral of scalar values sampled at the volume quadrature points."""
    return float(np.sum(tab.weights * values))


def volume_l2(tab: VolumeTables, values):
    """L2 norm of scalar (ne,nq) or vector (ne,nq,3) quadrature samples."""
    sq = values ** 2 if values.ndim == 2 else np.sum(values ** 2, axis=2)
    return float(np.sqrt(np.sum(tab.weights * sq)))


def surface_l2(bt: BoundaryTables, values):
    """Surface L2 norm of quadrature samples over all boundary facets."""
    sq = values ** 2 if values.ndim == 2 else np.sum(values ** 2, axis=2)
    return float(np.sqrt(np.sum(bt.weights * sq)))
