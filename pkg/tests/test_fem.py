from math import factorial

import numpy as np
import pytest

from lamedec import fem
from lamedec.errors import ValidationError
from lamedec.fem import (assemble_load, assemble_matrix, build_dofmap, export_vtk,
                         field_curl, field_div, interpolate, norms, reference_shape,
                         tet_quadrature, tri_quadrature)
from lamedec.fem.assembly import (assemble_boundary_load, boundary_tables,
                                  surface_l2, volume_l2, volume_tables)
from lamedec.fem.fields import DiscreteField, FieldFunction
from lamedec.mesh import Mesh, generate_box_mesh


# --- reference elements and quadrature --------------------------------------


def test_p1_barycenter_values():
    v, _ = reference_shape(1, np.array([0.25, 0.25, 0.25]))
    assert np.allclose(v, 0.25, atol=1e-15)


def test_p2_lagrange_property_at_nodes():
    nodes = fem.lagrange_nodes(2)
    v, _ = reference_shape(2, nodes)
    assert np.abs(v - np.eye(10)).max() == 0.0


def test_partition_of_unity_and_gradient_sum():
    rng = np.random.default_rng(2)
    pts = rng.dirichlet((1, 1, 1, 1), size=30)[:, 1:]
    for order in (1, 2):
        v, g = reference_shape(order, pts)
        assert np.abs(v.sum(axis=-1) - 1.0).max() < 1e-14
        assert np.abs(g.sum(axis=-2)).max() < 1e-14


def test_unsupported_order_rejected():
    with pytest.raises(ValidationError):
        reference_shape(3, np.zeros(3))


@pytest.mark.parametrize("rule,dim", [(tet_quadrature, 3), (tri_quadrature, 2)])
def test_quadrature_degree_five_exact(rule, dim):
    pts, w = rule()
    volume = 1.0 / factorial(dim)
    assert w.sum() == pytest.approx(volume, abs=1e-14)
    for exps in np.ndindex(*(6,) * dim):
        if sum(exps) > 5:
            continue
        quad = np.sum(w * np.prod(pts ** np.array(exps), axis=1))
        exact = np.prod([factorial(e) for e in exps]) / factorial(sum(exps) + dim)
        assert quad == pytest.approx(exact, rel=1e-13, abs=1e-16)


def test_reference_p2_mass_matrix_closed_form():
    # independent oracle: symbolic integration over the reference tet
    import sympy as sp

    x, y, z = sp.symbols("x y z")
    lam = [1 - x - y - z, x, y, z]
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    basis = [lam[i] * (2 * lam[i] - 1) for i in range(4)] + \
        [4 * lam[i] * lam[j] for i, j in edges]
    exact = np.empty((10, 10))
    for i in range(10):
        for j in range(i, 10):
            val = sp.integrate(sp.integrate(sp.integrate(
                sp.expand(basis[i] * basis[j]),
                (z, 0, 1 - x - y)), (y, 0, 1 - x)), (x, 0, 1))
            exact[i, j] = exact[j, i] = float(val)

    pts, w = tet_quadrature()
    v, _ = reference_shape(2, pts)
    quad = np.einsum("q,qa,qb->ab", w, v, v)
    assert np.abs(quad - exact).max() < 1e-14


# --- dofmaps -----------------------------------------------------------------


def _node_at(dm, coords):
    hits = np.nonzero(np.all(np.abs(dm.node_coords - np.asarray(coords)) < 1e-12, axis=1))[0]
    assert hits.size == 1
    return int(hits[0])


def test_constraint_counts_on_cube():
    m = generate_box_mesh(2, 1.0)
    dm_t = build_dofmap(m, 1, "vector3", "tangential_zero")
    dm_n = build_dofmap(m, 1, "vector3", "normal_zero")
    corner = _node_at(dm_t, (0, 0, 0))
    face = _node_at(dm_t, (0.5, 0.5, 0.0))
    edge = _node_at(dm_t, (0.5, 0.0, 0.0))
    interior = _node_at(dm_t, (0.5, 0.5, 0.5))

    assert dm_t.constrained[corner].sum() == 3    # 3 independent normals
    assert dm_t.constrained[edge].sum() == 3      # >= 2 normals: all constrained
    assert dm_t.constrained[face].sum() == 2      # keep the normal component
    assert dm_t.constrained[interior].sum() == 0

    assert dm_n.constrained[corner].sum() == 3
    assert dm_n.constrained[edge].sum() == 2      # free along the edge
    assert dm_n.constrained[face].sum() == 1
    free_row = np.nonzero(~dm_n.constrained[edge])[0][0]
    assert np.allclose(np.abs(dm_n.frames[edge][free_row]), [1.0, 0.0, 0.0])


def test_frames_orthonormal():
    m = generate_box_mesh(2, (1.0, 2.0, 0.7))
    for constraint in ("tangential_zero", "normal_zero"):
        dm = build_dofmap(m, 2, "vector3", constraint)
        f = dm.frames
        err = np.abs(np.einsum("nij,nkj->nik", f, f) - np.eye(3)).max()
        assert err < 1e-12


def test_dofmap_deterministic():
    m = generate_box_mesh(2, np.pi)
    a = build_dofmap(m, 2, "vector3", "tangential_zero")
    b = build_dofmap(m, 2, "vector3", "tangential_zero")
    assert np.array_equal(a.free_index, b.free_index)
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(a.elem_nodes, b.elem_nodes)


def test_scalar_dirichlet_constrains_boundary_nodes():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "scalar", "scalar_dirichlet_zero")
    assert dm.n_free == dm.num_nodes - int(dm.boundary_nodes.sum())
    # P2 on n=2: nodes form the 5x5x5 lattice; interior lattice is 3x3x3
    assert dm.n_free == 27


def test_incompatible_kinds_rejected():
    m = generate_box_mesh(1, 1.0)
    with pytest.raises(ValidationError):
        build_dofmap(m, 1, "scalar", "tangential_zero")
    with pytest.raises(ValidationError):
        build_dofmap(m, 1, "vector3", "scalar_dirichlet_zero")
    dm = build_dofmap(m, 1, "scalar", "none")
    with pytest.raises(ValidationError):
        assemble_matrix(dm, "curlcurl")


# --- assembly ----------------------------------------------------------------


def test_mass_constant_field_volume():
    m = generate_box_mesh(2, 1.0)
    for order in (1, 2):
        dm = build_dofmap(m, order, "scalar", "none")
        mass = assemble_matrix(dm, "mass")
        one = np.ones(dm.n_free)
        assert one @ mass.matvec(one) == pytest.approx(1.0, abs=1e-12)


def test_divdiv_identity_field():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "vector3", "none")
    a = assemble_matrix(dm, "divdiv")
    u = interpolate(dm, FieldFunction(value=lambda x: x))
    assert u.coeffs @ a.matvec(u.coeffs) == pytest.approx(9.0, rel=1e-12)


def test_curl_of_quadratic_gradient_vanishes():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "vector3", "none")

    def grad_quadratic(x):   # gradient of (x^2 + 2 y^2 + 0.5 z^2)/2 + x*1
        return np.stack([x[:, 0] + 1.0, 2.0 * x[:, 1], 0.5 * x[:, 2]], axis=1)

    u = interpolate(dm, FieldFunction(value=grad_quadratic))
    tab = volume_tables(dm)
    curl_energy = volume_l2(tab, u.curl_q()) ** 2
    assert curl_energy <= 1e-20
    c = assemble_matrix(dm, "curlcurl")
    assert abs(u.coeffs @ c.matvec(u.coeffs)) <= 1e-12


def test_assembled_matrices_bitwise_symmetric():
    m = generate_box_mesh(2, np.pi)
    dm = build_dofmap(m, 2, "vector3", "tangential_zero")
    for kind in ("mass", "divdiv", "curlcurl"):
        a = assemble_matrix(dm, kind)
        assert a.symmetry_error() == 0.0


def test_assembly_element_order_independence():
    m = generate_box_mesh(2, np.pi)
    perm = np.random.default_rng(9).permutation(m.num_tets)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    m2 = Mesh(m.vertices, m.tets[perm], m.boundary_facets, m.facet_labels,
              inv[m.facet_tets])
    for kind in ("mass", "curlcurl"):
        a1 = assemble_matrix(build_dofmap(m, 2, "vector3", "tangential_zero"), kind)
        a2 = assemble_matrix(build_dofmap(m2, 2, "vector3", "tangential_zero"), kind)
        assert np.array_equal(a1.indptr, a2.indptr)
        assert np.array_equal(a1.indices, a2.indices)
        assert np.abs(a1.data - a2.data).max() < 1e-14
        # identical element-local values in canonical triplet order: bitwise
        assert np.array_equal(a1.data, a2.data)


def test_mass_positive_definite_stiffness_semidefinite():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 1, "vector3", "normal_zero")
    mass = assemble_matrix(dm, "mass")
    rng = np.random.default_rng(4)
    for _ in range(10):
        v = rng.standard_normal(dm.n_free)
        assert v @ mass.matvec(v) > 0.0
        for kind in ("divdiv", "curlcurl"):
            a = assemble_matrix(dm, kind)
            assert v @ a.matvec(v) >= -1e-12


def test_load_zero_and_constant():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "scalar", "none")
    b0 = assemble_load(dm, FieldFunction(value=lambda x: np.zeros(x.shape[0]), vector=False))
    assert np.array_equal(b0, np.zeros(dm.n_free))
    b = assemble_load(dm, FieldFunction(value=lambda x: np.full(x.shape[0], 2.5), vector=False))
    assert b.sum() == pytest.approx(2.5, abs=1e-12)   # partition of unity * volume


def test_load_constrained_corner_entries_absent():
    m = generate_box_mesh(1, 1.0)
    dm = build_dofmap(m, 1, "vector3", "tangential_zero")
    # every node of the n=1 cube is on an edge or corner: all dofs constrained
    assert dm.n_free == 0
    b = assemble_load(dm, FieldFunction(value=lambda x: np.tile([1.0, 0.0, 0.0], (x.shape[0], 1))))
    assert b.size == 0


# --- fields, norms, traces ----------------------------------------------------


def test_field_div_of_identity():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 1, "vector3", "none")
    u = interpolate(dm, FieldFunction(value=lambda x: x))
    assert np.abs(u.div_q() - 3.0).max() < 1e-12
    proj = field_div(u)
    assert np.abs(proj.nodal() - 3.0).max() < 1e-9


def test_field_curl_of_rotation():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 1, "vector3", "none")

    def rot(x):
        return np.stack([-x[:, 1], x[:, 0], np.zeros(x.shape[0])], axis=1)

    u = interpolate(dm, FieldFunction(value=rot))
    assert np.abs(u.curl_q() - np.array([0.0, 0.0, 2.0])).max() < 1e-12
    proj = field_curl(u)
    assert np.abs(proj.nodal() - np.array([0.0, 0.0, 2.0])).max() < 1e-9


def test_field_curl_of_p2_gradient_small():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "vector3", "none")
    u = interpolate(dm, FieldFunction(value=lambda x: x))   # grad of
    proj = field_curl(u)                                    # a quadratic
    assert np.abs(proj.nodal()).max() < 1e-9


def test_norms_constant_field():
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 1, "vector3", "none")
    u = interpolate(dm, FieldFunction(value=lambda x: np.ones_like(x)))
    n = norms(u)
    assert n["l2"] == pytest.approx(np.sqrt(3.0), rel=1e-12)
    assert n["div"] < 1e-12
    zero = DiscreteField(dm, np.zeros(dm.n_free))
    assert norms(zero)["l2"] == 0.0


def test_norms_relative_error_needs_nonzero_exact():
    m = generate_box_mesh(1, 1.0)
    dm = build_dofmap(m, 1, "scalar", "none")
    u = interpolate(dm, FieldFunction(value=lambda x: np.zeros(x.shape[0]), vector=False))
    with pytest.raises(ValidationError):
        norms(u, FieldFunction(value=lambda x: np.zeros(x.shape[0]), vector=False))


def test_interpolation_error_ratio_p2():
    # P2 interpolation of sin(x): L2 error drops ~8x per uniform refinement
    def f(x):
        return np.sin(x[:, 0])

    errs = []
    for n in (2, 4):
        m = generate_box_mesh(n, np.pi)
        dm = build_dofmap(m, 2, "scalar", "none")
        u = interpolate(dm, FieldFunction(value=f, vector=False))
        errs.append(norms(u, FieldFunction(value=f, vector=False))["l2_error"])
    ratio = errs[0] / errs[1]
    assert 6.5 <= ratio <= 9.5


def test_trace_constraint_bound_random_fields():
    m = generate_box_mesh(2, np.pi)
    rng = np.random.default_rng(12)
    for constraint in ("tangential_zero", "normal_zero"):
        dm = build_dofmap(m, 2, "vector3", constraint)
        u = DiscreteField(dm, rng.standard_normal(dm.n_free))
        bt = boundary_tables(dm)
        vals = u.boundary_value()
        nu = bt.normals[:, None, :]
        if constraint == "tangential_zero":
            viol = np.abs(np.cross(np.broadcast_to(nu, vals.shape), vals)).max()
        else:
            viol = np.abs(np.einsum("fqi,fi->fq", vals, bt.normals)).max()
        assert viol <= 1e-10 * np.abs(u.nodal()).max()


def test_boundary_load_constant_data():
    # <1, phi_i> over the whole boundary sums to the surface area
    m = generate_box_mesh(2, 1.0)
    dm = build_dofmap(m, 2, "scalar", "none")
    b = assemble_boundary_load(dm, lambda pts, nrm: np.ones(pts.shape[0]))
    assert b.sum() == pytest.approx(6.0, rel=1e-12)


def _green_identity_residuals(n):
    """Residuals of the curl-curl and div-grad integration-by-parts identities."""
    from lamedec.verify import manufactured_case
    from lamedec.lame import MaterialParams

    params = MaterialParams(lam=2.0, mu=1.0, omega=1.0)
    mesh = generate_box_mesh(n, np.pi)
    dm = build_dofmap(mesh, 2, "vector3", "tangential_zero")
    rng = np.random.default_rng(31)
    v = DiscreteField(dm, rng.standard_normal(dm.n_free))
    tab = volume_tables(dm)
    pts = tab.points.reshape(-1, 3)
    shape = tab.points.shape[:2]

    # (curl curl u, v) = (curl u_I, curl v) for v with vanishing tangential trace
    s4 = manufactured_case("s4", (1, 1, 0), params)
    u_i = interpolate(dm, s4.u)
    ccu = np.asarray(s4.e_s.curl(pts)).reshape(shape + (3,))
    lhs = float(np.sum(tab.weights[..., None] * ccu * v.value_q()))
    rhs = float(np.sum(tab.weights[..., None] * u_i.curl_q() * v.curl_q()))
    curl_res = abs(lhs - rhs)

    # (grad div u, v) = -(div u_I, div v) + <div u, v . nu>
    p4 = manufactured_case("p4", (1, 1, 1), params)
    u_i = interpolate(dm, p4.u)
    gdu = -p4.kappa2 * np.asarray(p4.u.value(pts)).reshape(shape + (3,))
    lhs = float(np.sum(tab.weights[..., None] * gdu * v.value_q()))
    bt = boundary_tables(dm)
    bpts = bt.points.reshape(-1, 3)
    div_exact_b = np.asarray(p4.u.divergence(bpts)).reshape(bt.weights.shape)
    vdotnu = np.einsum("fqi,fi->fq", v.boundary_value(), bt.normals)
    rhs = -float(np.sum(tab.weights * u_i.div_q() * v.div_q())) \
        + float(np.sum(bt.weights * div_exact_b * vdotnu))
    div_res = abs(lhs - rhs)
    scale = max(1.0, np.abs(v.coeffs).max())
    return curl_res / scale, div_res / scale


def test_green_identities_decay_under_refinement():
    c2, d2 = _green_identity_residuals(2)
    c4, d4 = _green_identity_residuals(4)
    assert c4 < 0.5 * c2
    assert d4 < 0.5 * d2


# --- VTK export ----------------------------------------------------------------


def test_export_vtk_format_and_determinism(tmp_path):
    m = generate_box_mesh(1, 1.0)
    nv = m.num_vertices
    scalar = np.linspace(0.0, 1.0, nv)
    vector = np.tile([1.0, 0.5, -0.25], (nv, 1))
    p1 = tmp_path / "a.vtk"
    p2 = tmp_path / "b.vtk"
    export_vtk(p1, m, temperature=scalar, flow=vector)
    text = p1.read_text()
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert text.count("SCALARS") == 1
    assert text.count("VECTORS") == 1
    assert "CELL_TYPES" in text and "\n10\n" in text
    export_vtk(p2, m, temperature=scalar, flow=vector)
    assert p1.read_bytes() == p2.read_bytes()


def test_export_vtk_rejects_bad_shape(tmp_path):
    m = generate_box_mesh(1, 1.0)
    with pytest.raises(ValidationError):
        export_vtk(tmp_path / "x.vtk", m, bad=np.zeros(3))
