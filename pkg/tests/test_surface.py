import numpy as np
import pytest

from lamedec.errors import GeometryError
from lamedec.mesh import extract_boundary, generate_box_mesh, load_surface, surface_from_triangles
from lamedec.surface import (classify_boundary, first_fundamental_form,
                             surface_gradient, vertex_mean_curvature,
                             write_curvature_report)


def test_fundamental_form_unit_right_triangle():
    p = first_fundamental_form([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    assert np.allclose(p.metric, np.eye(2), atol=1e-15)
    assert p.metric_det == pytest.approx(1.0)
    assert p.area == pytest.approx(0.5)


def test_fundamental_form_scaled_triangle():
    p = first_fundamental_form([(0, 0, 0), (2, 0, 0), (0, 1, 0)])
    assert np.allclose(p.metric, np.diag([4.0, 1.0]), atol=1e-15)
    assert np.sqrt(p.metric_det) == pytest.approx(2.0 * p.area)


def test_metric_inverse_identity_random_triangles():
    rng = np.random.default_rng(7)
    for _ in range(50):
        tri = rng.standard_normal((3, 3))
        try:
            p = first_fundamental_form(tri)
        except GeometryError:
            continue
        assert np.abs(p.metric_inv @ p.metric - np.eye(2)).max() < 1e-12


def test_degenerate_triangle_rejected():
    with pytest.raises(GeometryError):
        first_fundamental_form([(0, 0, 0), (1, 0, 0), (2, 0, 0)])


def test_surface_gradient_constant_and_linear():
    p = first_fundamental_form([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    assert np.allclose(surface_gradient(p, [3.0, 3.0, 3.0]), 0.0, atol=1e-15)
    # phi(x, y, z) = x on a triangle in the z = 0 plane
    g = surface_gradient(p, [0.0, 1.0, 0.0])
    assert np.allclose(g, [1.0, 0.0, 0.0], atol=1e-14)


def test_surface_gradient_tilted_projection():
    tri = np.array([(0.0, 0.0, 0.0), (1.0, 0.0, 0.3), (0.0, 1.0, 0.5)])
    p = first_fundamental_form(tri)
    # phi = x3 at the vertices; the gradient is the tangential projection of e3
    g = surface_gradient(p, tri[:, 2])
    expected = np.array([0.0, 0.0, 1.0]) - p.normal * p.normal[2]
    assert np.abs(g - expected).max() < 1e-12
    assert abs(g @ p.normal) < 1e-12 * np.linalg.norm(g)


def test_curvature_zero_on_flat_cube_faces():
    b = extract_boundary(generate_box_mesh(3, 1.0))
    curv = vertex_mean_curvature(b)
    ids = curv.included_ids()
    assert ids.size > 0
    assert np.abs(curv.values[ids]).max() < 1e-10


def test_icosphere_curvature_near_inverse_radius(icosphere_surface):
    surf, _ = icosphere_surface
    curv = vertex_mean_curvature(surf)
    ids = curv.included_ids()
    assert ids.size == surf.vertices.shape[0]   # closed smooth surface: none excluded
    mean = curv.values[ids].mean()
    assert abs(mean - 1.0) < 0.05


def test_cylinder_curvature_half_inverse_radius(cylinder_surface):
    curv = vertex_mean_curvature(cylinder_surface)
    ids = curv.included_ids()
    assert ids.size > 0
    # rim rings are excluded
    assert curv.excluded[cylinder_surface.rim_vertices].all()
    mean = curv.values[ids].mean()
    assert abs(mean - 0.5) < 0.02


def test_curvature_rigid_motion_invariance(icosphere_surface):
    surf, _ = icosphere_surface
    base = vertex_mean_curvature(surf)
    theta = 0.7
    rot = np.array([[np.cos(theta), -np.sin(theta), 0.0],
                    [np.sin(theta), np.cos(theta), 0.0],
                    [0.0, 0.0, 1.0]])
    tilt = np.array([[1.0, 0.0, 0.0],
                     [0.0, np.cos(0.3), -np.sin(0.3)],
                     [0.0, np.sin(0.3), np.cos(0.3)]])
    moved = surface_from_triangles(surf.vertices @ (tilt @ rot).T + np.array([1.0, -2.0, 0.5]),
                                   surf.facets)
    curv2 = vertex_mean_curvature(moved)
    ids = base.included_ids()
    assert np.abs(curv2.values[ids] - base.values[ids]).max() < 1e-10


def test_curvature_scaling(icosphere_surface):
    surf, _ = icosphere_surface
    base = vertex_mean_curvature(surf)
    scaled = surface_from_triangles(2.5 * surf.vertices, surf.facets)
    curv2 = vertex_mean_curvature(scaled)
    ids = base.included_ids()
    assert np.abs(curv2.values[ids] - base.values[ids] / 2.5).max() < 1e-10


def test_classify_cube_all_flat_both_admissible():
    b = extract_boundary(generate_box_mesh(2, 1.0))
    rep = classify_boundary(b)
    assert len(rep.patches) == 6
    assert all(p.flat for p in rep.patches)
    assert rep.third_kind_admissible
    assert rep.fourth_kind_admissible
    assert rep.max_abs_curvature <= 1e-10


def test_classify_icosphere_inadmissible(icosphere_surface):
    surf, _ = icosphere_surface
    rep = classify_boundary(surf)
    assert len(rep.patches) == 1
    assert not rep.patches[0].flat
    assert not rep.third_kind_admissible
    assert not rep.fourth_kind_admissible
    assert rep.max_abs_curvature == pytest.approx(1.0, rel=0.1)


def test_classify_split_label_unchanged_verdicts():
    m = generate_box_mesh(2, 1.0)
    b = extract_boundary(m)
    labels = b.facet_labels.copy()
    # split the x=0 face label into two labels by facet parity
    ids = np.nonzero(labels == 1)[0]
    labels[ids[::2]] = 7
    b2 = surface_from_triangles(b.vertices, b.facets, labels)
    rep = classify_boundary(b2)
    # the split face decomposes into label-connected components; at least 7 patches
    assert len(rep.patches) >= 7
    assert rep.third_kind_admissible
    assert rep.fourth_kind_admissible


def test_surface_file_round_trip(tmp_path, icosphere_surface):
    surf, path = icosphere_surface
    loaded = load_surface(path)
    assert np.array_equal(loaded.facets, surf.facets)
    assert np.abs(loaded.vertices - surf.vertices).max() == 0.0


def test_curvature_report_csv(tmp_path):
    b = extract_boundary(generate_box_mesh(2, 1.0))
    rep = classify_boundary(b)
    path = tmp_path / "report.csv"
    write_curvature_report(b, rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "record,id,x,y,z,curvature,patch,flat"
    kinds = {ln.split(",")[0] for ln in lines[1:]}
    assert kinds == {"vertex", "patch", "verdict"}
    # deterministic rewrite
    path2 = tmp_path / "report2.csv"
    write_curvature_report(b, rep, path2)
    assert path.read_bytes() == path2.read_bytes()
