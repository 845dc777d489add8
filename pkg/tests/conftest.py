import numpy as np
import pytest

from lamedec.lame import MaterialParams
from lamedec.mesh import generate_box_mesh, save_surface, surface_from_triangles


@pytest.fixture(scope="session")
def params():
    return MaterialParams(lam=2.0, mu=1.0, omega=1.0)


@pytest.fixture(scope="session")
def cube_mesh_2():
    return generate_box_mesh(2, np.pi)


@pytest.fixture(scope="session")
def cube_mesh_4():
    return generate_box_mesh(4, np.pi)


def make_icosphere(subdivisions, radius=1.0):
    """Icosahedron refined by edge midpoint subdivision, projected to the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pts = radius * np.array(verts)
    return pts, np.array(faces, dtype=np.int64)


def make_open_cylinder(radius=1.0, height=2.0, n_seg=96, n_layers=8):
    """Open tube (no caps), triangulated with outward orientation."""
    angles = 2.0 * np.pi * np.arange(n_seg) / n_seg
    zs = np.linspace(0.0, height, n_layers + 1)
    verts = np.array([(radius * np.cos(a), radius * np.sin(a), z)
                      for z in zs for a in angles])
    tris = []
    for layer in range(n_layers):
        base = layer * n_seg
        top = (layer + 1) * n_seg
        for i in range(n_seg):
            j = (i + 1) % n_seg
            # outward normals: counter-clockwise seen from outside
            tris.append((base + i, base + j, top + i))
            tris.append((base + j, top + j, top + i))
    return verts, np.array(tris, dtype=np.int64)


@pytest.fixture(scope="session")
def icosphere_surface(tmp_path_factory):
    verts, faces = make_icosphere(4)
    surf = surface_from_triangles(verts, faces)
    path = tmp_path_factory.mktemp("assets") / "icosphere4.json"
    save_surface(surf, path)
    return surf, path


@pytest.fixture(scope="session")
def cylinder_surface():
    verts, tris = make_open_cylinder()
    return surface_from_triangles(verts, tris)
