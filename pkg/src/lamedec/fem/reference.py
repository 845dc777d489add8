"""Reference-element shape functions and quadrature rules.

Lagrange P1/P2 on the unit tetrahedron (vertices at the origin and the three
axis unit points); node order is vertices first, then edge midpoints in the
lexicographic edge order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3). Quadrature is
one fixed degree-5 rule per dimension: the 14-point symmetric tet rule and
the 7-point triangle rule, exact for products of two P2 functions.
"""

import numpy as np

from ..errors import ValidationError
from ..mesh import TET_EDGES

_SQRT15 = np.sqrt(15.0)


def lagrange_nodes(order):
    """Reference coordinates of the Lagrange nodes, shape (nbf, 3)."""
    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    if order == 1:
        return verts
    if order == 2:
        mids = np.array([0.5 * (verts[i] + verts[j]) for i, j in TET_EDGES])
        return np.vstack((verts, mids))
    raise ValidationError(f"unsupported element order {order}")


def basis_count(order):
    return {1: 4, 2: 10}[order]


def reference_shape(order, points):
    """Shape values and reference gradients at points in the closed reference tet.

    Returns (values, gradients) with shapes (..., nbf) and (..., nbf, 3).
    Values form a partition of unity; gradients sum to zero.
    """
    pts = np.asarray(points, dtype=float)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    lam = np.stack((1.0 - x - y - z, x, y, z), axis=-1)
    dlam = np.array([[-1.0, -1.0, -1.0],
                     [1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0],
                     [0.0, 0.0, 1.0]])
    if order == 1:
        vals = lam
        grads = np.broadcast_to(dlam, pts.shape[:-1] + (4, 3)).copy()
        return vals, grads
    if order == 2:
        nbf = 10
        vals = np.empty(pts.shape[:-1] + (nbf,))
        grads = np.empty(pts.shape[:-1] + (nbf, 3))
        for i in range(4):
            vals[..., i] = lam[..., i] * (2.0 * lam[..., i] - 1.0)
            grads[..., i, :] = (4.0 * lam[..., i] - 1.0)[..., None] * dlam[i]
        for e, (i, j) in enumerate(TET_EDGES):
            vals[..., 4 + e] = 4.0 * lam[..., i] * lam[..., j]
            grads[..., 4 + e, :] = 4.0 * (lam[..., i][..., None] * dlam[j]
                                          + lam[..., j][..., None] * dlam[i])
        return vals, grads
    raise ValidationError(f"unsupported element order {order}")


def tet_quadrature():
    """14-point degree-5 symmetric rule; weights sum to the reference volume 1/6."""
    pts = []
    wts = []

    def add_g4(a, w):
        b = 1.0 - 3.0 * a
        for bary in ((a, a, a, b), (a, a, b, a), (a, b, a, a), (b, a, a, a)):
            pts.append(bary[1:])
            wts.append(w)

    def add_g6(a, w):
        b = 0.5 - a
        seen = []
        for i in range(3):
            for j in range(i + 1, 4):
                bary = [a, a, a, a]
                bary[i] = b
                bary[j] = b
                seen.append(tuple(bary))
        for bary in seen:
            pts.append(bary[1:])
            wts.append(w)

    add_g4(0.0927352503108912, 0.0734930431163619)
    add_g4(0.3108859192633005, 0.1126879257180162)
    add_g6(0.0455037041256497, 0.0425460207770812)

    pts = np.array(pts)
    wts = np.array(wts)
    return pts, wts / wts.sum() / 6.0


def tri_quadrature():
    """7-point degree-5 rule on the unit reference triangle; weights sum to 1/2."""
    a1 = (6.0 - _SQRT15) / 21.0
    a2 = (6.0 + _SQRT15) / 21.0
    w1 = (155.0 - _SQRT15) / 1200.0
    w2 = (155.0 + _SQRT15) / 1200.0
    pts = [(1.0 / 3.0, 1.0 / 3.0)]
    wts = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        for bary in ((a, a), (a, 1.0 - 2.0 * a), (1.0 - 2.0 * a, a)):
            pts.append(bary)
            wts.append(w)
    pts = np.array(pts)
    wts = np.array(wts)
    return pts, wts / wts.sum() / 2.0
