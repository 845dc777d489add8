"""Analytic field callbacks, discrete fields, derivative fields and norms.

A FieldFunction bundles vectorized callbacks for a field's value and (when
available) its divergence and curl, which right-hand sides and exact
solutions need. A DiscreteField is a coefficient vector over a DofMap's free
dofs; evaluation happens at the fixed quadrature points (volume or boundary),
which is all the norms, residuals and reports require.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .assembly import (boundary_tables, volume_l2, volume_tables)
from .dofmap import build_dofmap


@dataclass(frozen=True)
class FieldFunction:
    """Analytic field with optional divergence/curl callbacks.

    ``value`` maps (N, 3) points to (N,) scalars or (N, 3) vectors;
    ``divergence`` to (N,), ``curl`` to (N, 3). Missing callbacks are None.
    """

    value: object
    divergence: object = None
    curl: object = None
    vector: bool = True

    @staticmethod
    def zero(vector=True):
        if vector:
            return FieldFunction(value=lambda x: np.zeros_like(x),
                                 divergence=lambda x: np.zeros(x.shape[0]),
                                 curl=lambda x: np.zeros_like(x), vector=True)
        return FieldFunction(value=lambda x: np.zeros(x.shape[0]),
                             vector=False)


@dataclass
class DiscreteField:
    """Coefficients over a DofMap's free dofs (constrained dofs are zero)."""

    dm: object
    coeffs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if self.coeffs.size != self.dm.n_free:
            raise ValidationError("coefficient vector length does not match free dofs")
        self._nodal = None

    @property
    def vector(self):
        return self.dm.value_kind == "vector3"

    def nodal(self):
        """Full Cartesian nodal values, shape (nn, ncomp)."""
        if self._nodal is None:
            self._nodal = self.dm.expand(self.coeffs)
        return self._nodal

    def vertex_values(self):
        """Values at the mesh vertices (the P1 sub-lattice), for export."""
        nv = self.dm.mesh.num_vertices
        vals = self.nodal()[:nv]
        return vals[:, 0] if not self.vector else vals

    # Quadrature-point evaluation ------------------------------------------------

    def value_q(self):
        tab = volume_tables(self.dm)
        u = self.nodal()[self.dm.elem_nodes]           # (ne, nbf, ncomp)
        out = np.einsum("qa,eac->eqc", tab.vals, u)
        return out[..., 0] if not self.vector else out

    def grad_q(self):
        """Gradient at volume quadrature points: (ne,nq,3) or (ne,nq,3,3) d u_i/d x_j."""
        tab = volume_tables(self.dm)
        u = self.nodal()[self.dm.elem_nodes]
        out = np.einsum("eqaj,eac->eqcj", tab.grads, u)
        return out[..., 0, :] if not self.vector else out

    def div_q(self):
        g = self.grad_q()
        if not self.vector:
            raise ValidationError("divergence needs a vector field")
        return np.einsum("eqii->eq", g)

    def curl_q(self):
        g = self.grad_q()
        if not self.vector:
            raise ValidationError("curl needs a vector field")
        return np.stack((g[..., 2, 1] - g[..., 1, 2],
                         g[..., 0, 2] - g[..., 2, 0],
                         g[..., 1, 0] - g[..., 0, 1]), axis=-1)

    # Boundary traces (one-sided, from the owning element) -----------------------

    def boundary_value(self):
        bt = boundary_tables(self.dm)
        u = self.nodal()[bt.elem_nodes]
        out = np.einsum("fqa,fac->fqc", bt.vals, u)
        return out[..., 0] if not self.vector else out

    def boundary_grad(self):
        bt = boundary_tables(self.dm)
        u = self.nodal()[bt.elem_nodes]
        out = np.einsum("fqaj,fac->fqcj", bt.grads, u)
        return out[..., 0, :] if not self.vector else out

    def boundary_div(self):
        g = self.boundary_grad()
        return np.einsum("fqii->fq", g)

    def boundary_curl(self):
        g = self.boundary_grad()
        return np.stack((g[..., 2, 1] - g[..., 1, 2],
                         g[..., 0, 2] - g[..., 2, 0],
                         g[..., 1, 0] - g[..., 0, 1]), axis=-1)


def interpolate(dm, func) -> DiscreteField:
    return DiscreteField(dm, dm.interpolate(func))


def _exact_at_quadrature(dm, func, what):
    tab = volume_tables(dm)
    pts = tab.points.reshape(-1, 3)
    cb = getattr(func, what) if what != "value" else func.value
    if cb is None:
        raise ValidationError(f"exact field provides no '{what}' callback")
    out = np.asarray(cb(pts), dtype=float)
    shape = tab.points.shape[:2]
    return out.reshape(shape + (3,)) if out.ndim == 2 else out.reshape(shape)


def norms(u_h: DiscreteField, exact: FieldFunction = None):
    """Quadrature-evaluated norms and (optionally) errors against an exact field.

    For vector fields the graph norm sqrt(L2^2 + ||curl||^2 + ||div||^2) is
    included as 'graph'; relative errors divide by the exact field's norm
    computed with the same quadrature.
    """
    tab = volume_tables(u_h.dm)
    out = {}
    vals = u_h.value_q()
    out["l2"] = volume_l2(tab, vals)
    if u_h.vector:
        div = u_h.div_q()
        curl = u_h.curl_q()
        out["div"] = volume_l2(tab, div)
        out["curl"] = volume_l2(tab, curl)
        out["graph"] = float(np.sqrt(out["l2"] ** 2 + out["div"] ** 2 + out["curl"] ** 2))

    if exact is None:
        return out

    ev = _exact_at_quadrature(u_h.dm, exact, "value")
    err_l2 = volume_l2(tab, vals - ev)
    ref_l2 = volume_l2(tab, ev)
    out["l2_error"] = err_l2
    if ref_l2 == 0.0:
        raise ValidationError("relative error requested against a zero-norm exact field")
    out["l2_rel"] = err_l2 / ref_l2

    if u_h.vector:
        ediv = _exact_at_quadrature(u_h.dm, exact, "divergence")
        ecurl = _exact_at_quadrature(u_h.dm, exact, "curl")
        derr = volume_l2(tab, u_h.div_q() - ediv)
        cerr = volume_l2(tab, u_h.curl_q() - ecurl)
        graph_err = float(np.sqrt(err_l2 ** 2 + derr ** 2 + cerr ** 2))
        graph_ref = float(np.sqrt(ref_l2 ** 2 + volume_l2(tab, ediv) ** 2
                                  + volume_l2(tab, ecurl) ** 2))
        out["div_error"] = derr
        out["curl_error"] = cerr
        out["graph_error"] = graph_err
        out["graph_rel"] = graph_err / graph_ref
    return out


def l2_difference(a_vals, b_vals, tab):
    """L2 norm of the difference of two quadrature-sampled fields."""
    return volume_l2(tab, a_vals - b_vals)


def _project_p1(mesh, rhs_builder, vector):
    """L2-project quadrature samples onto the continuous P1 space."""
    from ..linalg import solve_sym   # local import to avoid a cycle at import time

    dm1 = build_dofmap(mesh, 1, "vector3" if vector else "scalar", "none")
    tab1 = volume_tables(dm1)
    mass = None
    key = "p1_projection_mass"
    if key in dm1._cache:
        mass = dm1._cache[key]
    else:
        from .assembly import assemble_matrix
        mass = assemble_matrix(dm1, "mass")
        dm1._cache[key] = mass

    samples = rhs_builder(tab1)
    if vector:
        b = np.einsum("eq,qa,eqi->eai", tab1.weights, tab1.vals, samples).reshape(
            tab1.weights.shape[0], -1)
    else:
        b = np.einsum("eq,qa,eq->ea", tab1.weights, tab1.vals, samples)
    gdof = dm1.free_index[(3 * dm1.elem_nodes[:, :, None] + np.arange(3)).reshape(
        dm1.elem_nodes.shape[0], -1)] if vector else dm1.free_index[dm1.elem_nodes]
    rhs = np.zeros(dm1.n_free)
    np.add.at(rhs, gdof.reshape(-1), b.reshape(-1))
    res = solve_sym(mass, rhs, tol=1e-13)
    return DiscreteField(dm1, res.x)


def field_div(u_h: DiscreteField) -> DiscreteField:
    """Element-wise divergence, L2-projected onto continuous P1 (for reporting).

    The raw per-element samples stay available through ``div_q`` and are what
    the norms use; the projection only smooths for export.
    """
    if not u_h.vector:
        raise ValidationError("field_div needs a vector field")
    div_samples = u_h.div_q()
    return _project_p1(u_h.dm.mesh, lambda tab1: div_samples, vector=False)


def field_curl(u_h: DiscreteField) -> DiscreteField:
    """Element-wise curl, L2-projected onto continuous P1 (for reporting)."""
    if not u_h.vector:
        raise ValidationError("field_curl needs a vector field")
    curl_samples = u_h.curl_q()
    return _project_p1(u_h.dm.mesh, lambda tab1: curl_samples, vector=True)
