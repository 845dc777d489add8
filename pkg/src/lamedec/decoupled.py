"""Stand-alone solvers for the decoupled pressure and shear problems.

The negative divergence of the displacement solves a Helmholtz problem

    Delta v + k_p^2 v = (1/(lam+2mu)) div f

with v = 0 on the boundary (fourth-kind displacement problem) or with
Neumann data d_nu v = (1/(lam+2mu)) nu . f (third kind). The curl solves a
Maxwell system

    curl curl E - k_s^2 E = (1/mu) curl f,   div E = 0

with natural data nu x (curl E) = (1/mu) nu x f (fourth kind) or the
essential condition nu x E = 0 (third kind). The Maxwell system is
discretized in nodal elements with a divergence regularization
s (div E, div F); since the exact solution is divergence-free the continuous
problem does not depend on s. The natural-bc space is the normal-zero space
(the curl of a tangentially-vanishing field has zero normal trace).
"""

from dataclasses import dataclass

import numpy as np

from . import fem
from .errors import ResonanceError, SolverError, ValidationError
from .lame import MaterialParams
from .linalg import add_scaled, smallest_eigenpair, solve_sym


def wavenumbers(params: MaterialParams):
    """Pressure and shear wavenumbers (k_p, k_s)."""
    return params.k_p, params.k_s


@dataclass
class HelmholtzProblem:
    mesh: object
    k_p: float
    rhs: object                  # scalar callable g(points)
    bc_kind: str = "dirichlet_zero"   # or "neumann"
    neumann_data: object = None  # callable d(points, normals) -> scalar
    order: int = 2
    tol: float = 1e-10
    guard_rel: float = 1e-6
    resonance_guard: bool = True

    def __post_init__(self):
        if self.bc_kind not in ("dirichlet_zero", "neumann"):
            raise ValidationError(f"unknown Helmholtz bc kind '{self.bc_kind}'")
        if self.k_p <= 0.0:
            raise ValidationError("wavenumber must be positive")
        if self.bc_kind == "neumann" and self.neumann_data is None:
            raise ValidationError("neumann bc requires boundary data")


def helmholtz_from_source(mesh, params: MaterialParams, f: fem.FieldFunction,
                          bc_kind, order=2, **kwargs):
    """Helmholtz data built from an elastic source f with analytic divergence."""
    if f.divergence is None:
        raise ValidationError("source must provide an analytic divergence")
    scale = 1.0 / (params.lam + 2.0 * params.mu)

    def g(points):
        return scale * np.asarray(f.divergence(points), dtype=float)

    data = None
    if bc_kind == "neumann":
        def data(points, normals):
            vals = np.asarray(f.value(points), dtype=float)
            return scale * np.einsum("ni,ni->n", vals, normals)

    return HelmholtzProblem(mesh=mesh, k_p=params.k_p, rhs=g, bc_kind=bc_kind,
                            neumann_data=data, order=order, **kwargs)


def solve_helmholtz(problem: HelmholtzProblem) -> fem.DiscreteField:
    """Galerkin solve of the Helmholtz problem.

    Weak form: -(grad v, grad w) + k_p^2 (v, w) = (g, w) - <data, w> over the
    Dirichlet-constrained or unconstrained scalar space; assembled as
    (G - k_p^2 M) x = <data, w> - (g, w) to keep the leading block positive.
    """
    constraint = "scalar_dirichlet_zero" if problem.bc_kind == "dirichlet_zero" else "none"
    dm = fem.build_dofmap(problem.mesh, problem.order, "scalar", constraint)
    grad = fem.assemble_matrix(dm, "gradgrad")
    mass = fem.assemble_matrix(dm, "mass")
    k2 = problem.k_p ** 2

    if problem.resonance_guard:
        est = smallest_eigenpair(grad, mass, k2)
        if abs(est.value - k2) < problem.guard_rel * abs(k2):
            raise ResonanceError(
                f"k_p^2 = {k2:.12g} is within {problem.guard_rel:g} of the discrete "
                f"Laplace eigenvalue {est.value:.12g}",
                omega2=k2, nearest_eigenvalue=est.value)

    b = -fem.assemble_load(dm, problem.rhs)
    if problem.bc_kind == "neumann":
        b = b + fem.assemble_boundary_load(dm, problem.neumann_data)

    op = add_scaled(grad, mass, 1.0, -k2)
    try:
        res = solve_sym(op, b, tol=problem.tol)
    except SolverError as exc:
        raise ResonanceError(
            f"Helmholtz solve stagnated (best residual {exc.residual:.3e}) near k_p^2={k2:g}",
            omega2=k2) from exc
    v = fem.DiscreteField(dm, res.x)
    v.diagnostics = {"iterations": res.iterations, "residual": res.residual}
    return v


@dataclass
class MaxwellProblem:
    mesh: object
    k_s: float
    rhs: object                  # vector callable h(points)
    bc_kind: str = "natural"     # or "essential"
    natural_data: object = None  # callable d(points, normals) -> vector
    reg_weight: float = 1.0      # divergence-regularization weight s > 0
    order: int = 2
    tol: float = 1e-10
    guard_rel: float = 1e-6
    resonance_guard: bool = True

    def __post_init__(self):
        if self.bc_kind not in ("natural", "essential"):
            raise ValidationError(f"unknown Maxwell bc kind '{self.bc_kind}'")
        if self.k_s <= 0.0:
            raise ValidationError("wavenumber must be positive")
        if self.reg_weight <= 0.0:
            raise ValidationError("regularization weight must be positive")


def maxwell_from_source(mesh, params: MaterialParams, f: fem.FieldFunction,
                        bc_kind, reg_weight=None, order=2, **kwargs):
    """Maxwell data built from an elastic source f with analytic curl."""
    if f.curl is None:
        raise ValidationError("source must provide an analytic curl")
    inv_mu = 1.0 / params.mu

    def h(points):
        return inv_mu * np.asarray(f.curl(points), dtype=float)

    data = None
    if bc_kind == "natural":
        def data(points, normals):
            vals = np.asarray(f.value(points), dtype=float)
            return inv_mu * np.cross(normals, vals)

    s = params.mu if reg_weight is None else reg_weight
    return MaxwellProblem(mesh=mesh, k_s=params.k_s, rhs=h, bc_kind=bc_kind,
                          natural_data=data, reg_weight=s, order=order, **kwargs)


def solve_maxwell(problem: MaxwellProblem) -> fem.DiscreteField:
    """Regularized curl-div Galerkin solve of the Maxwell system.

    Weak form over the normal-zero (natural bc) or tangential-zero
    (essential bc) space:

        (curl E, curl F) + s (div E, div F) - k_s^2 (E, F)
            = (h, F) - <data, F>_boundary

    The boundary term realizes nu x (curl E) = data and is omitted for the
    essential condition. The reported ``div_l2`` diagnostic tracks how well
    the discrete solution honors the divergence-free constraint.
    """
    constraint = "normal_zero" if problem.bc_kind == "natural" else "tangential_zero"
    dm = fem.build_dofmap(problem.mesh, problem.order, "vector3", constraint)
    curlcurl = fem.assemble_matrix(dm, "curlcurl")
    divdiv = fem.assemble_matrix(dm, "divdiv")
    mass = fem.assemble_matrix(dm, "mass")
    k2 = problem.k_s ** 2

    stiff = add_scaled(curlcurl, divdiv, 1.0, problem.reg_weight)
    if problem.resonance_guard:
        est = smallest_eigenpair(stiff, mass, k2)
        if abs(est.value - k2) < problem.guard_rel * abs(k2):
            raise ResonanceError(
                f"k_s^2 = {k2:.12g} is within {problem.guard_rel:g} of the discrete "
                f"eigenvalue {est.value:.12g} of the regularized operator",
                omega2=k2, nearest_eigenvalue=est.value)

    b = fem.assemble_load(dm, problem.rhs)
    if problem.bc_kind == "natural" and problem.natural_data is not None:
        b = b - fem.assemble_boundary_load(dm, problem.natural_data)

    op = add_scaled(stiff, mass, 1.0, -k2)
    try:
        res = solve_sym(op, b, tol=problem.tol)
    except SolverError as exc:
        raise ResonanceError(
            f"Maxwell solve stagnated (best residual {exc.residual:.3e}) near k_s^2={k2:g}",
            omega2=k2) from exc
    e = fem.DiscreteField(dm, res.x)
    e.diagnostics = {
        "iterations": res.iterations,
        "residual": res.residual,
        "div_l2": fem.norms(e)["div"],
    }
    return e
