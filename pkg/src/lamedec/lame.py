"""Variational solvers for the time-harmonic Lame system.

The operator -mu curl curl u + (lam + 2 mu) grad div u + omega^2 u is posed
weakly with the symmetric bilinear form

    a(u, v) = (mu curl u, curl v) + ((lam + 2 mu) div u, div v) - omega^2 (u, v)

over the tangential-zero space (fourth-kind boundary condition: vanishing
tangential displacement and normal traction) or the normal-zero space
(third-kind: vanishing normal displacement and tangential traction). The
stiffness A = mu*curlcurl + (lam+2mu)*divdiv and the mass M are kept separate
so resonance scans and the eigenvalue guard reuse one assembly; the solved
matrix is A - omega^2 M.

A coercive shifted solve (A + M) x = M w realizes the compact solution
operator of the equivalent Fredholm fixed-point form
u - (omega^2 + 1) K u = K f, which `solve_via_fredholm` iterates with
restarted GMRES as an independent cross-check of the direct solve.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from . import fem
from .errors import ResonanceError, SolverError, ValidationError
from .fem.assembly import boundary_tables, surface_l2
from .linalg import add_scaled, smallest_eigenpair, solve_sym

BC_KINDS = ("third", "fourth")
_BC_SPACE = {"fourth": "tangential_zero", "third": "normal_zero"}


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic material constants and angular wavenumber (all positive)."""

    lam: float
    mu: float
    omega: float

    def __post_init__(self):
        if not (self.lam > 0.0 and self.mu > 0.0 and self.omega > 0.0):
            raise ValidationError("material parameters lam, mu, omega must be positive")

    @property
    def k_p(self):
        """Pressure wavenumber omega / sqrt(lam + 2 mu)."""
        return self.omega / np.sqrt(self.lam + 2.0 * self.mu)

    @property
    def k_s(self):
        """Shear wavenumber omega / sqrt(mu)."""
        return self.omega / np.sqrt(self.mu)


@dataclass
class LameProblem:
    mesh: object
    params: MaterialParams
    bc_kind: str
    source: fem.FieldFunction
    order: int = 2
    tol: float = 1e-10
    max_iter: int = None
    guard_rel: float = 1e-6
    resonance_guard: bool = True

    def __post_init__(self):
        if self.bc_kind not in BC_KINDS:
            raise ValidationError(f"unknown boundary-condition kind '{self.bc_kind}'")


@dataclass
class LameSystem:
    """Assembled discrete problem: stiffness A, mass M, load b over the free dofs."""

    dofmap: fem.DofMap
    stiffness: object     # SparseSym: mu*curlcurl + (lam+2mu)*divdiv
    mass: object          # SparseSym
    load: np.ndarray
    problem: LameProblem
    _cache: dict = field(default_factory=dict, repr=False)

    def shifted_matrix(self, shift):
        """A + shift * M (cached per shift)."""
        key = ("shifted", float(shift))
        if key not in self._cache:
            self._cache[key] = add_scaled(self.stiffness, self.mass, 1.0, float(shift))
        return self._cache[key]


def assemble_lame_system(problem: LameProblem) -> LameSystem:
    """Assemble A = mu*curlcurl + (lam+2mu)*divdiv, M = mass, b = (f, v)."""
    dm = fem.build_dofmap(problem.mesh, problem.order, "vector3",
                          _BC_SPACE[problem.bc_kind])
    curlcurl = fem.assemble_matrix(dm, "curlcurl")
    divdiv = fem.assemble_matrix(dm, "divdiv")
    mass = fem.assemble_matrix(dm, "mass")
    p = problem.params
    stiffness = add_scaled(curlcurl, divdiv, p.mu, p.lam + 2.0 * p.mu)
    b = fem.assemble_load(dm, problem.source)
    return LameSystem(dofmap=dm, stiffness=stiffness, mass=mass, load=b, problem=problem)


def nearest_resonance(system: LameSystem, sigma):
    """Estimate of the (A, M) generalized eigenvalue nearest sigma."""
    return smallest_eigenpair(system.stiffness, system.mass, sigma)


def check_resonance_guard(system: LameSystem, omega2=None):
    """Refuse to solve when omega^2 sits within guard_rel of a discrete eigenvalue."""
    p = system.problem
    omega2 = p.params.omega ** 2 if omega2 is None else omega2
    est = nearest_resonance(system, omega2)
    if abs(est.value - omega2) < p.guard_rel * abs(omega2):
        raise ResonanceError(
            f"omega^2 = {omega2:.12g} is within {p.guard_rel:g} (relative) of the "
            f"discrete eigenvalue {est.value:.12g}; the problem is not uniquely solvable there",
            omega2=omega2, nearest_eigenvalue=est.value)
    return est


def solve_lame(problem: LameProblem, system: LameSystem = None) -> fem.DiscreteField:
    """Solve (A - omega^2 M) u = b; attaches solver diagnostics to the field.

    Near-singular systems surface as ResonanceError, either from the
    pre-solve eigenvalue guard or from MINRES stagnation.
    """
    if system is None:
        system = assemble_lame_system(problem)
    omega2 = problem.params.omega ** 2
    guard_est = None
    if problem.resonance_guard:
        guard_est = check_resonance_guard(system, omega2)

    op = system.shifted_matrix(-omega2)
    try:
        res = solve_sym(op, system.load, tol=problem.tol, max_iter=problem.max_iter)
    except SolverError as exc:
        est = guard_est if guard_est is not None else nearest_resonance(system, omega2)
        raise ResonanceError(
            f"iterative solve stagnated (best residual {exc.residual:.3e}); "
            f"nearest discrete eigenvalue estimate {est.value:.12g} vs omega^2 = {omega2:.12g}",
            omega2=omega2, nearest_eigenvalue=est.value) from exc

    u = fem.DiscreteField(system.dofmap, res.x)
    u.diagnostics = {
        "iterations": res.iterations,
        "residual": res.residual,
        "n_free": system.dofmap.n_free,
    }
    if guard_est is not None:
        u.diagnostics["nearest_eigenvalue"] = guard_est.value
    return u


def shifted_solve(system: LameSystem, w, tol=1e-12):
    """Coercive solve (A + M) x = M w realizing the compact operator.

    With the bilinear form a(., .) this is a(x, v) + (1 + omega^2)(x, v) =
    (w, v) for all test fields v, an SPD system for any omega.
    """
    rhs = system.mass.matvec(np.asarray(w, dtype=float))
    return solve_sym(system.shifted_matrix(1.0), rhs, tol=tol).x


def solve_via_fredholm(problem: LameProblem, system: LameSystem = None,
                       tol=1e-12, restart=50) -> fem.DiscreteField:
    """Solve the fixed-point form u - (omega^2 + 1) K u = K f with restarted GMRES.

    K is applied through the SPD shifted solve; algebraically the result
    agrees with `solve_lame`. Divergence of the outer iteration is reported
    as a resonance diagnostic.
    """
    if system is None:
        system = assemble_lame_system(problem)
    omega2 = problem.params.omega ** 2
    shifted = system.shifted_matrix(1.0)

    inner_tol = min(tol, 1e-12)

    def apply_k_load(vec):
        return solve_sym(shifted, vec, tol=inner_tol).x

    def apply_op(vec):
        return vec - (omega2 + 1.0) * shifted_solve(system, vec, tol=inner_tol)

    n = system.dofmap.n_free
    rhs = apply_k_load(system.load)
    lin = scipy.sparse.linalg.LinearOperator((n, n), matvec=apply_op)
    iters = [0]

    def count(_):
        iters[0] += 1

    x, info = scipy.sparse.linalg.gmres(lin, rhs, rtol=tol, atol=0.0,
                                        restart=restart, maxiter=200,
                                        callback=count, callback_type="pr_norm")
    if info != 0:
        est = nearest_resonance(system, omega2)
        raise ResonanceError(
            f"fixed-point iteration did not converge (gmres info={info}); "
            f"nearest discrete eigenvalue estimate {est.value:.12g}",
            omega2=omega2, nearest_eigenvalue=est.value)
    u = fem.DiscreteField(system.dofmap, x)
    u.diagnostics = {"method": "fredholm", "gmres_info": info, "iterations": iters[0]}
    return u


def traction(u_h: fem.DiscreteField, params: MaterialParams):
    """Boundary traction 2 mu d_nu u + lam nu (div u) + mu nu x (curl u).

    Evaluated at the boundary quadrature points from one-sided element
    derivatives. Returns (values (nf, nq, 3), norms) where norms holds the
    surface L2 norms of the tangential and normal traction parts.
    """
    if u_h.dm.value_kind != "vector3":
        raise ValidationError("traction needs a vector field")
    bt = boundary_tables(u_h.dm)
    grad = u_h.boundary_grad()                    # (nf, nq, 3, 3): d u_i / d x_j
    div = np.einsum("fqii->fq", grad)
    curl = np.stack((grad[..., 2, 1] - grad[..., 1, 2],
                     grad[..., 0, 2] - grad[..., 2, 0],
                     grad[..., 1, 0] - grad[..., 0, 1]), axis=-1)
    nu = bt.normals[:, None, :]                   # (nf, 1, 3)
    dnu = np.einsum("fqij,fj->fqi", grad, bt.normals)   # directional derivative
    tvec = (2.0 * params.mu * dnu
            + params.lam * div[..., None] * nu
            + params.mu * np.cross(np.broadcast_to(nu, curl.shape), curl))
    norms = {
        "nu_cross_traction": surface_l2(bt, np.cross(np.broadcast_to(nu, tvec.shape), tvec)),
        "nu_dot_traction": surface_l2(bt, np.einsum("fqi,fi->fq", tvec, bt.normals)),
    }
    return tvec, norms


def boundary_residuals(u_h: fem.DiscreteField, bc_kind: str):
    """Surface L2 norms of the recovered boundary conditions.

    Fourth kind: ||nu x u|| (essential, rounding level) and ||div u||
    (natural, discretization level). Third kind: ||nu . u|| and
    ||nu x (curl u)||.
    """
    if bc_kind not in BC_KINDS:
        raise ValidationError(f"unknown boundary-condition kind '{bc_kind}'")
    bt = boundary_tables(u_h.dm)
    vals = u_h.boundary_value()
    nu = bt.normals[:, None, :]
    if bc_kind == "fourth":
        return {
            "nu_cross_u": surface_l2(bt, np.cross(np.broadcast_to(nu, vals.shape), vals)),
            "div_u": surface_l2(bt, u_h.boundary_div()),
        }
    curl = u_h.boundary_curl()
    return {
        "nu_dot_u": surface_l2(bt, np.einsum("fqi,fi->fq", vals, bt.normals)),
        "nu_cross_curl_u": surface_l2(bt, np.cross(np.broadcast_to(nu, curl.shape), curl)),
    }
