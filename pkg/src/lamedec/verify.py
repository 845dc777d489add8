"""Manufactured-solution catalog and end-to-end verification pipelines.

All analytic verification lives on the cube (0,pi)^3 so integer trig modes
are exact eigenfunctions. Every catalog case is audited at construction: the
elastic residual -(mu Lap u + (lam+mu) grad div u) - omega^2 u - f is
evaluated by fourth-order finite differences of the exact displacement at
seeded random interior points, and the essential boundary condition is
checked at seeded boundary points. Expected values in reports are therefore
never hand-typed; they come from the closed forms that pass this audit.

Catalog (modes (m,n,k) on (0,pi)^3):

* ``p4``  pressure, fourth kind: u = grad(sin mx sin ny sin kz)
* ``s4``  shear, fourth kind:    u = (0, 0, sin mx sin ny), k = 0
* ``p3``  pressure, third kind:  u = grad(cos mx cos ny cos kz)
* ``m4``  mixed, fourth kind:    u = (0, 0, sin mx sin ny cos kz)
* ``m3``  mixed, third kind:     u = (0, 0, cos mx cos ny sin kz)

Each case carries f = (mu kappa^2 - omega^2) u - (lam + mu) grad(div u) with
closed-form divergence and curl, the exact pressure part v_p = -div u and
shear part E_s = curl u.
"""

from dataclasses import dataclass, field
import csv

import numpy as np

from . import fem
from .decoupled import helmholtz_from_source, maxwell_from_source, solve_helmholtz, solve_maxwell
from .errors import ResonanceError, ValidationError
from .fem.assembly import boundary_tables, surface_l2, volume_l2, volume_tables
from .lame import (LameProblem, MaterialParams, assemble_lame_system,
                   boundary_residuals, solve_lame, traction)
from .linalg import smallest_eigenpair
from .mesh import generate_box_mesh

AUDIT_SEED = 49152
_AUDIT_POINTS = 100
_FD_STEP = 2.5e-3

CASE_NAMES = ("p4", "s4", "p3", "m4", "m3")


# ----------------------------------------------------------------------------
# finite-difference oracles


def fd_divergence(value, points, h=1e-4):
    """Central 4th-order finite-difference divergence of a vector callback."""
    pts = np.asarray(points, dtype=float)
    coeffs = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    div = np.zeros(pts.shape[0])
    for d in range(3):
        acc = np.zeros(pts.shape[0])
        for off, c in coeffs:
            shifted = pts.copy()
            shifted[:, d] += off * h
            acc += c * np.asarray(value(shifted))[:, d]
        div += acc / (12.0 * h)
    return div


def fd_curl(value, points, h=1e-4):
    """Central 4th-order finite-difference curl of a vector callback."""
    pts = np.asarray(points, dtype=float)
    coeffs = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    grad = np.zeros((pts.shape[0], 3, 3))   # d u_i / d x_j
    for d in range(3):
        acc = np.zeros((pts.shape[0], 3))
        for off, c in coeffs:
            shifted = pts.copy()
            shifted[:, d] += off * h
            acc += c * np.asarray(value(shifted))
        grad[:, :, d] = acc / (12.0 * h)
    return np.stack((grad[:, 2, 1] - grad[:, 1, 2],
                     grad[:, 0, 2] - grad[:, 2, 0],
                     grad[:, 1, 0] - grad[:, 0, 1]), axis=1)


def _fd_hessians(value, points, h):
    """4th-order Hessians H[n, comp, a, b] of a vector callback."""
    pts = np.asarray(points, dtype=float)
    npt = pts.shape[0]
    base = np.asarray(value(pts), dtype=float)
    hess = np.empty((npt, 3, 3, 3))

    pure = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))
    for d in range(3):
        acc = np.zeros((npt, 3))
        for off, c in pure:
            if off == 0:
                acc += c * base
                continue
            shifted = pts.copy()
            shifted[:, d] += off * h
            acc += c * np.asarray(value(shifted))
        hess[:, :, d, d] = acc / (12.0 * h * h)

    first = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    for a in range(3):
        for b in range(a + 1, 3):
            acc = np.zeros((npt, 3))
            for offa, ca in first:
                for offb, cb in first:
                    shifted = pts.copy()
                    shifted[:, a] += offa * h
                    shifted[:, b] += offb * h
                    acc += ca * cb * np.asarray(value(shifted))
            mixed = acc / (144.0 * h * h)
            hess[:, :, a, b] = mixed
            hess[:, :, b, a] = mixed
    return hess


def lame_residual_fd(u_value, f_value, params, points, h=_FD_STEP):
    """Relative residual of the elastic equation at the given points.

    The second-order operator is evaluated by finite differences of the exact
    displacement only, making this an oracle independent of every closed-form
    source expression it is used to audit.
    """
    pts = np.asarray(points, dtype=float)
    hess = _fd_hessians(u_value, pts, h)
    lap = np.einsum("ncdd->nc", hess)
    grad_div = np.einsum("ndcd->nc", hess)   # d/dx_c of sum_d d u_d / d x_d
    uv = np.asarray(u_value(pts), dtype=float)
    fv = np.asarray(f_value(pts), dtype=float)
    op = -(params.mu * lap + (params.lam + params.mu) * grad_div)
    residual = op - params.omega ** 2 * uv - fv
    scale = max(np.abs(fv).max(), np.abs(op).max(),
                params.omega ** 2 * np.abs(uv).max(), 1e-300)
    return float(np.abs(residual).max() / scale)


# ----------------------------------------------------------------------------
# manufactured catalog


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form (solution, source) pair for one boundary-condition kind."""

    name: str
    bc_kind: str
    mode: tuple
    params: MaterialParams
    kappa2: float
    u: fem.FieldFunction
    f: fem.FieldFunction
    v_p: fem.FieldFunction          # exact pressure part -div u (scalar)
    e_s: fem.FieldFunction          # exact shear part curl u (vector)
    resonant: bool
    family_values: dict = field(default_factory=dict)


def _split(points):
    pts = np.asarray(points, dtype=float)
    return pts[:, 0], pts[:, 1], pts[:, 2]


def _case_fields(name, mode):
    """(u, div u, grad div u, curl u, curl curl u) callbacks for one case."""
    m, n, k = mode
    if name == "p4":
        def u(p):
            x, y, z = _split(p)
            return np.stack((m * np.cos(m * x) * np.sin(n * y) * np.sin(k * z),
                             n * np.sin(m * x) * np.cos(n * y) * np.sin(k * z),
                             k * np.sin(m * x) * np.sin(n * y) * np.cos(k * z)), axis=1)

        kappa2 = float(m * m + n * n + k * k)

        def div_u(p):
            x, y, z = _split(p)
            return -kappa2 * np.sin(m * x) * np.sin(n * y) * np.sin(k * z)

        def grad_div_u(p):
            return -kappa2 * u(p)

        def curl_u(p):
            return np.zeros((np.asarray(p).shape[0], 3))

        curl_curl_u = curl_u
        return u, div_u, grad_div_u, curl_u, curl_curl_u, kappa2

    if name == "p3":
        def u(p):
            x, y, z = _split(p)
            return np.stack((-m * np.sin(m * x) * np.cos(n * y) * np.cos(k * z),
                             -n * np.cos(m * x) * np.sin(n * y) * np.cos(k * z),
                             -k * np.cos(m * x) * np.cos(n * y) * np.sin(k * z)), axis=1)

        kappa2 = float(m * m + n * n + k * k)

        def div_u(p):
            x, y, z = _split(p)
            return -kappa2 * np.cos(m * x) * np.cos(n * y) * np.cos(k * z)

        def grad_div_u(p):
            return -kappa2 * u(p)

        def curl_u(p):
            return np.zeros((np.asarray(p).shape[0], 3))

        return u, div_u, grad_div_u, curl_u, curl_u, kappa2

    if name == "s4":
        if k != 0:
            raise ValidationError("case 's4' uses modes (m, n, 0)")

        def u(p):
            x, y, z = _split(p)
            w = np.sin(m * x) * np.sin(n * y)
            return np.stack((np.zeros_like(w), np.zeros_like(w), w), axis=1)

        kappa2 = float(m * m + n * n)

        def div_u(p):
            return np.zeros(np.asarray(p).shape[0])

        def grad_div_u(p):
            return np.zeros((np.asarray(p).shape[0], 3))

        def curl_u(p):
            x, y, z = _split(p)
            return np.stack((n * np.sin(m * x) * np.cos(n * y),
                             -m * np.cos(m * x) * np.sin(n * y),
                             np.zeros_like(x)), axis=1)

        def curl_curl_u(p):
            return kappa2 * u(p)

        return u, div_u, grad_div_u, curl_u, curl_curl_u, kappa2

    if name in ("m4", "m3"):
        # m4: w = sin(mx) sin(ny) cos(kz); m3: w = cos(mx) cos(ny) sin(kz)
        fourth = name == "m4"

        def w_parts(p):
            x, y, z = _split(p)
            if fourth:
                return (np.sin(m * x) * np.sin(n * y) * np.cos(k * z),
                        m * np.cos(m * x) * np.sin(n * y) * np.cos(k * z),
                        n * np.sin(m * x) * np.cos(n * y) * np.cos(k * z),
                        -k * np.sin(m * x) * np.sin(n * y) * np.sin(k * z))
            return (np.cos(m * x) * np.cos(n * y) * np.sin(k * z),
                    -m * np.sin(m * x) * np.cos(n * y) * np.sin(k * z),
                    -n * np.cos(m * x) * np.sin(n * y) * np.sin(k * z),
                    k * np.cos(m * x) * np.cos(n * y) * np.cos(k * z))

        kappa2 = float(m * m + n * n + k * k)

        def u(p):
            w, _, _, _ = w_parts(p)
            zero = np.zeros_like(w)
            return np.stack((zero, zero, w), axis=1)

        def div_u(p):
            return w_parts(p)[3]

        def grad_div_u(p):
            x, y, z = _split(p)
            if fourth:
                return -k * np.stack((
                    m * np.cos(m * x) * np.sin(n * y) * np.sin(k * z),
                    n * np.sin(m * x) * np.cos(n * y) * np.sin(k * z),
                    k * np.sin(m * x) * np.sin(n * y) * np.cos(k * z)), axis=1)
            return k * np.stack((
                -m * np.sin(m * x) * np.cos(n * y) * np.cos(k * z),
                -n * np.cos(m * x) * np.sin(n * y) * np.cos(k * z),
                -k * np.cos(m * x) * np.cos(n * y) * np.sin(k * z)), axis=1)

        def curl_u(p):
            _, wx, wy, _ = w_parts(p)
            return np.stack((wy, -wx, np.zeros_like(wx)), axis=1)

        def curl_curl_u(p):
            # curl curl u = -Lap u + grad div u = kappa^2 u + grad div u
            return kappa2 * u(p) + grad_div_u(p)

        return u, div_u, grad_div_u, curl_u, curl_curl_u, kappa2

    raise ValidationError(f"unknown manufactured case '{name}'")


def manufactured_case(name, mode, params: MaterialParams, audit=True) -> ManufacturedCase:
    """Build (and audit) one catalog case; see the module docstring."""
    if name not in CASE_NAMES:
        raise ValidationError(f"unknown manufactured case '{name}'")
    mode = tuple(int(v) for v in mode)
    if len(mode) != 3 or any(v < 0 for v in mode) or all(v == 0 for v in mode):
        raise ValidationError("mode must be three nonnegative integers, not all zero")
    bc_kind = "fourth" if name.endswith("4") else "third"

    u_val, div_u, grad_div_u, curl_u, curl_curl_u, kappa2 = _case_fields(name, mode)
    lam, mu, omega = params.lam, params.mu, params.omega
    cu = mu * kappa2 - omega ** 2     # coefficient of u in the source
    cg = -(lam + mu)                  # coefficient of grad div u

    def f_val(p):
        return cu * u_val(p) + cg * grad_div_u(p)

    def f_div(p):
        return ((lam + 2.0 * mu) * kappa2 - omega ** 2) * div_u(p)

    def f_curl(p):
        return cu * curl_u(p)

    u_field = fem.FieldFunction(value=u_val, divergence=div_u, curl=curl_u)
    f_field = fem.FieldFunction(value=f_val, divergence=f_div, curl=f_curl)

    def vp_val(p):
        return -div_u(p)

    v_p = fem.FieldFunction(value=vp_val, vector=False)

    def es_div(p):
        return np.zeros(np.asarray(p).shape[0])

    e_s = fem.FieldFunction(value=curl_u, divergence=es_div, curl=curl_curl_u)

    pressure_val = (lam + 2.0 * mu) * kappa2
    shear_val = mu * kappa2
    family = {"pressure": pressure_val, "shear": shear_val}
    omega2 = omega ** 2
    resonant = min(abs(omega2 - pressure_val), abs(omega2 - shear_val)) < 1e-9 * omega2

    case = ManufacturedCase(name=name, bc_kind=bc_kind, mode=mode, params=params,
                            kappa2=kappa2, u=u_field, f=f_field, v_p=v_p, e_s=e_s,
                            resonant=resonant, family_values=family)
    if audit:
        audit_case(case)
    return case


def audit_case(case: ManufacturedCase, n_points=_AUDIT_POINTS, seed=AUDIT_SEED,
               tol_residual=1e-8, tol_bc=1e-10):
    """Residual and boundary-condition audit; raises ValidationError on failure."""
    rng = np.random.default_rng(seed)
    margin = 4.0 * _FD_STEP
    pts = rng.uniform(margin, np.pi - margin, size=(n_points, 3))
    rel = lame_residual_fd(case.u.value, case.f.value, case.params, pts)
    if rel > tol_residual:
        raise ValidationError(
            f"case {case.name}{case.mode}: elastic residual audit failed "
            f"(relative residual {rel:.3e} > {tol_residual:g})")

    # essential boundary condition at random boundary points
    bpts = []
    bnus = []
    for axis in range(3):
        for value, sign in ((0.0, -1.0), (np.pi, 1.0)):
            q = rng.uniform(0.0, np.pi, size=(8, 3))
            q[:, axis] = value
            nu = np.zeros(3)
            nu[axis] = sign
            bpts.append(q)
            bnus.append(np.tile(nu, (8, 1)))
    bpts = np.vstack(bpts)
    bnus = np.vstack(bnus)
    uv = np.asarray(case.u.value(bpts))
    scale = max(float(np.abs(uv).max()), 1.0)
    if case.bc_kind == "fourth":
        viol = float(np.abs(np.cross(bnus, uv)).max())
        label = "nu x u"
    else:
        viol = float(np.abs(np.einsum("ni,ni->n", bnus, uv)).max())
        label = "nu . u"
    if viol > tol_bc * scale:
        raise ValidationError(
            f"case {case.name}{case.mode}: boundary audit failed ({label} = {viol:.3e})")
    return rel


def audit_field_function(ff: fem.FieldFunction, points, tol=1e-6, h=1e-4):
    """Check provided divergence/curl callbacks against finite differences."""
    pts = np.asarray(points, dtype=float)
    if ff.divergence is not None:
        ref = fd_divergence(ff.value, pts, h)
        got = np.asarray(ff.divergence(pts))
        scale = max(float(np.abs(ref).max()), 1.0)
        if np.abs(got - ref).max() > tol * scale:
            raise ValidationError("divergence callback disagrees with finite differences")
    if ff.curl is not None:
        ref = fd_curl(ff.value, pts, h)
        got = np.asarray(ff.curl(pts))
        scale = max(float(np.abs(ref).max()), 1.0)
        if np.abs(got - ref).max() > tol * scale:
            raise ValidationError("curl callback disagrees with finite differences")


# ----------------------------------------------------------------------------
# decoupling verification


@dataclass
class DecouplingReport:
    """Coupled-vs-decoupled comparison for one case at one resolution."""

    case: str
    bc_kind: str
    mode: tuple
    n: int
    order: int
    u_errors: dict
    norms: dict          # reference norms of the exact pressure/shear parts
    pressure: dict       # L2 differences between the pressure pipelines
    shear: dict          # L2 differences between the shear pipelines
    boundary: dict
    traction: dict
    diagnostics: dict

    def rows(self):
        out = []
        for group in ("u_errors", "norms", "pressure", "shear", "boundary", "traction"):
            for key, val in sorted(getattr(self, group).items()):
                out.append((self.case, "x".join(str(v) for v in self.mode),
                            str(self.n), str(self.order), group, key, f"{val:.17g}"))
        return out


CSV_REPORT_HEADER = ("case", "mode", "n", "order", "group", "name", "value")


def verify_decoupling(case: ManufacturedCase, n, order=2, tol=1e-10,
                      reg_weight=None) -> DecouplingReport:
    """Solve the coupled problem, derive its pressure/shear parts, and compare
    them with the stand-alone decoupled solves and with the exact fields."""
    if case.resonant:
        raise ResonanceError(
            f"case {case.name}{case.mode} is resonant (omega^2 on an analytic eigenvalue)",
            omega2=case.params.omega ** 2)

    mesh = generate_box_mesh(n, np.pi)
    problem = LameProblem(mesh=mesh, params=case.params, bc_kind=case.bc_kind,
                          source=case.f, order=order, tol=tol)
    u_h = solve_lame(problem)
    u_errors = fem.norms(u_h, case.u)

    tab = volume_tables(u_h.dm)
    vp_coupled = -u_h.div_q()
    es_coupled = u_h.curl_q()

    helm_bc = "dirichlet_zero" if case.bc_kind == "fourth" else "neumann"
    hp = helmholtz_from_source(mesh, case.params, case.f, helm_bc, order=order, tol=tol)
    v_ph = solve_helmholtz(hp)

    max_bc = "natural" if case.bc_kind == "fourth" else "essential"
    mp = maxwell_from_source(mesh, case.params, case.f, max_bc,
                             reg_weight=reg_weight, order=order, tol=tol)
    e_sh = solve_maxwell(mp)

    pts = tab.points.reshape(-1, 3)
    shape = tab.points.shape[:2]
    vp_exact = np.asarray(case.v_p.value(pts)).reshape(shape)
    es_exact = np.asarray(case.e_s.value(pts)).reshape(shape + (3,))
    vp_dec = v_ph.value_q()
    es_dec = e_sh.value_q()

    norms_ref = {
        "vp_exact_l2": volume_l2(tab, vp_exact),
        "es_exact_l2": volume_l2(tab, es_exact),
        "u_exact_l2": volume_l2(tab, np.asarray(case.u.value(pts)).reshape(shape + (3,))),
    }
    pressure = {
        "coupled_l2": volume_l2(tab, vp_coupled),
        "decoupled_l2": volume_l2(tab, vp_dec),
        "cross_diff_l2": volume_l2(tab, vp_coupled - vp_dec),
        "coupled_vs_exact_l2": volume_l2(tab, vp_coupled - vp_exact),
        "decoupled_vs_exact_l2": volume_l2(tab, vp_dec - vp_exact),
    }
    shear = {
        "coupled_l2": volume_l2(tab, es_coupled),
        "decoupled_l2": volume_l2(tab, es_dec),
        "cross_diff_l2": volume_l2(tab, es_coupled - es_dec),
        "coupled_vs_exact_l2": volume_l2(tab, es_coupled - es_exact),
        "decoupled_vs_exact_l2": volume_l2(tab, es_dec - es_exact),
    }
    boundary = boundary_residuals(u_h, case.bc_kind)
    _, traction_norms = traction(u_h, case.params)
    diagnostics = {
        "lame": dict(u_h.diagnostics),
        "helmholtz": dict(v_ph.diagnostics),
        "maxwell": dict(e_sh.diagnostics),
    }
    return DecouplingReport(case=case.name, bc_kind=case.bc_kind, mode=case.mode,
                            n=n, order=order, u_errors=u_errors, norms=norms_ref,
                            pressure=pressure, shear=shear, boundary=boundary,
                            traction=traction_norms, diagnostics=diagnostics)


def write_report_csv(reports, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_REPORT_HEADER)
        for rep in reports:
            for row in rep.rows():
                w.writerow(row)


# ----------------------------------------------------------------------------
# convergence studies


@dataclass
class ConvergenceRow:
    n: int
    h: float
    n_free: int
    l2_error: float
    graph_error: float
    essential_residual: float      # surface L2, relative to the boundary trace norm
    natural_residual: float        # ||div u|| (fourth) or ||nu x curl u|| (third)
    traction_residual: float       # ||nu . T u|| (fourth) or ||nu x T u|| (third)
    l2_rate: float = np.nan
    graph_rate: float = np.nan


CSV_CONVERGENCE_HEADER = ("case", "mode", "order", "n", "h", "n_free",
                          "l2_error", "graph_error", "essential_residual",
                          "natural_residual", "traction_residual",
                          "l2_rate", "graph_rate")


def convergence_study(case: ManufacturedCase, levels, order=2, tol=1e-10):
    """Uniform-refinement error table with fitted log2 rates between levels."""
    if len(levels) < 3:
        raise ValidationError("a convergence study needs at least 3 levels")
    if case.resonant:
        raise ResonanceError(f"case {case.name}{case.mode} is resonant")
    rows = []
    for n in levels:
        mesh = generate_box_mesh(n, np.pi)
        problem = LameProblem(mesh=mesh, params=case.params, bc_kind=case.bc_kind,
                              source=case.f, order=order, tol=tol)
        u_h = solve_lame(problem)
        err = fem.norms(u_h, case.u)
        bres = boundary_residuals(u_h, case.bc_kind)
        _, tnorm = traction(u_h, case.params)
        bt = boundary_tables(u_h.dm)
        trace_norm = surface_l2(bt, u_h.boundary_value())
        if case.bc_kind == "fourth":
            essential = bres["nu_cross_u"] / max(trace_norm, 1e-300)
            natural = bres["div_u"]
            trac = tnorm["nu_dot_traction"]
        else:
            essential = bres["nu_dot_u"] / max(trace_norm, 1e-300)
            natural = bres["nu_cross_curl_u"]
            trac = tnorm["nu_cross_traction"]
        rows.append(ConvergenceRow(
            n=int(n), h=float(np.pi / n), n_free=u_h.dm.n_free,
            l2_error=err["l2_error"], graph_error=err["graph_error"],
            essential_residual=essential, natural_residual=natural,
            traction_residual=trac))
    for prev, cur in zip(rows, rows[1:]):
        cur.l2_rate = float(np.log2(prev.l2_error / cur.l2_error))
        cur.graph_rate = float(np.log2(prev.graph_error / cur.graph_error))
    return rows


def write_convergence_csv(case, order, rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_CONVERGENCE_HEADER)
        mode = "x".join(str(v) for v in case.mode)
        for r in rows:
            w.writerow((case.name, mode, order, r.n, f"{r.h:.17g}", r.n_free,
                        f"{r.l2_error:.17g}", f"{r.graph_error:.17g}",
                        f"{r.essential_residual:.17g}", f"{r.natural_residual:.17g}",
                        f"{r.traction_residual:.17g}",
                        f"{r.l2_rate:.17g}", f"{r.graph_rate:.17g}"))


# ----------------------------------------------------------------------------
# resonance scans


def cube_eigenvalues(bc_kind, lam, mu, max_value):
    """Analytic eigenvalues of the cube (0,pi)^3 up to max_value.

    Pressure family (lam+2mu) kappa^2 over gradient modes, shear family
    mu kappa^2 over divergence-free modes; the admissible integer modes
    differ between the two boundary-condition kinds.
    """
    values = set()
    kmax = int(np.ceil(np.sqrt(max_value / min(mu, lam + 2.0 * mu)))) + 1
    for m in range(kmax + 1):
        for n in range(kmax + 1):
            for k in range(kmax + 1):
                kappa2 = m * m + n * n + k * k
                if kappa2 == 0:
                    continue
                nonzero = sum(1 for v in (m, n, k) if v > 0)
                if bc_kind == "fourth":
                    if nonzero == 3:
                        values.add((lam + 2.0 * mu) * kappa2)
                    if nonzero >= 2:
                        values.add(mu * kappa2)
                else:
                    values.add((lam + 2.0 * mu) * kappa2)
                    if nonzero >= 2:
                        values.add(mu * kappa2)
    return sorted(v for v in values if v <= max_value)


@dataclass
class ScanResult:
    bc_kind: str
    sigma_grid: np.ndarray
    estimates: list       # (sigma, eigenvalue, residual) per grid point
    detected: list        # clustered eigenvalue estimates, ascending
    analytic: list        # analytic cube eigenvalues up to the grid maximum


def resonance_scan(bc_kind, lam, mu, sigma_grid, n, order=2) -> ScanResult:
    """Sweep shift-and-invert eigenvalue estimates over a grid of shifts."""
    params = MaterialParams(lam=lam, mu=mu, omega=1.0)
    mesh = generate_box_mesh(n, np.pi)
    problem = LameProblem(mesh=mesh, params=params, bc_kind=bc_kind,
                          source=fem.FieldFunction.zero())
    system = assemble_lame_system(problem)
    estimates = []
    for sigma in sigma_grid:
        est = smallest_eigenpair(system.stiffness, system.mass, float(sigma))
        estimates.append((float(sigma), est.value, est.residual))

    detected = []
    for _, val, _ in sorted(estimates, key=lambda t: t[1]):
        if not detected or abs(val - detected[-1]) > 1e-4 * max(abs(val), 1.0):
            detected.append(val)
    analytic = cube_eigenvalues(bc_kind, lam, mu, float(np.max(sigma_grid)) * 1.5 + 1.0)
    return ScanResult(bc_kind=bc_kind, sigma_grid=np.asarray(sigma_grid, dtype=float),
                      estimates=estimates, detected=detected, analytic=analytic)


CSV_SCAN_HEADER = ("bc_kind", "sigma", "eigenvalue_estimate", "residual")


def write_scan_csv(result: ScanResult, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_SCAN_HEADER)
        for sigma, val, res in result.estimates:
            w.writerow((result.bc_kind, f"{sigma:.17g}", f"{val:.17g}", f"{res:.17g}"))
        for val in result.detected:
            w.writerow((result.bc_kind, "detected", f"{val:.17g}", ""))
