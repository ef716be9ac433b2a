"""Reissner-Mindlin plates: primal, four-field mixed and TDNNS formulations.

All three share one scaling: the mixed moment ``M`` satisfies
``A M = sym grad(phi)`` with ``A = 12 D^{-1}``, so ``M = D sym grad(phi) / 12``
is the physical bending moment divided by ``t^3``.  The primal form is solved
with the load ``f = t^2 g`` and reports moments in the same scaling.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import Assembler, MaterialTensors, quadrature_degree, quadrature_rule
from .geometry_map import map_tensor_basis, physical_edge_tangent
from .mesh import LOCAL_EDGES, boundary_dofs, build_dofmap, lshape_mesh, strip_mesh
from .refsimplex import REFERENCE_VERTICES, ROTATION, edge
from .tensor_elements import build_element
from .vector_elements import build_vector_element, map_vector_basis

FORMULATIONS = ("prm", "ffsrm", "tdnns")


@dataclass
class PlateProblem:
    mesh: object
    order: int
    formulation: str
    materials: dict                 # region -> (E, nu)
    thickness: float
    load: float                     # g; the primal form uses f = t^2 g
    shear_factor: float = 5.0 / 6.0
    # optional inhomogeneous boundary data (manufactured solutions): a constant
    # 2x2 matrix or a callable x (n, 2) -> (n, 2, 2), and a callable x -> (n,)
    boundary_moment: object = None
    boundary_deflection: object = None

    def __post_init__(self):
        self.formulation = self.formulation.lower()
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.thickness <= 0 or self.shear_factor <= 0:
            raise ValueError("thickness and shear factor must be positive")
        for E, nu in self.materials.values():
            if not (E > 0 and 0.0 <= nu <= 0.5):
                raise ValueError(f"invalid material ({E}, {nu})")
        if self.formulation == "tdnns" and self.order < 2:
            raise ValueError("TDNNS needs order >= 2 (moments of order p-1 >= 1)")
        regions = set(np.unique(self.mesh.regions).tolist())
        if not regions <= set(self.materials):
            raise ValueError(f"materials missing for regions {regions - set(self.materials)}")

    def material(self, e):
        E, nu = self.materials[int(self.mesh.regions[e])]
        return MaterialTensors(E, nu, self.thickness, self.shear_factor)


@dataclass
class PlateSolution:
    problem: PlateProblem
    fields: dict                    # name -> (space, dofmap, coefficients)
    total_dofs: int
    connected_dofs: int
    solve_seconds: float = 0.0
    residual: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def dof_stats(self):
        return self.total_dofs, self.connected_dofs

    def _rule(self, e):
        p = self.problem.order
        return quadrature_rule(2, quadrature_degree(p, self.problem.mesh.is_curved(e)))

    def moments(self, e, ref_points):
        """Moment tensors (n_pts, 2, 2) in element ``e`` at reference points."""
        prob = self.problem
        mesh = prob.mesh
        gmap = mesh.element_map(e)
        jd = gmap.jacobian(ref_points)
        if prob.formulation == "prm":
            space, dm, c1 = self.fields["phi_x"]
            _, _, c2 = self.fields["phi_y"]
            _, g = map_vector_basis(space, jd, ref_points)
            dofs = dm.element_dofs[e]
            grad = np.stack([np.einsum("f,fqm->qm", c1[dofs], g),
                             np.einsum("f,fqm->qm", c2[dofs], g)], axis=1)
            eps = 0.5 * (grad + np.transpose(grad, (0, 2, 1)))
            return prob.material(e).D(eps) / 12.0
        space, dm, c = self.fields["M"]
        Y = map_tensor_basis(space, gmap, ref_points, jd=jd)
        return np.einsum("f,fqij->qij", c[dm.element_dofs[e]], Y)

    def deflection(self, e, ref_points):
        prob = self.problem
        space, dm, c = self.fields["w"]
        jd = prob.mesh.element_map(e).jacobian(ref_points)
        v, _ = map_vector_basis(space, jd, ref_points)
        return c[dm.element_dofs[e]] @ v

    def samples(self):
        """Physical sample points and moment tensors on the fixed lattice of all elements."""
        if "samples" not in self._cache:
            xs, Ms, els = [], [], []
            mesh = self.problem.mesh
            p = self.problem.order
            for e in range(mesh.n_elements):
                rule = quadrature_rule(2, 2 * p + 2)
                xs.append(mesh.element_map(e)(rule.points))
                Ms.append(self.moments(e, rule.points))
                els.append(np.full(len(rule.points), e))
            self._cache["samples"] = (np.concatenate(xs), np.concatenate(Ms), np.concatenate(els))
        return self._cache["samples"]

    def locate(self, x, tol=1e-10):
        """(element, reference point) containing physical point ``x``."""
        mesh = self.problem.mesh
        x = np.asarray(x, dtype=float)
        for e in range(mesh.n_elements):
            gmap = mesh.element_map(e)
            xi = np.linalg.solve(gmap._J_affine, x - gmap.vertices[0])
            if gmap.order == 2:
                for _ in range(30):
                    jd = gmap.jacobian(xi[None])
                    r = gmap(xi[None])[0] - x
                    xi = xi - np.linalg.solve(jd.J[0], r)
                    if np.linalg.norm(r) < 1e-14:
                        break
            lam0 = 1.0 - xi.sum()
            if xi.min() >= -tol and lam0 >= -tol:
                return e, np.clip(xi, 0.0, 1.0)
        raise ValueError(f"point {x} is outside the mesh")

    def moment_at(self, x, element=None):
        if element is None:
            e, xi = self.locate(x)
        else:
            e = element
            xi = self.locate_in(element, x)
        return self.moments(e, xi[None])[0]

    def locate_in(self, e, x):
        gmap = self.problem.mesh.element_map(e)
        xi = np.linalg.solve(gmap._J_affine, np.asarray(x, float) - gmap.vertices[0])
        for _ in range(30):
            jd = gmap.jacobian(xi[None])
            r = gmap(xi[None])[0] - x
            xi = xi - np.linalg.solve(jd.J[0], r)
            if np.linalg.norm(r) < 1e-14:
                break
        return xi


# element kernels


def _edge_quadrature(p, curved):
    return quadrature_rule(1, quadrature_degree(p, curved) + 1)


def edge_geometry(gmap, i, j, rule):
    """Reference points, jacobians, unit tangent, outward unit normal and ds weights
    on the local edge (i, j) of a triangle map."""
    sv = REFERENCE_VERTICES[2]
    s = rule.points[:, 0]
    ref = sv[i][None] + s[:, None] * (sv[j] - sv[i])[None]
    jd = gmap.jacobian(ref)
    tvec = physical_edge_tangent(jd, edge(i, j))
    length = np.linalg.norm(tvec, axis=1)
    tangent = tvec / length[:, None]
    sign = _outward_sign(i, j) * np.sign(jd.det)
    normal = sign[:, None] * (tangent @ ROTATION.T)
    return ref, jd, tangent, normal, rule.weights * length


def _eval_moment(data, x):
    if callable(data):
        return np.asarray(data(x), dtype=float)
    return np.broadcast_to(np.asarray(data, dtype=float), (len(x), 2, 2))


def _boundary_edges_of(mesh, e):
    out = []
    for (i, j) in LOCAL_EDGES[2]:
        if mesh.is_boundary("edge", mesh.global_polytope(e, edge(i, j))[1]):
            out.append((i, j))
    return out


def interpolate_local(space, gmap, values_fn, degree):
    """Local coefficients of the L2 projection of a field onto one mapped element."""
    rule = quadrature_rule(2, degree)
    jd = gmap.jacobian(rule.points)
    x = gmap(rule.points)
    w = np.sqrt(rule.weights * np.abs(jd.det))
    if hasattr(space, "family"):
        B = map_tensor_basis(space, gmap, rule.points, jd=jd)
    else:
        B, _ = map_vector_basis(space, jd, rule.points, derivative=False)
    target = np.asarray(values_fn(x), dtype=float)
    A = (B * w.reshape((1, -1) + (1,) * (B.ndim - 2))).reshape(len(space), -1).T
    b = (target * w.reshape((-1,) + (1,) * (target.ndim - 1))).ravel()
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    return c


def _outward_sign(i, j):
    """Sign turning the reference edge normal R tau into the outward normal."""
    v = REFERENCE_VERTICES[2]
    opp = 3 - i - j
    nu = ROTATION @ (v[j] - v[i])
    return 1.0 if nu @ (v[i] - v[opp]) > 0 else -1.0


class _Setup:
    def __init__(self, problem):
        self.problem = problem
        self.mesh = problem.mesh
        p = problem.order
        f = problem.formulation
        if f == "prm":
            cg = build_vector_element("CG", 2, p)
            self.spaces = [("w", cg), ("phi_x", cg), ("phi_y", cg)]
            self.condense = [True, True, True]
        elif f == "tdnns":
            self.spaces = [("M", build_element("hhj", 2, p - 1)),
                           ("w", build_vector_element("CG", 2, p)),
                           ("phi", build_vector_element("N2", 2, p - 1))]
            self.condense = [True, True, True]
        else:
            self.spaces = [("M", build_element("hz", 2, p)),
                           ("q", build_vector_element("RT", 2, p - 1)),
                           ("w", build_vector_element("DG_scalar", 2, p - 1)),
                           ("phi", build_vector_element("DG_vector", 2, p - 1))]
            # the local block of the discontinuous fields is singular (the interior
            # divergence misses element constants), so they stay in the global solve
            self.condense = [True, False, False, False]
        self.dofmaps = [build_dofmap(self.mesh, s) for _, s in self.spaces]
        self.fields = list(zip([s for _, s in self.spaces], self.dofmaps))
        self.sizes = [len(s) for _, s in self.spaces]
        self.slices = {}
        off = 0
        for (name, s) in self.spaces:
            self.slices[name] = slice(off, off + len(s))
            off += len(s)
        self.n_local = off
    def kernel(self, e):
        return KERNELS[self.problem.formulation](self, e)

    def constraints(self, asm):
        prob = self.problem
        mesh = self.mesh
        out = {}
        for (name, space), dm, off in zip(self.spaces, self.dofmaps, asm.offsets[:-1]):
            if name == "w" and space.kind == "CG":
                sel, data = "deflection", prob.boundary_deflection
            elif name == "M":
                sel, data = "moment_trace", prob.boundary_moment
            else:
                continue
            dofs = boundary_dofs(mesh, space, dm, sel)
            values = dict.fromkeys(dofs, 0.0)
            if data is not None:
                fn = (lambda x, data=data: _eval_moment(data, x)) if name == "M" else data
                for e in range(mesh.n_elements):
                    local = dm.element_dofs[e]
                    if not any(int(d) in values for d in local):
                        continue
                    c = interpolate_local(space, mesh.element_map(e), fn, 2 * prob.order + 4)
                    for a, d in enumerate(local):
                        if int(d) in values:
                            values[int(d)] = float(c[a])
            for d, v in values.items():
                out[int(d) + int(off)] = v
        return out


def _prm_kernel(setup, e):
    prob = setup.problem
    mesh = setup.mesh
    mat = prob.material(e)
    t = prob.thickness
    gmap = mesh.element_map(e)
    rule = quadrature_rule(2, quadrature_degree(prob.order, gmap.order == 2))
    jd = gmap.jacobian(rule.points)
    dx = rule.weights * np.abs(jd.det)
    space = setup.spaces[0][1]
    N, G = map_vector_basis(space, jd, rule.points)
    n = len(space)
    K = np.zeros((3 * n, 3 * n))
    fvec = np.zeros(3 * n)
    # bending: sym grad of phi = N_a e_c
    S = np.zeros((2 * n, len(dx), 2, 2))
    for c in range(2):
        S[c * n:(c + 1) * n, :, c, :] += 0.5 * G
        S[c * n:(c + 1) * n, :, :, c] += 0.5 * G
    DS = mat.D(S)
    K[n:, n:] += t ** 3 / 12.0 * np.einsum("aqij,bqij,q->ab", S, DS, dx)
    # shear: gamma = grad w - phi
    gam = np.zeros((3 * n, len(dx), 2))
    gam[:n] = G
    gam[n:2 * n, :, 0] = -N
    gam[2 * n:, :, 1] = -N
    K += mat.ks_mu * t * np.einsum("aqi,bqi,q->ab", gam, gam, dx)
    fvec[:n] = t * (t ** 2 * prob.load) * (N @ dx)
    if prob.boundary_moment is not None:
        erule = _edge_quadrature(prob.order, gmap.order == 2)
        for (i, j) in _boundary_edges_of(mesh, e):
            ref, ejd, tan, nor, ds = edge_geometry(gmap, i, j, erule)
            Ne, _ = map_vector_basis(space, ejd, ref, derivative=False)
            Mn = np.einsum("qij,qj->qi", _eval_moment(prob.boundary_moment, gmap(ref)), nor)
            for c in range(2):
                fvec[(c + 1) * n:(c + 2) * n] += t ** 3 * Ne @ (Mn[:, c] * ds)
    return K, fvec


def _tdnns_kernel(setup, e):
    prob = setup.problem
    mesh = setup.mesh
    mat = prob.material(e)
    t = prob.thickness
    gmap = mesh.element_map(e)
    curved = gmap.order == 2
    p = prob.order
    rule = quadrature_rule(2, quadrature_degree(p, curved))
    jd = gmap.jacobian(rule.points)
    dx = rule.weights * np.abs(jd.det)
    sM, sw, sphi = (s for _, s in setup.spaces)
    Y = map_tensor_basis(sM, gmap, rule.points, jd=jd)
    W, GW = map_vector_basis(sw, jd, rule.points)
    PHI, GPHI = map_vector_basis(sphi, jd, rule.points)
    iM, iw, ip = setup.slices["M"], setup.slices["w"], setup.slices["phi"]
    K = np.zeros((setup.n_local, setup.n_local))
    fvec = np.zeros(setup.n_local)
    K[iM, iM] = np.einsum("aqij,bqij,q->ab", Y, mat.A(Y), dx)
    # distributional divergence pairing: -(M, grad phi)_T + (M_nn, phi_n)_dT
    B = -np.einsum("aqij,bqij,q->ab", Y, GPHI, dx)
    erule = _edge_quadrature(p, curved)
    for (i, j) in LOCAL_EDGES[2]:
        ref, ejd, _, nvec, ds = edge_geometry(gmap, i, j, erule)
        Ye = map_tensor_basis(sM, gmap, ref, jd=ejd)
        Pe, _ = map_vector_basis(sphi, ejd, ref, derivative=False)
        Mnn = np.einsum("aqij,qi,qj->aq", Ye, nvec, nvec)
        pn = np.einsum("bqi,qi->bq", Pe, nvec)
        B += np.einsum("aq,bq,q->ab", Mnn, pn, ds)
    K[iM, ip] = B
    K[ip, iM] = B.T
    c = mat.ks_mu / t ** 2
    K[iw, iw] = -c * np.einsum("aqi,bqi,q->ab", GW, GW, dx)
    K[iw, ip] = c * np.einsum("aqi,bqi,q->ab", GW, PHI, dx)
    K[ip, iw] = K[iw, ip].T
    K[ip, ip] = -c * np.einsum("aqi,bqi,q->ab", PHI, PHI, dx)
    fvec[iw] = -prob.load * (W @ dx)
    if prob.boundary_moment is not None:
        # natural tangential-normal moment data acting on the free rotation trace
        for (i, j) in _boundary_edges_of(mesh, e):
            ref, ejd, tan, nor, ds = edge_geometry(gmap, i, j, erule)
            Pe, _ = map_vector_basis(sphi, ejd, ref, derivative=False)
            Mnt = np.einsum("qi,qij,qj->q", tan, _eval_moment(prob.boundary_moment, gmap(ref)), nor)
            fvec[ip] -= np.einsum("bqi,qi,q->b", Pe, tan, Mnt * ds)
    return K, fvec


def _ffsrm_kernel(setup, e):
    prob = setup.problem
    mesh = setup.mesh
    mat = prob.material(e)
    t = prob.thickness
    gmap = mesh.element_map(e)
    curved = gmap.order == 2
    rule = quadrature_rule(2, quadrature_degree(prob.order, curved))
    jd = gmap.jacobian(rule.points)
    dx = rule.weights * np.abs(jd.det)
    sM, sq, sw, sphi = (s for _, s in setup.spaces)
    Y, DY = map_tensor_basis(sM, gmap, rule.points, with_divergence=True, jd=jd)
    Q, DQ = map_vector_basis(sq, jd, rule.points)
    W, _ = map_vector_basis(sw, jd, rule.points)
    PHI, _ = map_vector_basis(sphi, jd, rule.points)
    iM, iq, iw, ip = (setup.slices[k] for k in ("M", "q", "w", "phi"))
    K = np.zeros((setup.n_local, setup.n_local))
    fvec = np.zeros(setup.n_local)
    K[iM, iM] = np.einsum("aqij,bqij,q->ab", Y, mat.A(Y), dx)
    K[iq, iq] = t ** 2 / mat.ks_mu * np.einsum("aqi,bqi,q->ab", Q, Q, dx)
    K[iM, ip] = np.einsum("aqi,bqi,q->ab", DY, PHI, dx)
    K[ip, iM] = K[iM, ip].T
    K[iq, iw] = -np.einsum("aq,bq,q->ab", DQ, W, dx)
    K[iw, iq] = K[iq, iw].T
    K[iq, ip] = -np.einsum("aqi,bqi,q->ab", Q, PHI, dx)
    K[ip, iq] = K[iq, ip].T
    fvec[iw] = -prob.load * (W @ dx)
    if prob.boundary_deflection is not None:
        # natural deflection data on the shear flux
        erule = _edge_quadrature(prob.order, curved)
        for (i, j) in _boundary_edges_of(mesh, e):
            ref, ejd, _, nor, ds = edge_geometry(gmap, i, j, erule)
            Qe, _ = map_vector_basis(sq, ejd, ref)
            wd = np.asarray(prob.boundary_deflection(gmap(ref)), dtype=float)
            fvec[iq] -= np.einsum("bqi,qi,q->b", Qe, nor, wd * ds)
    return K, fvec


KERNELS = {"prm": _prm_kernel, "tdnns": _tdnns_kernel, "ffsrm": _ffsrm_kernel}


def build_system(problem):
    setup = _Setup(problem)
    asm = Assembler(problem.mesh, setup.fields, setup.condense)
    system = asm.assemble(setup.kernel, setup.constraints(asm))
    return setup, asm, system


def solve_plate(problem):
    t0 = time.perf_counter()
    setup, asm, system = build_system(problem)
    if problem.load == 0.0 and problem.boundary_moment is None and problem.boundary_deflection is None:
        x = np.zeros(asm.n_global)
        res = 0.0
    else:
        x = asm.solve(system)
        xr = x[system.reduced_to_global][system.free]
        res = float(np.linalg.norm(system.matrix @ xr - system.rhs))
    parts = asm.split(x)
    fields = {name: (space, dm, c) for (name, space), dm, c in zip(setup.spaces, setup.dofmaps, parts)}
    total = sum(dm.n_dofs for dm in setup.dofmaps)
    connected = sum(dm.connected_dofs for dm in setup.dofmaps)
    return PlateSolution(problem, fields, total, connected, time.perf_counter() - t0, res)


def edge_jumps(solution, n_points=5):
    """Moment traces from both sides of every interior edge.

    Returns a list of dicts with the edge id, its midpoint, the two elements and
    the max jumps of M n, M_nn, M_tt and the full tensor over ``n_points`` points.
    """
    mesh = solution.problem.mesh
    rule = quadrature_rule(1, 2 * n_points - 1)
    out = []
    for gid, (a, b) in enumerate(mesh.edges):
        els = mesh.facet_elements[gid]
        if len(els) != 2:
            continue
        Ms, frame = [], None
        for e in els:
            el = list(mesh.elements[e])
            i, j = el.index(a), el.index(b)
            gmap = mesh.element_map(e)
            ref, _, tan, nor, _ = edge_geometry(gmap, i, j, rule)
            if frame is None:
                frame = (tan, nor, gmap(ref))
            Ms.append(solution.moments(int(e), ref))
        tan, nor, x = frame
        d = Ms[0] - Ms[1]
        out.append(dict(edge=gid, x=x.mean(axis=0), elements=tuple(int(e) for e in els),
                        n=float(np.abs(np.einsum("qij,qj->qi", d, nor)).max()),
                        nn=float(np.abs(np.einsum("qi,qij,qj->q", nor, d, nor)).max()),
                        tt=float(np.abs(np.einsum("qi,qij,qj->q", tan, d, tan)).max()),
                        yy=float(np.abs(d[:, 1, 1]).max()),
                        full=float(np.abs(d).max())))
    return out


def postprocess_moments(solution, query, component=(1, 1)):
    if query == "dof_stats":
        return solution.dof_stats()
    x, M, els = solution.samples()
    if query == "field_samples":
        return x, M
    if query == "max_abs_component":
        i, j = component
        vals = M[:, i, j]
        k = int(np.argmax(np.abs(vals)))
        return {"value": float(vals[k]), "abs": float(abs(vals[k])), "location": x[k], "element": int(els[k])}
    if query == "norm_field":
        return x, np.linalg.norm(M, axis=(1, 2))
    raise ValueError(f"unknown query {query!r}")


# the two experiments

EXAMPLE1 = dict(materials={0: (300.0, 0.5), 1: (150.0, 0.5)}, thickness=0.1, load=-100.0)
EXAMPLE2 = dict(materials={0: (240.0, 0.3)}, thickness=1e-3, load=-1000.0)


def example_problem(example, formulation, order, level, seed=0):
    if example == 1:
        mesh = strip_mesh(level, seed)
        return PlateProblem(mesh, order, formulation, **EXAMPLE1)
    if example == 2:
        mesh = lshape_mesh(level, seed)
        return PlateProblem(mesh, order, formulation, **EXAMPLE2)
    raise ValueError(f"unknown example {example}")


def corner_moments(solution, vertex_id=None):
    """Moment tensors at a mesh vertex from every incident element."""
    mesh = solution.problem.mesh
    if vertex_id is None:
        vertex_id = int(np.argmin(np.linalg.norm(mesh.vertices, axis=1)))
    out = []
    for e in np.flatnonzero((mesh.elements == vertex_id).any(axis=1)):
        local = int(np.flatnonzero(mesh.elements[e] == vertex_id)[0])
        ref = REFERENCE_VERTICES[2][local][None]
        out.append(solution.moments(int(e), ref)[0])
    return np.array(out)


def run_example(example, formulation, order, level, seed=0):
    """Report rows for one experiment run.

    Example 1 returns a list with one dict (elements, total_dofs, connected_dofs,
    myy_max).  Example 2 returns (sample rows, summary dict).
    """
    prob = example_problem(example, formulation, order, level, seed)
    sol = solve_plate(prob)
    if example == 1:
        r = postprocess_moments(sol, "max_abs_component", (1, 1))
        return [dict(elements=prob.mesh.n_elements, total_dofs=sol.total_dofs,
                     connected_dofs=sol.connected_dofs, myy_max=r["abs"])], sol
    x, nrm = postprocess_moments(sol, "norm_field")
    k = int(np.argmax(nrm))
    cm = corner_moments(sol)
    summary = dict(elements=prob.mesh.n_elements, total_dofs=sol.total_dofs,
                   connected_dofs=sol.connected_dofs, max_norm=float(nrm[k]),
                   max_x=float(x[k, 0]), max_y=float(x[k, 1]),
                   corner_norm=float(np.max(np.linalg.norm(cm, axis=(1, 2)))))
    rows = [dict(x=float(a), y=float(b), norm_M=float(c)) for (a, b), c in zip(x, nrm)]
    return (rows, summary), sol
