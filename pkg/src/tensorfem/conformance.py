"""Conformity harness: interface trace jumps, constants reproduction, Gram matrices."""

import copy
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .assembly import quadrature_rule
from .geometry_map import GeometricMap, _jacobian_data, map_tensor_basis, push_forward
from .mesh import Mesh, build_dofmap
from .refsimplex import REFERENCE_VERTICES, ROTATION
from .templates import FAMILIES, FAMILY_DIMS, FAMILY_TRACE
from .tensor_elements import build_element
from .vector_elements import build_vector_element, map_vector_basis

VECTOR_TRACES = {"N2": "t", "BDM": "n", "RT": "n", "CG": "value"}
CURVED_FAMILIES = ("hz", "hms")


@dataclass
class JumpReport:
    family: str
    dim: int
    p: int
    geometry: str
    trials: int
    max_jump: float
    details: list = field(default_factory=list)
    vertex_jump: float = 0.0

    def row(self):
        return dict(family=self.family, dim=self.dim, p=self.p, geometry=self.geometry,
                    trials=self.trials, max_jump=self.max_jump)


def default_dim(family):
    if family in FAMILY_DIMS:
        return FAMILY_DIMS[family][0]
    return 2


def _trace_name(family, dim):
    if family in FAMILY_DIMS:
        return FAMILY_TRACE[(family, dim)][0]
    return VECTOR_TRACES[family]


def _build_space(family, dim, p):
    if family in FAMILIES:
        return build_element(family, dim, p)
    return build_vector_element(family, dim, p)


def break_template(space, owner_kind="edge", rng=None):
    """Copy of ``space`` with one non-cell template tensor perturbed (sensitivity control)."""
    rng = np.random.default_rng(0) if rng is None else rng
    target = next(f for f in space.functions if f.owner.kind == owner_kind)
    d = space.dim
    P = rng.standard_normal((d, d))
    P = P + P.T if space.family != "gls" else P - np.trace(P) / d * np.eye(d)
    new = copy.copy(space)
    new.functions = [dataclasses.replace(f, tensor=f.tensor + 0.5 * P)
                     if (f.owner == target.owner and f.template_index == target.template_index) else f
                     for f in space.functions]
    new._tensors = np.array([f.tensor for f in new.functions])
    return new


# random interface geometry


def _random_pair(dim, rng, curved):
    """Two simplices sharing a facet; returns (vertices, elements, curved control points)."""
    while True:
        X = rng.uniform(-1.0, 1.0, size=(dim + 2, dim))
        shared = X[:dim]
        # put the apices on opposite sides of the shared facet
        if dim == 2:
            nrm = ROTATION @ (shared[1] - shared[0])
        else:
            nrm = np.cross(shared[1] - shared[0], shared[2] - shared[0])
        s1 = (X[dim] - shared[0]) @ nrm
        s2 = (X[dim + 1] - shared[0]) @ nrm
        if s1 * s2 > 0:
            X[dim + 1] = X[dim + 1] - 2.0 * s2 * nrm / (nrm @ nrm)
        if np.abs(X).max() > 1.0:
            continue
        ok = True
        for apex in (dim, dim + 1):
            M = np.array([X[k] - X[0] for k in list(range(1, dim)) + [apex]])
            scale = np.ptp(X, axis=0).max()
            if abs(np.linalg.det(M)) <= 0.1 * scale ** dim:
                ok = False
        if not ok:
            continue
        perm = rng.permutation(dim + 2)
        inv = np.argsort(perm)
        Xp = X[perm]
        els = [[int(inv[k]) for k in list(range(dim)) + [apex]] for apex in (dim, dim + 1)]
        ctrl = {}
        if curved:
            shared_ids = [int(inv[k]) for k in range(dim)]
            for a in range(dim):
                for b in range(a + 1, dim):
                    i, j = sorted((shared_ids[a], shared_ids[b]))
                    edge = Xp[j] - Xp[i]
                    off = rng.standard_normal(dim)
                    off -= (off @ edge) / (edge @ edge) * edge
                    off *= 0.15 * np.linalg.norm(edge) / np.linalg.norm(off)
                    ctrl[(i, j)] = 0.5 * (Xp[i] + Xp[j]) + off
        mesh = Mesh(Xp, els, None, ctrl)
        if curved and not all(_valid_map(mesh.element_map(e)) for e in range(2)):
            continue
        return mesh, sorted(int(inv[k]) for k in range(dim))


def _valid_map(gmap):
    rule = quadrature_rule(gmap.dim, 6)
    det = gmap.jacobian(rule.points).det
    return np.all(det > 0) or np.all(det < 0)


def _interface_points(mesh, e, shared, bary):
    """Reference points of element ``e`` at the interface points given by facet barycentrics."""
    el = list(mesh.elements[e])
    local = [el.index(v) for v in shared]
    ref = REFERENCE_VERTICES[mesh.dim][local]
    return bary @ ref


def _frame(gmap, ref_pts, shared_local):
    """Unit normal and tangents of the interface at each point, from one side's map."""
    jd = gmap.jacobian(ref_pts)
    V = REFERENCE_VERTICES[gmap.dim]
    if gmap.dim == 2:
        t = np.einsum("nab,b->na", jd.J, V[shared_local[1]] - V[shared_local[0]])
        t /= np.linalg.norm(t, axis=1)[:, None]
        return t @ ROTATION.T, [t]
    ta = np.einsum("nab,b->na", jd.J, V[shared_local[1]] - V[shared_local[0]])
    tb = np.einsum("nab,b->na", jd.J, V[shared_local[2]] - V[shared_local[0]])
    n = np.cross(ta, tb)
    n /= np.linalg.norm(n, axis=1)[:, None]
    e1 = ta / np.linalg.norm(ta, axis=1)[:, None]
    e2 = np.cross(n, e1)
    return n, [e1, e2]


def _apply_trace(name, vals, n, ts):
    """Trace components (n_pts, k) of tensor (n_pts, d, d) or vector (n_pts, d) values."""
    if name == "tt":
        return np.stack([np.einsum("qi,qij,qj->q", a, vals, b)
                         for k, a in enumerate(ts) for b in ts[k:]], axis=1)
    if name == "nn":
        return np.einsum("qi,qij,qj->q", n, vals, n)[:, None]
    if name == "tn":
        return np.stack([np.einsum("qi,qij,qj->q", a, vals, n) for a in ts], axis=1)
    if name == "n" and vals.ndim == 3:
        return np.einsum("qij,qj->qi", vals, n)
    if name == "n":
        return np.einsum("qi,qi->q", vals, n)[:, None]
    if name == "t":
        return np.stack([np.einsum("qi,qi->q", vals, a) for a in ts], axis=1)
    if name == "value":
        return vals[:, None]
    raise ValueError(f"unknown trace {name!r}")


def _field(space, gmap, ref_pts, coeffs):
    if space.__class__.__name__ == "ElementSpace":
        Y = map_tensor_basis(space, gmap, ref_pts)
        return np.einsum("f,fqij->qij", coeffs, Y)
    jd = gmap.jacobian(ref_pts)
    v, _ = map_vector_basis(space, jd, ref_pts, derivative=False)
    return np.tensordot(coeffs, v, axes=(0, 0))


def interface_jump(family, p, trials=50, geometry="affine", seed=0, dim=None, n_points=10,
                   broken=None):
    """Max normalized trace jump across random two-element interfaces.

    ``broken`` optionally replaces the second element's space (sensitivity control).
    """
    if geometry not in ("affine", "curved"):
        raise ValueError("geometry must be 'affine' or 'curved'")
    dim = default_dim(family) if dim is None else dim
    space = _build_space(family, dim, p)
    other = space if broken is None else broken
    name = _trace_name(family, dim)
    rng = np.random.default_rng(seed)
    details, vjumps = [], []
    for trial in range(trials):
        mesh, shared = _random_pair(dim, rng, geometry == "curved")
        dm = build_dofmap(mesh, space)
        coeffs = rng.standard_normal(dm.n_dofs)
        bary = rng.dirichlet(np.ones(dim), size=n_points)
        traces = []
        fields_at_vertices = []
        frame = None
        for e, sp in ((0, space), (1, other)):
            gmap = mesh.element_map(e)
            ref = _interface_points(mesh, e, shared, bary)
            vals = _field(sp, gmap, ref, coeffs[dm.element_dofs[e]])
            if frame is None:
                el = list(mesh.elements[e])
                frame = _frame(gmap, ref, [el.index(v) for v in shared])
            traces.append(_apply_trace(name, vals, *frame))
            if family == "hz":
                vref = _interface_points(mesh, e, shared, np.eye(dim))
                fields_at_vertices.append(_field(sp, gmap, vref, coeffs[dm.element_dofs[e]]))
        scale = max(np.abs(traces[0]).max(), np.abs(traces[1]).max(), 1e-300)
        jump = float(np.abs(traces[0] - traces[1]).max() / scale)
        details.append(dict(trial=trial, jump=jump, scale=float(scale)))
        if fields_at_vertices:
            a, b = fields_at_vertices
            vjumps.append(float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-300)))
    return JumpReport(family, dim, p, geometry, trials, max(d["jump"] for d in details), details,
                      max(vjumps) if vjumps else 0.0)


# constants, Gram matrices, mapped-basis properties


def random_map(dim, rng, curved=False):
    while True:
        X = rng.uniform(-1.0, 1.0, size=(dim + 1, dim))
        scale = np.ptp(X, axis=0).max()
        if abs(np.linalg.det(X[1:] - X[0])) <= 0.1 * scale ** dim:
            continue
        if not curved:
            return GeometricMap(X)
        pts = {}
        for i in range(dim + 1):
            for j in range(i + 1, dim + 1):
                edge = X[j] - X[i]
                off = rng.standard_normal(dim)
                off -= (off @ edge) / (edge @ edge) * edge
                off *= 0.1 * np.linalg.norm(edge) / np.linalg.norm(off)
                pts[(i, j)] = 0.5 * (X[i] + X[j]) + off
        gmap = GeometricMap(X, 2, pts)
        if _valid_map(gmap):
            return gmap


def _constant_targets(family, dim):
    out = []
    for i in range(dim):
        for j in range(dim):
            if family == "gls":
                if i == j and i == dim - 1:
                    continue
                C = np.zeros((dim, dim))
                C[i, j] = 1.0
                if i == j:
                    C[dim - 1, dim - 1] = -1.0
                out.append(C)
            elif j >= i:
                C = np.zeros((dim, dim))
                C[i, j] = C[j, i] = 1.0
                out.append(C)
    return out


def constants_residual(family, p, geometry="affine", dim=None, seed=0):
    """Relative L2 residual of projecting every constant target tensor onto the mapped space."""
    dim = default_dim(family) if dim is None else dim
    space = build_element(family, dim, p)
    rng = np.random.default_rng(seed)
    gmap = random_map(dim, rng, curved=(geometry == "curved"))
    rule = quadrature_rule(dim, 2 * p + 6)
    jd = gmap.jacobian(rule.points)
    w = np.sqrt(rule.weights * np.abs(jd.det))
    Y = map_tensor_basis(space, gmap, rule.points, jd=jd)
    A = (Y * w[None, :, None, None]).reshape(len(space), -1).T
    worst = 0.0
    for C in _constant_targets(family, dim):
        b = (np.broadcast_to(C, Y.shape[1:]) * w[:, None, None]).ravel()
        c, *_ = np.linalg.lstsq(A, b, rcond=None)
        worst = max(worst, float(np.linalg.norm(A @ c - b) / np.linalg.norm(b)))
    return worst


def gram_min_eig(family, dim, p):
    """Smallest eigenvalue of the reference-element L2 Gram matrix."""
    if p > 4:
        raise ValueError("Gram check supports p <= 4")
    space = build_element(family, dim, p)
    rule = quadrature_rule(dim, 2 * p + 2)
    Y, _ = space.tabulate(rule.points)
    G = np.einsum("aqij,bqij,q->ab", Y, Y, rule.weights)
    return float(np.linalg.eigvalsh(G)[0])


def gram_matrix(family, dim, p):
    space = build_element(family, dim, p)
    rule = quadrature_rule(dim, 2 * p + 2)
    Y, _ = space.tabulate(rule.points)
    return np.einsum("aqij,bqij,q->ab", Y, Y, rule.weights)


def mapped_trace_max(dim, p, trials=10, seed=0, curved=False):
    """Max |tr Y| of mapped deviatoric-element basis tensors over random maps."""
    space = build_element("gls", dim, p)
    rng = np.random.default_rng(seed)
    rule = quadrature_rule(dim, p + 2)
    worst = 0.0
    for _ in range(trials):
        gmap = random_map(dim, rng, curved)
        Y = map_tensor_basis(space, gmap, rule.points)
        worst = max(worst, float(np.abs(np.trace(Y, axis1=2, axis2=3)).max()))
    return worst


def piola_identity_residual(points=20, seed=0):
    """Trace preservation of the three double Piola rules with unnormalized frames.

    With t = J tau and n = cof(J) nu, the rules preserve t^T Y t = tau^T U tau,
    n^T Y n = nu^T U nu and t^T Y n = tau^T U nu.  Returns the max relative error.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for dim in (2, 3):
        for _ in range(points):
            J = rng.standard_normal((1, dim, dim))
            if abs(np.linalg.det(J[0])) < 0.1:
                J[0] += 2.0 * np.eye(dim)
            jd = _jacobian_data(J, np.zeros((1, dim, dim, dim)), np.zeros((1, dim)))
            U = rng.standard_normal((dim, dim))
            tau, nu = rng.standard_normal((2, dim))
            t = J[0] @ tau
            n = jd.cof[0] @ nu
            cov = push_forward("double_covariant", jd, U + U.T)[0]
            con = push_forward("double_contravariant", jd, U + U.T)[0]
            mix = push_forward("mixed_cov_contra", jd, U)[0]
            pairs = [(t @ cov @ t, tau @ (U + U.T) @ tau),
                     (n @ con @ n, nu @ (U + U.T) @ nu),
                     (t @ mix @ n, tau @ U @ nu)]
            for a, b in pairs:
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst


def divergence_scaling_error(kind="BDM", order=2, dim=2, seed=0, curved=False, h=1e-5):
    """Relative error of div_x = div_xi / det J against central finite differences."""
    rng = np.random.default_rng(seed)
    space = build_vector_element(kind, dim, order)
    gmap = random_map(dim, rng, curved)
    xi = rng.dirichlet(np.ones(dim + 1), size=5)[:, 1:]
    jd = gmap.jacobian(xi)
    _, div = map_vector_basis(space, jd, xi)
    fd = np.zeros_like(div)
    for q in range(len(xi)):
        x0 = gmap(xi[q:q + 1])[0]
        for l in range(dim):
            for sgn in (1.0, -1.0):
                xp = x0.copy()
                xp[l] += sgn * h
                rp = _invert(gmap, xp, xi[q])
                jp = gmap.jacobian(rp[None])
                v, _ = map_vector_basis(space, jp, rp[None], derivative=False)
                fd[:, q] += sgn * v[:, 0, l] / (2.0 * h)
    return float(np.abs(fd - div).max() / np.abs(div).max())


def _invert(gmap, x, guess):
    xi = np.array(guess, dtype=float)
    for _ in range(50):
        r = gmap(xi[None])[0] - x
        if np.linalg.norm(r) < 1e-15:
            break
        xi = xi - np.linalg.solve(gmap.jacobian(xi[None]).J[0], r)
    return xi


def constants_table(families=FAMILIES, orders=(1, 2, 3)):
    rows = []
    for fam in families:
        for dim in FAMILY_DIMS[fam]:
            for p in orders:
                rows.append(dict(family=fam, dim=dim, p=p,
                                 residual=constants_residual(fam, p, "affine", dim)))
    return rows


__all__ = ["JumpReport", "interface_jump", "constants_residual", "gram_min_eig", "gram_matrix",
           "mapped_trace_max", "piola_identity_residual", "divergence_scaling_error",
           "break_template"]
