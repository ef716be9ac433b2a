"""Affine and quadratic reference-to-physical maps and the push-forward rules."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .refsimplex import (BARYCENTRIC_GRADIENTS, ROTATION, PolytopeId, barycentric_unchecked,
                         edge, enumerate_polytopes, orth, reference_frame)

PIOLA_RULES = ("double_covariant", "double_contravariant", "mixed_cov_contra")


@dataclass
class JacobianData:
    J: np.ndarray        # (n, d, d), J[a, b] = d x_a / d xi_b
    det: np.ndarray      # (n,)
    inv: np.ndarray      # (n, d, d)
    inv_t: np.ndarray    # (n, d, d), J^{-T}
    cof: np.ndarray      # (n, d, d), det J * J^{-T}
    dJ: np.ndarray       # (n, d, d, d), dJ[a, b, c] = d J_ab / d xi_c
    points: np.ndarray   # (n, d) reference points

    def at(self, q):
        """JacobianData restricted to a single point index, keeping array shapes."""
        s = slice(q, q + 1)
        return JacobianData(self.J[s], self.det[s], self.inv[s], self.inv_t[s], self.cof[s],
                            self.dJ[s], self.points[s])


def _jacobian_data(J, dJ, points):
    det = np.linalg.det(J)
    if np.any(det == 0.0):
        raise ValueError("singular Jacobian")
    inv = np.linalg.inv(J)
    inv_t = np.transpose(inv, (0, 2, 1))
    return JacobianData(J, det, inv, inv_t, det[:, None, None] * inv_t, dJ, points)


class GeometricMap:
    """Map from the reference simplex to one physical element.

    ``vertices`` are in local (sorted global) order.  For ``order == 2`` the
    optional ``edge_points`` maps a local edge (i, j) to the physical image of
    the edge midpoint; missing edges are straight.
    """

    def __init__(self, vertices, order=1, edge_points=None):
        X = np.asarray(vertices, dtype=float)
        self.dim = X.shape[1]
        if X.shape[0] != self.dim + 1:
            raise ValueError("need d+1 vertices for a d-simplex")
        self.vertices = X
        self.order = int(order)
        if self.order not in (1, 2):
            raise ValueError("geometry order must be 1 or 2")
        self.edges = list(combinations(range(self.dim + 1), 2))
        self.edge_points = np.array([0.5 * (X[i] + X[j]) for i, j in self.edges])
        if edge_points:
            if self.order == 1:
                raise ValueError("curved control points need a quadratic map")
            for (i, j), pt in edge_points.items():
                self.edge_points[self.edges.index((min(i, j), max(i, j)))] = pt
        grad_lam = BARYCENTRIC_GRADIENTS[self.dim]
        self._J_affine = (grad_lam.T @ X).T
        scale = np.max(np.ptp(X, axis=0))
        det = np.linalg.det(self._J_affine)
        if abs(det) < 1e-14 * scale ** self.dim:
            raise ValueError("degenerate simplex")

    @property
    def is_affine(self):
        return self.order == 1 or np.allclose(
            self.edge_points, [0.5 * (self.vertices[i] + self.vertices[j]) for i, j in self.edges],
            rtol=0.0, atol=1e-15 * (1.0 + np.abs(self.vertices).max()))

    def __call__(self, points):
        lam = barycentric_unchecked(self.dim, points)
        x = lam @ self.vertices
        if self.order == 2:
            # P2 correction relative to the affine interpolant
            for k, (i, j) in enumerate(self.edges):
                bump = self.edge_points[k] - 0.5 * (self.vertices[i] + self.vertices[j])
                x = x + 4.0 * (lam[:, i] * lam[:, j])[:, None] * bump[None, :]
        return x

    def jacobian(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n, d = pts.shape[0], self.dim
        J = np.repeat(self._J_affine[None], n, axis=0)
        dJ = np.zeros((n, d, d, d))
        if self.order == 2:
            lam = barycentric_unchecked(d, pts)
            G = BARYCENTRIC_GRADIENTS[d]
            for k, (i, j) in enumerate(self.edges):
                bump = self.edge_points[k] - 0.5 * (self.vertices[i] + self.vertices[j])
                if not np.any(bump):
                    continue
                grad = lam[:, i, None] * G[j][None, :] + lam[:, j, None] * G[i][None, :]
                J += 4.0 * bump[None, :, None] * grad[:, None, :]
                hess = np.outer(G[i], G[j]) + np.outer(G[j], G[i])
                dJ += 4.0 * bump[None, :, None, None] * hess[None, None, :, :]
        return _jacobian_data(J, dJ, pts)


def make_map(vertices, order=1, curved=None):
    return GeometricMap(vertices, order, curved)


def jacobian(gmap, refpoint):
    return gmap.jacobian(refpoint)


# physical frames and the non-Piola transforms


def physical_edge_tangent(jd, poly):
    fr = reference_frame(poly, jd.J.shape[1])
    return np.einsum("nab,b->na", jd.J, fr.tangent)


def physical_face_normal(jd, poly):
    fr = reference_frame(poly, 3)
    return np.einsum("nab,b->na", jd.cof, fr.normal)


def physical_face_edge_tangents(jd, poly):
    ta, tb = reference_frame(poly, 3).edge_tangents
    return (np.einsum("nab,b->na", jd.J, ta), np.einsum("nab,b->na", jd.J, tb))


def _outer(a, b):
    return a[:, :, None] * b[None, :] if b.ndim == 1 else a[:, :, None] * b[:, None, :]


def hz_edge_transform(jd, poly):
    """T_j = (t (x) tau + n (x) nu) / |tau|^2 at every point (n, 2, 2)."""
    fr = reference_frame(poly, 2)
    t = physical_edge_tangent(jd, poly)
    n = t @ ROTATION.T
    s = fr.tangent @ fr.tangent
    return (_outer(t, fr.tangent) + _outer(n, fr.normal)) / s


def hz_edge_transform_derivative(jd, poly):
    """d T_j / d xi_c as an array (n, 2, 2, c)."""
    fr = reference_frame(poly, 2)
    s = fr.tangent @ fr.tangent
    dt = np.einsum("nabc,b->nac", jd.dJ, fr.tangent)          # (n, a, c)
    dn = np.einsum("ka,nac->nkc", ROTATION, dt)
    return (dt[:, :, None, :] * fr.tangent[None, None, :, None]
            + dn[:, :, None, :] * fr.normal[None, None, :, None]) / s


def hms_edge_transform(jd, poly):
    fr = reference_frame(poly, 3)
    tau = fr.tangent
    delta2 = orth(tau)
    delta1 = np.cross(delta2, tau)
    t = physical_edge_tangent(jd, poly)
    d2 = orth(t)
    d1 = np.cross(d2, t)
    return (_outer(t, tau) / (tau @ tau) + _outer(d1, delta1) / (delta1 @ delta1)
            + _outer(d2, delta2) / (delta2 @ delta2))


def hms_face_transform(jd, poly):
    fr = reference_frame(poly, 3)
    n = physical_face_normal(jd, poly)
    t2 = orth(n)
    t1 = np.cross(n, t2)
    return (_outer(n, fr.normal) / (fr.normal @ fr.normal)
            + _outer(t1, fr.tangent1) / (fr.tangent1 @ fr.tangent1)
            + _outer(t2, fr.tangent2) / (fr.tangent2 @ fr.tangent2))


def _congruence(A, U):
    """A U A^T for stacks A (n, d, d) and U (d, d) or (n, d, d)."""
    if U.ndim == 2:
        return np.einsum("nab,bc,ndc->nad", A, U, A)
    return np.einsum("nab,nbc,ndc->nad", A, U, A)


def push_forward(rule, jd, ref_value, owner=None, transform=None):
    """Push a reference matrix forward at the points of ``jd``; returns (n, d, d).

    ``owner`` and ``transform`` select the branch of the stress-element rules:
    transform is "identity", "edge", "face" or "contra" (hms only).
    """
    U = np.asarray(ref_value, dtype=float)
    if rule == "double_covariant":
        return _congruence(jd.inv_t, U)
    if rule == "double_contravariant":
        return _congruence(jd.J, U) / (jd.det ** 2)[:, None, None]
    if rule == "mixed_cov_contra":
        if U.ndim == 2:
            Y = np.einsum("nab,bc,ndc->nad", jd.inv_t, U, jd.J)
        else:
            Y = np.einsum("nab,nbc,ndc->nad", jd.inv_t, U, jd.J)
        return Y / jd.det[:, None, None]
    if rule in ("hz_rule", "hms_rule"):
        if transform is None:
            raise ValueError(f"{rule} needs the function's transform kind and owner")
        n = jd.J.shape[0]
        if transform == "identity":
            return np.broadcast_to(U, (n,) + U.shape[-2:]).copy()
        if owner is None:
            raise ValueError(f"{rule} needs the owning polytope for {transform!r} tensors")
        if transform == "contra":
            return _congruence(jd.J, U) / jd.det[:, None, None]
        if transform == "edge":
            T = hz_edge_transform(jd, owner) if rule == "hz_rule" else hms_edge_transform(jd, owner)
            return _congruence(T, U)
        if transform == "face":
            return _congruence(hms_face_transform(jd, owner), U)
        raise ValueError(f"unknown transform {transform!r}")
    raise ValueError(f"unknown mapping rule {rule!r}")


def push_divergence(jd, ref_div):
    """Row-wise divergence of a contravariantly mapped field: (1/det J) J div_xi."""
    v = np.asarray(ref_div, dtype=float)
    if v.ndim == 1:
        return np.einsum("nab,b->na", jd.J, v) / jd.det[:, None]
    return np.einsum("nab,nb->na", jd.J, v) / jd.det[:, None]


def push_scalar_divergence(jd, ref_div):
    """Divergence of a vector field mapped by (1/det J) J: div_x = div_xi / det J."""
    return np.asarray(ref_div) / jd.det


def covariant(jd, ref_vec):
    return np.einsum("nab,...nb->...na", jd.inv_t, ref_vec)


def contravariant(jd, ref_vec):
    return np.einsum("nab,...nb->...na", jd.J, ref_vec) / jd.det[:, None]


def covariant_gradient(jd, ref_vec, ref_grad):
    """Physical gradient of J^{-T} v.  ref_vec (..., n, d), ref_grad (..., n, d, d) with
    ref_grad[..., i, l] = d v_i / d xi_l."""
    K = jd.inv_t
    # d K / d xi_l = -K (dJ_l)^T K
    dK = -np.einsum("nab,ncbl,ncd->nadl", K, jd.dJ, K)
    term = np.einsum("nikl,...nk->...nil", dK, ref_vec) + np.einsum("nik,...nkl->...nil", K, ref_grad)
    return np.einsum("...nil,nlm->...nim", term, jd.inv)


def map_tensor_basis(space, gmap, points, with_divergence=False, jd=None):
    """Physical values (n_fun, n_pts, d, d) of a tensor element, optionally the row divergence."""
    if jd is None:
        jd = gmap.jacobian(points)
    sv, sg, tensors = space.tabulate_full(points)
    d = space.dim
    nf, nq = sv.shape
    rule = space.mapping_rule
    Y = np.empty((nf, nq, d, d))
    D = np.empty((nf, nq, d)) if with_divergence else None
    grad_x = np.einsum("nlm,fnl->fnm", jd.inv, sg)  # physical scalar gradients
    affine = not np.any(jd.dJ)
    cache = {}
    for a, f in enumerate(space.functions):
        key = (f.transform, f.owner, f.template_index) if rule in ("hz_rule", "hms_rule") \
            else (f.owner, f.template_index)
        if key not in cache:
            S = push_forward(rule, jd, f.tensor, f.owner, f.transform)
            dS = None
            if with_divergence:
                dS = _mapped_tensor_divergence(rule, jd, f, S, affine)
            cache[key] = (S, dS)
        S, dS = cache[key]
        Y[a] = sv[a][:, None, None] * S
        if with_divergence:
            D[a] = np.einsum("nij,nj->ni", S, grad_x[a]) + sv[a][:, None] * dS
    return (Y, D) if with_divergence else Y


def _mapped_tensor_divergence(rule, jd, f, S, affine):
    """Physical row divergence of the point-dependent mapped constant tensor."""
    n, d = S.shape[0], S.shape[1]
    if affine or (rule in ("hz_rule", "hms_rule") and f.transform == "identity"):
        return np.zeros((n, d))
    if rule == "hz_rule" and f.transform == "edge":
        T = hz_edge_transform(jd, f.owner)
        dT = hz_edge_transform_derivative(jd, f.owner)
        U = f.tensor
        dS = (np.einsum("nabc,bk,nlk->nalc", dT, U, T)
              + np.einsum("nab,bk,nlkc->nalc", T, U, dT))
        return np.einsum("nijc,ncj->ni", dS, jd.inv)
    raise NotImplementedError("divergence on curved elements is implemented for the 2D stress element only")
