"""Vector and scalar companion spaces: N2, BDM, RT, DG and continuous Lagrange."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry_map import contravariant, covariant, covariant_gradient
from .refsimplex import PolytopeId, cell, enumerate_polytopes, point_from_barycentric, reference_frame
from .scalar_basis import build_scalar_basis
from .templates import vector_templates

KINDS = ("N2", "BDM", "RT", "DG_scalar", "DG_vector", "CG")
MAPPING = {"N2": "covariant", "BDM": "contravariant", "RT": "contravariant",
           "DG_scalar": "identity", "DG_vector": "identity", "CG": "h1"}


@dataclass(frozen=True)
class VectorFunction:
    owner: PolytopeId
    connectivity: PolytopeId
    index: int


def _monomial_exponents(dim, k, homogeneous=False):
    out = []
    degrees = [k] if homogeneous else range(k + 1)
    for total in degrees:
        if dim == 2:
            for b in range(total + 1):
                out.append((total - b, b))
        else:
            for rest in range(total + 1):
                for c in range(rest + 1):
                    out.append((total - rest, rest - c, c))
    return np.array(out, dtype=int).reshape(-1, dim)


def _monomials(exps, points):
    """Values (n_mon, n_pts) and gradients (n_mon, n_pts, d) of monomials."""
    x = np.atleast_2d(points)
    vals = np.prod(x[None, :, :] ** exps[:, None, :], axis=2)
    d = x.shape[1]
    grads = np.zeros(vals.shape + (d,))
    for l in range(d):
        e = exps.copy()
        coef = e[:, l].astype(float)
        e[:, l] = np.maximum(e[:, l] - 1, 0)
        grads[:, :, l] = coef[:, None] * np.prod(x[None, :, :] ** e[:, None, :], axis=2)
    return vals, grads


class VectorElementSpace:
    def __init__(self, kind, dim, order):
        if kind not in KINDS:
            raise ValueError(f"unknown vector element kind {kind!r}")
        if dim not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        low = 0 if kind in ("RT", "DG_scalar", "DG_vector") else 1
        if order < low:
            raise ValueError(f"{kind} needs order >= {low}, got {order}")
        self.kind = kind
        self.dim = dim
        self.order = order
        self.mapping = MAPPING[kind]
        self.simplex = enumerate_polytopes(dim)
        getattr(self, "_build_" + kind.lower())()

    @property
    def is_vector(self):
        return self.kind not in ("DG_scalar", "CG")

    def __len__(self):
        return len(self.functions)

    def connectivities(self):
        return [f.connectivity for f in self.functions]

    # construction

    def _build_templated(self, continuity):
        self.scalar_basis = build_scalar_basis(self.dim, self.order)
        sets = vector_templates(self.dim, continuity)
        funcs, rows, vecs = [], [], []
        for poly, fids in self.scalar_basis.groups.items():
            vs = sets[poly]
            for fid in fids:
                for k, (v, target) in enumerate(zip(vs.vectors, vs.targets)):
                    funcs.append(VectorFunction(poly, target, len(funcs)))
                    rows.append(self.scalar_basis.index(fid))
                    vecs.append(v)
        self.functions = funcs
        self._rows = np.array(rows, dtype=int)
        self._vecs = np.array(vecs)

    def _build_n2(self):
        self._build_templated("tangential")

    def _build_bdm(self):
        self._build_templated("normal")

    def _build_cg(self):
        self.scalar_basis = build_scalar_basis(self.dim, self.order)
        self.functions = [VectorFunction(fid.owner, fid.owner, n)
                          for n, fid in enumerate(self.scalar_basis.ids)]

    def _build_dg_scalar(self):
        self._exps = _monomial_exponents(self.dim, self.order)
        c = self.simplex.cell
        self.functions = [VectorFunction(c, c, n) for n in range(len(self._exps))]

    def _build_dg_vector(self):
        self._exps = _monomial_exponents(self.dim, self.order)
        c = self.simplex.cell
        self.functions = [VectorFunction(c, c, n) for n in range(len(self._exps) * self.dim)]

    def _build_rt(self):
        k, d = self.order, self.dim
        facets = self.simplex.edges if d == 2 else self.simplex.faces
        self._facets = facets
        c = self.simplex.cell
        self._extra_exps = _monomial_exponents(d, k, homogeneous=True)
        if k == 0:
            # lowest order: x - v_i scaled to unit reference normal flux on the opposite facet
            self._bdm = None
            verts = self.simplex.vertices
            self._rt0 = []
            funcs = []
            for f in facets:
                opp = [i for i in range(d + 1) if i not in f.indices][0]
                nu = _facet_normal(f, d)
                scale = 1.0 / ((verts[f.indices[0]] - verts[opp]) @ nu)
                self._rt0.append((verts[opp], scale))
                funcs.append(VectorFunction(f, f, len(funcs)))
            self.functions = funcs
            return
        self._bdm = VectorElementSpace("BDM", d, k)
        nb = len(self._bdm)
        ne = len(self._extra_exps)
        facet_rows = {f: [n for n, g in enumerate(self._bdm.functions) if g.connectivity == f]
                      for f in facets}
        interior_rows = [n for n, g in enumerate(self._bdm.functions) if g.connectivity == c]
        # coefficient matrix over primitives [BDM_k functions, x * homogeneous monomials]
        rows, funcs = [], []
        for f in facets:
            for n in facet_rows[f]:
                r = np.zeros(nb + ne)
                r[n] = 1.0
                rows.append(r)
                funcs.append(VectorFunction(f, f, len(funcs)))
        for n in interior_rows:
            r = np.zeros(nb + ne)
            r[n] = 1.0
            rows.append(r)
            funcs.append(VectorFunction(c, c, len(funcs)))
        for m in range(ne):
            r = np.zeros(nb + ne)
            r[nb + m] = 1.0
            for f in facets:
                pts = _facet_points(f, d, k + 3)
                nu = _facet_normal(f, d)
                bv, _ = self._bdm._ref_vector(pts)
                fr = facet_rows[f]
                A = np.einsum("fpi,i->pf", bv[fr], nu)
                ev, _ = self._extra(pts)
                rhs = ev[m] @ nu
                coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
                if np.max(np.abs(A @ coef - rhs)) > 1e-11:
                    raise RuntimeError("normal trace correction failed")
                r[fr] -= coef
            rows.append(r)
            funcs.append(VectorFunction(c, c, len(funcs)))
        self._coef = np.array(rows)
        self.functions = funcs

    def _extra(self, points):
        x = np.atleast_2d(points)
        mv, mg = _monomials(self._extra_exps, x)
        vals = mv[:, :, None] * x[None, :, :]
        d = self.dim
        grads = (mv[:, :, None, None] * np.eye(d)[None, None]
                 + x[None, :, :, None] * mg[:, :, None, :])
        return vals, grads

    # reference tabulation

    def _ref_vector(self, points):
        """Reference values (nf, nq, d) and Jacobians (nf, nq, d, d), [i, l] = d v_i/d xi_l."""
        x = np.atleast_2d(points)
        d = self.dim
        if self.kind in ("N2", "BDM"):
            sv, sg = self.scalar_basis.tabulate(x)
            v = sv[self._rows][:, :, None] * self._vecs[:, None, :]
            g = self._vecs[:, None, :, None] * sg[self._rows][:, :, None, :]
            return v, g
        if self.kind == "DG_vector":
            mv, mg = _monomials(self._exps, x)
            nm = len(self._exps)
            v = np.zeros((nm * d, x.shape[0], d))
            g = np.zeros((nm * d, x.shape[0], d, d))
            for comp in range(d):
                v[comp::d, :, comp] = mv
                g[comp::d, :, comp, :] = mg
            return v, g
        if self.kind == "RT":
            if self._bdm is None:
                v = np.stack([s * (x - v0) for v0, s in self._rt0])
                g = np.stack([s * np.broadcast_to(np.eye(d), (x.shape[0], d, d)) for _, s in self._rt0])
                return v, g
            bv, bg = self._bdm._ref_vector(x)
            ev, eg = self._extra(x)
            pv = np.concatenate([bv, ev])
            pg = np.concatenate([bg, eg])
            return (np.einsum("fk,kpi->fpi", self._coef, pv),
                    np.einsum("fk,kpil->fpil", self._coef, pg))
        raise ValueError(f"{self.kind} is scalar-valued")

    def _ref_scalar(self, points):
        x = np.atleast_2d(points)
        if self.kind == "CG":
            return self.scalar_basis.tabulate(x)
        return _monomials(self._exps, x)

    def tabulate(self, points):
        """Reference values and derivatives: scalars give (values, gradients); vectors give
        (values, Jacobians)."""
        if self.is_vector:
            return self._ref_vector(points)
        return self._ref_scalar(points)

    def tabulate_divergence(self, points):
        v, g = self._ref_vector(points)
        return v, np.trace(g, axis1=2, axis2=3)


def _facet_normal(f, d):
    return reference_frame(f, d).normal


def _facet_points(f, d, n):
    """Interior sample points on a reference facet."""
    verts = f.indices
    rng = np.random.default_rng(1234 + sum(verts))
    w = rng.dirichlet(np.ones(len(verts)), size=max(n * n, 12))
    lam = np.zeros((w.shape[0], d + 1))
    lam[:, list(verts)] = w
    return point_from_barycentric(d, lam)


def build_vector_element(kind, dim, p):
    return VectorElementSpace(kind, dim, p)


def map_vector_basis(space, jd, points, derivative=True):
    """Physical values and derivatives at reference ``points`` (matching ``jd``).

    CG / DG_scalar: (values (nf,nq), gradients (nf,nq,d)).
    N2: (values (nf,nq,d), gradients (nf,nq,d,d)).
    BDM / RT: (values (nf,nq,d), divergences (nf,nq)).
    DG_vector: (values (nf,nq,d), None).
    """
    if space.kind in ("CG", "DG_scalar"):
        v, g = space.tabulate(points)
        return v, np.einsum("nlm,fnl->fnm", jd.inv, g)
    if space.kind == "N2":
        v, g = space.tabulate(points)
        pv = covariant(jd, v)
        return pv, (covariant_gradient(jd, v, g) if derivative else None)
    if space.kind in ("BDM", "RT"):
        v, div = space.tabulate_divergence(points)
        return contravariant(jd, v), div / jd.det[None, :]
    v, _ = space.tabulate(points)
    return v, None
