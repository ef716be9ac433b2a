"""Hierarchical H1 basis on the reference simplex.

Vertex functions are the barycentric coordinates.  Edge functions are
``l_i l_j P_k(l_j - l_i)`` (Legendre kernels of the integrated-Legendre
family), face and cell functions are barycentric bubbles times products of
Legendre polynomials in affine barycentric combinations.  Every function is a
product of Legendre polynomials of affine functions of the barycentrics, which
gives exact values and gradients without interpolation tables.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .refsimplex import (BARYCENTRIC_GRADIENTS, PolytopeId, barycentric_unchecked,
                         enumerate_polytopes)


@dataclass(frozen=True)
class ScalarFunctionId:
    owner: PolytopeId
    index: int


def _lin(dim, coeffs, const=0.0):
    c = np.zeros(dim + 1)
    for i, v in coeffs.items():
        c[i] = v
    return c, const


def _legendre_factor(dim, coeffs, const, degree):
    c, c0 = _lin(dim, coeffs, const)
    return (c, c0, degree)


def _group_factors(p, owner, dim):
    """Factor lists for the hierarchical functions of one polytope."""
    idx = owner.indices
    out = []
    if len(idx) == 1:
        out.append([_legendre_factor(dim, {idx[0]: 1.0}, 0.0, 1)])
    elif len(idx) == 2:
        i, j = idx
        for k in range(p - 1):
            out.append([_legendre_factor(dim, {i: 1.0}, 0.0, 1),
                        _legendre_factor(dim, {j: 1.0}, 0.0, 1),
                        _legendre_factor(dim, {j: 1.0, i: -1.0}, 0.0, k)])
    elif len(idx) == 3:
        i, j, k = idx
        m = p - 3
        for total in range(m + 1):
            for b in range(total + 1):
                a = total - b
                out.append([_legendre_factor(dim, {i: 1.0}, 0.0, 1),
                            _legendre_factor(dim, {j: 1.0}, 0.0, 1),
                            _legendre_factor(dim, {k: 1.0}, 0.0, 1),
                            _legendre_factor(dim, {j: 1.0, i: -1.0}, 0.0, a),
                            _legendre_factor(dim, {k: 2.0}, -1.0, b)])
    else:
        m = p - 4
        for total in range(m + 1):
            for rest in range(total + 1):
                a = total - rest
                for c in range(rest + 1):
                    b = rest - c
                    out.append([_legendre_factor(dim, {n: 1.0}, 0.0, 1) for n in range(4)]
                               + [_legendre_factor(dim, {1: 1.0, 0: -1.0}, 0.0, a),
                                  _legendre_factor(dim, {2: 2.0}, -1.0, b),
                                  _legendre_factor(dim, {3: 2.0}, -1.0, c)])
    return out


def group_size(kind_dim, p, dim):
    """Number of hierarchical functions owned by a polytope of dimension ``kind_dim``."""
    if kind_dim == 0:
        return 1
    if kind_dim == 1:
        return max(p - 1, 0)
    if kind_dim == 2:
        return max((p - 2) * (p - 1) // 2, 0)
    return max((p - 3) * (p - 2) * (p - 1) // 6, 0)


class ScalarBasis:
    """Hierarchical polytopal basis of P^p on the reference triangle or tetrahedron."""

    def __init__(self, dim, p):
        if p < 1:
            raise ValueError(f"scalar basis order must be >= 1, got {p}")
        self.dim = dim
        self.order = p
        self.simplex = enumerate_polytopes(dim)
        self.groups = {}
        self.ids = []
        self._factors = []
        for poly in self.simplex.all_polytopes():
            facs = _group_factors(p, poly, dim)
            self.groups[poly] = [ScalarFunctionId(poly, n) for n in range(len(facs))]
            self.ids.extend(self.groups[poly])
            self._factors.extend(facs)
        self._position = {fid: n for n, fid in enumerate(self.ids)}
        self._pack()

    def _pack(self):
        # vectorized evaluation data: one row per (function, factor)
        nf = max(len(f) for f in self._factors)
        n = len(self._factors)
        d1 = self.dim + 1
        self._coef = np.zeros((n, nf, d1))
        self._const = np.zeros((n, nf))
        self._deg = np.zeros((n, nf), dtype=int)  # degree 0 factor is the constant 1
        for a, facs in enumerate(self._factors):
            for b, (c, c0, k) in enumerate(facs):
                self._coef[a, b] = c
                self._const[a, b] = c0
                self._deg[a, b] = k
        self._maxdeg = int(self._deg.max())

    def __len__(self):
        return len(self.ids)

    @property
    def total(self):
        return len(self.ids)

    def index(self, fid):
        if fid not in self._position:
            raise KeyError(f"unknown scalar function {fid}")
        return self._position[fid]

    def tabulate(self, points):
        """Values (n_fun, n_pts) and reference gradients (n_fun, n_pts, dim)."""
        lam = barycentric_unchecked(self.dim, points)
        dlam = BARYCENTRIC_GRADIENTS[self.dim]
        # argument of every factor at every point: (n, nf, npts)
        arg = np.einsum("abk,pk->abp", self._coef, lam) + self._const[:, :, None]
        darg = np.einsum("abk,kd->abd", self._coef, dlam)
        val = np.empty_like(arg)
        der = np.empty_like(arg)
        for k in range(self._maxdeg + 1):
            mask = self._deg == k
            if not mask.any():
                continue
            e = np.zeros(k + 1)
            e[k] = 1.0
            val[mask] = npleg.legval(arg[mask], e)
            der[mask] = npleg.legval(arg[mask], npleg.legder(e)) if k > 0 else 0.0
        values = np.prod(val, axis=1)
        nfac = val.shape[1]
        grads = np.zeros((values.shape[0], values.shape[1], self.dim))
        for b in range(nfac):
            others = np.prod(np.delete(val, b, axis=1), axis=1)
            grads += (others * der[:, b])[:, :, None] * darg[:, b, None, :]
        return values, grads

    def polytope_counts(self):
        return {poly: len(ids) for poly, ids in self.groups.items()}


def build_scalar_basis(dim, p):
    return ScalarBasis(dim, p)


def eval_scalar(basis, fid, point):
    n = basis.index(fid)
    v, g = basis.tabulate(np.atleast_2d(point))
    return float(v[n, 0]), g[n, 0].copy()


def polytope_counts(basis):
    return basis.polytope_counts()
