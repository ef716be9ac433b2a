"""Hand-coded reference bases (quadratic HHJ triangle, linear Regge tetrahedron).

Each group is keyed by its connectivity polytope and holds (scalar, tensor)
pairs where ``scalar`` maps barycentric coordinates to a value.  Two entries
carry corrected indices: on HHJ edge e12 the second vertex function is
lambda_2 e1 (x) e1, and on Regge edge e23 the v3 function is lambda_3 e2 (x) e2.
"""

import numpy as np

from tensorfem.refsimplex import barycentric_unchecked, cell, edge, face

E2 = np.eye(2)
E3 = np.eye(3)


def outer(a, b):
    return np.outer(a, b)


def sym(a, b):
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def lam(*idx):
    return lambda l: np.prod([l[..., i] for i in idx], axis=0)


def hhj_quadratic():
    e1, e2 = E2
    i1 = e1 - e2
    i2 = -0.5 * (e1 + e2)
    return {
        edge(0, 1): [(lam(0), outer(e1, e1)), (lam(1), outer(i1, i1)), (lam(0, 1), outer(e1, e1))],
        edge(0, 2): [(lam(0), outer(e2, e2)), (lam(2), outer(i1, i1)), (lam(0, 2), outer(e2, e2))],
        edge(1, 2): [(lam(1), outer(e2, e2)), (lam(2), outer(e1, e1)), (lam(1, 2), outer(i2, i2))],
        cell(2): [
            (lam(0), -sym(e1, e2)), (lam(1), -sym(i1, e2)), (lam(2), -sym(i1, e1)),
            (lam(0, 1), sym(e1, e2)), (lam(0, 1), outer(e2, e2)),
            (lam(0, 2), -sym(e1, e2)), (lam(0, 2), outer(e1, e1)),
            (lam(1, 2), sym(i1, i2)), (lam(1, 2), outer(i1, i1)),
        ],
    }


def regge_linear_tet():
    e1, e2, e3 = E3
    it = e1 + e2 + e3
    return {
        edge(0, 1): [(lam(0), outer(e3, e3)), (lam(1), outer(it, it))],
        edge(0, 2): [(lam(0), outer(e2, e2)), (lam(2), outer(it, it))],
        edge(0, 3): [(lam(0), outer(e1, e1)), (lam(3), outer(it, it))],
        edge(1, 2): [(lam(1), outer(e2, e2)), (lam(2), outer(e3, e3))],
        edge(1, 3): [(lam(1), outer(e1, e1)), (lam(3), outer(e3, e3))],
        edge(2, 3): [(lam(2), outer(e1, e1)), (lam(3), outer(e2, e2))],
        face(0, 1, 2): [(lam(0), sym(e2, e3)), (lam(1), sym(e2, it)), (lam(2), -sym(e3, it))],
        face(0, 1, 3): [(lam(0), sym(e1, e3)), (lam(1), sym(e1, it)), (lam(3), -sym(e3, it))],
        face(0, 2, 3): [(lam(0), sym(e1, e2)), (lam(2), sym(e1, it)), (lam(3), -sym(e2, it))],
        face(1, 2, 3): [(lam(1), sym(e1, e2)), (lam(2), -sym(e1, e3)), (lam(3), sym(e2, e3))],
    }


def evaluate(group, points, dim):
    """Oracle functions in one group as an (nf, nq * d * d) matrix."""
    bary = barycentric_unchecked(dim, points)
    rows = [s(bary)[:, None, None] * T[None] for s, T in group]
    return np.array([r.ravel() for r in rows])


def group_residuals(space, oracle, points):
    """Relative least-squares residual of each oracle group against the
    generated functions sharing its connectivity polytope."""
    values, _ = space.tabulate(points)
    dim = space.dim
    out = {}
    for poly, group in oracle.items():
        sel = [a for a, f in enumerate(space.functions) if f.connectivity == poly]
        B = values[sel].reshape(len(sel), -1)
        T = evaluate(group, points, dim)
        coef, *_ = np.linalg.lstsq(B.T, T.T, rcond=None)
        res = np.linalg.norm(B.T @ coef - T.T) / np.linalg.norm(T)
        out[poly] = (len(sel), len(group), res)
    return out
