"""Reference triangle and tetrahedron: polytopes, association tables, frames.

Vertex coordinates follow the barycentric convention
``lambda_0 = 1 - sum(xi)``, ``lambda_1`` is the last coordinate, ``lambda_2``
the one before, and so on.  In 2D this gives v0=(0,0), v1=(0,1), v2=(1,0);
in 3D v0=(0,0,0), v1=(0,0,1), v2=(0,1,0), v3=(1,0,0).
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

KINDS = ("vertex", "edge", "face", "cell")

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])  # R = e1 (x) e2 - e2 (x) e1


@dataclass(frozen=True, order=True)
class PolytopeId:
    kind: str
    indices: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown polytope kind {self.kind!r}")
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"polytope indices must be strictly increasing: {idx}")
        if self.kind != "cell" and len(idx) != KINDS.index(self.kind) + 1:
            raise ValueError(f"{self.kind} needs {KINDS.index(self.kind) + 1} indices, got {idx}")
        if self.kind == "cell" and len(idx) not in (3, 4):
            raise ValueError(f"cell needs 3 or 4 indices, got {idx}")

    @property
    def dim(self):
        return len(self.indices) - 1

    def __repr__(self):
        prefix = {"vertex": "v", "edge": "e", "face": "f", "cell": "c"}[self.kind]
        return prefix + "".join(str(i) for i in self.indices)


def vertex(i):
    return PolytopeId("vertex", (i,))


def edge(i, j):
    return PolytopeId("edge", (i, j))


def face(i, j, k):
    return PolytopeId("face", (i, j, k))


def cell(dim):
    return PolytopeId("cell", tuple(range(dim + 1)))


def polytope(indices, dim):
    """Polytope of a simplex of dimension ``dim`` spanned by sorted ``indices``."""
    indices = tuple(sorted(indices))
    n = len(indices)
    if n == dim + 1:
        return PolytopeId("cell", indices)
    return PolytopeId(KINDS[n - 1], indices)


REFERENCE_VERTICES = {
    2: np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]),
    3: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
}

# rows: gradient of lambda_i with respect to the reference coordinates
BARYCENTRIC_GRADIENTS = {
    2: np.array([[-1.0, -1.0], [0.0, 1.0], [1.0, 0.0]]),
    3: np.array([[-1.0, -1.0, -1.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
}


@dataclass(frozen=True)
class ReferenceSimplex:
    dim: int
    vertices: np.ndarray = field(repr=False)
    polytopes: dict = field(repr=False)

    @property
    def edges(self):
        return self.polytopes["edge"]

    @property
    def faces(self):
        return self.polytopes["face"] if self.dim == 3 else []

    @property
    def cell(self):
        return self.polytopes["cell"][0]

    def all_polytopes(self):
        """Vertices, edges, faces (3D) and the cell, each group in lexicographic order."""
        out = []
        for kind in KINDS:
            out.extend(self.polytopes.get(kind, []))
        return out

    def incident(self, p):
        """Polytopes of higher or equal dimension containing ``p``, by dimension then lex."""
        s = set(p.indices)
        return [q for q in self.all_polytopes() if q.dim >= p.dim and s <= set(q.indices)]


_SIMPLEX_CACHE = {}


def enumerate_polytopes(dim):
    if dim not in (2, 3):
        raise ValueError(f"reference simplex dimension must be 2 or 3, got {dim}")
    if dim in _SIMPLEX_CACHE:
        return _SIMPLEX_CACHE[dim]
    n = dim + 1
    polys = {"vertex": [vertex(i) for i in range(n)],
             "edge": [edge(*c) for c in combinations(range(n), 2)]}
    if dim == 3:
        polys["face"] = [face(*c) for c in combinations(range(n), 3)]
    polys["cell"] = [cell(dim)]
    ref = ReferenceSimplex(dim, REFERENCE_VERTICES[dim].copy(), polys)
    _SIMPLEX_CACHE[dim] = ref
    return ref


def _c(dim):
    return cell(dim)


# Association tables, stored verbatim.  Keys are owner multi-indices.
_E = edge
_F = face

_ASSOC_2D_TANGENTIAL = {
    (0,): [_E(0, 1), _E(0, 2)],
    (1,): [_E(0, 1), _E(1, 2)],
    (2,): [_E(0, 2), _E(1, 2)],
    (0, 1): [_E(0, 1), cell(2)],
    (0, 2): [_E(0, 2), cell(2)],
    (1, 2): [_E(1, 2), cell(2)],
    (0, 1, 2): [cell(2), cell(2)],
}

_ASSOC_3D_TANGENTIAL = {
    (0,): [_E(0, 1), _E(0, 2), _E(0, 3)],
    (1,): [_E(0, 1), _E(1, 2), _E(1, 3)],
    (2,): [_E(0, 2), _E(1, 2), _E(2, 3)],
    (3,): [_E(0, 3), _E(1, 3), _E(2, 3)],
    (0, 1): [_E(0, 1), _F(0, 1, 2), _F(0, 1, 3)],
    (0, 2): [_E(0, 2), _F(0, 1, 2), _F(0, 2, 3)],
    (0, 3): [_E(0, 3), _F(0, 1, 3), _F(0, 2, 3)],
    (1, 2): [_E(1, 2), _F(0, 1, 2), _F(1, 2, 3)],
    (1, 3): [_E(1, 3), _F(0, 1, 3), _F(1, 2, 3)],
    (2, 3): [_E(2, 3), _F(0, 2, 3), _F(1, 2, 3)],
    (0, 1, 2): [_F(0, 1, 2), _F(0, 1, 2), cell(3)],
    (0, 1, 3): [_F(0, 1, 3), _F(0, 1, 3), cell(3)],
    (0, 2, 3): [_F(0, 2, 3), _F(0, 2, 3), cell(3)],
    (1, 2, 3): [_F(1, 2, 3), _F(1, 2, 3), cell(3)],
    (0, 1, 2, 3): [cell(3)] * 3,
}

_ASSOC_3D_NORMAL = {
    (0,): [_F(0, 1, 2), _F(0, 1, 3), _F(0, 2, 3)],
    (1,): [_F(0, 1, 2), _F(0, 1, 3), _F(1, 2, 3)],
    (2,): [_F(0, 1, 2), _F(0, 2, 3), _F(1, 2, 3)],
    (3,): [_F(0, 1, 3), _F(0, 2, 3), _F(1, 2, 3)],
    (0, 1): [_F(0, 1, 2), _F(0, 1, 3), cell(3)],
    (0, 2): [_F(0, 1, 2), _F(0, 2, 3), cell(3)],
    (0, 3): [_F(0, 1, 3), _F(0, 2, 3), cell(3)],
    (1, 2): [_F(0, 1, 2), _F(1, 2, 3), cell(3)],
    (1, 3): [_F(0, 1, 3), _F(1, 2, 3), cell(3)],
    (2, 3): [_F(0, 2, 3), _F(1, 2, 3), cell(3)],
    (0, 1, 2): [_F(0, 1, 2), cell(3), cell(3)],
    (0, 1, 3): [_F(0, 1, 3), cell(3), cell(3)],
    (0, 2, 3): [_F(0, 2, 3), cell(3), cell(3)],
    (1, 2, 3): [_F(1, 2, 3), cell(3), cell(3)],
    (0, 1, 2, 3): [cell(3)] * 3,
}

_ASSOCIATION = {
    (2, "tangential"): _ASSOC_2D_TANGENTIAL,
    # in 2D the normal sets are rotated tangential sets, with identical targets
    (2, "normal"): _ASSOC_2D_TANGENTIAL,
    (3, "tangential"): _ASSOC_3D_TANGENTIAL,
    (3, "normal"): _ASSOC_3D_NORMAL,
}


def association(p, continuity, dim):
    """Ordered target polytopes of the template vectors attached to ``p``."""
    if continuity not in ("tangential", "normal"):
        raise ValueError(f"continuity must be 'tangential' or 'normal', got {continuity!r}")
    table = _ASSOCIATION[(dim, continuity)]
    if p.indices not in table or max(p.indices) > dim:
        raise ValueError(f"{p!r} is not a polytope of the {dim}D reference simplex")
    return list(table[p.indices])


def barycentric(dim, point, tol=1e-12):
    """Barycentric coordinates of a reference point (or array of points)."""
    x = np.asarray(point, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise ValueError(f"expected {dim} coordinates, got shape {x.shape}")
    lam = np.empty((x.shape[0], dim + 1))
    lam[:, 0] = 1.0 - x.sum(axis=1)
    lam[:, 1:] = x[:, ::-1]
    if np.any(lam < -tol):
        raise ValueError("point lies outside the reference simplex")
    lam = np.clip(lam, 0.0, 1.0)
    return lam[0] if single else lam


def barycentric_unchecked(dim, points):
    x = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.empty((x.shape[0], dim + 1))
    lam[:, 0] = 1.0 - x.sum(axis=1)
    lam[:, 1:] = x[:, ::-1]
    return lam


def point_from_barycentric(dim, lam):
    lam = np.atleast_2d(lam)
    return lam @ REFERENCE_VERTICES[dim]


def sgn(x):
    """Sign with sgn(0) = 1."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def orth(v):
    """A unique vector orthogonal to a nonzero 3-vector."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError("orth is defined for 3-vectors")
    if np.any(np.linalg.norm(v, axis=-1) == 0.0):
        raise ValueError("orth of the zero vector is undefined")
    a1, a2, a3 = np.abs(v[..., 0]), np.abs(v[..., 1]), np.abs(v[..., 2])
    s = sgn(v)
    return np.stack([s[..., 0] * a3, s[..., 1] * a3, -s[..., 2] * (a1 + a2)], axis=-1)


@dataclass(frozen=True)
class EdgeFrame:
    tangent: np.ndarray
    normal: np.ndarray = None  # 2D only


@dataclass(frozen=True)
class FaceFrame:
    normal: np.ndarray
    tangent1: np.ndarray
    tangent2: np.ndarray
    edge_tangents: tuple = ()  # t_ij, t_ik of the face, used for in-plane traces


def edge_frame_from_tangent(t):
    t = np.asarray(t, dtype=float)
    if t.shape[-1] == 2:
        return EdgeFrame(t, t @ ROTATION.T)
    return EdgeFrame(t)


def face_frame_from_tangents(t_ij, t_ik):
    n = np.cross(t_ij, t_ik)
    t2 = orth(n)
    t1 = np.cross(n, t2)
    return FaceFrame(n, t1, t2, (np.asarray(t_ij, float), np.asarray(t_ik, float)))


def reference_frame(p, dim):
    verts = REFERENCE_VERTICES[dim]
    if p.kind == "edge":
        i, j = p.indices
        return edge_frame_from_tangent(verts[j] - verts[i])
    if p.kind == "face" and dim == 3:
        i, j, k = p.indices
        return face_frame_from_tangents(verts[j] - verts[i], verts[k] - verts[i])
    raise ValueError(f"reference frames exist for edges and 3D faces, not {p!r}")
