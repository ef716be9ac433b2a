"""Vector template supersets and the tensor template sets derived from them."""

from dataclasses import dataclass

import numpy as np

from .refsimplex import (ROTATION, PolytopeId, association, cell, enumerate_polytopes,
                         orth, reference_frame)

FAMILIES = ("regge", "hhj", "ps", "hz", "hms", "gls")
FAMILY_DIMS = {"regge": (2, 3), "hhj": (2,), "ps": (3,), "hz": (2,), "hms": (3,), "gls": (2, 3)}

e1_2, e2_2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
e1_3, e2_3, e3_3 = np.eye(3)

IOTA1_TAN_2D = e1_2 + e2_2
IOTA2_TAN_2D = 0.5 * (e1_2 - e2_2)
IOTA_TAN_3D = e1_3 + e2_3 + e3_3
IOTA1_NOR_3D = e3_3 - e1_3
IOTA2_NOR_3D = e2_3 - e3_3
IOTA3_NOR_3D = e2_3 - e1_3

_TAN_2D = {
    (0,): [e2_2, e1_2],
    (1,): [IOTA1_TAN_2D, e1_2],
    (2,): [IOTA1_TAN_2D, -e2_2],
    (0, 1): [e2_2, -e1_2],
    (0, 2): [e1_2, e2_2],
    (1, 2): [IOTA2_TAN_2D, IOTA1_TAN_2D],
    (0, 1, 2): [e1_2, e2_2],
}

_it = IOTA_TAN_3D
_TAN_3D = {
    (0,): [e3_3, e2_3, e1_3],
    (1,): [_it, e2_3, e1_3],
    (2,): [_it, -e3_3, e1_3],
    (3,): [_it, -e3_3, -e2_3],
    (0, 1): [e3_3, -e2_3, -e1_3],
    (0, 2): [e2_3, e3_3, -e1_3],
    (0, 3): [e1_3, e3_3, e2_3],
    (1, 2): [e2_3, _it, -e1_3],
    (1, 3): [e1_3, _it, e2_3],
    (2, 3): [e1_3, _it, -e3_3],
    (0, 1, 2): [e3_3, e2_3, -e1_3],
    (0, 1, 3): [e3_3, e1_3, e2_3],
    (0, 2, 3): [e2_3, e1_3, -e3_3],
    (1, 2, 3): [e2_3, e1_3, _it],
    (0, 1, 2, 3): [e3_3, e2_3, e1_3],
}

_i1, _i2, _i3 = IOTA1_NOR_3D, IOTA2_NOR_3D, IOTA3_NOR_3D
_NOR_3D = {
    (0,): [-e1_3, e2_3, -e3_3],
    (1,): [_i1, _i2, -e3_3],
    (2,): [_i3, _i2, -e2_3],
    (3,): [_i3, -_i1, -e1_3],
    (0, 1): [-e1_3, e2_3, e3_3],
    (0, 2): [-e1_3, -e3_3, e2_3],
    (0, 3): [e2_3, -e3_3, e1_3],
    (1, 2): [_i1, -e3_3, _i2],
    (1, 3): [_i2, -e3_3, -_i1],
    (2, 3): [_i2, -e2_3, -_i3],
    (0, 1, 2): [-e1_3, e3_3, e2_3],
    (0, 1, 3): [e2_3, e3_3, e1_3],
    (0, 2, 3): [-e3_3, e2_3, e1_3],
    (1, 2, 3): [-e3_3, _i2, -_i1],
    (0, 1, 2, 3): [e3_3, e2_3, e1_3],
}


@dataclass(frozen=True)
class VectorTemplateSet:
    owner: PolytopeId
    vectors: tuple
    targets: tuple

    def matrix(self):
        return np.array(self.vectors)


@dataclass(frozen=True)
class TensorTemplateSet:
    owner: PolytopeId
    tensors: tuple
    connectivity: tuple
    family: str
    # per tensor: how the tensor is pushed forward ("piola", "identity", "edge", "face", "contra")
    transforms: tuple = ()


def _table(dim, kind):
    if dim == 2:
        if kind == "tangential":
            return _TAN_2D
        return {k: [ROTATION @ v for v in vs] for k, vs in _TAN_2D.items()}
    return _TAN_3D if kind == "tangential" else _NOR_3D


_VEC_CACHE = {}


def vector_templates(dim, kind):
    """Ordered vector template sets for every polytope of the reference simplex."""
    if kind not in ("tangential", "normal"):
        raise ValueError(f"template kind must be 'tangential' or 'normal', got {kind!r}")
    key = (dim, kind)
    if key not in _VEC_CACHE:
        ref = enumerate_polytopes(dim)
        table = _table(dim, kind)
        out = {}
        for poly in ref.all_polytopes():
            vecs = tuple(np.array(v, dtype=float) for v in table[poly.indices])
            out[poly] = VectorTemplateSet(poly, vecs, tuple(association(poly, kind, dim)))
        _VEC_CACHE[key] = out
    return _VEC_CACHE[key]


def sym(a, b):
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def dev(a):
    d = a.shape[0]
    return a - np.trace(a) / d * np.eye(d)


def balanced_difference(a, b):
    """Traceless combination tr(b) a - tr(a) b; equals a - b when tr a = tr b = 1."""
    return np.trace(b) * a - np.trace(a) * b


# trace functionals on reference polytopes, used for the connectivity filters

def _face_in_plane(frame):
    return frame.edge_tangents


def reference_trace(name, tensor, poly, dim):
    """Designated trace of a constant tensor on a reference edge or face, as a flat array."""
    fr = reference_frame(poly, dim)
    if poly.kind == "edge":
        t = fr.tangent
        if name == "tt":
            return np.array([t @ tensor @ t])
        n = fr.normal
        if name == "nn":
            return np.array([n @ tensor @ n])
        if name == "tn":
            return np.array([t @ tensor @ n])
        if name == "n":
            return tensor @ n
    else:
        ta, tb = fr.edge_tangents
        n = fr.normal
        if name == "tt":
            return np.array([ta @ tensor @ ta, ta @ tensor @ tb, tb @ tensor @ tb])
        if name == "nn":
            return np.array([n @ tensor @ n])
        if name == "tn":
            v = tensor @ n
            return np.array([ta @ v, tb @ v])
        if name == "n":
            return tensor @ n
    raise ValueError(f"trace {name!r} undefined on {poly!r}")


# which trace a family uses, and on which polytope dimensions it is continuous
FAMILY_TRACE = {
    ("regge", 2): ("tt", (1,)),
    ("regge", 3): ("tt", (1, 2)),
    ("hhj", 2): ("nn", (1,)),
    ("ps", 3): ("nn", (2,)),
    ("hz", 2): ("n", (1,)),
    ("hms", 3): ("n", (2,)),
    ("gls", 2): ("tn", (1,)),
    ("gls", 3): ("tn", (2,)),
}

TRACE_TOL = 1e-14


def filter_connectivity(family, dim, owner, tensor):
    """First incident polytope (lowest dimension, then lex) with a nonzero trace, else the cell."""
    name, dims = FAMILY_TRACE[(family, dim)]
    ref = enumerate_polytopes(dim)
    for q in ref.incident(owner):
        if q.kind == "cell" or q.dim not in dims:
            continue
        tr = reference_trace(name, tensor, q, dim)
        if np.max(np.abs(tr)) > TRACE_TOL * max(1.0, np.max(np.abs(tensor))):
            return q
    return ref.cell


def _symmetric_dyads(vectors):
    n = len(vectors)
    out = [np.outer(v, v) for v in vectors]
    for a in range(n):
        for b in range(a + 1, n):
            out.append(sym(vectors[a], vectors[b]))
    return out


def _gls_tensors(tan, nor):
    off, parallel = [], []
    for a in tan:
        for b in nor:
            if abs(a @ b) < 1e-14:
                off.append(np.outer(a, b))
            else:
                parallel.append(np.outer(a, b))
    combos = [balanced_difference(parallel[0], q) for q in parallel[1:]]
    return off + combos


def _cartesian_sym(dim):
    e = np.eye(dim)
    if dim == 2:
        return [np.outer(e[0], e[0]), sym(e[0], e[1]), np.outer(e[1], e[1])]
    return [np.outer(e[0], e[0]), sym(e[0], e[1]), sym(e[0], e[2]),
            np.outer(e[1], e[1]), sym(e[1], e[2]), np.outer(e[2], e[2])]


def hz_edge_tensors(poly):
    """Edge set (tau tau, sym(tau nu), nu nu) of the 2D stress element."""
    fr = reference_frame(poly, 2)
    t, n = fr.tangent, fr.normal
    return [np.outer(t, t), sym(t, n), np.outer(n, n)]


def hms_edge_frame(tangent):
    d2 = orth(tangent)
    d1 = np.cross(d2, tangent)
    return d1, d2


def hms_edge_tensors(poly):
    fr = reference_frame(poly, 3)
    t = fr.tangent
    d1, d2 = hms_edge_frame(t)
    psi = vector_templates(3, "normal")[poly].vectors
    return [np.outer(d1, d1), sym(d1, d2), np.outer(d2, d2),
            sym(t, psi[0]), sym(t, psi[1]), np.outer(t, t)]


def hms_face_tensors(poly):
    fr = reference_frame(poly, 3)
    n, t1, t2 = fr.normal, fr.tangent1, fr.tangent2
    return [np.outer(n, n), sym(n, t1), sym(n, t2),
            np.outer(t1, t1), sym(t1, t2), np.outer(t2, t2)]


def _build_set(family, dim, poly):
    ref = enumerate_polytopes(dim)
    c = ref.cell
    if family in ("regge", "hhj", "ps"):
        kind = "tangential" if family == "regge" else "normal"
        vecs = vector_templates(dim, kind)[poly].vectors
        tensors = _symmetric_dyads(vecs)
        conn = [filter_connectivity(family, dim, poly, T) for T in tensors]
        return tensors, conn, ["piola"] * len(tensors)
    if family == "gls":
        tan = vector_templates(dim, "tangential")[poly].vectors
        nor = vector_templates(dim, "normal")[poly].vectors
        tensors = _gls_tensors(tan, nor)
        conn = [filter_connectivity(family, dim, poly, T) for T in tensors]
        return tensors, conn, ["piola"] * len(tensors)
    if family == "hz":
        if poly.kind == "edge":
            tensors = hz_edge_tensors(poly)
            conn = [c, poly, poly]
            return tensors, conn, ["edge"] * 3
        tensors = _cartesian_sym(2)
        owner_conn = poly if poly.kind == "vertex" else c
        return tensors, [owner_conn] * 3, ["identity"] * 3
    if family == "hms":
        if poly.kind == "edge":
            tensors = hms_edge_tensors(poly)
            faces = association(poly, "normal", 3)
            conn = [poly, poly, poly, faces[0], faces[1], c]
            for T, q in zip(tensors[3:5], faces[:2]):
                assert filter_connectivity("hms", 3, poly, T) == q
            return tensors, conn, ["edge"] * 3 + ["contra"] * 2 + ["edge"]
        if poly.kind == "face":
            tensors = hms_face_tensors(poly)
            return tensors, [poly] * 3 + [c] * 3, ["face"] * 6
        tensors = _cartesian_sym(3)
        owner_conn = poly if poly.kind == "vertex" else c
        return tensors, [owner_conn] * 6, ["identity"] * 6
    raise ValueError(f"unknown family {family!r}")


_TENSOR_CACHE = {}


def check_family(family, dim):
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if dim not in FAMILY_DIMS[family]:
        raise ValueError(f"family {family!r} is not defined in {dim}D")


def tensor_templates(family, dim):
    """Tensor template sets with per-tensor connectivity for every reference polytope."""
    check_family(family, dim)
    key = (family, dim)
    if key not in _TENSOR_CACHE:
        out = {}
        for poly in enumerate_polytopes(dim).all_polytopes():
            tensors, conn, tr = _build_set(family, dim, poly)
            out[poly] = TensorTemplateSet(poly, tuple(tensors), tuple(conn), family, tuple(tr))
        _TENSOR_CACHE[key] = out
    return _TENSOR_CACHE[key]


def set_size(family, dim):
    return dim * (dim + 1) // 2 if family != "gls" else dim * dim - 1


__all__ = ["FAMILIES", "VectorTemplateSet", "TensorTemplateSet", "vector_templates",
           "tensor_templates", "orth", "sym", "dev", "balanced_difference", "cell"]
