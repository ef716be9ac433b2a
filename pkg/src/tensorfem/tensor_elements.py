"""Tensor-valued element spaces as products of hierarchical scalars and templates."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .refsimplex import EdgeFrame, FaceFrame, PolytopeId
from .scalar_basis import ScalarFunctionId, build_scalar_basis
from .templates import FAMILY_TRACE, check_family, tensor_templates

MAPPING_RULES = {
    "regge": "double_covariant",
    "hhj": "double_contravariant",
    "ps": "double_contravariant",
    "gls": "mixed_cov_contra",
    "hz": "hz_rule",
    "hms": "hms_rule",
}


@dataclass(frozen=True)
class BasisFunction:
    scalar: ScalarFunctionId
    tensor: np.ndarray
    owner: PolytopeId
    connectivity: PolytopeId
    mapping_rule: str
    transform: str       # per-function push-forward variant (see geometry_map)
    template_index: int
    scalar_index: int    # position of the scalar function in the scalar basis


class ElementSpace:
    """Ordered basis of one family on the reference simplex."""

    def __init__(self, family, dim, p):
        check_family(family, dim)
        if p < 1:
            raise ValueError(f"element order must be >= 1, got {p}")
        self.family = family
        self.dim = dim
        self.order = p
        self.scalar_basis = build_scalar_basis(dim, p)
        rule = MAPPING_RULES[family]
        sets = tensor_templates(family, dim)
        functions = []
        for poly, fids in self.scalar_basis.groups.items():
            tset = sets[poly]
            for fid in fids:
                s_index = self.scalar_basis.index(fid)
                for k, (T, conn, tr) in enumerate(zip(tset.tensors, tset.connectivity,
                                                      tset.transforms)):
                    functions.append(BasisFunction(fid, T, poly, conn, rule, tr, k, s_index))
        self.functions = functions
        self.mapping_rule = rule
        self._tensors = np.array([f.tensor for f in functions])
        self._scalar_rows = np.array([f.scalar_index for f in functions], dtype=int)

    def __len__(self):
        return len(self.functions)

    @property
    def value_shape(self):
        return (self.dim, self.dim)

    def connectivity_counts(self):
        """Counts per (owner kind, connectivity kind) class, e.g. ('vertex', 'edge')."""
        return Counter((f.owner.kind, f.connectivity.kind) for f in self.functions)

    def connectivities(self):
        return [f.connectivity for f in self.functions]

    def tabulate(self, points):
        """Reference values (n_fun, n_pts, d, d) and reference divergences (n_fun, n_pts, d)."""
        sv, sg = self.scalar_basis.tabulate(points)
        v = sv[self._scalar_rows]
        g = sg[self._scalar_rows]
        values = v[:, :, None, None] * self._tensors[:, None, :, :]
        div = np.einsum("fij,fpj->fpi", self._tensors, g)
        return values, div

    def tabulate_full(self, points):
        """Scalar values and gradients with the constant tensors, for custom push-forwards."""
        sv, sg = self.scalar_basis.tabulate(points)
        return sv[self._scalar_rows], sg[self._scalar_rows], self._tensors


def build_element(family, dim, p):
    return ElementSpace(family, dim, p)


def element_dim(family, dim, p):
    check_family(family, dim)
    if dim == 2:
        return 3 * (p + 2) * (p + 1) // 2
    if family == "gls":
        return 8 * (p + 3) * (p + 2) * (p + 1) // 6
    return (p + 3) * (p + 2) * (p + 1)


def itemized_counts(family, dim, p):
    """Per-class counts as itemized in the family definitions, keyed like connectivity_counts."""
    q1 = p - 1
    q2 = (p - 2) * (p - 1) // 2
    q3 = (p - 3) * (p - 2) * (p - 1) // 6
    out = Counter()
    if dim == 2 and family in ("regge", "hhj"):
        out[("vertex", "edge")] = 3 * 2
        out[("edge", "edge")] = 3 * q1
        out[("vertex", "cell")] = 3 * 1
        out[("edge", "cell")] = 3 * 2 * q1
        out[("cell", "cell")] = 3 * q2
    elif dim == 2 and family == "gls":
        out[("vertex", "edge")] = 3 * 2
        out[("edge", "edge")] = 3 * q1
        out[("vertex", "cell")] = 3 * 1
        out[("edge", "cell")] = 3 * 2 * q1
        out[("cell", "cell")] = 3 * q2
    elif family == "hz":
        out[("vertex", "vertex")] = 3 * 3
        out[("edge", "edge")] = 3 * 2 * q1
        out[("edge", "cell")] = 3 * q1
        out[("cell", "cell")] = 3 * q2
    elif dim == 3 and family == "regge":
        out[("vertex", "edge")] = 6 * 2
        out[("vertex", "face")] = 4 * 3
        out[("edge", "edge")] = 6 * q1
        out[("edge", "face")] = 4 * 3 * 2 * q1
        out[("edge", "cell")] = 6 * 1 * q1
        out[("face", "face")] = 4 * 3 * q2
        out[("face", "cell")] = 4 * 3 * q2
        out[("cell", "cell")] = 6 * q3
    elif family == "ps":
        out[("vertex", "face")] = 4 * 3
        out[("vertex", "cell")] = 4 * 3
        out[("edge", "face")] = 4 * 3 * q1
        out[("edge", "cell")] = 6 * 4 * q1
        out[("face", "face")] = 4 * q2
        out[("face", "cell")] = 4 * 5 * q2
        out[("cell", "cell")] = 6 * q3
    elif family == "hms":
        out[("vertex", "vertex")] = 4 * 6
        out[("edge", "edge")] = 6 * 3 * q1
        out[("edge", "face")] = 6 * 2 * q1
        out[("edge", "cell")] = 6 * q1
        out[("face", "face")] = 4 * 3 * q2
        out[("face", "cell")] = 4 * 3 * q2
        out[("cell", "cell")] = 6 * q3
    elif dim == 3 and family == "gls":
        out[("vertex", "face")] = 4 * 6
        out[("vertex", "cell")] = 4 * 2
        out[("edge", "face")] = 6 * 4 * q1
        out[("edge", "cell")] = 6 * 4 * q1
        out[("face", "face")] = 4 * 2 * q2
        out[("face", "cell")] = 4 * 6 * q2
        out[("cell", "cell")] = 8 * q3
    return Counter({k: v for k, v in out.items() if v > 0})


def eval_element_basis(space, point):
    values, _ = space.tabulate(np.atleast_2d(point))
    return [values[i, 0] for i in range(len(space))]


TRACE_BY_FAMILY = {fam: name for (fam, _), (name, _) in FAMILY_TRACE.items()}


def trace(family, tensor_value, frame):
    """Family trace of a matrix on an edge (2D) or face (3D) frame."""
    name = TRACE_BY_FAMILY[family]
    P = np.asarray(tensor_value, dtype=float)
    if isinstance(frame, EdgeFrame) and frame.normal is not None:
        t, n = frame.tangent, frame.normal
        return {"tt": lambda: float(t @ P @ t), "nn": lambda: float(n @ P @ n),
                "tn": lambda: float(t @ P @ n), "n": lambda: P @ n}[name]()
    if isinstance(frame, FaceFrame):
        n = frame.normal
        ta, tb = frame.edge_tangents if frame.edge_tangents else (frame.tangent1, frame.tangent2)
        if name == "tt":
            return np.array([ta @ P @ ta, ta @ P @ tb, tb @ P @ tb])
        if name == "nn":
            return float(n @ P @ n)
        if name == "tn":
            return np.array([ta @ P @ n, tb @ P @ n])
        return P @ n
    if isinstance(frame, EdgeFrame) and name == "tt":
        t = frame.tangent
        return float(t @ P @ t)
    raise ValueError(f"trace of family {family!r} is not defined on {frame!r}")
