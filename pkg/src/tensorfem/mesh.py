"""Simplicial meshes with ascending-vertex elements, DOF maps and generators."""

import io
import os
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .geometry_map import GeometricMap
from .refsimplex import KINDS, PolytopeId

LOCAL_EDGES = {2: list(combinations(range(3), 2)), 3: list(combinations(range(4), 2))}
LOCAL_FACES = {3: list(combinations(range(4), 3))}


class Mesh:
    """Triangle or tetrahedron mesh; every element tuple is stored in ascending order."""

    def __init__(self, vertices, elements, regions=None, curved=None, dim=None, tol=1e-12):
        X = np.asarray(vertices, dtype=float)
        self.dim = X.shape[1] if dim is None else int(dim)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError("vertex array must have shape (n, dim)")
        scale = max(1.0, float(np.abs(X).max())) if X.size else 1.0
        pairs = cKDTree(X).query_pairs(tol * scale)
        if pairs:
            raise ValueError(f"duplicate vertices: {sorted(pairs)[:5]}")
        self.vertices = X
        E = np.sort(np.asarray(elements, dtype=int), axis=1)
        if E.shape[1] != self.dim + 1:
            raise ValueError(f"elements need {self.dim + 1} vertices")
        if np.any(E[:, 1:] == E[:, :-1]):
            raise ValueError("element with repeated vertices")
        if E.min() < 0 or E.max() >= len(X):
            raise ValueError("element references a missing vertex")
        self.elements = E
        self.regions = (np.zeros(len(E), dtype=int) if regions is None
                        else np.asarray(regions, dtype=int))
        if len(self.regions) != len(E):
            raise ValueError("one region tag per element required")
        self._derive()
        self.curved = {}
        for key, pt in (curved or {}).items():
            a, b = sorted(int(v) for v in key)
            if (a, b) not in self.edge_index:
                raise ValueError(f"curved edge {(a, b)} is not a mesh edge")
            self.curved[(a, b)] = np.asarray(pt, dtype=float)

    def _derive(self):
        d = self.dim
        self.edge_index = {}
        for el in self.elements:
            for i, j in LOCAL_EDGES[d]:
                self.edge_index.setdefault((el[i], el[j]), len(self.edge_index))
        self.edges = np.array(sorted(self.edge_index, key=self.edge_index.get), dtype=int).reshape(-1, 2)
        self.element_edges = np.array([[self.edge_index[(el[i], el[j])] for i, j in LOCAL_EDGES[d]]
                                       for el in self.elements], dtype=int)
        self.face_index = {}
        if d == 3:
            for el in self.elements:
                for i, j, k in LOCAL_FACES[3]:
                    self.face_index.setdefault((el[i], el[j], el[k]), len(self.face_index))
            self.faces = np.array(sorted(self.face_index, key=self.face_index.get), dtype=int)
            self.element_faces = np.array([[self.face_index[(el[i], el[j], el[k])]
                                            for i, j, k in LOCAL_FACES[3]] for el in self.elements])
        else:
            self.faces = np.zeros((0, 3), dtype=int)
            self.element_faces = np.zeros((len(self.elements), 0), dtype=int)
        facet_elems = self.element_edges if d == 2 else self.element_faces
        n_facets = len(self.edges) if d == 2 else len(self.faces)
        count = np.bincount(facet_elems.ravel(), minlength=n_facets)
        if np.any(count > 2):
            raise ValueError("non-manifold interface (facet with more than two elements)")
        self.facet_elements = [[] for _ in range(n_facets)]
        for e, fs in enumerate(facet_elems):
            for f in fs:
                self.facet_elements[f].append(e)
        boundary_facets = np.flatnonzero(count == 1)
        self.boundary = {k: set() for k in KINDS}
        facets = self.edges if d == 2 else self.faces
        for f in boundary_facets:
            verts = facets[f]
            for v in verts:
                self.boundary["vertex"].add(int(v))
            for a, b in combinations(verts, 2):
                self.boundary["edge"].add(self.edge_index[(a, b)])
            if d == 3:
                self.boundary["face"].add(int(f))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_elements(self):
        return len(self.elements)

    def counts(self):
        if self.dim == 2:
            return self.n_vertices, self.n_edges, self.n_elements
        return self.n_vertices, self.n_edges, self.n_faces, self.n_elements

    def boundary_edges(self):
        return sorted(self.boundary["edge"])

    def global_polytope(self, e, local):
        """Global (kind, id) of a local polytope of element ``e``."""
        el = self.elements[e]
        verts = tuple(int(el[i]) for i in local.indices)
        if local.kind == "vertex":
            return "vertex", verts[0]
        if local.kind == "edge":
            return "edge", self.edge_index[verts]
        if local.kind == "face":
            return "face", self.face_index[verts]
        return "cell", e

    def is_boundary(self, kind, gid):
        return gid in self.boundary.get(kind, ())

    def element_map(self, e):
        el = self.elements[e]
        X = self.vertices[el]
        pts = {}
        for i, j in LOCAL_EDGES[self.dim]:
            key = (int(el[i]), int(el[j]))
            if key in self.curved:
                pts[(i, j)] = self.curved[key]
        return GeometricMap(X, 2 if pts else 1, pts or None)

    def is_curved(self, e):
        el = self.elements[e]
        return any((int(el[i]), int(el[j])) in self.curved for i, j in LOCAL_EDGES[self.dim])

    def diameters(self):
        X = self.vertices[self.elements]
        return np.array([max(np.linalg.norm(x[i] - x[j]) for i, j in LOCAL_EDGES[self.dim]) for x in X])


# file format


def dumps_mesh(mesh):
    out = io.StringIO()
    out.write(f"dim {mesh.dim}\n")
    out.write("vertices\n")
    for x in mesh.vertices:
        out.write(" ".join(f"{c:.17g}" for c in x) + "\n")
    out.write("elements\n")
    for el in mesh.elements:
        out.write(" ".join(str(int(v)) for v in el) + "\n")
    if np.any(mesh.regions):
        out.write("regions\n")
        for r in mesh.regions:
            out.write(f"{int(r)}\n")
    if mesh.curved:
        out.write("curved\n")
        for (a, b), pt in sorted(mesh.curved.items()):
            out.write(f"{a} {b} " + " ".join(f"{c:.17g}" for c in pt) + "\n")
    return out.getvalue()


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(dumps_mesh(mesh))


SECTIONS = ("vertices", "elements", "regions", "curved")


def loads_mesh(text):
    dim = None
    data = {s: [] for s in SECTIONS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()
        if head[0] == "dim":
            if len(head) != 2:
                raise ValueError(f"line {lineno}: expected 'dim d'")
            dim = int(head[1])
            section = None
            continue
        if len(head) == 1 and head[0].isalpha():
            if head[0] not in SECTIONS:
                raise ValueError(f"line {lineno}: unknown section {head[0]!r}")
            section = head[0]
            continue
        if section is None:
            raise ValueError(f"line {lineno}: data outside of a section")
        data[section].append(head)
    if dim not in (2, 3):
        raise ValueError("mesh file must declare 'dim 2' or 'dim 3'")
    verts = np.array([[float(c) for c in row] for row in data["vertices"]]).reshape(-1, dim)
    elems = np.array([[int(c) for c in row] for row in data["elements"]], dtype=int)
    if elems.size == 0:
        raise ValueError("mesh file has no elements")
    regions = [int(r[0]) for r in data["regions"]] or None
    curved = {}
    for row in data["curved"]:
        curved[(int(row[0]), int(row[1]))] = [float(c) for c in row[2:]]
    return Mesh(verts, elems, regions, curved, dim=dim)


def load_mesh(source):
    """Read a mesh from a path, an open file, or the text itself."""
    if hasattr(source, "read"):
        return loads_mesh(source.read())
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            return loads_mesh(fh.read())
    if isinstance(source, str) and "\n" in source:
        return loads_mesh(source)
    raise FileNotFoundError(f"mesh source {source!r} not found")


# DOF maps


@dataclass
class DofMap:
    element_dofs: np.ndarray            # (n_elements, n_local)
    n_dofs: int
    class_counts: dict                  # connectivity kind -> number of global dofs
    connectivity_kinds: list            # per local function
    local_cell_mask: np.ndarray = field(default=None)

    @property
    def connected_dofs(self):
        return self.n_dofs - self.class_counts.get("cell", 0)


def _per_polytope_counts(space):
    conn = space.connectivities()
    by_poly = Counter(conn)
    per_kind = {}
    for poly, n in by_poly.items():
        if per_kind.setdefault(poly.kind, n) != n:
            raise ValueError(f"non-uniform dof count on {poly.kind}s")
    return conn, per_kind


def build_dofmap(mesh, space):
    if space.dim != mesh.dim:
        raise ValueError("space and mesh dimension differ")
    conn, per_kind = _per_polytope_counts(space)
    n_of = {"vertex": mesh.n_vertices, "edge": mesh.n_edges, "face": mesh.n_faces,
            "cell": mesh.n_elements}
    offsets, total = {}, 0
    for kind in KINDS:
        offsets[kind] = total
        total += per_kind.get(kind, 0) * n_of[kind]
    # rank of each local function among those sharing its connectivity polytope
    seen = Counter()
    rank = []
    for poly in conn:
        rank.append(seen[poly])
        seen[poly] += 1
    rank = np.array(rank)
    cache = {}
    dofs = np.empty((mesh.n_elements, len(conn)), dtype=np.int64)
    for e in range(mesh.n_elements):
        for a, poly in enumerate(conn):
            kind, gid = mesh.global_polytope(e, poly)
            dofs[e, a] = offsets[kind] + gid * per_kind[kind] + rank[a]
    counts = {k: per_kind.get(k, 0) * n_of[k] for k in KINDS}
    kinds = [p.kind for p in conn]
    return DofMap(dofs, total, counts, kinds, np.array([k == "cell" for k in kinds]))


def boundary_dofs(mesh, space, dofmap=None, selector="all"):
    """Global dofs attached to boundary polytopes.

    ``deflection`` expects a continuous scalar space, ``moment_trace`` a tensor
    family; for both, the constrained set is every dof whose connectivity
    polytope lies on the boundary (for HZ this includes all three vertex
    components, for HHJ only the boundary edge dofs).
    """
    if selector not in ("deflection", "moment_trace", "all"):
        raise ValueError(f"unknown boundary selector {selector!r}")
    if not mesh.boundary["vertex"]:
        raise ValueError("mesh has no boundary")
    if selector == "deflection" and getattr(space, "kind", None) != "CG":
        raise ValueError("deflection constraints need a continuous scalar space")
    if selector == "moment_trace" and not hasattr(space, "family"):
        raise ValueError("moment_trace constraints need a tensor element space")
    if dofmap is None:
        dofmap = build_dofmap(mesh, space)
    conn = space.connectivities()
    out = set()
    for e in range(mesh.n_elements):
        for a, poly in enumerate(conn):
            if poly.kind == "cell":
                continue
            kind, gid = mesh.global_polytope(e, poly)
            if mesh.is_boundary(kind, gid):
                out.add(int(dofmap.element_dofs[e, a]))
    return out


# generators


def _delaunay_cells(points):
    tri = Delaunay(points)
    if len(tri.coplanar):
        raise RuntimeError("Delaunay dropped points")
    keep = []
    for s in tri.simplices:
        x = points[s]
        area = 0.5 * abs(np.linalg.det(x[1:] - x[0]))
        if area > 1e-12:
            keep.append(s)
    return np.array(keep)


def _merge(parts, tol=1e-9):
    """Merge (points, cells) blocks that share boundary points."""
    allpts = np.concatenate([p for p, _ in parts])
    tree = cKDTree(allpts)
    ids = -np.ones(len(allpts), dtype=int)
    uniq = []
    for i in range(len(allpts)):
        if ids[i] >= 0:
            continue
        for j in tree.query_ball_point(allpts[i], tol):
            if ids[j] < 0:
                ids[j] = len(uniq)
        uniq.append(allpts[i])
    cells, off = [], 0
    for p, c in parts:
        cells.append(ids[c + off])
        off += len(p)
    return np.array(uniq), cells


def _line(a, b, n):
    s = np.linspace(0.0, 1.0, n + 1)
    return np.asarray(a)[None] * (1 - s)[:, None] + np.asarray(b)[None] * s[:, None]


_STRIP_SPACING = {1: 0.75, 2: 0.45, 3: 0.23, 4: 0.093}


def strip_mesh(level=0, seed=0):
    """Unstructured mesh of [-5,5] x [-1,1] with a vertex line at x = 0.

    Region 0 is x < 0, region 1 is x > 0.  Level 0 has (V, E, T) = (31, 66, 36).
    """
    rng = np.random.default_rng(seed + 17 * level)
    parts = []
    for side in (-1.0, 1.0):
        x0, x1 = (-5.0, 0.0) if side < 0 else (0.0, 5.0)
        if level == 0:
            nx, ny = 5, 2
            xs = np.array([1.25, 2.5, 3.75]) * side
            inner = np.column_stack([xs, rng.uniform(-0.1, 0.1, 3)])
        else:
            h = _STRIP_SPACING.get(level, 0.1 / 2 ** (level - 4))
            nx, ny = int(round(5.0 / h)), int(round(2.0 / h))
            hx, hy = 5.0 / nx, 2.0 / ny
            rows = []
            for r in range(1, ny):
                y = -1.0 + r * hy
                shift = 0.5 * hx if r % 2 else 0.0
                xs = x0 + shift + hx * np.arange(nx + 1)
                xs = xs[(xs > x0 + 0.4 * hx) & (xs < x1 - 0.4 * hx)]
                rows.append(np.column_stack([xs, np.full(len(xs), y)]))
            inner = np.concatenate(rows)
            inner += rng.uniform(-0.15, 0.15, inner.shape) * np.array([hx, hy])
        bnd = np.concatenate([_line((x0, -1.0), (x1, -1.0), nx), _line((x1, -1.0), (x1, 1.0), ny)[1:],
                              _line((x1, 1.0), (x0, 1.0), nx)[1:], _line((x0, 1.0), (x0, -1.0), ny)[1:-1]])
        pts = np.concatenate([bnd, inner])
        parts.append((pts, _delaunay_cells(pts)))
    verts, cells = _merge(parts)
    elems = np.concatenate(cells)
    regions = np.concatenate([np.zeros(len(cells[0]), int), np.ones(len(cells[1]), int)])
    return Mesh(verts, elems, regions)


_LSHAPE_RINGS = {0: 2, 1: 5, 2: 10, 3: 20}


def lshape_mesh(level=0, seed=0, curved=True):
    """Three-quarter unit disk without the first quadrant; re-entrant corner at the origin.

    Boundary edges on the unit circle get quadratic control points on the arc.
    """
    rng = np.random.default_rng(seed + 31 * level)
    n_rings = _LSHAPE_RINGS.get(level, 2 * _LSHAPE_RINGS[3] * 2 ** (level - 4))
    parts = []
    for q in range(3):
        th0 = np.pi / 2 + q * np.pi / 2
        pts = [np.zeros(2)]
        for m in range(1, n_rings + 1):
            r = m / n_rings
            n_seg = max(1, int(round(r * (np.pi / 2) * n_rings)))
            th = th0 + np.linspace(0.0, np.pi / 2, n_seg + 1)
            ring = np.column_stack([r * np.cos(th), r * np.sin(th)])
            if m < n_rings and n_seg > 1:
                jitter = rng.uniform(-0.12, 0.12, (n_seg - 1, 2)) / n_rings
                ring[1:-1] += jitter
            pts.extend(ring)
        pts = np.array(pts)
        # exact axis coordinates so shared points merge
        pts[np.abs(pts) < 1e-14] = 0.0
        parts.append((pts, _delaunay_cells(pts)))
    verts, cells = _merge(parts)
    verts[np.abs(verts) < 1e-13] = 0.0
    mesh = Mesh(verts, np.concatenate(cells))
    if curved:
        radius = np.linalg.norm(verts, axis=1)
        ctrl = {}
        for eid in mesh.boundary_edges():
            a, b = mesh.edges[eid]
            if abs(radius[a] - 1.0) < 1e-12 and abs(radius[b] - 1.0) < 1e-12:
                mid = 0.5 * (verts[a] + verts[b])
                ctrl[(int(a), int(b))] = mid / np.linalg.norm(mid)
        mesh = Mesh(verts, mesh.elements, None, ctrl)
    return mesh


def single_element_mesh(dim):
    from .refsimplex import REFERENCE_VERTICES
    return Mesh(REFERENCE_VERTICES[dim], [list(range(dim + 1))])
