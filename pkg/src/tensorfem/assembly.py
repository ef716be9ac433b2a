"""Quadrature, element assembly, static condensation, constraints and sparse solves."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 40


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    degree: int
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _rule(dim, degree):
    n = degree // 2 + 1
    a, wa = roots_legendre(n)
    if dim == 1:
        return (0.5 * (a + 1.0))[:, None], 0.5 * wa
    b, wb = roots_jacobi(n, 1.0, 0.0)
    if dim == 2:
        A, B = np.meshgrid(a, b, indexing="ij")
        WA, WB = np.meshgrid(wa, wb, indexing="ij")
        x = 0.25 * (1 + A) * (1 - B)
        y = 0.5 * (1 + B)
        return np.column_stack([x.ravel(), y.ravel()]), (WA * WB).ravel() / 8.0
    c, wc = roots_jacobi(n, 2.0, 0.0)
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    WA, WB, WC = np.meshgrid(wa, wb, wc, indexing="ij")
    x = 0.125 * (1 + A) * (1 - B) * (1 - C)
    y = 0.25 * (1 + B) * (1 - C)
    z = 0.5 * (1 + C)
    return np.column_stack([x.ravel(), y.ravel(), z.ravel()]), (WA * WB * WC).ravel() / 64.0


def quadrature_rule(dim, degree):
    """Collapsed Gauss-Jacobi rule exact for polynomials of total degree ``degree``.

    ``dim == 1`` gives Gauss-Legendre on [0, 1].
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"quadrature dimension must be 1, 2 or 3, got {dim}")
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (max {MAX_DEGREE})")
    pts, w = _rule(dim, int(degree))
    return QuadratureRule(dim, int(degree), pts.copy(), w.copy())


def quadrature_degree(p, curved=False):
    return 2 * p + (4 if curved else 2)


@dataclass(frozen=True)
class MaterialTensors:
    E: float
    nu: float
    thickness: float
    shear_factor: float = 5.0 / 6.0

    @property
    def mu(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def ks_mu(self):
        return self.shear_factor * self.mu

    def D(self, eps):
        """Plane-stress bending law acting on (..., 2, 2)."""
        tr = np.trace(eps, axis1=-2, axis2=-1)[..., None, None]
        return self.E / (1.0 - self.nu ** 2) * (self.nu * tr * np.eye(2) + (1.0 - self.nu) * eps)

    def A(self, M):
        """Compliance 12 D^{-1}."""
        tr = np.trace(M, axis1=-2, axis2=-1)[..., None, None]
        return 12.0 / self.E * ((1.0 + self.nu) * M - self.nu * tr * np.eye(2))


@dataclass
class CondensedBlock:
    interior: np.ndarray   # local indices
    connected: np.ndarray
    solve_rhs: np.ndarray  # K_ii^{-1} f_i
    solve_cols: np.ndarray  # K_ii^{-1} K_ic


def static_condense(K, f, mask):
    """Eliminate the dofs selected by ``mask``; returns (S, g, recovery data)."""
    mask = np.asarray(mask, dtype=bool)
    ci = np.flatnonzero(mask)
    cc = np.flatnonzero(~mask)
    if ci.size == 0:
        return K, f, CondensedBlock(ci, cc, np.zeros(0), np.zeros((0, cc.size)))
    Kii = K[np.ix_(ci, ci)]
    scale = np.abs(Kii).max()
    if scale == 0.0:
        raise np.linalg.LinAlgError("singular interior block")
    s = np.linalg.svd(Kii, compute_uv=False)
    if s[-1] <= 1e-13 * s[0]:
        raise np.linalg.LinAlgError("singular interior block")
    lu = sla.lu_factor(Kii)
    X = sla.lu_solve(lu, K[np.ix_(ci, cc)])
    y = sla.lu_solve(lu, f[ci])
    S = K[np.ix_(cc, cc)] - K[np.ix_(cc, ci)] @ X
    g = f[cc] - K[np.ix_(cc, ci)] @ y
    return S, g, CondensedBlock(ci, cc, y, X)


def recover(block, x_connected):
    """Interior values from connected values: x_i = K_ii^{-1}(f_i - K_ic x_c)."""
    return block.solve_rhs - block.solve_cols @ x_connected


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray             # reduced indices kept in the solve
    constrained: np.ndarray      # reduced indices eliminated by essential conditions
    constrained_values: np.ndarray
    reduced_to_global: np.ndarray
    blocks: list = field(default_factory=list)
    element_dofs: list = field(default_factory=list)
    n_global: int = 0

    def full_matrix(self):
        return self.matrix


def solve_linear(system, rtol=1e-8):
    """Solve a plain (matrix, rhs) pair or a SparseSystem; returns the solution vector."""
    if isinstance(system, SparseSystem):
        A, b = system.matrix, system.rhs
    else:
        A, b = system
    A = sp.csc_matrix(A)
    if A.shape[0] == 0:
        return np.zeros(0)
    # symmetric equilibration by row maxima keeps saddle-point blocks of very
    # different magnitude (thin plates) accurate under partial pivoting
    rmax = abs(A).max(axis=1).toarray().ravel()
    if np.any(rmax == 0.0):
        raise np.linalg.LinAlgError("singular matrix: empty row")
    s = 1.0 / np.sqrt(rmax)
    S = sp.diags(s)
    As = sp.csc_matrix(S @ A @ S)
    try:
        lu = spla.splu(As)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(str(exc)) from exc
    x = s * lu.solve(s * b)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("solver breakdown: singular matrix")
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b)
    if res > rtol * nb:
        # iterative refinement with residuals in extended precision
        Al = A.astype(np.longdouble)
        bl = np.asarray(b, dtype=np.longdouble)
        xl = x.astype(np.longdouble)
        for _ in range(10):
            r = bl - Al @ xl
            res = float(np.sqrt(np.sum(r * r)))
            if res <= rtol * nb:
                break
            xl = xl + s * lu.solve(s * r.astype(float))
        x = xl.astype(float)
        res = float(np.linalg.norm(A @ x - b))
    if res > rtol * nb:
        raise np.linalg.LinAlgError(f"residual {res:.3e} exceeds {rtol:g} * |b| = {rtol * nb:.3e}")
    return x


class Assembler:
    """Element-loop assembly over a list of fields sharing one mesh.

    ``fields`` is a list of (space, dofmap) pairs.  The element kernel returns
    the full local matrix and right-hand side over the concatenated local dofs
    of all fields, in field order.
    """

    def __init__(self, mesh, fields, condense_fields=None):
        self.mesh = mesh
        self.fields = fields
        self.offsets = np.cumsum([0] + [dm.n_dofs for _, dm in fields])
        self.n_global = int(self.offsets[-1])
        self.local_sizes = [len(space) for space, _ in fields]
        cond = condense_fields if condense_fields is not None else [False] * len(fields)
        masks = []
        for (space, dm), c in zip(fields, cond):
            masks.append(dm.local_cell_mask if c else np.zeros(len(space), dtype=bool))
        self.interior_mask = np.concatenate(masks)

    def element_dofs(self, e):
        return np.concatenate([dm.element_dofs[e] + off
                               for (_, dm), off in zip(self.fields, self.offsets[:-1])])

    def assemble(self, kernel, constraints=None):
        """Assemble, condense and apply essential constraints {global dof: value}."""
        mesh = self.mesh
        interior_global = set()
        blocks, elem_dofs = [], []
        rows, cols, vals = [], [], []
        rhs = np.zeros(self.n_global)
        for e in range(mesh.n_elements):
            K, f = kernel(e)
            dofs = self.element_dofs(e)
            S, g, blk = static_condense(K, f, self.interior_mask)
            cdofs = dofs[blk.connected]
            interior_global.update(dofs[blk.interior].tolist())
            blocks.append(blk)
            elem_dofs.append(dofs)
            r, c = np.meshgrid(cdofs, cdofs, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(S.ravel())
            np.add.at(rhs, cdofs, g)
        keep = np.ones(self.n_global, dtype=bool)
        keep[list(interior_global)] = False
        reduced_to_global = np.flatnonzero(keep)
        g2r = -np.ones(self.n_global, dtype=np.int64)
        g2r[reduced_to_global] = np.arange(len(reduced_to_global))
        rows = g2r[np.concatenate(rows)]
        cols = g2r[np.concatenate(cols)]
        n = len(reduced_to_global)
        A = sp.coo_matrix((np.concatenate(vals), (rows, cols)), shape=(n, n)).tocsr()
        b = rhs[reduced_to_global]
        constraints = constraints or {}
        con_g = np.array(sorted(constraints), dtype=np.int64)
        con = g2r[con_g] if con_g.size else np.zeros(0, dtype=np.int64)
        if np.any(con < 0):
            raise ValueError("constraints on condensed dofs are not supported")
        con_vals = np.array([constraints[int(k)] for k in con_g], dtype=float)
        free_mask = np.ones(n, dtype=bool)
        free_mask[con] = False
        free = np.flatnonzero(free_mask)
        b_free = b[free] - (A[free][:, con] @ con_vals if con.size else 0.0)
        system = SparseSystem(A[free][:, free].tocsr(), b_free, free, con, con_vals,
                              reduced_to_global, blocks, elem_dofs, self.n_global)
        self._full_reduced = A
        return system

    def solve(self, system):
        x_free = solve_linear(system)
        n = len(system.reduced_to_global)
        x_red = np.zeros(n)
        x_red[system.free] = x_free
        x_red[system.constrained] = system.constrained_values
        x = np.zeros(self.n_global)
        x[system.reduced_to_global] = x_red
        for blk, dofs in zip(system.blocks, system.element_dofs):
            if blk.interior.size:
                x[dofs[blk.interior]] = recover(blk, x[dofs[blk.connected]])
        return x

    def split(self, x):
        return [x[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]


def assemble(kernel, mesh, fields, constraints=None, condense_fields=None):
    asm = Assembler(mesh, fields, condense_fields)
    return asm, asm.assemble(kernel, constraints)
