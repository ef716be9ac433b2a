"""Shared numerical checks used by the unit and acceptance tests."""

import numpy as np

from tensorfem.assembly import MaterialTensors
from tensorfem.plates import PlateProblem, build_system, solve_plate

PATCH_MOMENT = np.array([[1.3, 0.4], [0.4, -0.7]])
PATCH_MATERIAL = (200.0, 0.3)
PATCH_THICKNESS = 0.05


def patch_problem(mesh, formulation, order, moment=PATCH_MOMENT):
    """Unloaded plate whose exact solution is the constant moment ``moment``."""
    E, nu = PATCH_MATERIAL
    curvature = MaterialTensors(E, nu, PATCH_THICKNESS).A(moment)

    def deflection(x):
        return 0.5 * np.einsum("qi,ij,qj->q", x, curvature, x)

    materials = {int(r): PATCH_MATERIAL for r in np.unique(mesh.regions)}
    return PlateProblem(mesh, order, formulation, materials, PATCH_THICKNESS, 0.0,
                        boundary_moment=moment, boundary_deflection=deflection)


def patch_error(mesh, formulation, order, moment=PATCH_MOMENT):
    """Max pointwise moment error relative to the largest entry of ``moment``."""
    sol = solve_plate(patch_problem(mesh, formulation, order, moment))
    _, M, _ = sol.samples()
    return float(np.abs(M - moment).max() / np.abs(moment).max())


def assembled_asymmetry(problem):
    """max|A - A^T| / max|A| of the reduced global matrix."""
    _, _, system = build_system(problem)
    A = system.matrix
    return float(abs(A - A.T).max() / abs(A).max())
