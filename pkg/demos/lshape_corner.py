"""
Curved L-shaped plate: the re-entrant corner
============================================

The stress formulation constrains the full moment at boundary vertices, so
it vanishes at the re-entrant corner; the normal-normal formulation only
fixes M_nn on edges and sees the corner singularity.
"""

import numpy as np

from tensorfem.plates import corner_moments, run_example

for form in ("ffsrm", "tdnns"):
    (rows, summary), sol = run_example(2, form, 3, 1)
    corner = np.linalg.norm(corner_moments(sol), axis=(1, 2))
    print(f"{form:6s} max|M|={summary['max_norm']:.4g} at ({summary['max_x']:.3f}, "
          f"{summary['max_y']:.3f})  corner |M| per element: {np.round(corner, 3)}")
