"""
Element dimensions and a look inside one basis
==============================================

Counts every tensor family for p = 1..4 and prints the quadratic HHJ basis
grouped by the polytope whose global dofs it shares.
"""

import numpy as np

from tensorfem import FAMILIES, FAMILY_DIMS, build_element, element_dim
from tensorfem.tensor_elements import itemized_counts

for fam in FAMILIES:
    for dim in FAMILY_DIMS[fam]:
        counts = [element_dim(fam, dim, p) for p in range(1, 5)]
        print(f"{fam:6s} {dim}D  {counts}")

# connectivity classes decide which dofs couple neighbouring elements
print(dict(itemized_counts("hz", 2, 3)))

space = build_element("hhj", 2, 2)
np.set_printoptions(precision=3, suppress=True)
for f in space.functions:
    print(f.owner, "->", f.connectivity, f.tensor.ravel())
