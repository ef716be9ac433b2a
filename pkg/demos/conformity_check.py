"""
Trace continuity across random element interfaces
=================================================

Each family keeps one trace continuous (tt, nn, n or tn).  Two random
elements share a facet; the trace of a random global field is evaluated from
both sides.  A deliberately perturbed template shows what a defect looks like.
"""

import numpy as np

from tensorfem import FAMILIES, FAMILY_DIMS, build_element
from tensorfem.conformance import break_template, interface_jump

for fam in FAMILIES:
    for dim in FAMILY_DIMS[fam]:
        rep = interface_jump(fam, 2, trials=20, dim=dim)
        print(f"{fam:6s} {dim}D  max jump {rep.max_jump:.1e}")

for fam in ("hz", "hms"):
    rep = interface_jump(fam, 2, trials=20, geometry="curved")
    print(f"{fam} on curved pairs  {rep.max_jump:.1e}")

broken = break_template(build_element("hhj", 2, 2), rng=np.random.default_rng(0))
print("perturbed hhj template", interface_jump("hhj", 2, trials=20, broken=broken).max_jump)
