"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reference_basis_oracle import group_residuals, hhj_quadratic, regge_linear_tet  # noqa: E402
from support import assembled_asymmetry, patch_error  # noqa: E402
from tensorfem.conformance import (constants_residual, divergence_scaling_error,  # noqa: E402
                                   gram_min_eig, interface_jump, mapped_trace_max,
                                   piola_identity_residual)
from tensorfem.mesh import lshape_mesh, strip_mesh  # noqa: E402
from tensorfem.plates import example_problem, run_example, solve_plate  # noqa: E402
from tensorfem.refsimplex import REFERENCE_VERTICES, enumerate_polytopes  # noqa: E402
from tensorfem.scalar_basis import build_scalar_basis  # noqa: E402
from tensorfem.templates import FAMILIES, FAMILY_DIMS  # noqa: E402
from tensorfem.tensor_elements import build_element  # noqa: E402

RESULTS = {}


def record(number, passed, detail):
    line = f"CRITERION {number} {'PASS' if passed else 'FAIL'}: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def closed_form_dim(family, dim, p):
    if dim == 2:
        return 3 * (p + 2) * (p + 1) // 2
    if family == "gls":
        return 8 * (p + 3) * (p + 2) * (p + 1) // 6
    return (p + 3) * (p + 2) * (p + 1)


def criterion_1():
    t0 = time.perf_counter()
    bad = [(f, d, p) for f in FAMILIES for d in FAMILY_DIMS[f] for p in range(1, 5)
           if len(build_element(f, d, p)) != closed_form_dim(f, d, p)]
    dt = time.perf_counter() - t0
    return record(1, not bad and dt < 1.0, f"dimension mismatches={bad} runtime={dt:.2f}s")


def _oracle_points(dim, n=40, seed=0):
    return np.random.default_rng(seed).dirichlet(np.ones(dim + 1), n)[:, 1:]


def criterion_2():
    t0 = time.perf_counter()
    worst, size_ok = 0.0, True
    for space, oracle in ((build_element("hhj", 2, 2), hhj_quadratic()),
                          (build_element("regge", 3, 1), regge_linear_tet())):
        for n_gen, n_oracle, res in group_residuals(space, oracle, _oracle_points(space.dim)).values():
            worst = max(worst, res)
            size_ok &= n_gen == n_oracle
    dt = time.perf_counter() - t0
    return record(2, worst < 1e-12 and size_ok and dt < 1.0,
                  f"max group projection residual={worst:.2e} group sizes match={size_ok} "
                  f"runtime={dt:.2f}s")


def criterion_3():
    t0 = time.perf_counter()
    worst = {}
    for fam in FAMILIES:
        for dim in FAMILY_DIMS[fam]:
            for p in (1, 2):
                rep = interface_jump(fam, p, trials=50, geometry="affine", seed=p, dim=dim)
                worst[fam] = max(worst.get(fam, 0.0), rep.max_jump)
    hz_curved = max(interface_jump("hz", p, 50, "curved", seed=p).max_jump for p in (1, 2))
    traceless = max(mapped_trace_max(d, p, trials=10, seed=p) for d in (2, 3) for p in (1, 2))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-10 and hz_curved < 1e-10 and traceless < 1e-12 and dt < 30
    jumps = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    return record(3, ok, f"affine jumps {jumps}; hz curved={hz_curved:.1e}; "
                          f"gls mapped trace={traceless:.1e}; runtime={dt:.1f}s")


def criterion_4():
    piola = piola_identity_residual(points=20, seed=0)
    div = max(divergence_scaling_error(k, 2, d, seed=s)
              for k in ("BDM", "RT") for d in (2, 3) for s in range(3))
    return record(4, piola < 1e-12 and div < 1e-6,
                  f"piola trace residual={piola:.1e} divergence fd error={div:.1e}")


EXPECTED_DOFS = {"prm": (597, None), "ffsrm": (1743, 555), "tdnns": (1027, 559)}


def criterion_5():
    mesh = strip_mesh(0)
    counts = (mesh.n_vertices, mesh.n_edges, mesh.n_elements)
    got, ok = {}, counts == (31, 66, 36)
    for form, (total, connected) in EXPECTED_DOFS.items():
        sol = solve_plate(example_problem(1, form, 3, 0))
        got[form] = sol.dof_stats()
        ok &= sol.total_dofs == total and (connected is None or sol.connected_dofs == connected)
    return record(5, ok, f"(V,E,T)={counts} prm={got['prm'][0]} "
                          f"ffsrm={got['ffsrm'][0]}/{got['ffsrm'][1]} "
                          f"tdnns={got['tdnns'][0]}/{got['tdnns'][1]}")


def criterion_6():
    target, tol = 62.2, 0.03
    out = []
    ok = True
    for form, level, min_elements in (("tdnns", 2, 182), ("prm", 3, 732)):
        t0 = time.perf_counter()
        (row,), _ = run_example(1, form, 3, level)
        dt = time.perf_counter() - t0
        rel = abs(row["myy_max"] - target) / target
        ok &= row["elements"] >= min_elements and rel <= tol and dt < 120
        out.append(f"{form} T={row['elements']} Myy_max={row['myy_max']:.3f} "
                   f"rel={rel:.3%} runtime={dt:.1f}s")
    return record(6, ok, "; ".join(out))


def criterion_7(level=1):
    t0 = time.perf_counter()
    (_, s_ff), sol_ff = run_example(2, "ffsrm", 3, level)
    (_, s_td), sol_td = run_example(2, "tdnns", 3, level)
    corner_ff, corner_td = s_ff["corner_norm"], s_td["corner_norm"]
    x_ff = np.array([s_ff["max_x"], s_ff["max_y"]])
    x_td = np.array([s_td["max_x"], s_td["max_y"]])
    mesh = sol_td.problem.mesh
    diam = mesh.diameters()
    e_ff, _ = sol_ff.locate(x_ff)
    e_td, _ = sol_td.locate(x_td)
    h = float(max(diam[e_ff], diam[e_td]))
    dist = float(np.linalg.norm(x_ff - x_td))
    dt = time.perf_counter() - t0
    corner_ok = corner_ff < 1e-12 and corner_td > 1e-6
    location_ok = dist > h
    return record(7, corner_ok and location_ok and dt < 120,
                  f"corner |M| ffsrm={corner_ff:.1e} tdnns={corner_td:.3g}; "
                  f"max|M| distance={dist:.3g} vs element diameter={h:.3g} "
                  f"(location check {'passed' if location_ok else 'failed'}); runtime={dt:.1f}s")


def criterion_8():
    t0 = time.perf_counter()
    consts = max(constants_residual(f, p, "affine", d, seed=p)
                 for f in FAMILIES for d in FAMILY_DIMS[f] for p in (1, 2, 3))
    consts_curved = max(constants_residual(f, p, "curved", seed=p) for f in ("hz", "hms")
                        for p in (1, 2, 3))
    gram = min(gram_min_eig(f, d, p) for f in FAMILIES for d in FAMILY_DIMS[f] for p in (1, 2, 3))
    pou, trace_vanish = 0.0, 0.0
    rng = np.random.default_rng(0)
    for dim in (2, 3):
        simplex = enumerate_polytopes(dim)
        for p in range(1, 6):
            basis = build_scalar_basis(dim, p)
            pts = rng.dirichlet(np.ones(dim + 1), 20)[:, 1:]
            vals, _ = basis.tabulate(pts)
            vert = [basis.index(f) for poly in simplex.all_polytopes() if poly.kind == "vertex"
                    for f in basis.groups[poly]]
            pou = max(pou, float(np.abs(vals[vert].sum(axis=0) - 1.0).max()))
            for owner, fids in basis.groups.items():
                if not fids:
                    continue
                rows = [basis.index(f) for f in fids]
                for poly in simplex.all_polytopes():
                    if set(owner.indices) <= set(poly.indices) or poly.kind == "cell":
                        continue
                    bary = rng.dirichlet(np.ones(len(poly.indices)), 10)
                    xyz = bary @ REFERENCE_VERTICES[dim][list(poly.indices)]
                    v, _ = basis.tabulate(xyz)
                    trace_vanish = max(trace_vanish, float(np.abs(v[rows]).max()))
    patch = max(patch_error(m, f, p) for m in (strip_mesh(0), lshape_mesh(0, curved=False))
                for f in ("ffsrm", "tdnns") for p in (2, 3))
    asym = max(assembled_asymmetry(example_problem(1, f, 2, 0)) for f in ("prm", "ffsrm", "tdnns"))
    dt = time.perf_counter() - t0
    ok = (consts < 1e-10 and consts_curved < 1e-10 and gram > 0 and pou < 1e-13
          and trace_vanish < 1e-13 and patch < 1e-9 and asym < 1e-12 and dt < 60)
    return record(8, ok, f"constants={consts:.1e} curved hz/hms={consts_curved:.1e} "
                          f"gram min eig={gram:.2e} partition of unity={pou:.1e} "
                          f"trace vanishing={trace_vanish:.1e} patch={patch:.1e} "
                          f"asymmetry={asym:.1e} runtime={dt:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(check):
    assert check(), RESULTS[CRITERIA.index(check) + 1]


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    sys.exit(0 if all(results) else 1)
