from collections import Counter

import numpy as np
import pytest

from tensorfem.assembly import quadrature_rule
from tensorfem.conformance import interface_jump, random_map
from tensorfem.geometry_map import make_map
from tensorfem.refsimplex import REFERENCE_VERTICES
from tensorfem.vector_elements import build_vector_element, map_vector_basis


def pts(dim, n=6, seed=0):
    return np.random.default_rng(seed).dirichlet(np.ones(dim + 1), n)[:, 1:]


def test_dimension_examples():
    rt = build_vector_element("RT", 2, 2)
    assert len(rt) == 15
    assert Counter(f.connectivity.kind for f in rt.functions) == {"edge": 9, "cell": 6}
    n2 = build_vector_element("N2", 2, 2)
    assert len(n2) == 12
    assert Counter(f.connectivity.kind for f in n2.functions) == {"edge": 9, "cell": 3}
    assert len(build_vector_element("DG_scalar", 2, 2)) == 6


@pytest.mark.parametrize("k", range(0, 4))
def test_rt_and_dg_dims(k):
    assert len(build_vector_element("RT", 2, k)) == (k + 1) * (k + 3)
    assert len(build_vector_element("DG_scalar", 2, k)) == (k + 1) * (k + 2) // 2
    assert len(build_vector_element("DG_vector", 2, k)) == (k + 1) * (k + 2)


@pytest.mark.parametrize("kind", ["N2", "BDM"])
@pytest.mark.parametrize("dim", [2, 3])
def test_full_polynomial_dims(kind, dim):
    for p in (1, 2, 3):
        n = (p + 1) * (p + 2) // 2 if dim == 2 else (p + 1) * (p + 2) * (p + 3) // 6
        assert len(build_vector_element(kind, dim, p)) == dim * n


@pytest.mark.parametrize("k", [0, 1, 2])
def test_rt_divergence_onto_dg(k):
    space = build_vector_element("RT", 2, k)
    rule = quadrature_rule(2, 2 * k + 2)
    _, div = space.tabulate_divergence(rule.points)
    dg, _ = build_vector_element("DG_scalar", 2, k).tabulate(rule.points)
    assert np.linalg.matrix_rank(div, tol=1e-10) == len(dg)
    coef, *_ = np.linalg.lstsq(dg.T, div.T, rcond=None)
    assert np.allclose(dg.T @ coef, div.T, atol=1e-11)


@pytest.mark.parametrize("kind", ["N2", "BDM", "RT", "CG"])
def test_vector_interface_conformity(kind):
    for dim in (2, 3):
        assert interface_jump(kind, 2, trials=10, seed=3, dim=dim).max_jump < 1e-10


def test_cg_gradient_mapping():
    gmap = random_map(2, np.random.default_rng(2))
    xi = pts(2)
    jd = gmap.jacobian(xi)
    space = build_vector_element("CG", 2, 2)
    v, g = map_vector_basis(space, jd, xi)
    h = 1e-6
    x = gmap(xi)
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        fwd = np.linalg.solve(jd.J[0], step)
        vp, _ = map_vector_basis(space, jd, xi + fwd)
        vm, _ = map_vector_basis(space, jd, xi - fwd)
        assert np.allclose((vp - vm) / (2 * h), g[:, :, k], atol=1e-6)
    assert x.shape == (len(xi), 2)


def test_covariant_and_contravariant_identity():
    jd = make_map(REFERENCE_VERTICES[2]).jacobian(pts(2))
    for kind in ("N2", "RT", "DG_vector"):
        space = build_vector_element(kind, 2, 1)
        ref, _ = space.tabulate(pts(2))
        phys, _ = map_vector_basis(space, jd, pts(2))
        assert np.allclose(ref, phys)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_vector_element("XYZ", 2, 1)
    with pytest.raises(ValueError):
        build_vector_element("N2", 2, 0)
    with pytest.raises(ValueError):
        build_vector_element("RT", 4, 1)
