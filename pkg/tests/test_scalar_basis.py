import numpy as np
import pytest

from tensorfem.assembly import quadrature_rule
from tensorfem.refsimplex import REFERENCE_VERTICES, cell, edge, enumerate_polytopes, face, vertex
from tensorfem.scalar_basis import (ScalarFunctionId, build_scalar_basis, eval_scalar, group_size,
                                    polytope_counts)


def simplex_points(dim, n, seed):
    return np.random.default_rng(seed).dirichlet(np.ones(dim + 1), n)[:, 1:]


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", range(1, 6))
def test_counts_match_formulas(dim, p):
    counts = polytope_counts(build_scalar_basis(dim, p))
    expected = {0: 1, 1: p - 1, 2: (p - 2) * (p - 1) // 2, 3: (p - 3) * (p - 2) * (p - 1) // 6}
    for poly, n in counts.items():
        assert n == max(expected[poly.dim], 0)
        assert group_size(poly.dim, p, dim) == n
    total = (p + 2) * (p + 1) // 2 if dim == 2 else (p + 3) * (p + 2) * (p + 1) // 6
    assert sum(counts.values()) == total


def test_count_examples():
    b = build_scalar_basis(2, 3)
    c = polytope_counts(b)
    assert [c[vertex(i)] for i in range(3)] == [1, 1, 1]
    assert [c[e] for e in enumerate_polytopes(2).edges] == [2, 2, 2]
    assert c[cell(2)] == 1 and len(b) == 10
    assert polytope_counts(build_scalar_basis(3, 4))[cell(3)] == 1
    assert polytope_counts(build_scalar_basis(3, 3))[face(0, 1, 2)] == 1
    assert polytope_counts(build_scalar_basis(2, 2))[cell(2)] == 0
    assert len(build_scalar_basis(3, 1)) == 4


@pytest.mark.parametrize("dim", [2, 3])
def test_linear_basis_is_barycentric(dim):
    b = build_scalar_basis(dim, 1)
    pts = simplex_points(dim, 10, 0)
    vals, grads = b.tabulate(pts)
    lam = np.column_stack([1 - pts.sum(axis=1), pts[:, ::-1]]) if dim == 2 else None
    if dim == 2:
        assert np.allclose(vals, lam.T, atol=1e-15)
    assert np.allclose(vals.sum(axis=0), 1.0)
    assert np.allclose(grads.sum(axis=0), 0.0)


def test_eval_scalar_examples():
    b = build_scalar_basis(2, 3)
    v0 = ScalarFunctionId(vertex(0), 0)
    assert eval_scalar(b, v0, [0, 0])[0] == pytest.approx(1.0)
    assert eval_scalar(b, v0, [0, 1])[0] == pytest.approx(0.0, abs=1e-15)
    for fid in b.groups[edge(0, 1)]:
        for pt in ([0, 0], [0, 1]):
            assert abs(eval_scalar(b, fid, pt)[0]) < 1e-14
    with pytest.raises(KeyError):
        b.index(ScalarFunctionId(face(0, 1, 2), 0))


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [1, 3, 5])
def test_partition_of_unity(dim, p):
    b = build_scalar_basis(dim, p)
    vals, _ = b.tabulate(simplex_points(dim, 20, p))
    rows = [b.index(f) for v in range(dim + 1) for f in b.groups[vertex(v)]]
    assert np.abs(vals[rows].sum(axis=0) - 1.0).max() < 1e-13


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [2, 4])
def test_gradients_match_finite_differences(dim, p):
    b = build_scalar_basis(dim, p)
    pts = simplex_points(dim, 10, 7) * 0.9 + 0.1 / (dim + 1)
    _, grads = b.tabulate(pts)
    h = 1e-6
    for k in range(dim):
        step = np.zeros(dim)
        step[k] = h
        fd = (b.tabulate(pts + step)[0] - b.tabulate(pts - step)[0]) / (2 * h)
        scale = np.maximum(np.abs(grads[:, :, k]), 1.0)
        assert np.abs(fd - grads[:, :, k]).max() / scale.max() < 1e-6


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [2, 3, 5])
def test_trace_vanishing_on_non_associated_polytopes(dim, p):
    b = build_scalar_basis(dim, p)
    rng = np.random.default_rng(11)
    worst = 0.0
    for owner, fids in b.groups.items():
        if not fids:
            continue
        rows = [b.index(f) for f in fids]
        for poly in enumerate_polytopes(dim).all_polytopes():
            if poly.kind == "cell" or set(owner.indices) <= set(poly.indices):
                continue
            bary = rng.dirichlet(np.ones(len(poly.indices)), 10)
            vals, _ = b.tabulate(bary @ REFERENCE_VERTICES[dim][list(poly.indices)])
            worst = max(worst, np.abs(vals[rows]).max())
    assert worst < 1e-13


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", range(1, 6))
def test_span_equals_polynomials(dim, p):
    b = build_scalar_basis(dim, p)
    rule = quadrature_rule(dim, 2 * p)
    vals, _ = b.tabulate(rule.points)
    exps = [e for e in np.ndindex(*(p + 1,) * dim) if sum(e) <= p]
    mono = np.array([np.prod(rule.points ** np.array(e), axis=1) for e in exps])
    gram = (vals * rule.weights) @ mono.T
    assert len(b) == len(exps)
    assert np.linalg.matrix_rank(gram) == len(exps)


def test_invalid_order():
    with pytest.raises(ValueError):
        build_scalar_basis(2, 0)
