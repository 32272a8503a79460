import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from conftest import const_field, poly_field, x_field
from morleych.analytic import Analytic, X, Y
from morleych.element import morley_basis
from morleych.enrich import (HctField, broken_norm, build_hct_basis, enrich_to_hct,
                             interpolate_hct, interpolate_morley, sub_triangle_quadrature,
                             vertex_gradient_average)
from morleych.harness.convergence import enrichment_study, interpolation_study
from morleych.mesh import build_crisscross_mesh


def interior_points(mesh, rng, k=7):
    lam = rng.dirichlet(np.ones(3), size=(mesh.n_triangles, k))
    return np.einsum("tpi,tid->tpd", lam, mesh.vertices[mesh.triangles])


# interpolation --------------------------------------------------------------------

def test_interpolation_reproduces_quadratics(mesh4):
    q = Analytic(1 + 2 * X - Y + 3 * X ** 2 - X * Y + 0.5 * Y ** 2)
    iq = interpolate_morley(mesh4, q)
    b = morley_basis(mesh4)
    x, y = b.quad_points[..., 0], b.quad_points[..., 1]
    assert np.abs(b.values(iq) - q(x, y)).max() <= 1e-11
    direct = poly_field(mesh4, q.value, lambda x, y: q.grad(x, y)[0], lambda x, y: q.grad(x, y)[1])
    np.testing.assert_allclose(iq, direct, atol=1e-12)


def test_interpolation_of_one(mesh4):
    one = interpolate_morley(mesh4, Analytic(sp.Integer(1)))
    assert np.all(one[:mesh4.n_vertices] == 1.0)
    assert np.all(one[mesh4.n_vertices:] == 0.0)


def test_constrained_interpolation_zeroes_boundary_edges(mesh4):
    v = interpolate_morley(mesh4, Analytic(X ** 3 + Y), constrained=True)
    assert np.all(v[mesh4.n_vertices + np.flatnonzero(mesh4.boundary_edges)] == 0.0)


def test_interpolation_rates():
    orders = interpolation_study().orders
    for name, target in zip(("L2", "H1semi", "H2semi"), (3, 2, 1)):
        assert abs(orders[name] - target) <= 0.2


# HCT -------------------------------------------------------------------------------

def test_hct_reproduces_cubics(mesh2, rng):
    c = rng.normal(size=10)
    w = Analytic(c[0] + c[1] * X + c[2] * Y + c[3] * X ** 2 + c[4] * X * Y + c[5] * Y ** 2
                 + c[6] * X ** 3 + c[7] * X ** 2 * Y + c[8] * X * Y ** 2 + c[9] * Y ** 3)
    f = interpolate_hct(mesh2, w)
    pts = interior_points(mesh2, rng)
    tris = np.arange(mesh2.n_triangles)
    assert np.abs(f.evaluate(tris, pts) - w(pts[..., 0], pts[..., 1])).max() <= 1e-9
    g = f.evaluate(tris, pts, 1)
    gx, gy = w.grad(pts[..., 0], pts[..., 1])
    assert np.abs(g - np.stack([gx, gy], -1)).max() <= 1e-9


def test_hct_zero_dofs(mesh2):
    f = HctField.from_dofs(mesh2, np.zeros((mesh2.n_triangles, 12)))
    assert not np.any(f.coeffs)


def test_hct_local_map_shape(mesh2):
    assert build_hct_basis(mesh2, 0).shape == (3, 10, 12)


def test_hct_internal_c1(mesh2, rng):
    f = HctField.from_dofs(mesh2, rng.normal(size=(mesh2.n_triangles, 12)))
    corners = mesh2.vertices[mesh2.triangles]
    cen = corners.mean(axis=1)
    tau = np.array([0.5 - np.sqrt(0.15), 0.5, 0.5 + np.sqrt(0.15)])
    tris = np.arange(mesh2.n_triangles)
    for i in range(3):
        # sub-edge from vertex i to the centroid is shared by sub-triangles i+1 and i+2
        pts = corners[:, i, None, :] + tau[None, :, None] * (cen - corners[:, i])[:, None, :]
        s1 = np.full(pts.shape[:2], (i + 1) % 3)
        s2 = np.full(pts.shape[:2], (i + 2) % 3)
        for order in (0, 1):
            a = f.evaluate_sub(s1, tris, pts, order)
            b = f.evaluate_sub(s2, tris, pts, order)
            assert np.abs(a - b).max() <= 1e-9


def test_hct_global_c1_for_shared_data(mesh4):
    w = Analytic(sp.sin(X) * sp.exp(Y))
    f = interpolate_hct(mesh4, w)
    # evaluate traces from both sides of every interior edge
    inner = np.flatnonzero(~mesh4.boundary_edges)
    owners = [[] for _ in range(mesh4.n_edges)]
    for t in range(mesh4.n_triangles):
        for e in mesh4.tri_edges[t]:
            owners[e].append(t)
    a, b = mesh4.vertices[mesh4.edges[inner, 0]], mesh4.vertices[mesh4.edges[inner, 1]]
    tau = np.array([0.2, 0.5, 0.8])
    pts = a[:, None, :] + tau[None, :, None] * (b - a)[:, None, :]
    t1 = np.array([owners[e][0] for e in inner])
    t2 = np.array([owners[e][1] for e in inner])
    for order in (0, 1):
        assert np.abs(f.evaluate(t1, pts, order) - f.evaluate(t2, pts, order)).max() <= 1e-9


# enrichment --------------------------------------------------------------------------

def test_enrich_quadratic_exact(mesh4, rng):
    v = poly_field(mesh4, lambda x, y: x * x, lambda x, y: 2 * x, lambda x, y: 0 * x)
    f = enrich_to_hct(mesh4, v)
    pts = interior_points(mesh4, rng)
    assert np.abs(f.evaluate(np.arange(mesh4.n_triangles), pts) - pts[..., 0] ** 2).max() <= 1e-10


def test_enrich_one(mesh4, rng):
    f = enrich_to_hct(mesh4, const_field(mesh4))
    pts = interior_points(mesh4, rng)
    assert np.abs(f.evaluate(np.arange(mesh4.n_triangles), pts) - 1).max() <= 1e-12


def test_enrich_preserves_morley_dofs(mesh4, rng):
    v = rng.normal(size=mesh4.n_vertices + mesh4.n_edges)
    f = enrich_to_hct(mesh4, v)
    tris = np.arange(mesh4.n_triangles)
    corners = mesh4.vertices[mesh4.triangles]
    vals = f.evaluate(tris, corners)
    np.testing.assert_allclose(vals, v[mesh4.triangles], atol=1e-12)
    mids = mesh4.edge_midpoints[mesh4.tri_edges]
    g = f.evaluate(tris, mids, 1)
    dn = np.einsum("ted,ted->te", g, mesh4.edge_normals[mesh4.tri_edges])
    np.testing.assert_allclose(dn, v[mesh4.n_vertices + mesh4.tri_edges], atol=1e-11)
    # vertex gradients are the incident average
    avg = vertex_gradient_average(mesh4, v)
    np.testing.assert_allclose(f.evaluate(tris, corners, 1), avg[mesh4.triangles], atol=1e-11)


def test_enrich_linear(mesh4, rng):
    v1, v2 = rng.normal(size=(2, mesh4.n_vertices + mesh4.n_edges))
    pts = interior_points(mesh4, rng)
    tris = np.arange(mesh4.n_triangles)
    lhs = enrich_to_hct(mesh4, 3 * v1 - v2).evaluate(tris, pts)
    rhs = 3 * enrich_to_hct(mesh4, v1).evaluate(tris, pts) - enrich_to_hct(mesh4, v2).evaluate(tris, pts)
    assert np.abs(lhs - rhs).max() <= 1e-11


def test_enrichment_rates():
    orders = enrichment_study().orders
    assert orders["L2"] >= 1.8
    assert orders["H1semi"] >= 0.9


# broken norms ------------------------------------------------------------------------

def test_broken_norm_examples(mesh4):
    assert broken_norm(mesh4, const_field(mesh4), 0) == pytest.approx(2.0, rel=1e-12)
    assert broken_norm(mesh4, x_field(mesh4), 1) == pytest.approx(2.0, rel=1e-12)
    w = poly_field(mesh4, lambda x, y: x * x, lambda x, y: 2 * x, lambda x, y: 0 * x)
    assert broken_norm(mesh4, w, 2) == pytest.approx(4.0, rel=1e-10)
    assert broken_norm(mesh4, Analytic(X ** 2), 2) == pytest.approx(4.0, rel=1e-12)
    assert broken_norm(mesh4, w, 2, minus=Analytic(X ** 2)) < 1e-10


def test_broken_norm_bad_order(mesh4):
    with pytest.raises(ValueError):
        broken_norm(mesh4, const_field(mesh4), 3)


def test_sub_triangle_quadrature_weights(mesh4):
    _, w, _ = sub_triangle_quadrature(mesh4)
    assert w.sum() == pytest.approx(4.0, rel=1e-13)


MESH3 = build_crisscross_mesh(3)
NDOF3 = MESH3.n_vertices + MESH3.n_edges


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), a=st.floats(-10, 10), j=st.sampled_from([0, 1, 2]))
def test_broken_norm_seminorm_properties(seed, a, j):
    r = np.random.default_rng(seed)
    u, v = r.normal(size=(2, NDOF3))
    nu, nv = broken_norm(MESH3, u, j), broken_norm(MESH3, v, j)
    assert broken_norm(MESH3, a * u, j) == pytest.approx(abs(a) * nu, rel=1e-10, abs=1e-12)
    assert broken_norm(MESH3, u + v, j) <= nu + nv + 1e-10
    assert broken_norm(MESH3, u, j, minus=v) == pytest.approx(broken_norm(MESH3, u - v, j),
                                                              rel=1e-10, abs=1e-12)
    if j == 0:
        assert nu > 0
