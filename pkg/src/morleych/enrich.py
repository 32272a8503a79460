"""Morley interpolation, the HCT enriching operator and broken norms of
mixed Morley/HCT/analytic differences.

An HCT macro element is split at its centroid into three sub-triangles;
sub-triangle ``k`` has vertices ``(P[k+1], P[k+2], centroid)`` and carries
macro edge ``k``.  Each sub-triangle holds a cubic in the same scaled frame
as the Morley basis.  The 12 macro DOFs are ordered
``(u, u_x, u_y) at P0, P1, P2`` followed by the global-normal derivative at
the midpoints of edges 0, 1, 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .element import GeometryError, MorleyBasis, morley_basis
from .mesh import Mesh
from .quadrature import gauss_line, quadrature_rule

# exponents of the 10 cubic monomials
_EXP = np.array([(a, b) for d in range(4) for b in range(d + 1) for a in [d - b]])


def cubic_monomials(xi):
    x, y = xi[..., 0:1], xi[..., 1:2]
    return x ** _EXP[:, 0] * y ** _EXP[:, 1]


def _dpow(x, a):
    return np.where(a > 0, a * x ** np.maximum(a - 1, 0), 0.0)


def cubic_grads(xi):
    """``(..., 2, 10)`` derivatives with respect to the scaled coordinates."""
    x, y = xi[..., 0:1], xi[..., 1:2]
    a, b = _EXP[:, 0], _EXP[:, 1]
    dx = _dpow(x, a) * y ** b
    dy = x ** a * _dpow(y, b)
    return np.stack([dx, dy], axis=-2)


def cubic_hessians(xi):
    """``(..., 3, 10)`` second derivatives (xx, xy, yy) in scaled coordinates."""
    x, y = xi[..., 0:1], xi[..., 1:2]
    a, b = _EXP[:, 0], _EXP[:, 1]
    dxx = np.where(a > 1, a * (a - 1) * x ** np.maximum(a - 2, 0), 0.0) * y ** b
    dxy = _dpow(x, a) * _dpow(y, b)
    dyy = x ** a * np.where(b > 1, b * (b - 1) * y ** np.maximum(b - 2, 0), 0.0)
    return np.stack([dxx, dxy, dyy], axis=-2)


def interpolate_morley(mesh: Mesh, v, constrained: bool = False, npts: int = 3) -> np.ndarray:
    """Morley interpolant: vertex values and edge-averaged normal derivatives.

    ``v`` needs ``value(x, y)`` and ``grad(x, y)``.  With ``constrained`` the
    boundary-edge DOFs are set to zero.
    """
    tau, w = gauss_line(npts)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + tau[None, :, None] * (b - a)[:, None, :]
    gx, gy = v.grad(pts[..., 0], pts[..., 1])
    dn = gx * mesh.edge_normals[:, 0:1] + gy * mesh.edge_normals[:, 1:2]
    out = np.empty(mesh.n_vertices + mesh.n_edges)
    out[:mesh.n_vertices] = v.value(mesh.vertices[:, 0], mesh.vertices[:, 1])
    out[mesh.n_vertices:] = dn @ w
    if constrained:
        out[mesh.n_vertices + np.flatnonzero(mesh.boundary_edges)] = 0.0
    return out


class HctBasis:
    """Per macro element map from the 12 DOFs to the 30 sub-cubic coefficients."""

    def __init__(self, mesh: Mesh, basis: MorleyBasis | None = None, tol: float = 1e-8):
        self.mesh = mesh
        self.morley = basis or morley_basis(mesh)
        mb = self.morley
        nt = mesh.n_triangles
        corners = mesh.vertices[mesh.triangles]
        self.corners = corners
        xi_v = mb.to_local(corners, slice(None))                   # (nt, 3, 2)
        xi_c = np.zeros((nt, 2))
        s = mb.scales

        rows = []
        # C1 across the internal sub-edges P_i -> centroid
        tau4 = np.array([0.0, 1 / 3, 2 / 3, 1.0])
        tau3, _ = gauss_line(3)
        for i in range(3):
            k1, k2 = (i + 1) % 3, (i + 2) % 3
            d = xi_c - xi_v[:, i]
            nrm = np.stack([-d[:, 1], d[:, 0]], axis=-1)
            p4 = xi_v[:, i, None, :] + tau4[None, :, None] * d[:, None, :]
            m4 = cubic_monomials(p4)                                # (nt, 4, 10)
            r = np.zeros((nt, 4, 30))
            r[..., 10 * k1:10 * k1 + 10] = m4
            r[..., 10 * k2:10 * k2 + 10] = -m4
            rows.append(r)
            p3 = xi_v[:, i, None, :] + tau3[None, :, None] * d[:, None, :]
            g3 = np.einsum("tpdk,td->tpk", cubic_grads(p3), nrm)
            r = np.zeros((nt, 3, 30))
            r[..., 10 * k1:10 * k1 + 10] = g3
            r[..., 10 * k2:10 * k2 + 10] = -g3
            rows.append(r)
        # vertex value and gradient, taken on sub-triangle i+1
        for i in range(3):
            k = (i + 1) % 3
            r = np.zeros((nt, 3, 30))
            r[:, 0, 10 * k:10 * k + 10] = cubic_monomials(xi_v[:, i])
            r[:, 1:, 10 * k:10 * k + 10] = cubic_grads(xi_v[:, i]) / s[:, None, None]
            rows.append(r)
        # global-normal derivative at the macro edge midpoints
        mids = mb.to_local(mesh.edge_midpoints[mesh.tri_edges], slice(None))
        normals = mesh.edge_normals[mesh.tri_edges]
        r = np.zeros((nt, 3, 30))
        for k in range(3):
            g = cubic_grads(mids[:, k]) / s[:, None, None]
            r[:, k, 10 * k:10 * k + 10] = np.einsum("tdk,td->tk", g, normals[:, k])
        rows.append(r)
        S = np.concatenate(rows, axis=1)                            # (nt, 33, 30)
        E = np.zeros((33, 12))
        E[21:, :] = np.eye(12)
        X = np.linalg.pinv(S) @ E
        err = np.abs(S @ X - E).max(axis=(1, 2))
        if np.any(err > tol) or not np.all(np.isfinite(err)):
            raise GeometryError(f"HCT local system singular on triangles "
                                f"{np.flatnonzero(err > tol)[:10].tolist()}")
        self.dof_to_coeffs = X.reshape(nt, 3, 10, 12)

    def coefficients(self, dofs: np.ndarray) -> np.ndarray:
        """``(nt, 3, 10)`` sub-cubic coefficients from ``(nt, 12)`` DOFs."""
        return np.einsum("tkcj,tj->tkc", self.dof_to_coeffs, dofs)


def hct_basis(mesh: Mesh) -> HctBasis:
    if "hct_basis" not in mesh._cache:
        mesh._cache["hct_basis"] = HctBasis(mesh)
    return mesh._cache["hct_basis"]


def build_hct_basis(mesh: Mesh, tri: int) -> np.ndarray:
    """``(3, 10, 12)`` DOF-to-coefficient map of one macro element."""
    return hct_basis(mesh).dof_to_coeffs[tri].copy()


@dataclass
class HctField:
    mesh: Mesh
    dofs: np.ndarray     # (nt, 12)
    coeffs: np.ndarray   # (nt, 3, 10)

    @classmethod
    def from_dofs(cls, mesh: Mesh, dofs: np.ndarray) -> "HctField":
        return cls(mesh, dofs, hct_basis(mesh).coefficients(dofs))

    def evaluate_sub(self, sub: np.ndarray, tris, points: np.ndarray, order: int = 0) -> np.ndarray:
        """Evaluate the cubic of sub-triangle ``sub`` (``(nt, np)``) at ``points``."""
        mb = morley_basis(self.mesh)
        xi = mb.to_local(points, tris)
        c = self.coeffs[tris]                                       # (nt, 3, 10)
        c = np.take_along_axis(c[:, None, :, :], sub[:, :, None, None], axis=2)[:, :, 0, :]
        s = mb.scales[tris][:, None]
        if order == 0:
            return np.einsum("tpk,tpk->tp", cubic_monomials(xi), c)
        if order == 1:
            return np.einsum("tpdk,tpk->tpd", cubic_grads(xi), c) / s[..., None]
        if order == 2:
            return np.einsum("tpdk,tpk->tpd", cubic_hessians(xi), c) / (s ** 2)[..., None]
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")

    def locate_sub(self, tris, points: np.ndarray) -> np.ndarray:
        corners = self.mesh.vertices[self.mesh.triangles[tris]]
        lam = barycentric(corners, points)
        return np.argmin(lam, axis=-1)

    def evaluate(self, tris, points: np.ndarray, order: int = 0) -> np.ndarray:
        """Evaluate at ``points`` (nt, np, 2) inside macro triangles ``tris``."""
        return self.evaluate_sub(self.locate_sub(tris, points), tris, points, order)


def barycentric(corners: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of ``points`` (nt, np, 2) in ``corners`` (nt, 3, 2)."""
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    v0, v1 = b - a, c - a
    det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    d = points - a[:, None, :]
    l1 = (d[..., 0] * v1[:, None, 1] - d[..., 1] * v1[:, None, 0]) / det[:, None]
    l2 = (v0[:, None, 0] * d[..., 1] - v0[:, None, 1] * d[..., 0]) / det[:, None]
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def vertex_gradient_average(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    """``(nv, 2)`` arithmetic mean over incident triangles of the Morley gradient."""
    mb = morley_basis(mesh)
    corners = mesh.vertices[mesh.triangles]
    g = np.einsum("tpdi,ti->tpd", mb.shape_grads(slice(None), corners), mb.local(v))
    idx = mesh.triangles.ravel()
    count = np.bincount(idx, minlength=mesh.n_vertices)
    gx = np.bincount(idx, weights=g[..., 0].ravel(), minlength=mesh.n_vertices) / count
    gy = np.bincount(idx, weights=g[..., 1].ravel(), minlength=mesh.n_vertices) / count
    return np.column_stack([gx, gy])


def enrich_to_hct(mesh: Mesh, v: np.ndarray) -> HctField:
    """Enriching operator into the HCT space.

    Keeps vertex values and midpoint normal derivatives; vertex gradients are
    averaged over all incident triangles (boundary vertices included).
    """
    v = np.asarray(v, dtype=float)
    tri = mesh.triangles
    grad = vertex_gradient_average(mesh, v)
    dofs = np.empty((mesh.n_triangles, 12))
    for i in range(3):
        dofs[:, 3 * i] = v[tri[:, i]]
        dofs[:, 3 * i + 1:3 * i + 3] = grad[tri[:, i]]
    dofs[:, 9:] = v[mesh.n_vertices + mesh.tri_edges]
    return HctField.from_dofs(mesh, dofs)


def interpolate_hct(mesh: Mesh, w) -> HctField:
    """HCT interpolant of an analytic ``w`` (values, gradients, midpoint normal derivatives)."""
    tri = mesh.triangles
    vx, vy = mesh.vertices[:, 0], mesh.vertices[:, 1]
    val = w.value(vx, vy)
    gx, gy = w.grad(vx, vy)
    m = mesh.edge_midpoints
    mgx, mgy = w.grad(m[:, 0], m[:, 1])
    dn = mgx * mesh.edge_normals[:, 0] + mgy * mesh.edge_normals[:, 1]
    dofs = np.empty((mesh.n_triangles, 12))
    for i in range(3):
        dofs[:, 3 * i] = val[tri[:, i]]
        dofs[:, 3 * i + 1] = gx[tri[:, i]]
        dofs[:, 3 * i + 2] = gy[tri[:, i]]
    dofs[:, 9:] = dn[mesh.tri_edges]
    return HctField.from_dofs(mesh, dofs)


def sub_triangle_quadrature(mesh: Mesh, degree: int = 8):
    """Points ``(nt, 3*nq, 2)``, weights and sub-triangle ids on every macro element."""
    q = quadrature_rule(degree)
    corners = mesh.vertices[mesh.triangles]
    cen = corners.mean(axis=1)
    pts, sub = [], []
    for k in range(3):
        sc = np.stack([corners[:, (k + 1) % 3], corners[:, (k + 2) % 3], cen], axis=1)
        pts.append(q.physical_points(sc))
        sub.append(np.full(len(q.weights), k))
    pts = np.concatenate(pts, axis=1)
    sub = np.broadcast_to(np.concatenate(sub), pts.shape[:2])
    w = (mesh.tri_areas / 3.0)[:, None] * np.tile(q.weights, 3)[None, :]
    return pts, w, np.ascontiguousarray(sub)


def _term_data(mesh, term, j, pts, sub):
    mb = morley_basis(mesh)
    allt = np.arange(mesh.n_triangles)
    if isinstance(term, HctField):
        return term.evaluate_sub(sub, allt, pts, order=j)
    if hasattr(term, "value"):
        x, y = pts[..., 0], pts[..., 1]
        if j == 0:
            return term.value(x, y)
        if j == 1:
            return np.stack(term.grad(x, y), axis=-1)
        return term.hessian(x, y)
    return mb.evaluate_at(np.asarray(term, dtype=float), allt, pts, order=j)


def broken_norm(mesh: Mesh, field, j: int, minus=None, full: bool = False) -> float:
    """``|field - minus|_{j,2,h}`` for Morley vectors, :class:`HctField` or analytic data.

    Integrates on the HCT sub-triangles with the degree-8 rule, so every
    piecewise polynomial involved is handled exactly.  ``full`` gives the
    complete norm summed over orders ``0..j``.
    """
    if j not in (0, 1, 2):
        raise ValueError(f"j must be 0, 1 or 2, got {j!r}")
    pts, w, sub = sub_triangle_quadrature(mesh)
    orders = range(j + 1) if full else (j,)
    total = 0.0
    for i in orders:
        d = _term_data(mesh, field, i, pts, sub)
        if minus is not None:
            d = d - _term_data(mesh, minus, i, pts, sub)
        if i == 0:
            sq = d * d
        elif i == 1:
            sq = np.sum(d * d, axis=-1)
        else:
            sq = d[..., 0] ** 2 + 2 * d[..., 1] ** 2 + d[..., 2] ** 2
        total += float(np.sum(w * sq))
    return float(np.sqrt(total))
