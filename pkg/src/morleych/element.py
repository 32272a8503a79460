"""Morley shape functions built per triangle in physical space.

The six local DOF functionals are the three vertex values followed by the
derivatives along the *global* edge normal at the three edge midpoints, so
local and global DOFs coincide without sign flips.  Shape coefficients are
kept in a centred, scaled frame ``xi = (x - centroid) / scale`` to keep the
6x6 systems well conditioned on fine meshes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh
from .quadrature import QuadratureRule, quadrature_rule


class GeometryError(ValueError):
    """Degenerate element geometry."""


# rows of the Hessian packed as (xx, xy, yy)
HESS_XX, HESS_XY, HESS_YY = 0, 1, 2


def monomials(xi: np.ndarray) -> np.ndarray:
    x, y = xi[..., 0], xi[..., 1]
    one = np.ones_like(x)
    return np.stack([one, x, y, x * x, x * y, y * y], axis=-1)


def monomial_grads(xi: np.ndarray) -> np.ndarray:
    """``(..., 2, 6)`` derivatives with respect to the scaled coordinates."""
    x, y = xi[..., 0], xi[..., 1]
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    dx = np.stack([zero, one, zero, 2 * x, y, zero], axis=-1)
    dy = np.stack([zero, zero, one, zero, x, 2 * y], axis=-1)
    return np.stack([dx, dy], axis=-2)


class MorleyBasis:
    """Shape functions of every triangle of a mesh.

    ``coeffs[t, k, i]`` is the coefficient of scaled monomial ``k`` in shape
    function ``i`` of triangle ``t``.
    """

    def __init__(self, mesh: Mesh, quad_degree: int = 8, cond_limit: float = 1e10):
        self.mesh = mesh
        tri = mesh.triangles
        corners = mesh.vertices[tri]
        self.centroids = corners.mean(axis=1)
        edge_len = np.linalg.norm(corners - np.roll(corners, 1, axis=1), axis=2)
        self.scales = edge_len.max(axis=1)
        self.dofs = np.concatenate([tri, mesh.n_vertices + mesh.tri_edges], axis=1)
        self.n_dofs = mesh.n_vertices + mesh.n_edges

        xi_v = self.to_local(corners, slice(None))
        mids = mesh.edge_midpoints[mesh.tri_edges]
        normals = mesh.edge_normals[mesh.tri_edges]
        xi_m = self.to_local(mids, slice(None))
        V = np.empty((len(tri), 6, 6))
        V[:, :3, :] = monomials(xi_v)
        g = monomial_grads(xi_m) / self.scales[:, None, None, None]
        V[:, 3:, :] = np.einsum("tjd,tjdk->tjk", normals, g)

        cond = np.linalg.cond(V)
        bad = ~np.isfinite(cond) | (cond > cond_limit) | (mesh.tri_areas <= 0)
        if np.any(bad):
            raise GeometryError(f"degenerate triangles: {np.flatnonzero(bad)[:10].tolist()}")
        self.coeffs = np.linalg.solve(V, np.broadcast_to(np.eye(6), V.shape))
        self.quad = quadrature_rule(quad_degree)

    def to_local(self, points: np.ndarray, tris) -> np.ndarray:
        """Scaled coordinates of ``points`` (``(nt, ..., 2)``) for triangles ``tris``."""
        c = self.centroids[tris]
        s = self.scales[tris]
        extra = points.ndim - c.ndim
        shape = c.shape[:-1] + (1,) * extra + (2,)
        return (points - c.reshape(shape)) / s.reshape(shape[:-1] + (1,))

    # pointwise evaluation of shape functions --------------------------------

    def shape_values(self, tris, points: np.ndarray) -> np.ndarray:
        """``(nt, np, 6)`` shape values of triangles ``tris`` at ``points`` (nt, np, 2)."""
        return np.einsum("tpk,tki->tpi", monomials(self.to_local(points, tris)), self.coeffs[tris])

    def shape_grads(self, tris, points: np.ndarray) -> np.ndarray:
        """``(nt, np, 2, 6)`` physical gradients."""
        g = monomial_grads(self.to_local(points, tris))
        s = self.scales[tris][:, None, None, None]
        return np.einsum("tpdk,tki->tpdi", g, self.coeffs[tris]) / s

    def shape_hessians(self, tris=slice(None)) -> np.ndarray:
        """``(nt, 3, 6)`` constant Hessians packed as (xx, xy, yy)."""
        c = self.coeffs[tris]
        s2 = (self.scales[tris] ** 2)[:, None]
        return np.stack([2 * c[:, 3, :] / s2, c[:, 4, :] / s2, 2 * c[:, 5, :] / s2], axis=1)

    # cached data at the default quadrature ---------------------------------

    @cached_property
    def quad_points(self) -> np.ndarray:
        return self.quad.physical_points(self.mesh.vertices[self.mesh.triangles])

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """``(nt, nq)`` physical weights (area folded in)."""
        return self.mesh.tri_areas[:, None] * self.quad.weights[None, :]

    @cached_property
    def phi(self) -> np.ndarray:
        return self.shape_values(slice(None), self.quad_points)

    @cached_property
    def dphi(self) -> np.ndarray:
        return self.shape_grads(slice(None), self.quad_points)

    @cached_property
    def hess(self) -> np.ndarray:
        return self.shape_hessians()

    # field evaluation -------------------------------------------------------

    def local(self, field: np.ndarray) -> np.ndarray:
        """Gather ``(nt, 6)`` element coefficients from a global field."""
        return np.asarray(field)[self.dofs]

    def values(self, field: np.ndarray) -> np.ndarray:
        return np.einsum("tqi,ti->tq", self.phi, self.local(field))

    def grads(self, field: np.ndarray) -> np.ndarray:
        return np.einsum("tqdi,ti->tqd", self.dphi, self.local(field))

    def hessians(self, field: np.ndarray) -> np.ndarray:
        """``(nt, 3)`` per-triangle constant Hessian (xx, xy, yy)."""
        return np.einsum("tci,ti->tc", self.hess, self.local(field))

    def evaluate_at(self, field, tris, points, order: int = 0) -> np.ndarray:
        """Evaluate at ``points`` (nt, np, 2) inside triangles ``tris``."""
        loc = self.local(field)[tris]
        if order == 0:
            return np.einsum("tpi,ti->tp", self.shape_values(tris, points), loc)
        if order == 1:
            return np.einsum("tpdi,ti->tpd", self.shape_grads(tris, points), loc)
        if order == 2:
            h = np.einsum("tci,ti->tc", self.shape_hessians(tris), loc)
            return np.broadcast_to(h[:, None, :], points.shape[:2] + (3,))
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")

    def integrate(self, values: np.ndarray) -> float:
        """Integral of quadrature-point data ``(nt, nq)``."""
        return float(np.sum(self.quad_weights * values))


@dataclass(frozen=True)
class ElementBasis:
    """Shape functions of a single triangle, as monomial coefficients."""
    tri: int
    centroid: np.ndarray
    scale: float
    coeffs: np.ndarray  # (6 monomials, 6 shapes)

    def evaluate(self, local_dofs: np.ndarray, points: np.ndarray, order: int = 0) -> np.ndarray:
        """Evaluate the local field with DOFs ``local_dofs`` at ``points`` (np, 2).

        order 0 -> (np,), 1 -> (np, 2), 2 -> (np, 3) packed (xx, xy, yy).
        """
        xi = (np.asarray(points, dtype=float) - self.centroid) / self.scale
        c = self.coeffs @ np.asarray(local_dofs, dtype=float)
        if order == 0:
            return monomials(xi) @ c
        if order == 1:
            return monomial_grads(xi) @ c / self.scale
        if order == 2:
            h = np.array([2 * c[3], c[4], 2 * c[5]]) / self.scale ** 2
            return np.broadcast_to(h, (len(xi), 3)).copy()
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")


def build_element_basis(mesh: Mesh, tri: int, basis: MorleyBasis | None = None) -> ElementBasis:
    if basis is None:
        basis = morley_basis(mesh)
    return ElementBasis(tri, basis.centroids[tri].copy(), float(basis.scales[tri]),
                        basis.coeffs[tri].copy())


def morley_basis(mesh: Mesh, quad_degree: int = 8) -> MorleyBasis:
    """Cached :class:`MorleyBasis` for ``mesh``."""
    key = ("morley_basis", quad_degree)
    if key not in mesh._cache:
        mesh._cache[key] = MorleyBasis(mesh, quad_degree)
    return mesh._cache[key]


def free_dofs(mesh: Mesh) -> np.ndarray:
    """Indices of the constrained space: boundary normal-derivative DOFs removed."""
    mask = np.ones(mesh.n_vertices + mesh.n_edges, dtype=bool)
    mask[mesh.n_vertices + np.flatnonzero(mesh.boundary_edges)] = False
    return np.flatnonzero(mask)


def zero_field(mesh: Mesh) -> np.ndarray:
    return np.zeros(mesh.n_vertices + mesh.n_edges)


def field_from_derivatives(mesh: Mesh, value, grad) -> np.ndarray:
    """DOF vector from point values and midpoint normal derivatives.

    ``value(x, y)`` and ``grad(x, y) -> (gx, gy)`` are vectorised callables.
    Exact for quadratics; use :func:`morleych.enrich.interpolate_morley` for
    the edge-averaged interpolant of general functions.
    """
    v = mesh.vertices
    m = mesh.edge_midpoints
    gx, gy = grad(m[:, 0], m[:, 1])
    nrm = mesh.edge_normals
    out = np.empty(mesh.n_vertices + mesh.n_edges)
    out[:mesh.n_vertices] = value(v[:, 0], v[:, 1])
    out[mesh.n_vertices:] = gx * nrm[:, 0] + gy * nrm[:, 1]
    return out
