"""Assembly of the discrete bilinear and nonlinear forms on Morley fields."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .element import MorleyBasis, free_dofs, morley_basis
from .linalg import SolverError, solve_constrained
from .mesh import Mesh
from .quadrature import gauss_line


@dataclass(frozen=True)
class Potential:
    """Double-well potential ``F(u) = (u^2 - 1)^2 / 4`` and its derivatives."""

    @staticmethod
    def F(u):
        return 0.25 * (u * u - 1.0) ** 2

    @staticmethod
    def f(u):
        return u ** 3 - u

    @staticmethod
    def fp(u):
        return 3.0 * u * u - 1.0

    @staticmethod
    def fpp(u):
        return 6.0 * u


POTENTIAL = Potential()


def _pattern(basis: MorleyBasis):
    rows = np.repeat(basis.dofs[:, :, None], 6, axis=2)
    cols = np.repeat(basis.dofs[:, None, :], 6, axis=1)
    return rows.ravel(), cols.ravel()


def assemble_local(basis: MorleyBasis, local: np.ndarray) -> sps.csr_matrix:
    """Sum ``(nt, 6, 6)`` element matrices into a global CSR matrix."""
    rows, cols = _pattern(basis)
    n = basis.n_dofs
    return sps.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def scatter(basis: MorleyBasis, local: np.ndarray) -> np.ndarray:
    """Sum ``(nt, 6)`` element vectors into a global vector."""
    return np.bincount(basis.dofs.ravel(), weights=local.ravel(), minlength=basis.n_dofs)


def assemble_mass(mesh: Mesh) -> sps.csr_matrix:
    b = morley_basis(mesh)
    local = np.einsum("tq,tqi,tqj->tij", b.quad_weights, b.phi, b.phi)
    return assemble_local(b, local)


def assemble_a_h(mesh: Mesh) -> sps.csr_matrix:
    """Plate form with Poisson ratio 1/2, element by element.

    Integrand: lap u lap v + u_xy v_xy - (u_xx v_yy + u_yy v_xx) / 2.
    """
    b = morley_basis(mesh)
    H = b.hess
    xx, xy, yy = H[:, 0], H[:, 1], H[:, 2]
    lap = xx + yy
    local = (np.einsum("ti,tj->tij", lap, lap)
             + np.einsum("ti,tj->tij", xy, xy)
             - 0.5 * np.einsum("ti,tj->tij", xx, yy)
             - 0.5 * np.einsum("ti,tj->tij", yy, xx))
    return assemble_local(b, local * mesh.tri_areas[:, None, None])


def assemble_weighted_grad(mesh: Mesh, coef: np.ndarray | None = None) -> sps.csr_matrix:
    """``(coef grad u, grad v)_h``; ``coef`` holds values at quadrature points."""
    b = morley_basis(mesh)
    w = b.quad_weights if coef is None else b.quad_weights * coef
    local = np.einsum("tq,tqdi,tqdj->tij", w, b.dphi, b.dphi)
    return assemble_local(b, local)


def assemble_broken_grad(mesh: Mesh) -> sps.csr_matrix:
    return assemble_weighted_grad(mesh)


def nonlinear_residual(mesh: Mesh, u: np.ndarray, potential: Potential = POTENTIAL) -> np.ndarray:
    """``N(u)_i = (f'(u) grad u, grad phi_i)_h``."""
    b = morley_basis(mesh)
    uq = b.values(u)
    gq = b.grads(u)
    local = np.einsum("tq,tqd,tqdi->ti", b.quad_weights * potential.fp(uq), gq, b.dphi)
    return scatter(b, local)


def nonlinear_jacobian(mesh: Mesh, u: np.ndarray, potential: Potential = POTENTIAL) -> sps.csr_matrix:
    """Exact derivative of :func:`nonlinear_residual`.

    ``J_ij = (f''(u) phi_j grad u + f'(u) grad phi_j, grad phi_i)_h``.
    """
    b = morley_basis(mesh)
    uq = b.values(u)
    gq = b.grads(u)
    w = b.quad_weights
    gu_dphi = np.einsum("tqd,tqdi->tqi", gq, b.dphi)
    local = (np.einsum("tq,tqi,tqj->tij", w * potential.fpp(uq), gu_dphi, b.phi)
             + np.einsum("tq,tqdi,tqdj->tij", w * potential.fp(uq), b.dphi, b.dphi))
    return assemble_local(b, local)


def _edge_geometry(mesh: Mesh, npts: int = 3):
    """Points, weights, outward normals and CCW tangents on every element edge."""
    tri = mesh.triangles
    p = mesh.vertices[tri[:, [1, 2, 0]]]      # start of local edge i
    q = mesh.vertices[tri[:, [2, 0, 1]]]      # end of local edge i
    d = q - p
    length = np.linalg.norm(d, axis=-1)
    s = d / length[..., None]
    nrm = np.stack([s[..., 1], -s[..., 0]], axis=-1)
    tau, gw = gauss_line(npts)
    pts = p[:, :, None, :] + tau[None, None, :, None] * d[:, :, None, :]
    weights = length[..., None] * gw[None, None, :]
    return pts, weights, nrm, s


def boundary_form_vector(mesh: Mesh, w_hessian) -> np.ndarray:
    """``B_h(w, phi_i)`` for every Morley basis function.

    ``w_hessian(x, y)`` returns the packed Hessian (xx, xy, yy) of ``w``.
    Edge integrals use 3-point Gauss rules with element-outward normals.
    """
    b = morley_basis(mesh)
    pts, weights, nrm, s = _edge_geometry(mesh)
    nt = mesh.n_triangles
    H = np.asarray(w_hessian(pts[..., 0], pts[..., 1]))          # (nt, 3, g, 3)
    nx, ny = nrm[..., 0][..., None], nrm[..., 1][..., None]
    sx, sy = s[..., 0][..., None], s[..., 1][..., None]
    hxx, hxy, hyy = H[..., 0], H[..., 1], H[..., 2]
    lap = hxx + hyy
    w_ns = hxx * nx * sx + hxy * (nx * sy + ny * sx) + hyy * ny * sy
    w_ss = hxx * sx * sx + 2 * hxy * sx * sy + hyy * sy * sy
    coef_n = weights * (lap - 0.5 * w_ss)
    coef_s = weights * (0.5 * w_ns)
    dphi = b.shape_grads(slice(None), pts.reshape(nt, -1, 2)).reshape(nt, 3, -1, 2, 6)
    dphi_n = np.einsum("tegdi,ted->tegi", dphi, nrm)
    dphi_s = np.einsum("tegdi,ted->tegi", dphi, s)
    local = np.einsum("teg,tegi->ti", coef_n, dphi_n) + np.einsum("teg,tegi->ti", coef_s, dphi_s)
    return scatter(b, local)


def assemble_B_h(mesh: Mesh, w_hessian, z: np.ndarray) -> float:
    """Boundary form ``B_h(w, z)`` for a Morley field ``z``."""
    return float(boundary_form_vector(mesh, w_hessian) @ z)


def default_alpha(eps: float) -> float:
    return max(1.0, eps ** -3)


def elliptic_projection(mesh: Mesh, u, eps: float, alpha: float | None = None,
                        potential: Potential = POTENTIAL) -> np.ndarray:
    """Shifted fourth-order projection of an analytic function ``u``.

    Solves, over the constrained Morley space,
    ``eps a_h(P u, w) + (1/eps)(f'(u) grad P u, grad w)_h + alpha (P u, w)
    = (eps lap^2 u - (1/eps) div(f'(u) grad u) + alpha u, w)``.
    """
    if alpha is None:
        alpha = default_alpha(eps)
    b = morley_basis(mesh)
    x, y = b.quad_points[..., 0], b.quad_points[..., 1]
    uq = u.value(x, y)
    gx, gy = u.grad(x, y)
    div_term = potential.fpp(uq) * (gx * gx + gy * gy) + potential.fp(uq) * u.laplacian(x, y)
    src = eps * u.bilaplacian(x, y) - div_term / eps + alpha * uq
    rhs = scatter(b, np.einsum("tq,tqi->ti", b.quad_weights * src, b.phi))
    K = (eps * assemble_a_h(mesh) + assemble_weighted_grad(mesh, potential.fp(uq)) / eps
         + alpha * assemble_mass(mesh))
    try:
        return solve_constrained(K, rhs, free_dofs(mesh), rtol=1e-10)
    except SolverError as exc:
        raise SolverError(f"projection system singular (alpha={alpha:g} too small?): {exc}") from exc
