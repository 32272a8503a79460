"""Neumann inverse Laplacians: a conforming P2 reference solver and the two
computable Morley-space operators built on the shifted plate form.

Sign convention: ``inv_lap(zeta)`` denotes the zero-mean ``v`` with
``lap v = zeta`` and homogeneous Neumann data, so ``-inv_lap(zeta)`` solves
``-lap u = zeta``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .analytic import Analytic
from .element import free_dofs, morley_basis
from .forms import assemble_a_h, assemble_broken_grad, assemble_mass, boundary_form_vector, scatter
from .linalg import SolverError, solve_constrained
from .mesh import Mesh, refine_uniform
from .quadrature import quadrature_rule


class CompatibilityError(ValueError):
    """Neumann data with nonzero mean."""


class PoissonOracle:
    """P2 Lagrange Neumann solver on a uniform refinement of a Morley mesh.

    The zero-mean condition is enforced with one Lagrange multiplier, and the
    augmented system is factorized once.
    """

    def __init__(self, mesh: Mesh, refine: int = 2, quad_degree: int = 8):
        if refine not in (0, 1, 2, 3):
            raise ValueError(f"refine must be in 0..3, got {refine!r}")
        self.mesh = mesh
        self.refine = refine
        verts, tris = mesh.vertices, mesh.triangles
        parent = np.arange(mesh.n_triangles)
        for _ in range(refine):
            verts, tris, p = refine_uniform(verts, tris)
            parent = parent[p]
        self.vertices, self.triangles, self.parent = verts, tris, parent

        nt = len(tris)
        local = np.stack([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1)
        edges, inv = np.unique(np.sort(local.reshape(-1, 2), axis=1), axis=0, return_inverse=True)
        self.dofs = np.concatenate([tris, len(verts) + inv.reshape(nt, 3)], axis=1)
        self.n_dofs = len(verts) + len(edges)

        corners = verts[tris]
        d1 = corners[:, 1] - corners[:, 0]
        d2 = corners[:, 2] - corners[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.areas = 0.5 * det
        # gradients of barycentric coordinates, (nt, 3, 2)
        e = np.stack([corners[:, 2] - corners[:, 1], corners[:, 0] - corners[:, 2],
                      corners[:, 1] - corners[:, 0]], axis=1)
        self.grad_lam = np.stack([-e[..., 1], e[..., 0]], axis=-1) / det[:, None, None]

        self.quad = quadrature_rule(quad_degree)
        lam = self.quad.points                                   # (nq, 3)
        self.points = self.quad.physical_points(corners)          # (nt, nq, 2)
        self.weights = self.areas[:, None] * self.quad.weights[None, :]
        self.psi = self._p2_values(lam)                           # (nq, 6)
        self.dpsi = self._p2_grads(lam)                           # (nt, nq, 2, 6)

        rows = np.repeat(self.dofs[:, :, None], 6, axis=2).ravel()
        cols = np.repeat(self.dofs[:, None, :], 6, axis=1).ravel()
        K = np.einsum("tq,tqdi,tqdj->tij", self.weights, self.dpsi, self.dpsi)
        stiff = sps.csr_matrix((K.ravel(), (rows, cols)), shape=(self.n_dofs, self.n_dofs))
        self.mean_row = np.bincount(self.dofs.ravel(),
                                    weights=np.einsum("tq,qi->ti", self.weights, self.psi).ravel(),
                                    minlength=self.n_dofs)
        c = sps.csr_matrix(self.mean_row[None, :])
        aug = sps.bmat([[stiff, c.T], [c, None]], format="csc")
        self._stiff = stiff
        self._aug = aug
        self._lu = spla.splu(aug)

    @staticmethod
    def _p2_values(lam):
        l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
        return np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                         4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1], axis=-1)

    def _p2_grads(self, lam):
        g = self.grad_lam[:, None, :, :]                          # (nt, 1, 3, 2)
        l = lam[None, :, :, None]                                 # (1, nq, 3, 1)
        d = [(4 * l[:, :, i] - 1) * g[:, :, i] for i in range(3)]
        d += [4 * (l[:, :, 1] * g[:, :, 2] + l[:, :, 2] * g[:, :, 1]),
              4 * (l[:, :, 2] * g[:, :, 0] + l[:, :, 0] * g[:, :, 2]),
              4 * (l[:, :, 0] * g[:, :, 1] + l[:, :, 1] * g[:, :, 0])]
        return np.stack(d, axis=-1)

    @cached_property
    def morley_phi(self) -> np.ndarray:
        """Morley shape values of the parent triangle at the fine quadrature points."""
        return morley_basis(self.mesh).shape_values(self.parent, self.points)

    @cached_property
    def morley_dphi(self) -> np.ndarray:
        return morley_basis(self.mesh).shape_grads(self.parent, self.points)

    def data_values(self, zeta) -> np.ndarray:
        """Values of a Morley field or analytic function at fine quadrature points."""
        if isinstance(zeta, Analytic) or callable(zeta):
            return np.asarray(zeta(self.points[..., 0], self.points[..., 1]), dtype=float)
        loc = np.asarray(zeta)[morley_basis(self.mesh).dofs][self.parent]
        return np.einsum("tqi,ti->tq", self.morley_phi, loc)

    def solve(self, zeta, rtol: float = 1e-8) -> "PoissonSolution":
        """P2 approximation of ``-inv_lap(zeta)``, i.e. ``-lap u = zeta``, mean zero."""
        zq = self.data_values(zeta)
        mean = float(np.sum(self.weights * zq))
        scale = float(np.sqrt(np.sum(self.weights * zq * zq) * self.mesh.area))
        if abs(mean) > rtol * max(scale, np.finfo(float).tiny):
            raise CompatibilityError(f"data mean {mean:.3e} is not zero (scale {scale:.3e})")
        rhs = np.bincount(self.dofs.ravel(),
                          weights=np.einsum("tq,qi->ti", self.weights * zq, self.psi).ravel(),
                          minlength=self.n_dofs)
        if not np.any(rhs):
            return PoissonSolution(self, np.zeros(self.n_dofs))
        b = np.append(rhs, 0.0)
        x = self._lu.solve(b)
        x = x + self._lu.solve(b - self._aug @ x)
        res = np.linalg.norm(b - self._aug @ x) / np.linalg.norm(b)
        if res > 1e-10:
            raise SolverError(f"Neumann solve residual {res:.3e}")
        return PoissonSolution(self, x[:-1])


class PoissonSolution:
    def __init__(self, oracle: PoissonOracle, coeffs: np.ndarray):
        self.oracle = oracle
        self.coeffs = coeffs

    def values(self) -> np.ndarray:
        return np.einsum("qi,ti->tq", self.oracle.psi, self.coeffs[self.oracle.dofs])

    def grads(self) -> np.ndarray:
        return np.einsum("tqdi,ti->tqd", self.oracle.dpsi, self.coeffs[self.oracle.dofs])

    def mean(self) -> float:
        return float(self.oracle.mean_row @ self.coeffs)

    def grad_norm(self) -> float:
        g = self.grads()
        return float(np.sqrt(np.sum(self.oracle.weights * np.einsum("tqd,tqd->tq", g, g))))

    def morley_load(self) -> np.ndarray:
        """``(u, phi_i)`` for every Morley basis function."""
        o = self.oracle
        local = np.einsum("tq,tqi->ti", o.weights * self.values(), o.morley_phi)
        b = morley_basis(o.mesh)
        return np.bincount(b.dofs[o.parent].ravel(), weights=local.ravel(), minlength=b.n_dofs)


def poisson_oracle(mesh: Mesh, refine: int = 2) -> PoissonOracle:
    key = ("poisson_oracle", refine)
    if key not in mesh._cache:
        mesh._cache[key] = PoissonOracle(mesh, refine)
    return mesh._cache[key]


def reference_inverse_laplacian(mesh: Mesh, zeta, refine: int = 2) -> PoissonSolution:
    """Reference solution of ``-lap u = zeta`` (so ``u = -inv_lap(zeta)``)."""
    return poisson_oracle(mesh, refine).solve(zeta)


def h_minus1_norm(mesh: Mesh, zeta, refine: int = 2, remove_mean: bool = False) -> float:
    """``||grad inv_lap(zeta)||_{L2}`` from the reference solver.

    With ``remove_mean`` the mean of ``zeta`` is subtracted first.
    """
    if remove_mean:
        zeta = subtract_mean(mesh, zeta)
    return reference_inverse_laplacian(mesh, zeta, refine).grad_norm()


def subtract_mean(mesh: Mesh, zeta):
    """Remove the mean of a Morley field (shifts vertex values only)."""
    if isinstance(zeta, Analytic) or callable(zeta):
        raise TypeError("subtract_mean expects a Morley field")
    b = morley_basis(mesh)
    z = np.array(zeta, dtype=float)
    z[:mesh.n_vertices] -= b.integrate(b.values(z)) / mesh.area
    return z


def _b_h(mesh: Mesh, beta: float):
    key = ("b_h", beta)
    if key not in mesh._cache:
        mesh._cache[key] = assemble_a_h(mesh) + beta * assemble_mass(mesh)
    return mesh._cache[key]


def _shifted_inverse(mesh: Mesh, zeta, beta: float, potential: Analytic | None,
                     refine: int, with_boundary_form: bool) -> np.ndarray:
    b = morley_basis(mesh)
    zeta = np.asarray(zeta, dtype=float)
    rhs = assemble_broken_grad(mesh) @ zeta
    if potential is None:
        # (-inv_lap zeta, w) from the reference solver
        rhs = rhs + beta * reference_inverse_laplacian(mesh, zeta, refine).morley_load()
    else:
        x, y = b.quad_points[..., 0], b.quad_points[..., 1]
        load = scatter(b, np.einsum("tq,tqi->ti", -b.quad_weights * potential.value(x, y), b.phi))
        rhs = rhs + beta * load
    if with_boundary_form:
        rhs = rhs - boundary_form_vector(mesh, potential.hessian)
    v = solve_constrained(_b_h(mesh, beta), rhs, free_dofs(mesh), rtol=1e-10)
    return -v


def tilde_inv_laplacian(mesh: Mesh, zeta, beta: float = 1.0, potential: Analytic | None = None,
                        refine: int = 2) -> np.ndarray:
    """Morley approximation of ``inv_lap(zeta)`` without the edge correction.

    ``b_h(-result, w) = (grad zeta, grad w)_h + beta (-inv_lap zeta, w)`` for
    all ``w`` in the constrained space, with ``b_h = a_h + beta (.,.)``.
    ``inv_lap zeta`` comes from the reference solver unless ``potential``
    (an analytic ``inv_lap zeta``) is supplied.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _shifted_inverse(mesh, zeta, beta, potential, refine, with_boundary_form=False)


def hat_inv_laplacian(mesh: Mesh, zeta, potential: Analytic, beta: float = 1.0,
                      include_boundary_form: bool = True) -> np.ndarray:
    """As :func:`tilde_inv_laplacian` plus ``B_h(-inv_lap zeta, w)`` on the right.

    ``potential`` is the analytic ``inv_lap zeta``; its Hessian feeds ``B_h``.
    """
    if potential is None or not hasattr(potential, "hessian"):
        raise ValueError("hat_inv_laplacian needs inv_lap(zeta) with second derivatives")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _shifted_inverse(mesh, zeta, beta, potential, 0, with_boundary_form=include_boundary_form)
