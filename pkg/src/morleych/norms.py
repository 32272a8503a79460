"""Element-wise (broken) Sobolev norms of Morley fields and analytic data."""
from __future__ import annotations

import numpy as np

from .element import morley_basis
from .mesh import Mesh


def _derivative_data(mesh: Mesh, j: int, field, exact):
    b = morley_basis(mesh)
    x, y = b.quad_points[..., 0], b.quad_points[..., 1]
    if j == 0:
        d = np.zeros(x.shape + (1,))
        if field is not None:
            d[..., 0] += b.values(field)
        if exact is not None:
            d[..., 0] -= exact.value(x, y)
        return d, np.ones(1)
    if j == 1:
        d = np.zeros(x.shape + (2,))
        if field is not None:
            d += b.grads(field)
        if exact is not None:
            gx, gy = exact.grad(x, y)
            d -= np.stack([gx, gy], axis=-1)
        return d, np.ones(2)
    if j == 2:
        d = np.zeros(x.shape + (3,))
        if field is not None:
            d += b.hessians(field)[:, None, :]
        if exact is not None:
            d -= exact.hessian(x, y)
        # the mixed derivative appears twice in |.|_2
        return d, np.array([1.0, 2.0, 1.0])
    raise ValueError(f"j must be 0, 1 or 2, got {j!r}")


def broken_seminorm(mesh: Mesh, j: int, field=None, exact=None) -> float:
    """``|field - exact|_{j,2,h}``; either argument may be omitted."""
    d, mult = _derivative_data(mesh, j, field, exact)
    b = morley_basis(mesh)
    return float(np.sqrt(max(b.integrate(np.einsum("tqc,c->tq", d * d, mult)), 0.0)))


def broken_norm(mesh: Mesh, j: int, field=None, exact=None, full: bool = False) -> float:
    """Broken seminorm of order ``j`` (a norm for ``j = 0``).

    With ``full=True`` returns the complete Sobolev norm
    ``(sum_{i<=j} |.|_{i,2,h}^2)^(1/2)``.
    """
    if not full:
        return broken_seminorm(mesh, j, field, exact)
    return float(np.sqrt(sum(broken_seminorm(mesh, i, field, exact) ** 2 for i in range(j + 1))))


def broken_laplacian_norm(mesh: Mesh, field=None, exact=None) -> float:
    """``||lap(field - exact)||_{0,2,h}``."""
    d, _ = _derivative_data(mesh, 2, field, exact)
    lap = d[..., 0] + d[..., 2]
    return float(np.sqrt(morley_basis(mesh).integrate(lap * lap)))


def integral(mesh: Mesh, field) -> float:
    b = morley_basis(mesh)
    return b.integrate(b.values(field))


def max_abs(mesh: Mesh, field, where: str = "vertices") -> float:
    """Sampled sup norm: at vertices, or at vertices and quadrature points."""
    v = float(np.max(np.abs(np.asarray(field)[:mesh.n_vertices])))
    if where == "vertices":
        return v
    if where == "quadrature":
        return max(v, float(np.max(np.abs(morley_basis(mesh).values(field)))))
    raise ValueError(f"unknown sampling {where!r}")
