"""Criss-cross triangulations of rectangles.

Each grid square is split into four triangles by its two diagonals, with a
vertex added at the square center.  Edges carry a fixed global unit normal;
every triangle stores, per local edge, the sign that turns the global normal
into its own outward normal.

Local numbering: local edge ``i`` of a triangle joins local vertices
``i+1`` and ``i+2`` (mod 3), i.e. it is the edge opposite local vertex ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Invalid mesh arguments."""


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray        # (nv, 2)
    edges: np.ndarray           # (ne, 2) vertex ids, lower id first
    triangles: np.ndarray       # (nt, 3) vertex ids, counter-clockwise
    tri_edges: np.ndarray       # (nt, 3) edge ids, local edge i opposite vertex i
    tri_signs: np.ndarray       # (nt, 3) +1/-1, outward = sign * global normal
    edge_normals: np.ndarray    # (ne, 2) unit
    edge_midpoints: np.ndarray  # (ne, 2)
    edge_lengths: np.ndarray    # (ne,)
    boundary_edges: np.ndarray  # (ne,) bool
    domain: tuple[float, float, float, float]
    n: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def h(self) -> float:
        """Grid square side length (x-direction)."""
        x0, x1, _, _ = self.domain
        return (x1 - x0) / self.n

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @property
    def tri_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return mask

    def dump(self) -> str:
        """Plain-text listing, one entity per line."""
        lines = [f"# vertices {self.n_vertices}"]
        lines += [f"v {i} {x!r} {y!r}" for i, (x, y) in enumerate(self.vertices)]
        lines.append(f"# edges {self.n_edges}")
        for i, (a, b) in enumerate(self.edges):
            mx, my = self.edge_midpoints[i]
            nx, ny = self.edge_normals[i]
            lines.append(f"e {i} {a} {b} {mx!r} {my!r} {nx!r} {ny!r} "
                         f"{int(self.boundary_edges[i])}")
        lines.append(f"# triangles {self.n_triangles}")
        for i, (t, e, s) in enumerate(zip(self.triangles, self.tri_edges, self.tri_signs)):
            lines.append("t {} {} {} {} {} {} {} {} {} {}".format(i, *t, *e, *s))
        return "\n".join(lines) + "\n"


def morley_dof_count(mesh: Mesh) -> int:
    """One DOF per vertex (value) plus one per edge (normal derivative)."""
    return mesh.n_vertices + mesh.n_edges


def crisscross_counts(n: int) -> tuple[int, int, int]:
    """(vertices, edges, triangles) of an n x n criss-cross grid."""
    return (n + 1) ** 2 + n ** 2, 2 * n * (n + 1) + 4 * n ** 2, 4 * n ** 2


def build_mesh(vertices: np.ndarray, triangles: np.ndarray, domain, n: int) -> Mesh:
    """Derive edges, normals, orientation signs and boundary flags."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    nt = len(triangles)
    local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    tri_edges = inverse.reshape(nt, 3)
    if np.any(counts > 2):
        raise MeshError("non-manifold triangulation")
    boundary = counts == 1

    a, b = vertices[edges[:, 0]], vertices[edges[:, 1]]
    tangent = b - a
    lengths = np.hypot(tangent[:, 0], tangent[:, 1])
    tangent /= lengths[:, None]
    normals = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    midpoints = 0.5 * (a + b)

    # outward normal of a CCW triangle on directed edge p->q is (dy, -dx)
    p = vertices[local[..., 0]]
    q = vertices[local[..., 1]]
    d = q - p
    outward = np.stack([d[..., 1], -d[..., 0]], axis=-1)
    signs = np.sign(np.einsum("tij,tij->ti", outward, normals[tri_edges])).astype(np.int64)

    return Mesh(vertices=vertices, edges=edges, triangles=triangles, tri_edges=tri_edges,
                tri_signs=signs, edge_normals=normals, edge_midpoints=midpoints,
                edge_lengths=lengths, boundary_edges=boundary,
                domain=tuple(float(v) for v in domain), n=n)


def build_crisscross_mesh(n: int, domain=(-1.0, 1.0, -1.0, 1.0)) -> Mesh:
    """Criss-cross mesh with ``n`` squares per side on ``[x0,x1]x[y0,y1]``."""
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    x0, x1, y0, y1 = (float(v) for v in domain)
    if not (np.isfinite([x0, x1, y0, y1]).all() and x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {domain!r}")

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    corners = np.column_stack([gx.ravel(), gy.ravel()])
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    mx, my = np.meshgrid(cx, cy, indexing="xy")
    centers = np.column_stack([mx.ravel(), my.ravel()])
    vertices = np.vstack([corners, centers])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    sw = j * (n + 1) + i
    se = sw + 1
    nw = sw + n + 1
    ne = nw + 1
    c = (n + 1) ** 2 + j * n + i
    triangles = np.concatenate([
        np.column_stack([sw, se, c]),
        np.column_stack([se, ne, c]),
        np.column_stack([ne, nw, c]),
        np.column_stack([nw, sw, c]),
    ])
    return build_mesh(vertices, triangles, (x0, x1, y0, y1), n)


def refine_uniform(vertices: np.ndarray, triangles: np.ndarray):
    """Split every triangle into four through its edge midpoints.

    Returns ``(vertices, triangles, parent)`` where ``parent[k]`` is the
    index of the coarse triangle containing child ``k``.
    """
    nt = len(triangles)
    local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    mid = len(vertices) + inverse.reshape(nt, 3)
    new_vertices = np.vstack([vertices, 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])])
    v0, v1, v2 = triangles.T
    m0, m1, m2 = mid.T
    children = np.concatenate([
        np.column_stack([v0, m2, m1]),
        np.column_stack([m2, v1, m0]),
        np.column_stack([m1, m0, v2]),
        np.column_stack([m0, m1, m2]),
    ])
    parent = np.tile(np.arange(nt), 4)
    return new_vertices, children, parent
