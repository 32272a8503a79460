"""Zero level set of a Morley field by marching triangles on vertex values."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..mesh import Mesh


def _crossing(mesh: Mesh, edge: int, u: np.ndarray):
    a, b = mesh.edges[edge]
    ua, ub = u[a], u[b]
    t = ua / (ua - ub)
    if t <= 0.0:
        return ("v", int(a)), mesh.vertices[a]
    if t >= 1.0:
        return ("v", int(b)), mesh.vertices[b]
    return ("e", int(edge)), mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a])


def zero_level_segments(mesh: Mesh, field: np.ndarray):
    """Segments ``(key0, p0, key1, p1)`` where the vertex-linear field vanishes.

    Values equal to zero count as positive, so every triangle contributes at
    most one segment.
    """
    u = np.asarray(field, dtype=float)[:mesh.n_vertices]
    pos = u[mesh.triangles] >= 0.0
    npos = pos.sum(axis=1)
    segments = []
    for t in np.flatnonzero((npos == 1) | (npos == 2)):
        # the odd-one-out vertex i; the level set crosses the edges touching it,
        # i.e. local edges i+1 and i+2
        lone = np.flatnonzero(pos[t] != (npos[t] == 2))[0]
        e1 = mesh.tri_edges[t, (lone + 1) % 3]
        e2 = mesh.tri_edges[t, (lone + 2) % 3]
        k1, p1 = _crossing(mesh, e1, u)
        k2, p2 = _crossing(mesh, e2, u)
        if k1 != k2:
            segments.append((k1, p1, k2, p2))
    return segments


def extract_zero_level_set(field: np.ndarray, mesh: Mesh) -> list[np.ndarray]:
    """Polylines ``(npts, 2)`` approximating ``{u = 0}``; closed loops repeat
    their first point at the end."""
    segments = zero_level_segments(mesh, field)
    adj = defaultdict(list)
    point = {}
    for idx, (k1, p1, k2, p2) in enumerate(segments):
        adj[k1].append(idx)
        adj[k2].append(idx)
        point[k1], point[k2] = p1, p2
    used = np.zeros(len(segments), dtype=bool)

    def walk(start):
        keys = [start]
        cur = start
        while True:
            nxt = [s for s in adj[cur] if not used[s]]
            if not nxt:
                return keys
            s = nxt[0]
            used[s] = True
            k1, _, k2, _ = segments[s]
            cur = k2 if k1 == cur else k1
            keys.append(cur)

    polylines = []
    # open chains first start at endpoints of odd degree
    starts = [k for k, segs in adj.items() if len(segs) % 2 == 1]
    for k in starts + list(adj):
        while any(not used[s] for s in adj[k]):
            keys = walk(k)
            polylines.append(np.array([point[q] for q in keys]))
    return polylines
