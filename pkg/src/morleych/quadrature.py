"""Quadrature rules on triangles, in barycentric form."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points ``(nq, 3)`` and weights summing to one.

    ``integral over K of f ~= area(K) * sum(weights * f(points))``.
    """
    degree: int
    points: np.ndarray
    weights: np.ndarray

    def physical_points(self, corners: np.ndarray) -> np.ndarray:
        """Map to physical space; ``corners`` is ``(..., 3, 2)``."""
        return np.einsum("qi,...id->...qd", self.points, corners)


def _symmetric(center, orbits3, orbits6):
    pts, wts = [], []
    if center is not None:
        pts.append((1 / 3, 1 / 3, 1 / 3))
        wts.append(center)
    for a, w in orbits3:
        b = 1.0 - 2.0 * a
        for p in ((a, a, b), (a, b, a), (b, a, a)):
            pts.append(p)
            wts.append(w)
    for a, b, w in orbits6:
        c = 1.0 - a - b
        for p in sorted(set(itertools.permutations((a, b, c)))):
            pts.append(p)
            wts.append(w)
    return np.array(pts), np.array(wts)


# Dunavant's 16-point rule, exact through degree 8.
_DUNAVANT8 = _symmetric(
    0.144315607677787,
    [(0.459292588292723, 0.095091634267285),
     (0.170569307751760, 0.103217370534718),
     (0.050547228317031, 0.032458497623198)],
    [(0.263112829634638, 0.008394777409958, 0.027230314174435)],
)


def _collapsed_gauss(degree: int):
    m = degree // 2 + 1
    u, wu = roots_legendre(m)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    t, wt = roots_jacobi(m, 1.0, 0.0)
    v = 0.5 * (t + 1.0)
    wv = 0.25 * wt
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    x = (uu * (1.0 - vv)).ravel()
    y = vv.ravel()
    return np.column_stack([1.0 - x - y, x, y]), ww.ravel()


@lru_cache(maxsize=None)
def quadrature_rule(degree: int = 8) -> QuadratureRule:
    """Positive-weight rule exact for polynomials up to ``degree``."""
    if int(degree) != degree or not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree!r} (1..{MAX_DEGREE})")
    degree = int(degree)
    if degree == 1:
        pts, wts = np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    elif degree == 2:
        pts = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
        wts = np.full(3, 1 / 3)
    elif degree == 8:
        pts, wts = _DUNAVANT8
    else:
        pts, wts = _collapsed_gauss(degree)
    wts = wts / wts.sum()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(degree, pts, wts)


@lru_cache(maxsize=None)
def gauss_line(npts: int = 3):
    """Gauss-Legendre points on [0, 1] with weights summing to one."""
    s, w = roots_legendre(npts)
    return 0.5 * (s + 1.0), 0.5 * w
