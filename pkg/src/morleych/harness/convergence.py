"""Convergence studies: interpolation, enrichment, projection and
manufactured-solution runs of the time stepper."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from ..analytic import Analytic, T, X, Y, cahn_hilliard_source
from ..dynamics import SimulationConfig, run
from ..enrich import broken_norm, enrich_to_hct, interpolate_morley
from ..forms import default_alpha, elliptic_projection
from ..invlap import h_minus1_norm, hat_inv_laplacian, subtract_mean, tilde_inv_laplacian
from ..mesh import build_crisscross_mesh

log = logging.getLogger(__name__)


def fitted_order(sizes, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(size)``."""
    sizes = np.asarray(sizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(sizes) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(sizes), np.log(errors), 1)
    return float(slope)


@dataclass
class ConvergenceReport:
    kind: str
    variable: str                       # "h" or "k"
    norms: list[str]
    resolutions: list[float] = field(default_factory=list)
    errors: list[list[float]] = field(default_factory=list)

    def add(self, resolution: float, errs: dict) -> None:
        if self.resolutions and not resolution < self.resolutions[-1]:
            raise ValueError("resolutions must be strictly decreasing")
        self.resolutions.append(float(resolution))
        self.errors.append([float(errs[k]) for k in self.norms])

    def column(self, norm: str) -> np.ndarray:
        i = self.norms.index(norm)
        return np.array([e[i] for e in self.errors])

    @property
    def orders(self) -> dict:
        return {k: fitted_order(self.resolutions, self.column(k)) for k in self.norms}


def manufactured_solution() -> Analytic:
    return Analytic(sp.exp(-T) * sp.cos(sp.pi * X) * sp.cos(sp.pi * Y),
                    name="exp(-t)cos(pi x)cos(pi y)")


SMOOTH = Analytic(sp.sin(sp.pi * X) * sp.cos(sp.pi * Y), name="sin(pi x)cos(pi y)")


def interpolation_study(ns=(8, 16, 32), v: Analytic = SMOOTH) -> ConvergenceReport:
    rep = ConvergenceReport("interpolation", "h", ["L2", "H1semi", "H2semi"])
    for n in ns:
        mesh = build_crisscross_mesh(n)
        iv = interpolate_morley(mesh, v)
        rep.add(mesh.h, {name: broken_norm(mesh, iv, j, minus=v)
                         for j, name in enumerate(rep.norms)})
    return rep


def enrichment_study(ns=(8, 16, 32), v: Analytic = SMOOTH) -> ConvergenceReport:
    rep = ConvergenceReport("enrichment", "h", ["L2", "H1semi", "H2semi"])
    for n in ns:
        mesh = build_crisscross_mesh(n)
        iv = interpolate_morley(mesh, v)
        ev = enrich_to_hct(mesh, iv)
        rep.add(mesh.h, {name: broken_norm(mesh, ev, j, minus=iv)
                         for j, name in enumerate(rep.norms)})
    return rep


def projection_study(u: Analytic, eps: float, ns=(8, 16, 32), alpha=None) -> ConvergenceReport:
    """``P_h u - u`` and ``P_h u - I_h u`` in broken norms."""
    rep = ConvergenceReport("projection", "h", ["L2", "H1semi", "H2", "L2_vs_interp"])
    for n in ns:
        mesh = build_crisscross_mesh(n)
        p = elliptic_projection(mesh, u, eps, alpha)
        iu = interpolate_morley(mesh, u, constrained=True)
        rep.add(mesh.h, {"L2": broken_norm(mesh, p, 0, minus=u),
                         "H1semi": broken_norm(mesh, p, 1, minus=u),
                         "H2": broken_norm(mesh, p, 2, minus=u, full=True),
                         "L2_vs_interp": broken_norm(mesh, p, 0, minus=iu)})
    return rep


def inverse_laplacian_study(ns=(8, 16, 32), beta: float = 1.0) -> ConvergenceReport:
    """Both discrete inverse Laplacians of ``zeta = I_h cos(pi x)``.

    ``inv_lap zeta`` is taken as ``-cos(pi x)/pi^2``.  The tilde operator is
    measured in the full broken H^1 norm, the hat operator in the full
    broken H^2 norm.
    """
    potential = Analytic(-sp.cos(sp.pi * X) / sp.pi ** 2, name="-cos(pi x)/pi^2")
    zeta_fn = Analytic(sp.cos(sp.pi * X))
    rep = ConvergenceReport("inverse-laplacian", "h", ["tilde_H1", "hat_H2"])
    for n in ns:
        mesh = build_crisscross_mesh(n)
        zeta = subtract_mean(mesh, interpolate_morley(mesh, zeta_fn, constrained=True))
        tilde = tilde_inv_laplacian(mesh, zeta, beta)
        hat = hat_inv_laplacian(mesh, zeta, potential, beta)
        rep.add(mesh.h, {"tilde_H1": broken_norm(mesh, tilde, 1, minus=potential, full=True),
                         "hat_H2": broken_norm(mesh, hat, 2, minus=potential, full=True)})
    return rep


MANUFACTURED_NORMS = ["Hm1", "L2", "H2", "Hm1_direct", "L2_direct", "H2_direct"]


def _run_manufactured(u_exact, eps, n, dt, t_final, alpha, newton_tol, mesh=None):
    source = cahn_hilliard_source(u_exact, eps)
    cfg = SimulationConfig(epsilon=eps, dt=dt, t_final=t_final, n=n, newton_tol=newton_tol,
                           alpha=alpha, init_mode="projection", initial="manufactured")
    mesh = mesh or build_crisscross_mesh(n)
    return run(cfg, u0=u_exact.at(0.0), forcing=source.at, mesh=mesh)


def manufactured_errors(u_exact: Analytic, eps: float, n: int, dt: float, t_final: float,
                        alpha=None, newton_tol: float = 1e-10, reference=None) -> dict:
    """Run the forced scheme and measure the final-time errors.

    ``theta = P_h u(T) - u_h`` gives the ``Hm1``/``L2``/``H2`` columns; the
    ``_direct`` columns compare with ``u(T)`` itself (``Hm1_direct`` uses the
    Morley interpolant).  H^-1 values are taken after removing the mean.
    When ``reference`` (a final state on the same mesh, from a much smaller
    step) is given, ``Hm1_temporal`` measures ``u_h - reference``.
    """
    mesh = build_crisscross_mesh(n)
    res = _run_manufactured(u_exact, eps, n, dt, t_final, alpha, newton_tol, mesh)
    t_end = res.trace.time[-1]
    u_end = u_exact.at(t_end)
    a = default_alpha(eps) if alpha is None else alpha
    theta = elliptic_projection(mesh, u_end, eps, a) - res.u
    direct = interpolate_morley(mesh, u_end, constrained=True) - res.u
    out = {
        "Hm1": h_minus1_norm(mesh, theta, remove_mean=True),
        "L2": broken_norm(mesh, theta, 0),
        "H2": broken_norm(mesh, theta, 2, full=True),
        "Hm1_direct": h_minus1_norm(mesh, direct, remove_mean=True),
        "L2_direct": broken_norm(mesh, res.u, 0, minus=u_end),
        "H2_direct": broken_norm(mesh, res.u, 2, minus=u_end, full=True),
    }
    if reference is not None:
        out["Hm1_temporal"] = h_minus1_norm(mesh, res.u - reference, remove_mean=True)
    return out


SPACE_T_FINAL = 1e-3
TIME_T_FINAL = 0.04


def manufactured_convergence(study: str, u_exact: Analytic | None = None, eps: float = 0.5,
                             resolutions=None, dt: float = 1e-5, n: int = 32,
                             t_final: float | None = None, ref_factor: int = 8) -> ConvergenceReport:
    """Space (``resolutions`` = mesh n values) or time (``resolutions`` = steps) study.

    The time study also reports ``Hm1_temporal``: the distance to a run on
    the same mesh with step ``min(resolutions) / ref_factor``, which removes
    the spatial part of the error.
    """
    u_exact = u_exact or manufactured_solution()
    if study == "space":
        resolutions = resolutions or (8, 16, 32)
        t_final = t_final if t_final is not None else SPACE_T_FINAL
        rep = ConvergenceReport("space", "h", list(MANUFACTURED_NORMS))
        for m in resolutions:
            errs = manufactured_errors(u_exact, eps, m, dt, t_final)
            rep.add(2.0 / m, errs)
            log.info("space n=%d %s", m, errs)
        return rep
    if study == "time":
        resolutions = resolutions or (4e-3, 2e-3, 1e-3)
        t_final = t_final if t_final is not None else TIME_T_FINAL
        k_ref = min(resolutions) / ref_factor
        ref = _run_manufactured(u_exact, eps, n, k_ref, t_final, None, 1e-10).u
        rep = ConvergenceReport("time", "k", list(MANUFACTURED_NORMS) + ["Hm1_temporal"])
        for k in resolutions:
            errs = manufactured_errors(u_exact, eps, n, k, t_final, reference=ref)
            rep.add(k, errs)
            log.info("time k=%g %s", k, errs)
        return rep
    raise ValueError(f"unknown study {study!r}")
