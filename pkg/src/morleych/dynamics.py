"""Fully implicit Morley time stepping for the Cahn-Hilliard equation.

Each step solves, on the constrained Morley space,
``M (u - u_prev) / k + eps A u + (1/eps) N(u) = F`` by Newton's method,
where ``F`` is an optional forcing load (zero for the plain equation).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .analytic import Analytic, named_initial
from .element import free_dofs, morley_basis
from .enrich import interpolate_morley
from .forms import (POTENTIAL, assemble_a_h, assemble_mass, default_alpha, elliptic_projection,
                    nonlinear_jacobian, nonlinear_residual, scatter)
from .linalg import SolverError, linear_solve
from .mesh import Mesh, build_crisscross_mesh
from .norms import broken_norm, integral, max_abs

log = logging.getLogger(__name__)

__all__ = ["SimulationConfig", "Operators", "EnergyTrace", "StepFailure", "initialize", "step",
           "run", "linear_solve", "energy"]


class StepFailure(RuntimeError):
    """Newton did not converge; carries the last residual norm."""

    def __init__(self, message: str, residual: float, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


@dataclass
class SimulationConfig:
    epsilon: float = 0.05
    dt: float = 1e-4
    t_final: float = 5e-3
    n: int = 50
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    alpha: float | None = None
    beta: float = 1.0
    initial: str = "circle-tanh"
    init_mode: str = "projection"
    output_every: int = 0
    out_dir: str = "output"
    line_search: bool = True
    retry_halving: bool = False
    linf_sampling: str = "vertices"

    def __post_init__(self):
        for name in ("epsilon", "dt", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0 < self.newton_tol <= 1e-4:
            raise ValueError(f"newton_tol must lie in (0, 1e-4], got {self.newton_tol!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.init_mode not in ("projection", "interpolation"):
            raise ValueError(f"init_mode must be projection or interpolation, got {self.init_mode!r}")
        if self.linf_sampling not in ("vertices", "quadrature"):
            raise ValueError(f"linf_sampling must be vertices or quadrature, got {self.linf_sampling!r}")
        self.n = int(self.n)

    @property
    def alpha_value(self) -> float:
        return default_alpha(self.epsilon) if self.alpha is None else float(self.alpha)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def mesh_constraint_report(config: SimulationConfig, mesh: Mesh, gamma1: float = 0.0) -> dict:
    """Evaluate the theory's step-size conditions at unit constants.

    Only informational: the constants are unknown.
    """
    h, k, eps = mesh.h, config.dt, config.epsilon
    checks = {
        "k >= h^2 / eps^(4*gamma1+3)": k >= h ** 2 / eps ** (4 * gamma1 + 3),
        "k <= eps^3": k <= eps ** 3,
        "h <= eps^2": h <= eps ** 2,
    }
    for name, ok in checks.items():
        if not ok:
            log.warning("mesh constraint (unit constant) violated: %s", name)
    return checks


class Operators:
    """Assembled constant operators and the Newton machinery for one mesh."""

    def __init__(self, mesh: Mesh, eps: float, dt: float):
        self.mesh = mesh
        self.eps = eps
        self.dt = dt
        self.M = assemble_mass(mesh)
        self.A = assemble_a_h(mesh)
        self.free = free_dofs(mesh)
        self._linear = (self.M / dt + eps * self.A).tocsr()

    def with_dt(self, dt: float) -> "Operators":
        new = object.__new__(Operators)
        new.__dict__.update(self.__dict__)
        new.dt = dt
        new._linear = (self.M / dt + self.eps * self.A).tocsr()
        return new

    def residual(self, u, u_prev, load=None) -> np.ndarray:
        r = self.M @ ((u - u_prev) / self.dt) + self.eps * (self.A @ u) \
            + nonlinear_residual(self.mesh, u) / self.eps
        if load is not None:
            r = r - load
        return r[self.free]

    def jacobian(self, u):
        J = self._linear + nonlinear_jacobian(self.mesh, u) / self.eps
        return J[self.free][:, self.free]


@dataclass
class NewtonStats:
    iterations: int
    residuals: list[float]
    converged: bool


def step(u_prev: np.ndarray, config: SimulationConfig, ops: Operators, load=None,
         guess: np.ndarray | None = None):
    """Advance one implicit step; returns ``(u, NewtonStats)``."""
    u = np.array(u_prev if guess is None else guess, dtype=float)
    r = ops.residual(u, u_prev, load)
    r0 = float(np.linalg.norm(r))
    ref = max(r0, float(np.linalg.norm(ops.residual(u_prev, u_prev, load))))
    target = max(config.newton_tol * ref, 1e-14)
    history = [r0]
    if r0 <= target:
        return u, NewtonStats(0, history, True)
    for it in range(1, config.newton_max_iter + 1):
        try:
            delta = linear_solve(ops.jacobian(u), -r, rtol=1e-10)
        except SolverError as exc:
            raise StepFailure(f"Newton linear solve failed: {exc}", history[-1]) from exc
        lam = 1.0
        trial = u.copy()
        trial[ops.free] += delta
        r_new = ops.residual(trial, u_prev, load)
        if config.line_search:
            tries = 0
            while np.linalg.norm(r_new) > history[-1] and tries < 8:
                lam *= 0.5
                tries += 1
                trial = u.copy()
                trial[ops.free] += lam * delta
                r_new = ops.residual(trial, u_prev, load)
        u, r = trial, r_new
        history.append(float(np.linalg.norm(r)))
        if not np.isfinite(history[-1]):
            break
        if history[-1] <= target:
            return u, NewtonStats(it, history, True)
        # residual stuck at roundoff: the update no longer changes u
        if lam * np.abs(delta).max() <= 1e-14 * max(1.0, np.abs(u).max()):
            return u, NewtonStats(it, history, True)
    raise StepFailure(f"Newton did not converge in {config.newton_max_iter} iterations "
                      f"(residual {history[-1]:.3e}, target {target:.3e})", history[-1])


def energy(mesh: Mesh, u: np.ndarray, eps: float) -> float:
    """``(eps/2) ||grad u||^2 + (1/(4 eps)) ||u^2 - 1||^2`` with broken norms."""
    b = morley_basis(mesh)
    uq = b.values(u)
    gq = b.grads(u)
    dens = 0.5 * eps * np.einsum("tqd,tqd->tq", gq, gq) + (uq * uq - 1.0) ** 2 / (4.0 * eps)
    return b.integrate(dens)


def resolve_initial(config: SimulationConfig) -> Analytic:
    return named_initial(config.initial, config.epsilon)


def initialize(config: SimulationConfig, mesh: Mesh | None = None, u0: Analytic | None = None):
    """Initial Morley field: elliptic projection (default) or interpolation."""
    mesh = mesh or build_crisscross_mesh(config.n)
    u0 = u0 or resolve_initial(config)
    if config.init_mode == "projection":
        if not hasattr(u0, "bilaplacian"):
            raise ValueError("projection initialisation needs analytic derivative data")
        return elliptic_projection(mesh, u0, config.epsilon, config.alpha_value)
    return interpolate_morley(mesh, u0, constrained=True)


@dataclass
class EnergyTrace:
    step: list[int] = field(default_factory=list)
    time: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    linf: list[float] = field(default_factory=list)
    increment_l2: list[float] = field(default_factory=list)
    newton_iters: list[int] = field(default_factory=list)
    newton_residuals: list[list[float]] = field(default_factory=list, repr=False)

    COLUMNS = ("step", "time", "energy", "mass", "linf", "increment_l2", "newton_iters")

    def record(self, mesh, u, step_index, t, eps, increment, stats, sampling="vertices"):
        self.step.append(int(step_index))
        self.time.append(float(t))
        self.energy.append(energy(mesh, u, eps))
        self.mass.append(integral(mesh, u))
        self.linf.append(max_abs(mesh, u, sampling))
        self.increment_l2.append(float(increment))
        self.newton_iters.append(0 if stats is None else stats.iterations)
        self.newton_residuals.append([] if stats is None else list(stats.residuals))

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def __len__(self):
        return len(self.step)


@dataclass
class RunResult:
    trace: EnergyTrace
    snapshots: list[tuple[int, float, np.ndarray]]
    mesh: Mesh
    u: np.ndarray
    failure: StepFailure | None = None


def run(config: SimulationConfig, u0: Analytic | None = None, forcing=None,
        mesh: Mesh | None = None, callback=None, raise_on_failure: bool = True) -> RunResult:
    """Advance ``ceil(t_final / dt)`` steps from the configured initial data.

    ``forcing(t)`` may return an :class:`Analytic` source evaluated at the new
    time level.  Snapshots are kept every ``output_every`` steps (0: first and
    last only).
    """
    mesh = mesh or build_crisscross_mesh(config.n)
    mesh_constraint_report(config, mesh)
    u = initialize(config, mesh, u0)
    ops = Operators(mesh, config.epsilon, config.dt)
    b = morley_basis(mesh)
    trace = EnergyTrace()
    trace.record(mesh, u, 0, 0.0, config.epsilon, 0.0, None, config.linf_sampling)
    snapshots = [(0, 0.0, u.copy())]
    t = 0.0
    failure = None
    for n in range(1, config.n_steps + 1):
        t_new = n * config.dt
        load = None
        if forcing is not None:
            g = forcing(t_new)
            x, y = b.quad_points[..., 0], b.quad_points[..., 1]
            load = scatter(b, np.einsum("tq,tqi->ti", b.quad_weights * g.value(x, y), b.phi))
        try:
            u_new, stats = _step_with_retry(u, config, ops, load)
        except StepFailure as exc:
            exc.trace = trace
            failure = exc
            log.error("step %d failed: %s", n, exc)
            if raise_on_failure:
                raise
            break
        inc = broken_norm(mesh, 0, u_new - u)
        u, t = u_new, t_new
        trace.record(mesh, u, n, t, config.epsilon, inc, stats, config.linf_sampling)
        if config.output_every and n % config.output_every == 0:
            snapshots.append((n, t, u.copy()))
        if callback is not None:
            callback(n, t, u, stats)
    if snapshots[-1][0] != trace.step[-1]:
        snapshots.append((trace.step[-1], t, u.copy()))
    return RunResult(trace, snapshots, mesh, u, failure)


def _step_with_retry(u, config, ops, load):
    try:
        return step(u, config, ops, load)
    except StepFailure:
        if not config.retry_halving:
            raise
    log.warning("retrying step with two half steps")
    half = ops.with_dt(ops.dt / 2)
    mid, s1 = step(u, config, half, load)
    out, s2 = step(mid, config, half, load)
    return out, NewtonStats(s1.iterations + s2.iterations, s1.residuals + s2.residuals, True)


def with_overrides(config: SimulationConfig, **kw) -> SimulationConfig:
    return replace(config, **kw)
