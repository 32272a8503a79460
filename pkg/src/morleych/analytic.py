"""Closed-form test functions with symbolic derivatives.

Derivative data (gradient, Hessian, Laplacian, bilaplacian, time
derivative) is produced by sympy and compiled to vectorised numpy callables.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import sympy as sp

X, Y, T = sp.symbols("x y t", real=True)


def _compile(expr):
    f = sp.lambdify((X, Y), expr, modules="numpy")

    def call(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), np.broadcast(x, y).shape).copy()

    return call


class Analytic:
    """A smooth function of ``(x, y)``, optionally depending on time ``t``.

    Call :meth:`at` to freeze the time before evaluating.
    """

    def __init__(self, expr, name: str | None = None):
        self.expr = sp.sympify(expr)
        self.name = name or str(self.expr)

    def __repr__(self):
        return f"Analytic({self.name})"

    @property
    def time_dependent(self) -> bool:
        return T in self.expr.free_symbols

    def at(self, t: float) -> "Analytic":
        return Analytic(self.expr.subs(T, t), name=f"{self.name}@t={t}")

    def _spatial(self):
        if self.time_dependent:
            raise ValueError(f"{self.name} depends on t; call .at(t) first")
        return self.expr

    @cached_property
    def hessian_exprs(self):
        e = self._spatial()
        return sp.diff(e, X, 2), sp.diff(e, X, Y), sp.diff(e, Y, 2)

    @cached_property
    def laplacian_expr(self):
        xx, _, yy = self.hessian_exprs
        return xx + yy

    @cached_property
    def bilaplacian_expr(self):
        lap = self.laplacian_expr
        return sp.diff(lap, X, 2) + sp.diff(lap, Y, 2)

    @cached_property
    def _value(self):
        return _compile(self._spatial())

    @cached_property
    def _grad(self):
        e = self._spatial()
        return _compile(sp.diff(e, X)), _compile(sp.diff(e, Y))

    @cached_property
    def _hess(self):
        return tuple(_compile(h) for h in self.hessian_exprs)

    @cached_property
    def _lap(self):
        return _compile(self.laplacian_expr)

    @cached_property
    def _bilap(self):
        return _compile(self.bilaplacian_expr)

    def value(self, x, y):
        return self._value(x, y)

    def __call__(self, x, y):
        return self._value(x, y)

    def grad(self, x, y):
        gx, gy = self._grad
        return gx(x, y), gy(x, y)

    def hessian(self, x, y):
        """Packed ``(..., 3)`` Hessian (xx, xy, yy)."""
        return np.stack([h(x, y) for h in self._hess], axis=-1)

    def laplacian(self, x, y):
        return self._lap(x, y)

    def bilaplacian(self, x, y):
        return self._bilap(x, y)

    def apply(self, fn) -> "Analytic":
        """New function ``fn(expr)`` (``fn`` acts on sympy expressions)."""
        return Analytic(fn(self.expr), name=f"fn({self.name})")


def from_string(text: str) -> Analytic:
    """Parse an expression in ``x``, ``y`` (and optionally ``t``)."""
    expr = sp.sympify(text, locals={"x": X, "y": Y, "t": T})
    extra = expr.free_symbols - {X, Y, T}
    if extra:
        raise ValueError(f"unknown symbols in {text!r}: {sorted(map(str, extra))}")
    return Analytic(expr, name=text)


def circle_tanh(eps: float, radius: float = 0.5) -> Analytic:
    d = sp.sqrt(X ** 2 + Y ** 2) - radius
    return Analytic(sp.tanh(d / (sp.sqrt(2) * eps)), name=f"circle-tanh(eps={eps})")


def two_circles_tanh(eps: float) -> Analytic:
    d1 = sp.sqrt((X + sp.Rational(3, 10)) ** 2 + Y ** 2) - sp.Rational(3, 10)
    d2 = sp.sqrt((X - sp.Rational(3, 10)) ** 2 + Y ** 2) - sp.Rational(1, 4)
    d = sp.Piecewise((d1, d1 <= d2), (d2, True))
    return Analytic(sp.tanh(d / (sp.sqrt(2) * eps)), name=f"two-circles-tanh(eps={eps})")


def named_initial(name: str, eps: float) -> Analytic:
    if name == "circle-tanh":
        return circle_tanh(eps)
    if name == "two-circles-tanh":
        return two_circles_tanh(eps)
    return from_string(name)


def cahn_hilliard_source(u: Analytic, eps: float) -> Analytic:
    """Forcing ``g`` for which ``u`` solves the forced Cahn-Hilliard equation.

    ``g = u_t + eps * lap(lap u) - (1/eps) * lap(u**3 - u)``.
    """
    e = u.expr
    lap = lambda w: sp.diff(w, X, 2) + sp.diff(w, Y, 2)  # noqa: E731
    g = sp.diff(e, T) + eps * lap(lap(e)) - lap(e ** 3 - e) / eps
    return Analytic(g, name=f"source[{u.name}]")
