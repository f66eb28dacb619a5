"""Invariant U(1) connections, their curvature and the residuals of the
gauge-theoretic equations studied here.

Each equation is expressed as a list of *parts*.  A form part is a list of
terms whose sum must vanish; keeping the terms separate lets the checker
report a residual relative to the size of the largest term.  The deformed
Spin(7) equations also have a ``Lambda^4_7`` part, which is a pointwise
projection and is evaluated numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping

import numpy as np

from . import scalar
from .algebra import Frame, _lambda47_flat, cyclic
from .exterior import Form, d, hodge, power, wedge
from .geometries import Geometry
from .scalar import Expr

__all__ = [
    "ConnectionAnsatz", "Equation", "curvature", "residual_holomorphic",
    "residual_hym", "residual_dhym", "residual_spin7", "residual_dspin7",
    "f4_over_vol", "equation_parts", "ResidualReport", "check_numeric",
    "phase_pair",
]


@dataclass
class ConnectionAnsatz:
    """``A = sum coefficient[label] * theta_label`` on ``geometry``."""

    geometry: Geometry
    coefficients: Mapping[str, Expr]

    def form(self) -> Form:
        cf = self.geometry.coframe
        out = cf.zero(1)
        for lab, c in self.coefficients.items():
            out = out + cf.e(lab, coeff=c)
        return out


def curvature(A: ConnectionAnsatz | Form) -> Form:
    """``F = dA`` (the connection is abelian)."""
    return d(A.form() if isinstance(A, ConnectionAnsatz) else A)


def phase_pair(theta: float) -> tuple[float, float]:
    return float(np.sin(theta)), float(np.cos(theta))


@dataclass(frozen=True)
class Equation:
    """An equation for the curvature.

    ``kind`` is one of ``holomorphic``, ``hym``, ``dhym``, ``spin7`` or
    ``dspin7``.  ``index`` selects the Kahler form (1, 2, 3 or None for the
    single Kahler form of the flag) or the Spin(7) form (1, 2, 3 or
    ``"bs"``).
    """

    kind: str
    index: object = None
    lam: float = 0.0
    phase: tuple = (0.0, 1.0)

    @property
    def id(self) -> str:
        if self.kind == "holomorphic":
            return f"holomorphic[omega{self.index}]"
        if self.kind == "hym":
            return f"hym[omega{self.index or ''}, lambda={self.lam:g}]"
        if self.kind == "dhym":
            th = float(np.arctan2(*self.phase))
            return f"dhym[omega{self.index or ''}, theta={th:.12g}]"
        if self.kind == "spin7":
            return f"spin7[Phi{self.index}]"
        if self.kind == "dspin7":
            return f"dspin7[Phi{self.index}]"
        return self.kind


def _coef(x, F: Form):
    """Scalar usable as a multiplier for forms of F's mode."""
    if F.symbolic:
        if isinstance(x, Expr):
            return x
        return scalar.Const(Fraction(x))
    return float(x) if not isinstance(x, np.ndarray) else x


def _holo_parts(F, g: Geometry, i: int):
    j, k = cyclic(i)
    wj, wk = g.kahler(j), g.kahler(k)
    m = g.n // 2
    if m == 1:
        return [[wedge(F, wj)], [wedge(F, wk)]]
    # (wj + i wk)^2 = (wj^2 - wk^2) + 2 i wj ^ wk
    return [[wedge(F, wedge(wj, wj)), -wedge(F, wedge(wk, wk))],
            [wedge(F, wedge(wj, wk)) * 2]]


def _hym_parts(F, g: Geometry, i, lam):
    w = g.kahler(i)
    n = g.n
    lead = wedge(F, power(w, n - 1)) if n > 1 else F
    top = power(w, n)
    return [[lead, top * _coef(-lam, top)]]


def _powers(F, w, n):
    Fp = [None] * (n + 1)
    wp = [None] * (n + 1)
    for m in range(1, n + 1):
        Fp[m] = F if m == 1 else wedge(Fp[m - 1], F)
        wp[m] = w if m == 1 else wedge(wp[m - 1], w)
    return Fp, wp


def _dhym_parts(F, g: Geometry, i, phase):
    """Terms of ``cos(theta) Im (w + iF)^n - sin(theta) Re (w + iF)^n``."""
    s, c = phase
    w = g.kahler(i)
    n = g.n
    Fp, wp = _powers(F, w, n)
    terms = []
    for m in range(n + 1):
        if m == 0:
            mono = wp[n]
        elif m == n:
            mono = Fp[n]
        else:
            mono = wedge(Fp[m], wp[n - m])
        b = comb(n, m)
        if m % 2:
            factor = c * b * (-1) ** ((m - 1) // 2)
        else:
            factor = -s * b * (-1) ** (m // 2)
        if factor == 0:
            continue
        terms.append(mono * _coef(factor, mono))
    return [terms]


def _spin7_form(g: Geometry, which):
    return g.spin7(which)


def _spin7_parts(F, g: Geometry, which, metric):
    Phi = _spin7_form(g, which)
    q = Fraction(1, 4)
    return [[F * q, hodge(wedge(F, Phi), metric) * q]]


def _dspin7_parts(F, g: Geometry, which, metric):
    Phi = _spin7_form(g, which)
    q = Fraction(1, 4)
    s = Fraction(-1, 24)
    F3 = hodge(power(F, 3), metric)
    form_part = [F * q, hodge(wedge(F, Phi), metric) * q, F3 * s,
                 hodge(wedge(F3, Phi), metric) * s]
    return [form_part, ("pi47", wedge(F, F), Phi)]


def equation_parts(eq: Equation, F: Form, g: Geometry):
    """Residual parts of ``eq`` for curvature ``F`` on ``g``.

    ``F`` and ``g`` must be in the same mode (both symbolic, or both
    evaluated on the same radii).
    """
    metric = g.metric
    if eq.kind == "holomorphic":
        return _holo_parts(F, g, eq.index)
    if eq.kind == "hym":
        return _hym_parts(F, g, eq.index, eq.lam)
    if eq.kind == "dhym":
        return _dhym_parts(F, g, eq.index, eq.phase)
    if eq.kind == "spin7":
        return _spin7_parts(F, g, eq.index, metric)
    if eq.kind == "dspin7":
        return _dspin7_parts(F, g, eq.index, metric)
    raise ValueError(f"unknown equation kind {eq.kind!r}")


def _sum(terms):
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def residual_holomorphic(A: ConnectionAnsatz, i: int):
    """Real and imaginary parts of ``F ^ (omega_j + i omega_k)^{n/2}``."""
    F = curvature(A)
    return tuple(_sum(p) for p in _holo_parts(F, A.geometry, i))


def residual_hym(A: ConnectionAnsatz, i, lam) -> Form:
    F = curvature(A)
    return _sum(_hym_parts(F, A.geometry, i, lam)[0])


def residual_dhym(A: ConnectionAnsatz, i, phase) -> Form:
    """``cos(theta) Im (omega_i + iF)^n - sin(theta) Re (omega_i + iF)^n``;
    ``phase`` is ``(sin theta, cos theta)``."""
    F = curvature(A)
    return _sum(_dhym_parts(F, A.geometry, i, phase)[0])


def residual_spin7(A: ConnectionAnsatz, which) -> Form:
    """``pi^2_7(F) = (F + *(F ^ Phi)) / 4``."""
    F = curvature(A)
    return _sum(_spin7_parts(F, A.geometry, which, A.geometry.metric)[0])


def residual_dspin7(A: ConnectionAnsatz, which):
    """``(F ^ F, pi^2_7(F - *F^3 / 6))``.  The first entry must have no
    ``Lambda^4_7`` component (see :func:`coframe.algebra.pi47_norm`)."""
    F = curvature(A)
    parts = _dspin7_parts(F, A.geometry, which, A.geometry.metric)
    return parts[1][1], _sum(parts[0])


def f4_over_vol(A: ConnectionAnsatz | Form, g: Geometry | None = None) -> Expr:
    """``*(F^4)``, the ratio of ``F^4`` to the volume form."""
    if isinstance(A, ConnectionAnsatz):
        g = A.geometry
        F = curvature(A)
    else:
        F = A
    top = power(F, 4)
    vol = g.metric.volume()
    (key, v), = vol.terms.items()
    num = top.terms.get(key, scalar.ZERO)
    return num / v


@dataclass
class ResidualReport:
    family: str
    equation: str
    r: np.ndarray
    relative: np.ndarray
    tol: float
    notes: dict = field(default_factory=dict)

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative)) if len(self.relative) else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.relative))) and self.max_relative <= self.tol


def _sup(form: Form, n: int) -> np.ndarray:
    out = np.zeros(n)
    for v in form.terms.values():
        out = np.maximum(out, np.abs(np.broadcast_to(v, (n,))))
    return out


_L47_CACHE: dict = {}


def _lambda47_cached(fr: Frame, Phi: Form) -> np.ndarray:
    key = (fr.geometry.id, tuple(np.round(fr.vec(Phi), 11)))
    U = _L47_CACHE.get(key)
    if U is None:
        U = _lambda47_flat(fr, Phi)
        _L47_CACHE[key] = U
    return U


def _at(form: Form, s: int) -> Form:
    return form.map_coefficients(lambda v: float(np.broadcast_to(v, (s + 1,))[s])
                                 if np.ndim(v) == 0 else float(v[s]))


def _abs_form(f: Form) -> Form:
    return f.map_coefficients(np.abs)


def _abs_geometry(g_num: Geometry) -> Geometry:
    metric = g_num.metric
    m = type(metric).__new__(type(metric))
    m.__dict__.update(metric.__dict__)
    m.scales = {k: np.abs(v) for k, v in metric.scales.items()}
    m._osign = 1
    forms = {k: _abs_form(v) for k, v in g_num.forms.items()}
    return Geometry(g_num.id, g_num.coframe, m, forms, g_num.n, g_num.domain_min,
                    dict(g_num.params), g_num.isotropy)


def relative_parts(parts, magnitudes, g_sym: Geometry, r: np.ndarray, env) -> np.ndarray:
    """Per-sample relative residual of numeric parts.

    ``magnitudes`` is the same construction applied to absolute values of
    every coefficient and scale, so each of its slots bounds the size of the
    individual products that cancel in the residual.  A form part
    contributes ``sup|sum| / (1 + max sup|term magnitude|)``; a
    ``Lambda^4_7`` part contributes ``|pi47(a)| / (1 + |magnitude of a|)``.
    """
    n = len(r)
    rel = np.zeros(n)
    for part, mag in zip(parts, magnitudes):
        if isinstance(part, tuple) and part[0] == "pi47":
            _, FF, Phi_sym = part
            FF_mag = mag[1]
            vals = np.zeros(n)
            for s in range(n):
                fr = Frame(g_sym, r[s], env)
                U = _lambda47_cached(fr, Phi_sym)
                v = fr.vec(_at(FF, s))
                vm = np.abs(fr.vec(_at(FF_mag, s)))
                vals[s] = np.linalg.norm(U.T @ v) / (1 + np.linalg.norm(vm))
            rel = np.maximum(rel, vals)
            continue
        total = _sup(_sum(part), n)
        scale = np.zeros(n)
        for t in mag:
            scale = np.maximum(scale, _sup(t, n))
        rel = np.maximum(rel, total / (1 + scale))
    return rel


def _numeric_geometry(g: Geometry, eq: Equation, r, env) -> Geometry:
    g_num = g.evaluate(r, env)
    if eq.kind in ("spin7", "dspin7"):
        which = eq.index
        key = "Phi" if which == "bs" else f"Phi{which}"
        g_num.forms[key] = g.spin7(which).evaluate(r, g.env(env))
    return g_num


def check_numeric(F_num: Form, g: Geometry, eq: Equation, r: np.ndarray, env,
                  F_mag: Form | None = None) -> np.ndarray:
    """Relative residual of ``eq`` for a curvature already evaluated on ``r``.

    ``F_mag`` optionally gives coefficient magnitudes for ``F`` (defaults to
    ``|F_num|``).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    g_num = _numeric_geometry(g, eq, r, env)
    g_abs = _abs_geometry(g_num)
    F_abs = F_mag if F_mag is not None else _abs_form(F_num)
    parts = equation_parts(eq, F_num, g_num)
    mags = equation_parts(eq, F_abs, g_abs)
    if eq.kind == "dspin7":
        parts = [parts[0], ("pi47", parts[1][1], g.spin7(eq.index))]
    return relative_parts(parts, mags, g, r, g.env(env))
