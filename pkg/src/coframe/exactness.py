"""First integrals paired with the radial ODEs they integrate.

Each pair is ``(first_integral, ode)`` in ``r`` and one formal unknown.
Where the ODE is printed in closed form it is used verbatim; otherwise it
is taken from the residual that the gauge machinery produces for the
corresponding ansatz, so the certificate also checks the derivation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import scalar
from .gauge import ConnectionAnsatz, Equation, _sum, curvature, equation_parts, residual_dspin7
from .geometries import calabi
from .scalar import R, Expr, FormalSym, param, sqrt
from .solvers import exactness_check

__all__ = ["ExactPair", "exact_pairs", "get_pair", "certify"]


@dataclass
class ExactPair:
    id: str
    summary: str
    first_integral: Expr
    ode: Expr
    unknown: str
    env: dict
    r_range: tuple
    a_scale: float = 1.0


def _dominant(form, env, unknown, r_probe: float) -> Expr:
    """The coefficient of ``form`` largest at a probe point.

    Every non-zero slot of these residuals is the same scalar ODE times a
    nowhere-vanishing factor, so any of them will do; the largest avoids
    slots that only cancel to rounding.
    """
    e = dict(env)
    e[unknown] = 0.37
    e[unknown + "'"] = 0.61
    best, size = None, -1.0
    for v in form.terms.values():
        val = abs(float(scalar.evaluate(v, r_probe, e)))
        if val > size:
            best, size = v, val
    return best


def _eh_om1(env):
    f, t, S = FormalSym("f"), param("tan_theta"), param("C2") ** 2 + param("C3") ** 2
    c = param("c")
    I = 2 * t * f ** 2 + R ** 2 * f - Fraction(1, 8) * t * (R ** 4 - 16 * S / (R ** 4 - c))
    ode = 2 * (R ** 2 + 4 * f * t) * scalar.deriv(f) + 4 * R * f \
        - R ** 3 * (1 + 16 * S / (R ** 4 - c) ** 2) * t
    return I, ode, "f"


def _eh_om2(env):
    f, t, c = FormalSym("f"), param("tan_theta"), param("c")
    C1, C3 = param("C1"), param("C3")
    s = sqrt(R ** 4 - c)
    I = 2 * t * f ** 2 + s * f + 2 * t * (C1 ** 2 / R ** 4 + C3 ** 2 / (R ** 4 - c) - R ** 4 / 16)
    ode = (4 * t * f + s) * scalar.deriv(f) + 2 * R ** 3 / s * f \
        - 2 * (4 * C1 ** 2 / R ** 5 + 4 * C3 ** 2 * R ** 3 / (R ** 4 - c) ** 2 + R ** 3 / 4) * t
    return I, ode, "f"


def _om1_quartic(env):
    a, t, c, k = FormalSym("a"), param("tan_theta"), param("c"), param("k")
    I = (2 * t * a ** 4 - 4 * R ** 2 * a ** 3
         - ((3 * R ** 4 - 4 * c ** 2 + 4 * k ** 2) * t - 8 * c * k) * a ** 2
         + R ** 2 * (R ** 4 - 4 * c ** 2 + 4 * k ** 2 + 8 * c * k * t) * a
         + t * (R ** 4 / 8 - c ** 2 + k ** 2) * R ** 4 - 2 * c * k * R ** 4)
    lead = (8 * t * a ** 3 - 12 * a ** 2 * R ** 2
            - ((6 * R ** 4 - 8 * c ** 2 + 8 * k ** 2) * t - 16 * c * k) * a
            + R ** 2 * (R ** 4 - 4 * c ** 2 + 4 * k ** 2 + 8 * c * k * t))
    ode = (lead * scalar.deriv(a) - 8 * R * a ** 3 - 12 * R ** 3 * a ** 2 * t
           + (6 * R ** 5 - 8 * c ** 2 * R + 8 * k ** 2 * R + 16 * c * k * R * t) * a
           + (t * (R ** 4 - 4 * c ** 2 + 4 * k ** 2) - 8 * c * k) * R ** 3)
    return I, ode, "a"


def _om2_quartic(env):
    a, t, c, k = FormalSym("a"), param("tan_theta"), param("c"), param("k")
    s = sqrt(R ** 4 - 4 * c ** 2)
    I = (16 * t * a ** 4 - 32 * s * a ** 3
         - 24 * t * s ** 2 * (1 + 4 * k ** 2 / (3 * R ** 4)) * a ** 2
         + (32 * k ** 2 / R ** 4 + 8) * s ** 3 * a
         + t * (s ** 4 + 8 * k ** 2 / R ** 8
                * (R ** 4 * (R ** 8 + 16 * c ** 4) - 16 * c ** 2 * k ** 2 * (R ** 4 - 2 * c ** 2))))
    g = calabi(env["c"])
    A = ConnectionAnsatz(g, {"t1": k, "t2": 2 * c * k / R ** 2, "t3": a, "t4": scalar.ZERO})
    eq = Equation("dhym", 2, phase=(env["sin_theta"], env["cos_theta"]))
    top = _sum(equation_parts(eq, curvature(A), g)[0])
    return I, _dominant(top, env, "a", 2.0), "a"


def _phi1_cubic(env):
    p, c, k = FormalSym("p"), param("c"), param("k")
    S = param("C3") ** 2 + param("C4") ** 2
    s = sqrt(R ** 4 - 4 * c ** 2)
    I = s * S * p ** 3 - (R ** 4 + 4 * k ** 2) * s ** 3 / (4 * R ** 4) * p
    g = calabi(env["c"])
    A = ConnectionAnsatz(g, {"t1": k, "t2": 2 * c * k / R ** 2,
                             "t3": param("C3") * p, "t4": param("C4") * p})
    _, res = residual_dspin7(A, 1)
    return I, _dominant(res, env, "p", 2.0), "p"


def _phi1_cubic_printed(env):
    # the printed p' coefficient carries (r^4 - 4k^2); exactness needs r^4 + 4k^2
    p, c, k = FormalSym("p"), param("c"), param("k")
    S = param("C3") ** 2 + param("C4") ** 2
    s2 = R ** 4 - 4 * c ** 2
    I = sqrt(s2) * S * p ** 3 - (R ** 4 + 4 * k ** 2) * s2 * sqrt(s2) / (4 * R ** 4) * p
    ode = (R * s2 * (12 * R ** 4 * S * p ** 2 - (R ** 4 + 4 * k ** 2) * s2) * scalar.deriv(p)
           + 8 * R ** 8 * S * p ** 3
           - 6 * s2 * (R ** 8 + Fraction(4, 3) * k ** 2 * R ** 4 + Fraction(32, 3) * c ** 2 * k ** 2) * p)
    return I, ode, "p"


def _phi1_a2(env):
    a, c, k = FormalSym("a"), param("c"), param("k")
    S = param("C3") ** 2 + param("C4") ** 2
    s2 = R ** 4 - 4 * c ** 2
    q = a * R ** 2 - 2 * c * k
    I = (a ** 2 - R ** 4 / 4 + c ** 2 - k ** 2) / q + S / (q ** 3 * s2)
    g = calabi(env["c"])
    denom = q * sqrt(s2)
    A = ConnectionAnsatz(g, {"t1": k, "t2": a, "t3": param("C3") / denom, "t4": param("C4") / denom})
    _, res = residual_dspin7(A, 1)
    return I, _dominant(res, env, "a", 2.0), "a"


_PAIRS = {
    "eh_dhym_om1": ("Eguchi-Hanson omega_1-dHYM: quadratic first integral for f1",
                    _eh_om1, {"c": 1.0, "tan_theta": 0.7, "C2": 0.4, "C3": -0.3}, (1.05, 4.0)),
    "eh_dhym_om2": ("Eguchi-Hanson omega_2-dHYM: quadratic first integral for f2",
                    _eh_om2, {"c": 1.0, "tan_theta": 0.7, "C1": 0.5, "C3": -0.3}, (1.05, 4.0)),
    "tcp2_dhym_om1": ("T*CP2 omega_1-dHYM: quartic first integral for a2",
                      _om1_quartic, {"c": 1.0, "k": 1.3, "tan_theta": 0.75}, (1.5, 4.0)),
    "tcp2_dhym_om2": ("T*CP2 omega_2-dHYM: quartic first integral for a3, ODE from the curvature",
                      _om2_quartic, {"c": 1.0, "k": 1.3, "tan_theta": 0.75}, (1.5, 4.0)),
    "tcp2_dspin7_phi1_p": ("T*CP2 deformed Spin(7) for Phi_1: cubic first integral for p, ODE from the curvature",
                           _phi1_cubic, {"c": 1.0, "k": 1.3, "C3": 0.8, "C4": 0.6}, (1.5, 4.0)),
    "tcp2_dspin7_phi1_p_printed": ("the same cubic against the printed ODE with r^4 + 4k^2",
                                   _phi1_cubic_printed, {"c": 1.0, "k": 1.3, "C3": 0.8, "C4": 0.6},
                                   (1.5, 4.0)),
    "tcp2_dspin7_phi1_a2": ("T*CP2 deformed Spin(7) for Phi_1: a2 with a3, a4 fixed by the Lambda^4_7 system",
                            _phi1_a2, {"c": 1.0, "k": 1.3, "C3": 0.8, "C4": 0.6}, (1.5, 4.0)),
}


def _with_phase(env: dict) -> dict:
    env = dict(env)
    if "tan_theta" in env:
        t = env["tan_theta"]
        cos = 1 / np.sqrt(1 + t * t)
        env["cos_theta"], env["sin_theta"] = float(cos), float(t * cos)
    return env


def exact_pairs() -> list[str]:
    return list(_PAIRS)


def get_pair(pid: str, env: dict | None = None) -> ExactPair:
    summary, build, default_env, r_range = _PAIRS[pid]
    e = _with_phase({**default_env, **(env or {})})
    I, ode, unknown = build(e)
    return ExactPair(pid, summary, I, ode, unknown, e, r_range)


def certify(pid: str, n: int = 20, env: dict | None = None, seed: int = 0) -> float:
    """``exactness_check`` of pair ``pid`` on ``n`` random ``(r, a)`` samples."""
    pair = get_pair(pid, env)
    rng = np.random.default_rng(seed)
    lo, hi = pair.r_range
    samples = [(float(rng.uniform(lo, hi)), float(rng.normal() * pair.a_scale)) for _ in range(n)]
    return exactness_check(pair.first_integral, pair.ode, pair.unknown, samples, pair.env, rng=rng)
