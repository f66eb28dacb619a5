"""Registry of explicit, implicit and ODE-defined invariant instantons.

Every family records the geometry it lives on, the connection ansatz in
terms of radial expressions, and the equations the connection must
satisfy.  Free constants appear as named parameters; ``instantiate`` binds
them and derives the auxiliary ones (``sin_theta``, ``cos_theta``,
``tan_theta``, sign choices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping


from . import scalar
from .errors import BadParams, UnknownFamily
from .gauge import ConnectionAnsatz, Equation
from .geometries import Geometry, bryant_salamon, calabi, eguchi_hanson, flag
from .scalar import R, FormalSym, param, sqrt, w0
from .solvers import ImplicitSpec, OdeSpec

__all__ = [
    "Closed", "Implicit", "Ode", "SolutionFamily", "list_families",
    "instantiate", "family_defaults", "phase_of_flag", "flag_tan_theta",
    "flag_region", "dhym_phase_for_C", "pinned_params",
]

HALF = Fraction(1, 2)


@dataclass
class Closed:
    coefficients: dict


@dataclass
class Implicit:
    """Connection coefficients in terms of the formal unknown of ``spec``."""

    spec: ImplicitSpec
    coefficients: dict


@dataclass
class Ode:
    spec: OdeSpec
    coefficients: dict
    r_start: float
    p_start: float
    series: dict = field(default_factory=dict)


@dataclass
class SolutionFamily:
    id: str
    summary: str
    geometry: Geometry
    equations: list
    params: dict
    payload: object
    global_: bool = True

    @property
    def env(self) -> dict:
        return dict(self.params)

    @property
    def kind(self) -> str:
        return type(self.payload).__name__.lower()

    def ansatz(self, coefficients: Mapping | None = None) -> ConnectionAnsatz:
        return ConnectionAnsatz(self.geometry, coefficients or self.payload.coefficients)


# ---------------------------------------------------------------- helpers

def _p(*names):
    return [param(n) for n in names]


def _poly_mul(a, b):
    out = [scalar.ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _poly_add(*polys):
    n = max(len(p) for p in polys)
    out = [scalar.ZERO] * n
    for p in polys:
        for i, x in enumerate(p):
            out[i] = out[i] + x
    return out


def _poly_scale(p, s):
    return [x * s for x in p]


def _phase_poly(P, Q):
    """Coefficients of ``sin(theta)(Q^2 - P^2) - 2 cos(theta) P Q``."""
    s, c = _p("sin_theta", "cos_theta")
    return _poly_add(_poly_scale(_poly_add(_poly_mul(Q, Q), _poly_scale(_poly_mul(P, P), -1)), s),
                     _poly_scale(_poly_mul(P, Q), -2 * c))


def dhym_phase_for_C(C: float) -> float:
    """Phase angle with ``tan(theta) = 2C / (C^2 - 1)``."""
    return math.atan2(2 * C, C * C - 1)


# ------------------------------------------------------------- flag phases

def flag_tan_theta(a1: int, a3: int):
    """``tan(theta)`` from the rational formula, or ``None`` on the pole set."""
    num = a3 * (a3 * a3 - a1 * a1 - 3)
    den = 3 * a3 * a3 - a1 * a1 - 1
    if den == 0:
        return None
    return Fraction(num, den)


def phase_of_flag(a1: int, a3: int) -> float:
    """Representative of the dHYM phase of ``a1 theta_1 + a3 theta_3`` on the
    flag manifold, as the sum of the arguments of ``1 + i lambda`` over the
    eigenvalues ``a3, a3 + a1, a3 - a1``."""
    return math.atan(a3) + math.atan(a3 + a1) + math.atan(a3 - a1)


def flag_region(a1: int, a3: int) -> str:
    t = flag_tan_theta(a1, a3)
    if t is None:
        return "pole"
    if t == 0:
        return "zero"
    return "positive" if t > 0 else "negative"


# --------------------------------------------------------------- builders

def _eh_hym(i):
    def build(pv):
        g = eguchi_hanson(pv["c"])
        c, lam, C1, C2, C3 = _p("c", "lambda", "C1", "C2", "C3")
        s = sqrt(R ** 4 - c)
        coeffs = {"e1": C1 / R ** 2, "e2": C2 / s, "e3": C3 / s}
        if i == 1:
            coeffs["e1"] = (lam * R ** 4 + C1) / (4 * R ** 2)
        else:
            lab = f"e{i}"
            coeffs[lab] = (lam * (R ** 4 - c) + param(f"C{i}")) / (4 * s)
        eqs = [Equation("holomorphic", i), Equation("hym", i, lam=pv["lambda"])]
        glob = pv["C2"] == 0 and pv["C3"] == 0 if i == 1 else False
        return g, eqs, Closed(coeffs), glob
    return build


def _eh_dhym(i):
    def build(pv):
        if abs(pv["tan_theta"]) < 1e-14 or not math.isfinite(pv["tan_theta"]):
            raise BadParams("these closed forms need tan(theta) finite and nonzero")
        g = eguchi_hanson(pv["c"])
        c, k, t, sec2, sign = _p("c", "k", "tan_theta", "sec2_theta", "sign")
        if i == 1:
            root = sqrt(sec2 * R ** 4 + t ** 2 * (16 * k ** 2 - c) + 8 * k * sqrt(c) * t)
            coeffs = {"e1": (-R ** 2 + sign * root) / (4 * t), "e2": scalar.ZERO, "e3": scalar.ZERO}
        else:
            val = sqrt(R ** 4 - c) * (-R ** 2 + sign * sqrt(sec2 * R ** 4 + 16 * k ** 2 * t ** 2)) \
                / (4 * R ** 2 * t)
            coeffs = {"e1": sqrt(c) * k / R ** 2, "e2": scalar.ZERO, "e3": scalar.ZERO}
            coeffs[f"e{i}"] = val
        eqs = [Equation("holomorphic", i), Equation("dhym", i, phase=(pv["sin_theta"], pv["cos_theta"]))]
        return g, eqs, Closed(coeffs), True
    return build


def _eh_dhym_sign(pv):
    # the root that meets f1 = k on the bolt
    return 1.0 if 4 * pv["k"] * pv["tan_theta"] + math.sqrt(pv["c"]) > 0 else -1.0


def _flag_dhym(pv):
    g = flag()
    a1, a3 = int(pv["a1"]), int(pv["a3"])
    th = phase_of_flag(a1, a3)
    coeffs = {"t1": scalar.const(a1), "t3": scalar.const(a3)}
    return g, [Equation("dhym", None, phase=(math.sin(th), math.cos(th)))], Closed(coeffs), True


def _calabi_coeffs(a2, a3, a4):
    return {"t1": param("k"), "t2": a2, "t3": a3, "t4": a4}


def _hyperholo_a2():
    c, k = _p("c", "k")
    return 2 * c * k / R ** 2


def _tcp2_hyperholo(pv):
    g = calabi(pv["c"])
    eqs = ([Equation("holomorphic", i) for i in (1, 2, 3)]
           + [Equation("hym", i, lam=0.0) for i in (1, 2, 3)]
           + [Equation("dhym", i) for i in (1, 2, 3)]
           + [Equation("spin7", i) for i in (1, 2, 3)]
           + [Equation("dspin7", i) for i in (1, 2, 3)])
    return g, eqs, Closed(_calabi_coeffs(_hyperholo_a2(), scalar.ZERO, scalar.ZERO)), True


def _tcp2_hym(i):
    def build(pv):
        g = calabi(pv["c"])
        c, k, lam, C0 = _p("c", "k", "lambda", "C0")
        u = R ** 4 - 4 * c ** 2
        if i == 1:
            a2 = (C0 - u * (lam * u - 4 * c * k)) / (2 * R ** 2 * u)
            coeffs = _calabi_coeffs(a2, scalar.ZERO, scalar.ZERO)
        else:
            val = (C0 - lam * u ** 2) / (2 * u ** Fraction(3, 2))
            a3, a4 = (val, scalar.ZERO) if i == 2 else (scalar.ZERO, val)
            coeffs = _calabi_coeffs(_hyperholo_a2(), a3, a4)
        eqs = [Equation("holomorphic", i), Equation("hym", i, lam=pv["lambda"])]
        return g, eqs, Closed(coeffs), pv["C0"] == 0
    return build


def _tcp2_spin7(i):
    def build(pv):
        g = calabi(pv["c"])
        c, k, C1, C2, C3 = _p("c", "k", "C1", "C2", "C3")
        u = R ** 4 - 4 * c ** 2
        if i == 1:
            coeffs = _calabi_coeffs((C1 * u + 2 * c * k) / R ** 2,
                                    C2 / u ** Fraction(3, 2), C3 / u ** Fraction(3, 2))
            glob = pv["C2"] == 0 and pv["C3"] == 0
        else:
            a2 = 2 * c * k / R ** 2 + C1 / (R ** 2 * u)
            grow, decay = sqrt(u), u ** Fraction(-3, 2)
            a3, a4 = (C2 * grow, C3 * decay) if i == 2 else (C2 * decay, C3 * grow)
            coeffs = _calabi_coeffs(a2, a3, a4)
            glob = pv["C1"] == 0 and pv["C3" if i == 2 else "C2"] == 0
        return g, [Equation("spin7", i)], Closed(coeffs), glob
    return build


def _dhym_om1_spec():
    c, k = _p("c", "k")
    P = [-2 * c * k, R ** 2]
    Q = [-R ** 4 / 4 + c ** 2 - k ** 2, scalar.ZERO, scalar.ONE]
    return ImplicitSpec("a", _phase_poly(P, Q), (sqrt(2 * c), k))


def _tcp2_dhym_om1(pv):
    g = calabi(pv["c"])
    spec = _dhym_om1_spec()
    coeffs = _calabi_coeffs(FormalSym("a"), scalar.ZERO, scalar.ZERO)
    phase = (pv["sin_theta"], pv["cos_theta"])
    return g, [Equation("holomorphic", 1), Equation("dhym", 1, phase=phase)], Implicit(spec, coeffs), True


def _dhym_om2_spec():
    c, k = _p("c", "k")
    X = [scalar.ZERO, 4 * R ** 4 * sqrt(R ** 4 - 4 * c ** 2)]
    Y = [R ** 8 - 4 * R ** 4 * (c ** 2 - k ** 2) - 16 * c ** 2 * k ** 2, scalar.ZERO, -4 * R ** 4]
    # tan(theta) = 2XY / (X^2 - Y^2), i.e. the roles of the pair are swapped
    # relative to the omega_1 equation
    return ImplicitSpec("a", _phase_poly(Y, X), (sqrt(2 * c), scalar.ZERO))


def _tcp2_dhym_om23(i):
    def build(pv):
        g = calabi(pv["c"])
        spec = _dhym_om2_spec()
        a = FormalSym("a")
        a3, a4 = (a, scalar.ZERO) if i == 2 else (scalar.ZERO, a)
        coeffs = _calabi_coeffs(_hyperholo_a2(), a3, a4)
        phase = (pv["sin_theta"], pv["cos_theta"])
        return g, [Equation("holomorphic", i), Equation("dhym", i, phase=phase)], Implicit(spec, coeffs), True
    return build


def _phi1_hyperholo(pv):
    g = calabi(pv["c"])
    return g, [Equation("dspin7", 1)], Closed(_calabi_coeffs(_hyperholo_a2(), scalar.ZERO, scalar.ZERO)), True


def _phi1_pfamily(pv):
    if pv["C3"] == 0 and pv["C4"] == 0:
        raise BadParams("C3 and C4 cannot both vanish")
    g = calabi(pv["c"])
    c, k, C3, C4 = _p("c", "k", "C3", "C4")
    p = sqrt((R ** 4 + 4 * k ** 2) * (R ** 4 - 4 * c ** 2)) / (2 * R ** 2 * sqrt(C3 ** 2 + C4 ** 2))
    return g, [Equation("dspin7", 1)], Closed(_calabi_coeffs(_hyperholo_a2(), C3 * p, C4 * p)), True


def _a2family_sign(pv):
    return -1.0 if pv["c"] * pv["C"] >= pv["k"] else 1.0


def _phi1_a2family(pv):
    g = calabi(pv["c"])
    c, k, C, sign = _p("c", "k", "C", "sign")
    a2 = HALF * C * R ** 2 + sign * HALF * sqrt(C ** 2 * R ** 4 - 8 * C * c * k + R ** 4 - 4 * c ** 2 + 4 * k ** 2)
    th = dhym_phase_for_C(pv["C"])
    eqs = [Equation("dspin7", 1), Equation("dhym", 1, phase=(math.sin(th), math.cos(th)))]
    return g, eqs, Closed(_calabi_coeffs(a2, scalar.ZERO, scalar.ZERO)), True


def _swap(i, x, y):
    """(a3, a4) for the Phi_2 statement, swapped for Phi_3."""
    return (x, y) if i == 2 else (y, x)


def _phi23_hyperholo(i):
    def build(pv):
        g = calabi(pv["c"])
        return g, [Equation("dspin7", i)], Closed(_calabi_coeffs(_hyperholo_a2(), scalar.ZERO, scalar.ZERO)), True
    return build


def _phi23_om1branch(i):
    def build(pv):
        g = calabi(pv["c"])
        c, k, sign = _p("c", "k", "sign")
        a2 = sign * HALF * sqrt(R ** 4 - 4 * c ** 2 + 4 * k ** 2)
        eqs = [Equation("dspin7", i), Equation("dhym", 1)]
        glob = pv["sign"] * pv["k"] >= 0
        return g, eqs, Closed(_calabi_coeffs(a2, scalar.ZERO, scalar.ZERO)), glob
    return build


def _phi23_a4family(i):
    def build(pv):
        g = calabi(pv["c"])
        c, k, C, sign = _p("c", "k", "C", "sign")
        u = R ** 4 - 4 * c ** 2
        a4 = (4 * C * c * k + sign * R ** 2 * sqrt(C ** 2 * (u + 4 * k ** 2) + R ** 4 + 4 * k ** 2)) \
            / (-2 * C ** 2 * u - 2 * R ** 4) * sqrt(u)
        a2 = _hyperholo_a2() + C * a4 * sqrt(u) / R ** 2
        a3, a4 = _swap(i, scalar.ZERO, a4)
        return g, [Equation("dspin7", i)], Closed(_calabi_coeffs(a2, a3, a4)), True
    return build


def _phi23_a3family(i):
    def build(pv):
        g = calabi(pv["c"])
        c, k, C, sign = _p("c", "k", "C", "sign")
        u = R ** 4 - 4 * c ** 2
        a3 = (C * R ** 2 + sign * sqrt((C ** 2 + 1) * R ** 4 + 4 * k ** 2)) / (2 * R ** 2) * sqrt(u)
        a3, a4 = _swap(i, a3, scalar.ZERO)
        th = dhym_phase_for_C(pv["C"])
        eqs = [Equation("dspin7", i), Equation("dhym", i, phase=(math.sin(th), math.cos(th)))]
        return g, eqs, Closed(_calabi_coeffs(_hyperholo_a2(), a3, a4)), True
    return build


def bs_ode_spec() -> OdeSpec:
    c, k, C2, C3, C4 = _p("c", "k", "C2", "C3", "C4")
    Csq = C2 ** 2 + C3 ** 2 + C4 ** 2
    p = FormalSym("p")
    base = R ** 2 + c
    num = 40 * R * (3 * R ** 2 + 5 * c) * base ** Fraction(1, 5) * p - 2 * R * (Csq * p ** 2 - k ** 2) * p
    den = (9 * R ** 2 + 10 * c) * Csq * p ** 2 + k ** 2 * R ** 2 + 100 * R ** 2 * base ** Fraction(6, 5)
    return OdeSpec("p", num, den)


def _bs_direction(p):
    C2, C3, C4 = _p("C2", "C3", "C4")
    return {"t1": param("k"), "t2": C2 * p, "t3": C3 * p, "t4": C4 * p}


def _bs_dspin7_ode(pv):
    g = bryant_salamon(pv["c"])
    spec = bs_ode_spec()
    payload = Ode(spec, _bs_direction(FormalSym("p")), pv["r_start"], pv["p_start"],
                  {"k": 0.0, "C": 1.0, "c": 1.0})
    return g, [Equation("dspin7", "bs")], payload, False


def _check_direction(pv, names):
    if all(pv[n] == 0 for n in names):
        raise BadParams(f"{', '.join(names)} cannot all vanish")


def _cone_bs_dspin7(pv):
    _check_direction(pv, ("C2", "C3", "C4"))
    if pv["C0"] <= 0:
        raise BadParams("C0 must be positive")
    g = bryant_salamon(0)
    C0, C2, C3, C4 = _p("C0", "C2", "C3", "C4")
    p = 10 * R ** Fraction(6, 5) / (3 * sqrt(w0(C0 * R ** Fraction(128, 45)))) / sqrt(C2 ** 2 + C3 ** 2 + C4 ** 2)
    coeffs = {"t2": C2 * p, "t3": C3 * p, "t4": C4 * p}
    return g, [Equation("dspin7", "bs")], Closed(coeffs), False


def _cone_bs_spin7(pv):
    g = bryant_salamon(0)
    C2, C3, C4 = _p("C2", "C3", "C4")
    r65 = R ** Fraction(6, 5)
    return g, [Equation("spin7", "bs")], Closed({"t2": C2 * r65, "t3": C3 * r65, "t4": C4 * r65}), False


def _cone_hk_om1comp(pv):
    g = calabi(0)
    C2 = param("C2")
    return g, [Equation("dspin7", 1), Equation("spin7", 1)], Closed({"t2": C2 * R ** 2}), False


def _cone_hk_pfamily(pv):
    _check_direction(pv, ("C3", "C4"))
    g = calabi(0)
    C0, C3, C4 = _p("C0", "C3", "C4")
    spec = ImplicitSpec("p", [-C0 / R ** 2, -R ** 4, scalar.ZERO, scalar.ONE], None)
    norm = 2 * sqrt(C3 ** 2 + C4 ** 2)
    p = FormalSym("p")
    coeffs = {"t3": C3 * p / norm, "t4": C4 * p / norm}
    return g, [Equation("dspin7", 1)], Implicit(spec, coeffs), False


def _cone_hk_spin7(pv):
    g = calabi(0)
    C2, C3, C4 = _p("C2", "C3", "C4")
    coeffs = {"t2": C2 * R ** 2, "t3": C3 / R ** 6, "t4": C4 / R ** 6}
    return g, [Equation("spin7", 1)], Closed(coeffs), False


# ----------------------------------------------------------------- registry

_BASE = {"c": 1.0, "k": 1.0, "theta": 0.0, "lambda": 0.0, "C": 0.0,
         "C0": 0.0, "C1": 0.0, "C2": 0.0, "C3": 0.0, "C4": 0.0}


@dataclass(frozen=True)
class _Entry:
    summary: str
    build: Callable
    defaults: dict
    derive: Callable | None = None


def _e(summary, build, derive=None, **defaults):
    return _Entry(summary, build, defaults, derive)


_REGISTRY: dict[str, _Entry] = {
    "eh_hym_1": _e("Eguchi-Hanson, omega_1-HYM family (lambda r^4 + C1)/(4r^2) eta_1 + ...",
                   _eh_hym(1), **{"lambda": 0.5, "C1": 1.0}),
    "eh_hym_2": _e("Eguchi-Hanson, omega_2-HYM family", _eh_hym(2), **{"lambda": 0.5, "C1": 1.0}),
    "eh_hym_3": _e("Eguchi-Hanson, omega_3-HYM family", _eh_hym(3), **{"lambda": 0.5, "C1": 1.0}),
    "eh_dhym_1": _e("Eguchi-Hanson, omega_1-dHYM with f1(c^(1/4)) = k", _eh_dhym(1),
                    _eh_dhym_sign, theta=0.5),
    "eh_dhym_2": _e("Eguchi-Hanson, omega_2-dHYM (two roots, chosen by sign)", _eh_dhym(2),
                    theta=0.5, sign=1.0),
    "eh_dhym_3": _e("Eguchi-Hanson, omega_3-dHYM (two roots, chosen by sign)", _eh_dhym(3),
                    theta=0.5, sign=1.0),
    "flag_dhym": _e("flag manifold, a1 theta_1 + a3 theta_3 with its determined phase",
                    _flag_dhym, a1=1, a3=2),
    "tcp2_hyperholo": _e("T*CP2, hyper-holomorphic connection a2 = 2ck/r^2", _tcp2_hyperholo),
    "tcp2_hym_1": _e("T*CP2, omega_1-HYM", _tcp2_hym(1), **{"lambda": 1.0}),
    "tcp2_hym_2": _e("T*CP2, omega_2-HYM", _tcp2_hym(2), **{"lambda": 1.0}),
    "tcp2_hym_3": _e("T*CP2, omega_3-HYM", _tcp2_hym(3), **{"lambda": 1.0}),
    "tcp2_spin7_1": _e("T*CP2, Spin(7)-instantons for Phi_1", _tcp2_spin7(1), C1=1.0, C2=1.0, C3=0.5),
    "tcp2_spin7_2": _e("T*CP2, Spin(7)-instantons for Phi_2", _tcp2_spin7(2), C1=1.0, C2=1.0, C3=0.5),
    "tcp2_spin7_3": _e("T*CP2, Spin(7)-instantons for Phi_3", _tcp2_spin7(3), C1=1.0, C2=1.0, C3=0.5),
    "tcp2_dhym_om1": _e("T*CP2, omega_1-dHYM, implicit quartic in a2", _tcp2_dhym_om1, k=3.0, theta=2.0),
    "tcp2_dhym_om2": _e("T*CP2, omega_2-dHYM, implicit quartic in a3", _tcp2_dhym_om23(2),
                        theta=math.atan(2.0)),
    "tcp2_dhym_om3": _e("T*CP2, omega_3-dHYM, implicit quartic in a4", _tcp2_dhym_om23(3),
                        theta=math.atan(2.0)),
    "tcp2_dspin7_phi1_hyperholo": _e("T*CP2, deformed Spin(7) for Phi_1: hyper-holomorphic",
                                     _phi1_hyperholo),
    "tcp2_dspin7_phi1_pfamily": _e("T*CP2, deformed Spin(7) for Phi_1: p (C3 theta_3 + C4 theta_4)",
                                   _phi1_pfamily, k=2.0, C3=1.0),
    "tcp2_dspin7_phi1_a2family": _e("T*CP2, deformed Spin(7) for Phi_1: a2 family, also omega_1-dHYM",
                                    _phi1_a2family, _a2family_sign, C=1.0),
    "tcp2_dspin7_phi2_hyperholo": _e("T*CP2, deformed Spin(7) for Phi_2: hyper-holomorphic",
                                     _phi23_hyperholo(2)),
    "tcp2_dspin7_phi2_om1branch": _e("T*CP2, deformed Spin(7) for Phi_2: omega_1-dHYM at phase 1",
                                     _phi23_om1branch(2), sign=1.0),
    "tcp2_dspin7_phi2_a4family": _e("T*CP2, deformed Spin(7) for Phi_2: a4 family", _phi23_a4family(2),
                                    C=1.0, sign=1.0),
    "tcp2_dspin7_phi2_a3family": _e("T*CP2, deformed Spin(7) for Phi_2: a3 family, also omega_2-dHYM",
                                    _phi23_a3family(2), C=1.0, sign=1.0),
    "tcp2_dspin7_phi3_hyperholo": _e("T*CP2, deformed Spin(7) for Phi_3: hyper-holomorphic",
                                     _phi23_hyperholo(3)),
    "tcp2_dspin7_phi3_om1branch": _e("T*CP2, deformed Spin(7) for Phi_3: omega_1-dHYM at phase 1",
                                     _phi23_om1branch(3), sign=1.0),
    "tcp2_dspin7_phi3_a3family": _e("T*CP2, deformed Spin(7) for Phi_3: a3 family (image of the Phi_2 a4 family)",
                                    _phi23_a4family(3), C=1.0, sign=1.0),
    "tcp2_dspin7_phi3_a4family": _e("T*CP2, deformed Spin(7) for Phi_3: a4 family, also omega_3-dHYM",
                                    _phi23_a3family(3), C=1.0, sign=1.0),
    "bs_dspin7_ode": _e("Bryant-Salamon, deformed Spin(7) radial ODE for p", _bs_dspin7_ode,
                        k=1.0, C2=1.0, r_start=0.5, p_start=1.0),
    "cone_bs_dspin7": _e("Spin(7) cone, deformed Spin(7) via Lambert W", _cone_bs_dspin7,
                         c=0.0, k=0.0, C0=1.0, C2=1.0),
    "cone_bs_spin7": _e("Spin(7) cone, Spin(7)-instantons r^(6/5)", _cone_bs_spin7,
                        c=0.0, k=0.0, C2=1.0, C3=0.5, C4=-0.25),
    "cone_hk_dspin7_om1comp": _e("hyperkahler cone, deformed Spin(7) C2 r^2 theta_2", _cone_hk_om1comp,
                                 c=0.0, k=0.0, C2=1.0),
    "cone_hk_dspin7_pfamily": _e("hyperkahler cone, deformed Spin(7) with p^3 - r^4 p - C0/r^2 = 0",
                                 _cone_hk_pfamily, c=0.0, k=0.0, C0=1.0, C3=1.0),
    "cone_hk_spin7": _e("hyperkahler cone, Spin(7)-instantons for Phi_1", _cone_hk_spin7,
                        c=0.0, k=0.0, C2=1.0, C3=0.5, C4=-0.25),
}


def list_families() -> list[str]:
    return list(_REGISTRY)


def family_defaults(fid: str) -> dict:
    try:
        entry = _REGISTRY[fid]
    except KeyError:
        raise UnknownFamily(fid) from None
    out = dict(_BASE)
    out.update(entry.defaults)
    return out


def pinned_params(fid: str) -> dict:
    """Parameters the family's geometry fixes; cone solutions live at c = k = 0."""
    family_defaults(fid)
    return {"c": 0.0, "k": 0.0} if fid.startswith("cone_") else {}


def _derive(pv: dict) -> dict:
    th = float(pv["theta"])
    s, c = math.sin(th), math.cos(th)
    pv["sin_theta"], pv["cos_theta"] = s, c
    pv["tan_theta"] = s / c if c != 0 else math.inf
    pv["sec2_theta"] = 1.0 / (c * c) if c != 0 else math.inf
    return pv


def instantiate(fid: str, params: Mapping | None = None) -> SolutionFamily:
    """Bind parameters (defaults filled in) and build the family.

    Raises
    ------
    UnknownFamily
        If ``fid`` is not registered.
    BadParams
        If the parameters are outside the family's domain.
    """
    pv = family_defaults(fid)
    entry = _REGISTRY[fid]
    for key, val in (params or {}).items():
        if val is None:
            continue
        if key not in pv and key not in ("sign", "a1", "a3", "r_start", "p_start"):
            raise BadParams(f"{fid} has no parameter {key!r}")
        pv[key] = val
    for key, val in pv.items():
        if isinstance(val, (int, float)) and not math.isfinite(val):
            raise BadParams(f"parameter {key} is not finite")
    for key, val in pinned_params(fid).items():
        if pv[key] != val:
            raise BadParams(f"{fid} is defined only for {key} = {val:g}")
    if pv["c"] < 0:
        raise BadParams("c must be non-negative")
    if fid.startswith(("eh_", "tcp2_")) and pv["c"] <= 0:
        raise BadParams("the bolt parameter c must be positive")
    _derive(pv)
    if entry.derive is not None and "sign" not in (params or {}):
        pv["sign"] = entry.derive(pv)
    pv.setdefault("sign", 1.0)
    if pv["sign"] not in (1.0, -1.0, 1, -1):
        raise BadParams("sign must be +1 or -1")
    g, eqs, payload, glob = entry.build(pv)
    env = {k: float(v) for k, v in pv.items() if isinstance(v, (int, float))}
    g.params.update(env)
    return SolutionFamily(fid, entry.summary, g, eqs, env, payload, bool(glob))
