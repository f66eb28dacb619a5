import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coframe.algebra import pi47_norm
from coframe.catalog import instantiate
from coframe.errors import MissingTriple
from coframe.exterior import eval_form, power, wedge
from coframe.gauge import (
    ConnectionAnsatz, Equation, check_numeric, curvature, equation_parts, f4_over_vol,
    residual_dhym, residual_dspin7, residual_holomorphic, residual_hym, residual_spin7,
)
from coframe.geometries import bryant_salamon, calabi, eguchi_hanson, flag
from coframe.scalar import R, ZERO, FormalSym, deriv, evaluate, param, sqrt

RS = np.array([1.5, 2.0, 3.3, 7.0])
ENV = {"c": 1.0, "k": 1.3}


def sup(form, r=RS, env=ENV):
    if not form.terms:
        return 0.0
    return float(np.max(np.abs(eval_form(form, r, env))))


def rel(F_num, g, eq, r=RS, env=ENV):
    return float(np.max(check_numeric(F_num, g, eq, r, env)))


def hyperholo(c=1):
    k = param("k")
    return ConnectionAnsatz(calabi(c), {"t1": k, "t2": 2 * param("c") * k / R ** 2, "t3": ZERO, "t4": ZERO})


# -- curvature ------------------------------------------------------------

def test_curvature_tcp2():
    g = calabi(1)
    a, k = FormalSym("a"), param("k")
    F = curvature(ConnectionAnsatz(g, {"t1": k, "t2": a}))
    e = g.coframe.e
    expected = (e("dr", "t2", coeff=deriv(a)) + e("t3", "t4", coeff=-2 * a)
                - e("t5", "t6", coeff=a + k) - e("t7", "t8", coeff=a - k))
    env = {**ENV, "a": 0.7, "a'": -0.3}
    assert sup(F - expected, env=env) < 1e-15


def test_curvature_eh():
    g = eguchi_hanson(1)
    f = [FormalSym(f"f{i}") for i in (1, 2, 3)]
    F = curvature(ConnectionAnsatz(g, {"e1": f[0], "e2": f[1], "e3": f[2]}))
    e = g.coframe.e
    expected = (e("dr", "e1", coeff=deriv(f[0])) + e("dr", "e2", coeff=deriv(f[1]))
                + e("dr", "e3", coeff=deriv(f[2])) + e("e2", "e3", coeff=f[0])
                + e("e3", "e1", coeff=f[1]) + e("e1", "e2", coeff=f[2]))
    env = {"f1": 0.3, "f2": -1.1, "f3": 2.0, "f1'": 0.5, "f2'": 0.25, "f3'": -0.75, "c": 1.0}
    assert sup(F - expected, env=env) < 1e-15


def test_curvature_flag():
    g = flag()
    a1, a3 = param("a1"), param("a3")
    F = curvature(ConnectionAnsatz(g, {"t1": a1, "t3": a3}))
    e = g.coframe.e
    expected = (e("t7", "t8") - e("t5", "t6")) * a1 + (e("t2", "t4", coeff=2) - e("t5", "t7") + e("t6", "t8")) * a3
    assert sup(F - expected, 1.0, {"a1": 2.0, "a3": -1.0}) == 0.0


# -- holomorphic / HYM ----------------------------------------------------

def test_hyperholomorphic_connection():
    A = hyperholo()
    for i in (1, 2, 3):
        re, im = residual_holomorphic(A, i)
        scale = sup(power(A.geometry.kahler(i), 3))
        assert sup(re) < 1e-14 * scale and sup(im) < 1e-14 * scale
        assert sup(residual_hym(A, i, 0.0)) < 1e-14 * scale
        F = curvature(A).evaluate(RS, ENV)
        assert rel(F, A.geometry, Equation("holomorphic", i)) < 1e-13
        assert rel(F, A.geometry, Equation("hym", i, lam=0.0)) < 1e-13


def test_holomorphic_fails_with_a3():
    g = calabi(1)
    k = param("k")
    A = ConnectionAnsatz(g, {"t1": k, "t2": 2 * param("c") * k / R ** 2, "t3": R, "t4": ZERO})
    re, im = residual_holomorphic(A, 1)
    assert max(sup(re), sup(im)) > 0.1


def test_eh_holomorphic_f2():
    g = eguchi_hanson(1)
    C2 = param("C2")
    A = ConnectionAnsatz(g, {"e2": C2 / sqrt(R ** 4 - param("c"))})
    F = curvature(A)
    env = {"c": 1.0, "C2": 0.8}
    r = np.array([1.2, 2.0, 5.0])
    assert sup(wedge(F, g.forms["omega2"]), r, env) < 1e-14
    assert sup(wedge(F, g.forms["omega1"]), r, env) < 1e-14


def test_hym_examples_from_catalog():
    for fid, params in (("tcp2_hym_1", {"C0": 0.0}), ("eh_hym_1", {"C2": 0.0, "C3": 0.0})):
        fam = instantiate(fid, params)
        F = curvature(fam.ansatz())
        r = np.linspace(fam.geometry.r0() * 1.01 + 0.1, 6, 5)
        assert rel(F.evaluate(r, fam.env), fam.geometry, fam.equations[0], r, fam.env) < 1e-12
    # with C2 = C3 = 0 the Eguchi-Hanson HYM curvature is lambda omega_1 plus the flat C1 part
    fam = instantiate("eh_hym_1", {"C1": 0.0, "C2": 0.0, "C3": 0.0, "lambda": 0.5})
    F = curvature(fam.ansatz())
    r = np.array([1.2, 2.0, 5.0])
    assert sup(F - fam.geometry.forms["omega1"] * Fraction(1, 2), r, fam.env) < 1e-13


# -- dHYM -----------------------------------------------------------------

def test_dhym_n2_reduction():
    g = eguchi_hanson(1)
    f = [FormalSym(f"f{i}") for i in (1, 2, 3)]
    A = ConnectionAnsatz(g, {"e1": f[0], "e2": f[1], "e3": f[2]})
    F = curvature(A)
    w = g.forms["omega1"]
    th = 0.4
    s, c = math.sin(th), math.cos(th)
    res = residual_dhym(A, 1, (s, c))
    expected = wedge(F, w) * Fraction(2) * Fraction(c) - (wedge(w, w) - wedge(F, F)) * Fraction(s)
    env = {"f1": 0.3, "f2": -1.1, "f3": 2.0, "f1'": 0.5, "f2'": 0.25, "f3'": -0.75, "c": 1.0}
    assert sup(res - expected, np.array([1.3, 2.2]), env) < 1e-12


def test_dhym_f_equals_omega():
    g = calabi(1)
    k = param("k")
    A = ConnectionAnsatz(g, {"t1": k, "t2": -R ** 2 / 2})
    env = {"c": 1.0, "k": -1.0}
    F = curvature(A)
    assert sup(F - g.forms["omega1"], RS, env) < 1e-13
    assert rel(F.evaluate(RS, env), g, Equation("dhym", 1, phase=(0.0, 1.0)), RS, env) < 1e-14
    A2 = ConnectionAnsatz(g, {"t1": 2 * k, "t2": -R ** 2})
    F2 = curvature(A2)
    assert sup(F2 - g.forms["omega1"] * 2, RS, env) < 1e-12
    assert rel(F2.evaluate(RS, env), g, Equation("dhym", 1, phase=(0.0, 1.0)), RS, env) > 0.1


def test_large_volume_limit():
    # tan(theta) = 4 lambda eps: dHYM(eps F) / (4 eps cos theta) -> HYM(F, lambda)
    fam = instantiate("tcp2_hym_1", {"lambda": 0.7, "C0": 0.3})
    g = fam.geometry
    r = np.array([1.7, 2.5, 4.0])
    env = fam.env
    F = curvature(fam.ansatz()).evaluate(r, env)
    G = curvature(ConnectionAnsatz(g, {"t1": param("k"), "t2": R})).evaluate(r, env)
    g_num = g.evaluate(r, env)
    lam = 0.7
    target = sum(equation_parts(Equation("hym", 1, lam=lam), G, g_num)[0][1:],
                 equation_parts(Equation("hym", 1, lam=lam), G, g_num)[0][0])
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        th = math.atan(4 * lam * eps)
        parts = equation_parts(Equation("dhym", 1, phase=(math.sin(th), math.cos(th))), G * eps, g_num)[0]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        scaled = total * (1 / (4 * eps * math.cos(th)))
        errs.append(np.max(np.abs(eval_form(scaled - target, r))) / np.max(np.abs(eval_form(target, r))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[0] < 0.11 and errs[2] / errs[1] < 0.11
    assert rel(F, g, fam.equations[0], r, env) < 1e-12


# -- Spin(7) --------------------------------------------------------------

def test_spin7_examples():
    g = calabi(1)
    # c omega_i is a Spin(7)-instanton for Phi_i for every c, for Phi_j only when c = 0
    Fw = (g.forms["omega1"] * Fraction(3, 2)).evaluate(RS, ENV)
    assert rel(Fw, g, Equation("spin7", 1), RS, ENV) < 1e-14
    assert rel(Fw, g, Equation("spin7", 2), RS, ENV) > 0.1
    assert rel(Fw, g, Equation("spin7", 3), RS, ENV) > 0.1
    for fid in ("tcp2_spin7_1", "cone_bs_spin7", "cone_hk_spin7"):
        fam = instantiate(fid)
        r = np.geomspace(max(fam.geometry.r0(), 0.05) * 1.01, 20, 6)
        F = curvature(fam.ansatz()).evaluate(r, fam.env)
        assert rel(F, fam.geometry, fam.equations[0], r, fam.env) < 1e-12


def test_residual_spin7_symbolic():
    A = hyperholo()
    for i in (1, 2, 3):
        assert sup(residual_spin7(A, i)) < 1e-12


def test_dspin7_examples():
    g = calabi(1)
    A = hyperholo()
    for i in (1, 2, 3):
        ff, form = residual_dspin7(A, i)
        assert sup(form) < 1e-12
        for r in (1.6, 3.0):
            num, den = pi47_norm(ff, g.spin7(i), g, r, ENV)
            assert num <= 1e-12 * max(den, 1.0)
    for scale in (Fraction(1, 3), Fraction(2), Fraction(-5)):
        Fw = g.forms["omega1"] * scale
        assert rel(Fw.evaluate(RS, ENV), g, Equation("dspin7", 1), RS, ENV) < 1e-12
    fam = instantiate("tcp2_dspin7_phi1_pfamily")
    r = np.geomspace(fam.geometry.r0() * 1.001, 50, 10)
    F = curvature(fam.ansatz()).evaluate(r, fam.env)
    assert rel(F, fam.geometry, fam.equations[0], r, fam.env) < 1e-9


def test_f4_over_vol():
    fam = instantiate("tcp2_dspin7_phi1_pfamily")
    r = np.geomspace(fam.geometry.r0() * 1.001, 50, 10)
    assert np.allclose(evaluate(f4_over_vol(fam.ansatz()), r, fam.env), 24, rtol=1e-10)
    r = np.array([1.7, 2.4, 4.0])
    fam = instantiate("tcp2_dspin7_phi1_a2family", {"C": 0.5})
    assert np.max(np.abs(evaluate(f4_over_vol(fam.ansatz()), r, fam.env) - 24)) > 1e-3
    fam = instantiate("tcp2_dspin7_phi1_a2family", {"C": 0.0})
    assert np.allclose(evaluate(f4_over_vol(fam.ansatz()), r, fam.env), 24, rtol=1e-10)
    g = calabi(1)
    zero = ConnectionAnsatz(g, {"t2": ZERO})
    assert float(evaluate(f4_over_vol(zero), 2.0, ENV)) == 0.0


def test_spin7_instantons_satisfy_equation_one():
    for fid in ("tcp2_spin7_1", "tcp2_spin7_2", "tcp2_spin7_3", "cone_bs_spin7", "cone_hk_spin7"):
        fam = instantiate(fid)
        g = fam.geometry
        which = fam.equations[0].index
        Phi = g.spin7(which)
        F = curvature(fam.ansatz())
        FF = wedge(F, F)
        for r in (max(g.r0(), 0.2) * 1.3, 3.0, 9.0):
            num, den = pi47_norm(FF, Phi, g, r, fam.env)
            assert num <= 1e-10 * max(den, 1e-300), fid


def test_traceless_hym_is_spin7_for_the_other_two():
    fam = instantiate("tcp2_hym_1", {"lambda": 0.0, "C0": 0.7})
    g = fam.geometry
    r = np.array([1.6, 2.5, 6.0])
    F = curvature(fam.ansatz()).evaluate(r, fam.env)
    assert rel(F, g, Equation("spin7", 2), r, fam.env) < 1e-12
    assert rel(F, g, Equation("spin7", 3), r, fam.env) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(-2.0, 2.0), st.floats(1.01, 5.0))
def test_formal_matches_closed(c, k, t):
    # residual with a formal unknown bound afterwards equals the closed-form residual
    g = calabi(c)
    r = math.sqrt(2 * c) * t
    env = {"c": c, "k": k}
    a = FormalSym("a")
    formal = residual_dspin7(ConnectionAnsatz(g, {"t1": param("k"), "t2": a}), 1)[1]
    closed_coeff = 2 * param("c") * param("k") / R ** 2 + R
    closed = residual_dspin7(ConnectionAnsatz(g, {"t1": param("k"), "t2": closed_coeff}), 1)[1]
    bound = dict(env)
    bound["a"] = float(evaluate(closed_coeff, r, env))
    bound["a'"] = float(evaluate(deriv(closed_coeff), r, env))
    x = eval_form(formal, r, bound)
    y = eval_form(closed, r, env)
    assert np.max(np.abs(x - y)) <= 1e-11 * (1 + np.max(np.abs(y)))


def test_missing_kahler_triple():
    g = bryant_salamon(1)
    A = ConnectionAnsatz(g, {"t2": R})
    with pytest.raises(MissingTriple):
        residual_holomorphic(A, 1)
    with pytest.raises(MissingTriple):
        residual_hym(A, 1, 0.0)


def test_equation_ids():
    assert Equation("spin7", 1).id == "spin7[Phi1]"
    assert Equation("hym", 2, lam=0.5).id == "hym[omega2, lambda=0.5]"
    assert Equation("dhym", 1, phase=(1.0, 0.0)).id.startswith("dhym[omega1, theta=1.5707963")
