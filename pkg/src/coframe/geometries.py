"""Cohomogeneity-one geometries: Eguchi-Hanson, the flag manifold, the
Calabi metric on T*CP^2 and the Bryant-Salamon Spin(7) metric on the
spinor bundle of S^4 (with its cone limits at ``c = 0``)."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import scalar
from .errors import MissingTriple
from .exterior import Coframe, DiagonalMetric, Form, d_parts, power, wedge
from .homogeneous import su2_coframe, su3_coframe
from .scalar import R, Expr, param, sqrt

__all__ = [
    "Geometry", "eguchi_hanson", "flag", "calabi", "bryant_salamon",
    "spin7_from_triple", "sample_grid", "closure_residual", "GEOMETRIES",
]

HALF = Fraction(1, 2)


@dataclass
class Geometry:
    """A cohomogeneity-one metric with its distinguished forms.

    ``forms`` holds the Kahler forms (``omega1..3`` or ``omega``) and, for
    Spin(7) geometries, ``Phi``.  Symbolic coefficients reference the
    parameters in ``params``.
    """

    id: str
    coframe: Coframe
    metric: DiagonalMetric
    forms: dict
    n: int
    domain_min: Expr
    params: dict = field(default_factory=dict)
    isotropy: str | None = None

    def env(self, extra: Mapping | None = None) -> dict:
        out = dict(self.params)
        if extra:
            out.update(extra)
        return out

    def r0(self) -> float:
        return float(scalar.evaluate(self.domain_min, 1.0, self.params))

    @property
    def has_triple(self) -> bool:
        return all(f"omega{i}" in self.forms for i in (1, 2, 3))

    def kahler(self, i: int | None = None) -> Form:
        if i is None or "omega" in self.forms:
            if "omega" in self.forms:
                return self.forms["omega"]
            i = 1
        try:
            return self.forms[f"omega{i}"]
        except KeyError:
            raise MissingTriple(f"{self.id} has no omega{i}") from None

    def triple(self):
        if not self.has_triple:
            raise MissingTriple(f"{self.id} carries no hyperkahler triple")
        return tuple(self.forms[f"omega{i}"] for i in (1, 2, 3))

    def spin7(self, which=1) -> Form:
        """The Spin(7) 4-form ``Phi_i`` from the triple, or the native one
        when ``which == "bs"``."""
        if which in ("bs", None) and "Phi" in self.forms:
            return self.forms["Phi"]
        key = f"Phi{which}"
        if key not in self.forms:
            self.forms[key] = spin7_from_triple(self, int(which))
        return self.forms[key]

    def volume(self) -> Form:
        return self.metric.volume()

    def evaluate(self, r, env: Mapping | None = None) -> "Geometry":
        """Numeric snapshot at radius (or radii) ``r``."""
        e = self.env(env)
        forms = {k: v.evaluate(r, e) for k, v in self.forms.items()}
        return Geometry(self.id, self.coframe, self.metric.evaluate(r, e), forms,
                        self.n, self.domain_min, dict(self.params), self.isotropy)


def spin7_from_triple(g: Geometry, i: int) -> Form:
    """``Phi_i = (-omega_i^2 + omega_j^2 + omega_k^2) / 2``."""
    w = g.triple()
    sq = [wedge(x, x) for x in w]
    j, k = [m for m in (0, 1, 2) if m != i - 1]
    return (sq[j] + sq[k] - sq[i - 1]) * HALF


def eguchi_hanson(c=1) -> Geometry:
    """Eguchi-Hanson metric on T*CP^1 with bolt parameter ``c``."""
    cf = su2_coframe(True)
    cc = param("c")
    u = 1 - cc * R ** -4
    f_dr = u ** Fraction(-1, 2)
    f1 = R / 2 * sqrt(u)
    f2 = R / 2
    metric = DiagonalMetric(cf, {"dr": f_dr, "e1": f1, "e2": f2, "e3": f2})
    e = cf.e
    forms = {
        "omega1": e("dr", "e1", coeff=R / 2) + e("e2", "e3", coeff=R ** 2 / 4),
        "omega2": e("dr", "e2", coeff=f_dr * R / 2) + e("e3", "e1", coeff=R ** 2 / 4 * sqrt(u)),
        "omega3": e("dr", "e3", coeff=f_dr * R / 2) + e("e1", "e2", coeff=R ** 2 / 4 * sqrt(u)),
    }
    return Geometry("eguchi_hanson", cf, metric, forms, 2, cc ** Fraction(1, 4), {"c": c})


def flag() -> Geometry:
    """Kahler-Einstein metric on the flag manifold SU(3)/T^2."""
    cf = su3_coframe(False)
    s2 = sqrt(2)
    metric = DiagonalMetric(cf, {"t2": s2, "t4": s2, "t5": 1, "t6": 1, "t7": 1, "t8": 1})
    omega = cf.e("t2", "t4", coeff=2) - cf.e("t5", "t7") + cf.e("t6", "t8")
    return Geometry("flag", cf, metric, {"omega": omega}, 3, scalar.ZERO, {}, None)


def calabi_scales():
    cc = param("c")
    u = 1 - 4 * cc ** 2 * R ** -4
    return {
        "f0": -(u ** Fraction(-1, 2)),
        "f2": R * sqrt(u),
        "f3": R,
        "f5": sqrt(R ** 2 / 2 + cc),
        "f7": sqrt(R ** 2 / 2 - cc),
    }


def calabi(c=1) -> Geometry:
    """Calabi hyperkahler metric on T*CP^2; ``c = 0`` is the cone."""
    cf = su3_coframe(True)
    f = calabi_scales()
    f0, f2, f3, f5, f7 = f["f0"], f["f2"], f["f3"], f["f5"], f["f7"]
    metric = DiagonalMetric(cf, {"dr": f0, "t2": f2, "t3": f3, "t4": f3,
                                 "t5": f5, "t6": f5, "t7": f7, "t8": f7})
    e = cf.e
    sigma2 = e("t5", "t7") + e("t8", "t6")
    sigma3 = e("t5", "t8") + e("t6", "t7")
    forms = {
        "omega1": e("dr", "t2", coeff=f0 * f2) + e("t3", "t4", coeff=f3 ** 2)
        + e("t5", "t6", coeff=f5 ** 2) + e("t7", "t8", coeff=f7 ** 2),
        "omega2": e("dr", "t3", coeff=f0 * f3) + e("t4", "t2", coeff=f2 * f3) + sigma2 * (f5 * f7),
        "omega3": e("dr", "t4", coeff=f0 * f3) + e("t2", "t3", coeff=f2 * f3) + sigma3 * (f5 * f7),
    }
    forms["alpha1"] = e("dr", "t2", coeff=f0 * f2) + e("t3", "t4", coeff=f3 ** 2) \
        - e("t5", "t6", coeff=f5 ** 2) - e("t7", "t8", coeff=f7 ** 2)
    forms["alpha2"] = e("dr", "t3", coeff=f0 * f3) + e("t4", "t2", coeff=f2 * f3) - sigma2 * (f5 * f7)
    forms["alpha3"] = e("dr", "t4", coeff=f0 * f3) + e("t2", "t3", coeff=f2 * f3) - sigma3 * (f5 * f7)
    return Geometry("calabi", cf, metric, forms, 4, sqrt(2 * param("c")), {"c": c}, "t1")


def bryant_salamon(c=1) -> Geometry:
    """Bryant-Salamon Spin(7) metric on the spinor bundle of S^4."""
    cf = su3_coframe(True)
    cc = param("c")
    base = R ** 2 + cc
    h0 = 2 * base ** Fraction(-1, 5)
    h2 = 2 * R * base ** Fraction(-1, 5)
    h5 = sqrt(10) * base ** Fraction(3, 10)
    metric = DiagonalMetric(cf, {"dr": h0, "t2": h2, "t3": h2, "t4": h2,
                                 "t5": h5, "t6": h5, "t7": h5, "t8": h5})
    e = cf.e
    inner3 = (e("t2 t5 t6") + e("t2 t7 t8") + e("t3 t5 t7") - e("t3 t6 t8")
              + e("t4 t5 t8") + e("t4 t6 t7"))
    mixed = (e("t2 t3 t5 t8") + e("t2 t3 t6 t7") - e("t2 t4 t5 t7") + e("t2 t4 t6 t8")
             + e("t3 t4 t5 t6") + e("t3 t4 t7 t8"))
    three = e("t2 t3 t4") * (h2 ** 3) - inner3 * (h2 * h5 ** 2)
    Phi = wedge(e("dr", coeff=h0), three) - mixed * (h2 ** 2 * h5 ** 2) + e("t5 t6 t7 t8", coeff=h5 ** 4)
    return Geometry("bryant_salamon", cf, metric, {"Phi": Phi}, 4, scalar.ZERO, {"c": c}, "t1")


GEOMETRIES = {
    "eguchi_hanson": eguchi_hanson,
    "flag": flag,
    "calabi": calabi,
    "bryant_salamon": bryant_salamon,
}


def sample_grid(g: Geometry, n: int = 50, r_max: float = 100.0, offset: float = 1e-3,
                floor: float = 1e-2, log: bool = True) -> np.ndarray:
    """Radii in ``[r0 (1 + offset), r_max]``; cones start at ``floor``."""
    r0 = g.r0()
    lo = r0 * (1 + offset) if r0 > 0 else floor
    if log:
        return np.geomspace(lo, r_max, n)
    return np.linspace(lo, r_max, n)


def kahler_power(g: Geometry, i, m: int) -> Form:
    return power(g.kahler(i), m)


def closure_residual(form: Form, r, env=None) -> np.ndarray:
    """Relative size of ``d form`` at each radius.

    ``d`` splits into the radial derivative of the coefficients and the
    structure-equation part; closure is their cancellation, so the residual
    is measured against the larger of the two.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    rad, struct = d_parts(form)
    num = np.zeros_like(r)
    den = np.zeros_like(r)
    for key in set(rad.terms) | set(struct.terms):
        a = np.broadcast_to(scalar.evaluate(rad.terms.get(key, scalar.ZERO), r, env), r.shape)
        b = np.broadcast_to(scalar.evaluate(struct.terms.get(key, scalar.ZERO), r, env), r.shape)
        num = np.maximum(num, np.abs(a + b))
        den = np.maximum(den, np.maximum(np.abs(a), np.abs(b)))
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), num)
