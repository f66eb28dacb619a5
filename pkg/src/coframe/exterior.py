"""Sparse exterior algebra over an invariant coframe.

A :class:`Coframe` is an ordered list of 1-form labels together with the
structure equations ``d(theta_a) = sum c_ij theta_i ^ theta_j``.  At most one
label may be the radial differential ``dr``, which is closed.

A :class:`Form` maps strictly increasing index tuples to coefficients.  The
coefficients are either :class:`~coframe.scalar.Expr` trees (symbolic mode)
or floats / numpy arrays (numeric mode, typically one entry per sample
radius).  All algebraic operations work in both modes; the exterior
derivative needs symbolic coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from . import scalar
from .errors import CoframeMismatch, MetricUndefined
from .scalar import Expr

__all__ = [
    "Coframe", "Form", "DiagonalMetric", "wedge", "d", "d_parts", "hodge",
    "inner", "contract", "interior", "eval_form", "basis_indices", "power",
    "merge_sign", "flat_coframe",
]


def merge_sign(a: tuple, b: tuple):
    """Sign and sorted union of two increasing index tuples, or (0, None)."""
    if set(a) & set(b):
        return 0, None
    inv = 0
    for x in a:
        for y in b:
            if x > y:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(a + b))


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _is_zero(x) -> bool:
    if isinstance(x, Expr):
        return scalar.is_zero(x)
    if isinstance(x, np.ndarray):
        return not np.any(x)
    return x == 0


def _neg(x):
    return -x


def _scale(coeff, x):
    """coeff * x where coeff is an exact rational or int."""
    if isinstance(x, Expr):
        return scalar.mul(scalar.Const(coeff), x)
    return float(coeff) * x


def _inv(x):
    if isinstance(x, Expr):
        return scalar.power(x, -1)
    return 1.0 / x


class Coframe:
    """Ordered labels plus exact structure equations.

    Parameters
    ----------
    labels : sequence of str
    structure : mapping label -> iterable of (coeff, label_i, label_j)
        ``d(label) = sum coeff * label_i ^ label_j``.  Missing labels are
        closed.
    radial : str, optional
        Label of the radial differential.
    name : str
    """

    def __init__(self, labels, structure=None, radial=None, name="coframe"):
        self.labels = tuple(labels)
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.name = name
        self.radial = None if radial is None else self.index[radial]
        self.dim = len(self.labels)
        table: list[dict[tuple, Fraction]] = [dict() for _ in self.labels]
        for lab, terms in (structure or {}).items():
            row = table[self.index[lab]]
            for coeff, li, lj in terms:
                i, j = self.index[li], self.index[lj]
                if i == j:
                    continue
                sgn = 1 if i < j else -1
                key = (min(i, j), max(i, j))
                row[key] = row.get(key, Fraction(0)) + sgn * Fraction(coeff)
            for k in [k for k, v in row.items() if v == 0]:
                del row[k]
        if self.radial is not None:
            if table[self.radial]:
                raise ValueError("the radial differential must be closed")
            for row in table:
                if any(self.radial in k for k in row):
                    raise ValueError("structure equations may not involve dr")
        self.table = tuple(table)
        if not self.jacobi_holds():
            raise ValueError(f"structure constants of {name} violate d^2 = 0")
        self._dcache: dict[tuple, dict[tuple, Fraction]] = {}

    def __repr__(self):
        return f"Coframe({self.name!r}, {list(self.labels)})"

    def idx(self, labels) -> tuple:
        if isinstance(labels, str):
            labels = labels.split()
        return tuple(self.index[x] for x in labels)

    def d_basis(self, key: tuple) -> dict[tuple, Fraction]:
        """Exact d of the basis monomial ``e^key``."""
        try:
            return self._dcache[key]
        except KeyError:
            pass
        out: dict[tuple, Fraction] = {}
        for pos, a in enumerate(key):
            sgn = -1 if pos % 2 else 1
            before, after = key[:pos], key[pos + 1:]
            for pair, c in self.table[a].items():
                s1, k1 = merge_sign(before, pair)
                if not s1:
                    continue
                s2, k2 = merge_sign(k1, after)
                if not s2:
                    continue
                out[k2] = out.get(k2, Fraction(0)) + sgn * s1 * s2 * c
        out = {k: v for k, v in out.items() if v != 0}
        self._dcache[key] = out
        return out

    def jacobi_holds(self) -> bool:
        """Check d(d theta_a) = 0 for every label in exact arithmetic."""
        saved = getattr(self, "_dcache", None)
        self._dcache = {}
        try:
            for row in self.table:
                acc: dict[tuple, Fraction] = {}
                for pair, c in row.items():
                    for k, v in self.d_basis(pair).items():
                        acc[k] = acc.get(k, Fraction(0)) + c * v
                if any(v != 0 for v in acc.values()):
                    return False
            return True
        finally:
            self._dcache = saved if saved is not None else {}

    def zero(self, degree: int) -> "Form":
        return Form(self, degree, {})

    def e(self, *labels, coeff=None) -> "Form":
        """Basis monomial ``label_1 ^ ... ^ label_k`` times ``coeff``."""
        if len(labels) == 1 and " " in labels[0]:
            labels = tuple(labels[0].split())
        ids = self.idx(labels)
        if len(set(ids)) != len(ids):
            return Form(self, len(ids), {})
        sgn = _perm_sign(ids)
        c = scalar.ONE if coeff is None else coeff
        if isinstance(c, (int, Fraction)):
            c = scalar.Const(c)
        return Form(self, len(ids), {tuple(sorted(ids)): _scale(sgn, c)})

    def function(self, f) -> "Form":
        """A 0-form."""
        if isinstance(f, (int, Fraction)):
            f = scalar.Const(f)
        return Form(self, 0, {(): f})


class Form:
    """Homogeneous form of fixed degree on a coframe."""

    __slots__ = ("coframe", "degree", "terms")

    def __init__(self, coframe: Coframe, degree: int, terms: Mapping[tuple, object]):
        self.coframe = coframe
        self.degree = degree
        self.terms = {k: v for k, v in terms.items() if not _is_zero(v)}

    def __repr__(self):
        labs = self.coframe.labels
        parts = [f"{v!r}*{'^'.join(labs[i] for i in k) or '1'}" for k, v in self.terms.items()]
        return f"Form[{self.degree}](" + " + ".join(parts) + ")"

    def _check(self, other: "Form"):
        if other.coframe is not self.coframe:
            raise CoframeMismatch(f"{self.coframe.name} vs {other.coframe.name}")

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        if other.degree != self.degree and self.terms and other.terms:
            raise ValueError("cannot add forms of different degree")
        deg = self.degree if self.terms else other.degree
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return Form(self.coframe, deg, out)

    __radd__ = __add__

    def __neg__(self):
        return Form(self.coframe, self.degree, {k: _neg(v) for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, Form):
            return wedge(self, c)
        if isinstance(c, (int, Fraction)) and not isinstance(c, bool):
            return Form(self.coframe, self.degree, {k: _scale(c, v) for k, v in self.terms.items()})
        return Form(self.coframe, self.degree, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)) and not isinstance(c, bool):
            return self * c
        return Form(self.coframe, self.degree, {k: c * v for k, v in self.terms.items()})

    def __truediv__(self, c):
        if isinstance(c, (int, Fraction)):
            return self * (Fraction(1) / Fraction(c))
        return self * _inv(c)

    def __xor__(self, other):
        return wedge(self, other)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def symbolic(self) -> bool:
        return any(isinstance(v, Expr) for v in self.terms.values())

    def coefficient(self, *labels):
        """Coefficient of the monomial written in the given label order."""
        if len(labels) == 1 and " " in labels[0]:
            labels = tuple(labels[0].split())
        ids = self.coframe.idx(labels)
        key = tuple(sorted(ids))
        if len(set(ids)) != len(ids) or key not in self.terms:
            return scalar.ZERO if self.symbolic else 0.0
        return _scale(_perm_sign(ids), self.terms[key])

    def labels_used(self) -> set[int]:
        out: set[int] = set()
        for k in self.terms:
            out.update(k)
        return out

    def evaluate(self, r, env=None) -> "Form":
        """Numeric copy with coefficients evaluated at ``r``."""
        keys = list(self.terms)
        vals = scalar.evaluate_many([self.terms[k] for k in keys], r, env) if keys else []
        return Form(self.coframe, self.degree, dict(zip(keys, vals)))

    def map_coefficients(self, fn) -> "Form":
        return Form(self.coframe, self.degree, {k: fn(v) for k, v in self.terms.items()})


def wedge(a: Form, b: Form) -> Form:
    a._check(b)
    out: dict[tuple, object] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            s, k = merge_sign(ka, kb)
            if not s:
                continue
            p = va * vb
            if s < 0:
                p = -p
            out[k] = out[k] + p if k in out else p
    return Form(a.coframe, a.degree + b.degree, out)


def power(a: Form, n: int) -> Form:
    """Wedge power ``a^n`` (n >= 1)."""
    out = a
    for _ in range(n - 1):
        out = wedge(out, a)
    return out


def d_parts(a: Form) -> tuple[Form, Form]:
    """The two pieces of ``d a``: coefficient derivatives along ``dr`` and
    the structure-equation part."""
    cf = a.coframe
    rad: dict[tuple, object] = {}
    struct: dict[tuple, object] = {}
    for key, f in a.terms.items():
        if not isinstance(f, Expr):
            raise TypeError("d needs symbolic coefficients")
        df = scalar.deriv(f)
        if not scalar.is_zero(df):
            if cf.radial is None:
                raise ValueError(f"non-constant coefficient on {cf.name}, which has no radial direction")
            s, k = merge_sign((cf.radial,), key)
            if s:
                term = df if s > 0 else -df
                rad[k] = rad[k] + term if k in rad else term
        for k, c in cf.d_basis(key).items():
            term = _scale(c, f)
            struct[k] = struct[k] + term if k in struct else term
    deg = a.degree + 1
    return Form(cf, deg, rad), Form(cf, deg, struct)


def d(a: Form) -> Form:
    """Exterior derivative."""
    p, q = d_parts(a)
    return p + q


def interior(label: str, a: Form) -> Form:
    """Contraction with the frame vector dual to ``label`` (no metric)."""
    i = a.coframe.index[label]
    out = {}
    for key, v in a.terms.items():
        if i in key:
            pos = key.index(i)
            rest = key[:pos] + key[pos + 1:]
            out[rest] = -v if pos % 2 else v
    return Form(a.coframe, a.degree - 1, out)


class DiagonalMetric:
    """Metric ``sum f_a^2 theta_a^2`` over a subset of coframe labels.

    Scales may carry a sign.  The oriented orthonormal coframe is
    ``f_a theta_a`` taken in ``orientation`` order, so the volume form is
    ``prod(f_a) theta_{o_1} ^ ... ^ theta_{o_m}``.
    """

    def __init__(self, coframe: Coframe, scales: Mapping[str, object], orientation=None):
        self.coframe = coframe
        self.scales = {coframe.index[k]: (scalar.Const(v) if isinstance(v, (int, Fraction)) else v)
                       for k, v in scales.items()}
        order = orientation if orientation is not None else sorted(scales, key=coframe.index.get)
        self.orientation = tuple(coframe.index[x] for x in order)
        if set(self.orientation) != set(self.scales):
            raise ValueError("orientation must list exactly the metric labels")
        self.sorted_labels = tuple(sorted(self.orientation))
        self._osign = _perm_sign(self.orientation)

    @property
    def dim(self) -> int:
        return len(self.scales)

    def evaluate(self, r, env=None) -> "DiagonalMetric":
        keys = list(self.scales)
        vals = scalar.evaluate_many([self.scales[k] for k in keys], r, env)
        m = DiagonalMetric.__new__(DiagonalMetric)
        m.coframe = self.coframe
        m.scales = dict(zip(keys, vals))
        m.orientation = self.orientation
        m.sorted_labels = self.sorted_labels
        m._osign = self._osign
        return m

    def _prod(self, key):
        out = None
        for i in key:
            f = self.scales[i]
            out = f if out is None else out * f
        return out

    def volume(self) -> Form:
        key = self.sorted_labels
        return Form(self.coframe, len(key), {key: _scale(self._osign, self._prod(key))})

    def require(self, a: Form):
        bad = a.labels_used() - set(self.scales)
        if bad:
            names = ", ".join(self.coframe.labels[i] for i in sorted(bad))
            raise MetricUndefined(f"metric does not cover {names}")


def hodge(a: Form, g: DiagonalMetric) -> Form:
    """Hodge star for a diagonal metric."""
    if a.coframe is not g.coframe:
        raise CoframeMismatch("metric and form live on different coframes")
    g.require(a)
    out = {}
    full = g.orientation
    for key, v in a.terms.items():
        comp = tuple(i for i in full if i not in key)
        ckey = tuple(sorted(comp))
        s, _ = merge_sign(key, ckey)
        sign = s * g._osign
        num = g._prod(comp) if comp else None
        den = g._prod(key) if key else None
        c = v
        if num is not None:
            c = c * num
        if den is not None:
            c = c * _inv(den)
        out[ckey] = _scale(sign, c) if sign < 0 else c
    return Form(a.coframe, g.dim - a.degree, out)


def inner(a: Form, b: Form, g: DiagonalMetric, r=None, env=None):
    """Pointwise metric inner product (numeric)."""
    if a.symbolic and a.terms:
        a = a.evaluate(r, env)
    if b.symbolic and b.terms:
        b = b.evaluate(r, env)
    if any(isinstance(v, Expr) for v in g.scales.values()):
        g = g.evaluate(r, env)
    g.require(a)
    g.require(b)
    total = 0.0
    for k, va in a.terms.items():
        vb = b.terms.get(k)
        if vb is None:
            continue
        p = g._prod(k)
        total = total + va * vb / (p * p) if k else total + va * vb
    return total


def contract(label: str, a: Form, g: DiagonalMetric) -> Form:
    """Contraction with the metric dual of ``theta_label``."""
    i = a.coframe.index[label]
    if i not in g.scales:
        raise MetricUndefined(f"metric does not cover {label}")
    f = g.scales[i]
    return interior(label, a) * _inv(f * f)


@lru_cache(maxsize=None)
def basis_indices(n: int, k: int) -> tuple:
    return tuple(combinations(range(n), k))


def eval_form(a: Form, r, env=None) -> np.ndarray:
    """Dense coefficient vector in the canonical order of ``basis_indices``.

    For array ``r`` the result has shape ``(len(r), C(n, k))``.
    """
    keys = basis_indices(a.coframe.dim, a.degree)
    pos = {k: i for i, k in enumerate(keys)}
    num = a.evaluate(r, env) if a.symbolic else a
    shape = np.shape(r)
    out = np.zeros(shape + (len(keys),))
    for k, v in num.terms.items():
        out[..., pos[k]] = v
    return out


def from_dense(coframe: Coframe, degree: int, vec) -> Form:
    keys = basis_indices(coframe.dim, degree)
    vec = np.asarray(vec)
    return Form(coframe, degree, {k: vec[..., i] if vec.ndim > 1 else float(vec[i])
                                  for i, k in enumerate(keys) if np.any(vec[..., i])})


def flat_coframe(labels: Iterable[str], name="flat") -> Coframe:
    return Coframe(list(labels), {}, None, name)
