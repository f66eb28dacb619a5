"""Radial scalar expressions.

Coefficients of invariant forms are functions of the radial variable ``r``
and of a handful of named parameters.  They are stored as small expression
trees with exact rational constants, so that derivatives are exact and
evaluation can be vectorised over a whole grid of radii at once.

There is no simplifier.  The constructors only flatten nested sums and
products and fold constants, which is enough to keep structure-constant
arithmetic exact (a sum of rationals that cancels becomes ``Const(0)``).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np

from .errors import DomainError, UnboundName

__all__ = [
    "Expr", "Const", "Radial", "Param", "FormalSym", "Sum", "Product",
    "Power", "LambertW0", "R", "const", "param", "formal", "sqrt", "w0",
    "add", "mul", "power", "deriv", "evaluate", "evaluate_many",
    "lambert_w0", "free_names",
]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)) and not isinstance(x, bool):
        return Fraction(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


class Expr:
    """Base node.  Arithmetic operators build new nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1), _lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), mul(Const(-1), self))

    def __neg__(self):
        return mul(Const(-1), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return mul(self, power(_lift(other), -1))

    def __rtruediv__(self, other):
        return mul(_lift(other), power(self, -1))

    def __pow__(self, exponent):
        return power(self, exponent)

    def __repr__(self):
        return _render(self)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(_as_fraction(x))


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = _as_fraction(value)


class Radial(Expr):
    __slots__ = ()


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name


class FormalSym(Expr):
    """An unknown function of ``r`` whose value and derivatives are bound
    numerically.  ``order`` counts derivatives, so the name of the bound
    value is ``base`` followed by that many primes."""

    __slots__ = ("base", "order")

    def __init__(self, base: str, order: int = 0):
        self.base = base
        self.order = order

    @property
    def name(self) -> str:
        return self.base + "'" * self.order


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)


class Power(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent):
        self.base = base
        self.exponent = _as_fraction(exponent)


class LambertW0(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg


R = Radial()
ZERO = Const(0)
ONE = Const(1)


def const(x) -> Const:
    return Const(x)


def param(name: str) -> Param:
    return Param(name)


def formal(base: str) -> FormalSym:
    return FormalSym(base, 0)


def is_zero(e) -> bool:
    return isinstance(e, Const) and e.value == 0


def add(*terms) -> Expr:
    flat = []
    total = Fraction(0)
    for t in terms:
        t = _lift(t)
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                total += p.value
            else:
                flat.append(p)
    if total != 0:
        flat.insert(0, Const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(flat)


def mul(*factors) -> Expr:
    flat = []
    coeff = Fraction(1)
    for f in factors:
        f = _lift(f)
        parts = f.factors if isinstance(f, Product) else (f,)
        for p in parts:
            if isinstance(p, Const):
                coeff *= p.value
            else:
                flat.append(p)
    if coeff == 0:
        return ZERO
    if coeff != 1:
        flat.insert(0, Const(coeff))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Product(flat)


def _exact_root(q: Fraction, n: int):
    """Exact n-th root of a non-negative rational, or None."""
    def iroot(m: int):
        x = round(m ** (1.0 / n))
        for y in (x - 1, x, x + 1):
            if y >= 0 and y ** n == m:
                return y
        return None
    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def power(base, exponent) -> Expr:
    base = _lift(base)
    e = _as_fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if e.denominator == 1:
            if v == 0 and e < 0:
                raise DomainError("zero raised to a negative power")
            return Const(v ** e.numerator)
        if v >= 0:
            root = _exact_root(v, e.denominator)
            if root is not None:
                if root == 0 and e < 0:
                    raise DomainError("zero raised to a negative power")
                return Const(root ** e.numerator)
    if isinstance(base, Power) and base.exponent.denominator == 1 and e.denominator == 1:
        return power(base.base, base.exponent * e)
    return Power(base, e)


def sqrt(e) -> Expr:
    return power(e, Fraction(1, 2))


def w0(e) -> Expr:
    e = _lift(e)
    if isinstance(e, Const) and e.value == 0:
        return ZERO
    return LambertW0(e)


@lru_cache(maxsize=200_000)
def deriv(e: Expr) -> Expr:
    """Exact derivative with respect to ``r``."""
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Radial):
        return ONE
    if isinstance(e, FormalSym):
        return FormalSym(e.base, e.order + 1)
    if isinstance(e, Sum):
        return add(*(deriv(t) for t in e.terms))
    if isinstance(e, Product):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = deriv(f)
            if is_zero(df):
                continue
            parts.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*parts)
    if isinstance(e, Power):
        db = deriv(e.base)
        if is_zero(db):
            return ZERO
        return mul(Const(e.exponent), power(e.base, e.exponent - 1), db)
    if isinstance(e, LambertW0):
        du = deriv(e.arg)
        if is_zero(du):
            return ZERO
        # W'(u) = W / (u (1 + W))
        return mul(e, du, power(e.arg, -1), power(add(ONE, e), -1))
    raise TypeError(f"unknown node {type(e).__name__}")


def lambert_w0(x):
    """Principal branch of the Lambert W function on ``x >= 0``.

    Parameters
    ----------
    x : float or ndarray
        Non-negative argument.

    Returns
    -------
    float or ndarray
        ``w`` with ``w * exp(w) == x``, to about 1e-14 relative accuracy.

    Raises
    ------
    DomainError
        If any argument is negative or not finite.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("lambert_w0 needs finite x >= 0")
    w = np.log1p(arr)
    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - arr
        wp1 = w + 1.0
        # Halley step
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - dw
        if np.all(np.abs(dw) <= 1e-15 * (1.0 + np.abs(w))):
            break
    if np.ndim(x) == 0:
        return float(w)
    return w


def free_names(e: Expr) -> set[str]:
    """Parameter and formal-symbol names an expression depends on."""
    out: set[str] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Param):
            out.add(n.name)
        elif isinstance(n, FormalSym):
            out.add(n.name)
        elif isinstance(n, Sum):
            stack.extend(n.terms)
        elif isinstance(n, Product):
            stack.extend(n.factors)
        elif isinstance(n, Power):
            stack.append(n.base)
        elif isinstance(n, LambertW0):
            stack.append(n.arg)
    return out


# Negative bases this close to zero (relative to the size of the summands
# that produced them) are rounding noise, e.g. r**4 - 4 at r = sqrt(2).
_CLAMP = 1e-12


class _Evaluator:
    def __init__(self, r, env):
        self.r = r
        self.env = env
        self.memo: dict[int, object] = {}
        self.mag: dict[int, object] = {}

    def __call__(self, e: Expr):
        key = id(e)
        try:
            return self.memo[key]
        except KeyError:
            pass
        v = self._eval(e)
        self.memo[key] = v
        return v

    def _lookup(self, name):
        try:
            return self.env[name]
        except KeyError:
            raise UnboundName(name) from None

    def _eval(self, e):
        if isinstance(e, Const):
            return float(e.value)
        if isinstance(e, Radial):
            return self.r
        if isinstance(e, Param):
            return self._lookup(e.name)
        if isinstance(e, FormalSym):
            return self._lookup(e.name)
        if isinstance(e, Sum):
            vals = [self(t) for t in e.terms]
            out = vals[0]
            for v in vals[1:]:
                out = out + v
            return out
        if isinstance(e, Product):
            out = self(e.factors[0])
            for f in e.factors[1:]:
                out = out * self(f)
            return out
        if isinstance(e, Power):
            b = self(e.base)
            p = e.exponent
            if p.denominator == 1:
                n = p.numerator
                if n < 0:
                    if np.any(np.asarray(b) == 0):
                        raise DomainError("division by zero")
                    return 1.0 / (b ** (-n))
                return b ** n
            b = self._clamp(e.base, b)
            if np.any(np.asarray(b) < 0):
                raise DomainError("negative base under a fractional power")
            if p < 0 and np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            if p == Fraction(1, 2):
                return np.sqrt(b)
            return np.power(b, float(p))
        if isinstance(e, LambertW0):
            return lambert_w0(self(e.arg))
        raise TypeError(f"unknown node {type(e).__name__}")

    def _clamp(self, node, b):
        barr = np.asarray(b, dtype=float)
        if not np.any(barr < 0) or not isinstance(node, Sum):
            return b
        scale = 0.0
        for t in node.terms:
            scale = scale + np.abs(self(t))
        fix = (barr < 0) & (barr >= -_CLAMP * np.asarray(scale))
        if not np.any(fix):
            return b
        out = np.where(fix, 0.0, barr)
        return float(out) if np.ndim(b) == 0 else out


def _prepare_r(r):
    if np.ndim(r) == 0:
        return float(r), True
    return np.asarray(r, dtype=float), False


def evaluate(e: Expr, r, env=None):
    """Evaluate ``e`` at radius ``r`` (scalar or array).

    ``env`` maps parameter and formal-symbol names to numbers or arrays
    broadcastable against ``r``.
    """
    rv, scalar = _prepare_r(r)
    out = _Evaluator(rv, env or {})(e)
    if scalar and np.ndim(out) == 0:
        return float(out)
    return np.broadcast_to(out, np.shape(rv)).astype(float) if not scalar else out


def evaluate_many(exprs, r, env=None):
    """Evaluate several expressions sharing one memo table."""
    rv, scalar = _prepare_r(r)
    ev = _Evaluator(rv, env or {})
    out = []
    for e in exprs:
        v = ev(e)
        if scalar and np.ndim(v) == 0:
            out.append(float(v))
        elif not scalar:
            out.append(np.broadcast_to(v, np.shape(rv)).astype(float))
        else:
            out.append(v)
    return out


def _render(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"({v})"
    if isinstance(e, Radial):
        return "r"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, FormalSym):
        return e.name
    if isinstance(e, Sum):
        return "(" + " + ".join(_render(t) for t in e.terms) + ")"
    if isinstance(e, Product):
        return "*".join(_render(f) for f in e.factors)
    if isinstance(e, Power):
        base = _render(e.base)
        if isinstance(e.base, (Product, Power)):
            base = f"({base})"
        return f"{base}^({e.exponent})"
    if isinstance(e, LambertW0):
        return f"W0({_render(e.arg)})"
    return object.__repr__(e)

