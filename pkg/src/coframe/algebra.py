"""Pointwise linear algebra of invariant forms.

Everything here works at a single radius in the oriented orthonormal
coframe ``f_a theta_a``, where the metric is Euclidean and the Hodge star is
a signed permutation.  Results are converted back to raw coframe
coefficients before they are returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import scalar
from .errors import NotSpin7
from .exterior import (DiagonalMetric, Form, basis_indices, eval_form, flat_coframe,
                       hodge, interior, wedge)
from .geometries import Geometry

__all__ = [
    "Frame", "JTable", "j_table", "j_action", "decompose_two_form", "pi27",
    "spin7_eigenspaces", "lambda27_basis", "lambda47_basis", "pi47_norm",
    "diamond", "f_plus_project", "f_plus_range", "lambda47_from_j",
    "lambda47_flat", "principal_angles", "cyclic",
]


@lru_cache(maxsize=None)
def _flat(labels: tuple):
    cf = flat_coframe(labels, "orthonormal")
    g = DiagonalMetric(cf, {lab: 1.0 for lab in labels})
    return cf, g


def _perm_sign(seq) -> int:
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class Frame:
    """Orthonormal snapshot of a geometry at one radius."""

    def __init__(self, g: Geometry, r: float, env=None):
        self.geometry = g
        self.r = float(r)
        self.env = g.env(env)
        self.metric = g.metric.evaluate(self.r, self.env)
        self.order = g.metric.orientation
        labels = tuple(g.coframe.labels[i] for i in self.order)
        self.cf, self.g = _flat(labels)
        self.m = len(labels)
        self.pos = {c: p for p, c in enumerate(self.order)}
        self.scale = np.array([float(self.metric.scales[c]) for c in self.order])

    def to_on(self, a: Form) -> Form:
        """Raw form (symbolic or numeric) to orthonormal coefficients."""
        if a.symbolic and a.terms:
            a = a.evaluate(self.r, self.env)
        self.metric.require(a)
        out = {}
        for key, v in a.terms.items():
            p = [self.pos[i] for i in key]
            sgn = _perm_sign(p)
            out[tuple(sorted(p))] = sgn * float(v) / float(np.prod(self.scale[p]))
        return Form(self.cf, a.degree, out)

    def from_on(self, a: Form) -> Form:
        out = {}
        for key, v in a.terms.items():
            raw = [self.order[p] for p in key]
            sgn = _perm_sign(raw)
            out[tuple(sorted(raw))] = sgn * v * float(np.prod(self.scale[list(key)]))
        return Form(self.geometry.coframe, a.degree, out)

    def vec(self, a: Form) -> np.ndarray:
        if a.coframe is not self.cf:
            a = self.to_on(a)
        return eval_form(a, 0.0)

    def form(self, v, k: int) -> Form:
        keys = basis_indices(self.m, k)
        return Form(self.cf, k, {key: float(v[i]) for i, key in enumerate(keys) if v[i] != 0})

    def raw_dense(self, v, k: int) -> np.ndarray:
        """Orthonormal vector to a dense raw-coefficient vector."""
        return eval_form(self.from_on(self.form(v, k)), 0.0)

    def star(self, a: Form) -> Form:
        return hodge(a, self.g)

    def matrix(self, fn, k: int) -> np.ndarray:
        """Matrix of a linear map on orthonormal k-forms."""
        keys = basis_indices(self.m, k)
        cols = []
        for key in keys:
            out = fn(Form(self.cf, k, {key: 1.0}))
            cols.append(self.vec(out))
        return np.array(cols).T

    def omegas(self):
        return [self.to_on(w) for w in self.geometry.triple()]


def _antisym(a: Form, m: int) -> np.ndarray:
    W = np.zeros((m, m))
    for (i, j), v in a.terms.items():
        W[i, j] = v
        W[j, i] = -v
    return W


@dataclass(frozen=True)
class JTable:
    """Pullback action of ``J_i`` on orthonormal 1-forms as a signed
    permutation: ``J_i^* e^b = sign[b] e^{target[b]}``."""

    index: int
    target: tuple
    sign: tuple
    matrix: np.ndarray

    def vector(self, x: np.ndarray) -> np.ndarray:
        """``J_i`` applied to a tangent vector in orthonormal components."""
        return self.matrix.T @ x


def _reference_radius(g: Geometry) -> float:
    r0 = g.r0()
    return 2.0 * r0 + 1.0


def j_table(g: Geometry, i: int, r: float | None = None) -> JTable:
    """J_i from ``omega_i(X, Y) = g(J_i X, Y)``."""
    fr = Frame(g, _reference_radius(g) if r is None else r)
    W = _antisym(fr.omegas()[i - 1], fr.m)
    target, sign = [], []
    for b in range(fr.m):
        col = W[:, b]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if len(nz) != 1 or abs(abs(col[nz[0]]) - 1) > 1e-10:
            raise ValueError("complex structure is not a signed permutation")
        target.append(int(nz[0]))
        sign.append(int(np.sign(col[nz[0]])))
    return JTable(i, tuple(target), tuple(sign), W)


def _lambda_matrix(L: np.ndarray, k: int) -> np.ndarray:
    """Induced action of a linear map on k-form coefficients."""
    m = L.shape[0]
    keys = basis_indices(m, k)
    idx = np.array(keys)
    sub = L[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub.reshape(-1, k, k)).reshape(len(keys), len(keys))


def j_matrix(fr: Frame, i: int, k: int) -> np.ndarray:
    W = _antisym(fr.omegas()[i - 1], fr.m)
    return _lambda_matrix(W, k)


def j_action(a: Form, g: Geometry, i: int) -> Form:
    """Symbolic pullback ``J_i^* a`` on raw coframe coefficients."""
    tab = j_table(g, i)
    order = g.metric.orientation
    scales = g.metric.scales
    g.metric.require(a)
    pos = {c: p for p, c in enumerate(order)}
    out: dict = {}
    for key, v in a.terms.items():
        coeff = v
        img = []
        sgn = 1
        for c in key:
            p = pos[c]
            q = tab.target[p]
            sgn *= tab.sign[p]
            cq = order[q]
            img.append(cq)
            coeff = coeff * scales[cq] / scales[c] if isinstance(coeff, scalar.Expr) \
                else coeff * scales[cq] / scales[c]
        if len(set(img)) != len(img):
            continue
        sgn *= _perm_sign(img)
        k = tuple(sorted(img))
        term = coeff if sgn > 0 else -coeff
        out[k] = out[k] + term if k in out else term
    return Form(a.coframe, a.degree, out)


def decompose_two_form(a: Form, g: Geometry, r: float, env=None) -> dict:
    """Split a 2-form as ``<omega> + E1 + E2 + E3 + Lambda^2_10``.

    ``E_i`` is where ``T_j(alpha) = *(alpha ^ omega_j^2)`` has eigenvalue -2
    for ``j = i`` and +2 otherwise; ``Lambda^2_10`` has -2 for all three.
    Components are dense raw-coefficient vectors.
    """
    fr = Frame(g, r, env)
    om = fr.omegas()
    v = fr.vec(a)
    n = len(v)
    T = [fr.matrix(lambda x, w=w: fr.star(wedge(x, wedge(w, w))), 2) for w in om]
    B = np.array([fr.vec(w) for w in om]).T
    Pw = B @ np.linalg.solve(B.T @ B, B.T)
    Q = np.eye(n) - Pw
    I = np.eye(n)
    minus = [(2 * I - t) / 4 for t in T]
    plus = [(t + 2 * I) / 4 for t in T]
    parts = {
        "omega": Pw @ v,
        "E1": minus[0] @ plus[1] @ plus[2] @ Q @ v,
        "E2": plus[0] @ minus[1] @ plus[2] @ Q @ v,
        "E3": plus[0] @ plus[1] @ minus[2] @ Q @ v,
        "lambda10": minus[0] @ minus[1] @ minus[2] @ Q @ v,
    }
    return {k: fr.raw_dense(p, 2) for k, p in parts.items()}


def pi27(a: Form, Phi: Form, g: Geometry | DiagonalMetric) -> Form:
    """Projection ``(a + *(a ^ Phi)) / 4`` onto Lambda^2_7."""
    metric = g.metric if isinstance(g, Geometry) else g
    return (a + hodge(wedge(a, Phi), metric)) * Fraction(1, 4)


def _phi_on(fr: Frame, Phi: Form) -> Form:
    return fr.to_on(Phi) if Phi.coframe is not fr.cf else Phi


def spin7_eigenspaces(Phi: Form, g: Geometry, r: float, env=None):
    """Orthonormal bases (flat frame) of the +3 and -1 eigenspaces of
    ``alpha -> *(alpha ^ Phi)``; raises NotSpin7 otherwise."""
    fr = Frame(g, r, env)
    P = _phi_on(fr, Phi)
    S = fr.matrix(lambda x: fr.star(wedge(x, P)), 2)
    S = (S + S.T) / 2
    vals, vecs = np.linalg.eigh(S)
    hi = np.abs(vals - 3) < 1e-8
    lo = np.abs(vals + 1) < 1e-8
    if hi.sum() != 7 or lo.sum() != 21:
        raise NotSpin7(f"eigenvalue multiplicities {hi.sum()}, {lo.sum()}")
    return fr, vecs[:, hi], vecs[:, lo]


def lambda27_basis(Phi: Form, g: Geometry, r: float, env=None) -> list[Form]:
    fr, b7, _ = spin7_eigenspaces(Phi, g, r, env)
    return [fr.from_on(fr.form(b7[:, j], 2)) for j in range(b7.shape[1])]


def diamond(gamma: Form, Phi: Form) -> Form:
    """``(a ^ b) <> Phi = a ^ (b# _| Phi) - b ^ (a# _| Phi)``, extended
    linearly to 2-forms in an orthonormal frame."""
    cf = gamma.coframe
    out = cf.zero(4)
    labels = cf.labels
    for (a, b), v in gamma.terms.items():
        ea = Form(cf, 1, {(a,): 1.0})
        eb = Form(cf, 1, {(b,): 1.0})
        term = wedge(ea, interior(labels[b], Phi)) - wedge(eb, interior(labels[a], Phi))
        out = out + term * v
    return out


def _lambda47_flat(fr: Frame, Phi: Form) -> np.ndarray:
    P = _phi_on(fr, Phi)
    S = fr.matrix(lambda x: fr.star(wedge(x, P)), 2)
    vals, vecs = np.linalg.eigh((S + S.T) / 2)
    hi = np.abs(vals - 3) < 1e-8
    if hi.sum() != 7 or (np.abs(vals + 1) < 1e-8).sum() != 21:
        raise NotSpin7("not a Spin(7) form")
    cols = [fr.vec(diamond(fr.form(vecs[:, j], 2), P)) for j in np.flatnonzero(hi)]
    U, s, _ = np.linalg.svd(np.array(cols).T, full_matrices=False)
    rank = int((s > 1e-9 * s[0]).sum())
    return U[:, :rank]


def lambda47_basis(Phi: Form, g: Geometry, r: float, env=None) -> list[Form]:
    """Raw numeric 4-forms spanning Lambda^4_7 at radius ``r``."""
    fr = Frame(g, r, env)
    U = _lambda47_flat(fr, Phi)
    return [fr.from_on(fr.form(U[:, j], 4)) for j in range(U.shape[1])]


def pi47_norm(a: Form, Phi: Form, g: Geometry, r: float, env=None, frame: Frame | None = None):
    """Metric norm of the Lambda^4_7 component of ``a`` and the norm of ``a``."""
    fr = frame or Frame(g, r, env)
    U = _lambda47_flat(fr, Phi)
    v = fr.vec(a)
    return float(np.linalg.norm(U.T @ v)), float(np.linalg.norm(v))


def f_plus_project(a: Form, g: Geometry, r: float, i: int = 3, env=None) -> Form:
    """Component of a 4-form in ``F_i^+``.

    Self-dualise, apply ``(1 - J_j - J_k + J_i) / 4`` (the projector onto
    ``J_i = +1, J_j = J_k = -1``) and remove the ``omega_j ^ omega_k``
    direction.
    """
    fr = Frame(g, r, env)
    v = fr.vec(a)
    star = fr.matrix(fr.star, 4)
    sd = (v + star @ v) / 2
    j, k = cyclic(i)
    J = {m: j_matrix(fr, m, 4) for m in (1, 2, 3)}
    w = (sd - J[j] @ sd - J[k] @ sd + J[i] @ sd) / 4
    om = fr.omegas()
    u = fr.vec(wedge(om[j - 1], om[k - 1]))
    w = w - u * (u @ w) / (u @ u)
    return fr.from_on(fr.form(w, 4))


def f_plus_range(g: Geometry, r: float, i: int = 3, env=None) -> np.ndarray:
    """Orthonormal (flat) basis of the image of ``f_plus_project``."""
    fr = Frame(g, r, env)
    n = len(basis_indices(fr.m, 4))
    star = fr.matrix(fr.star, 4)
    j, k = cyclic(i)
    J = {m: j_matrix(fr, m, 4) for m in (1, 2, 3)}
    I = np.eye(n)
    M = (I - J[j] - J[k] + J[i]) / 4 @ ((I + star) / 2)
    om = fr.omegas()
    u = fr.vec(wedge(om[j - 1], om[k - 1]))
    u = u / np.linalg.norm(u)
    M = (I - np.outer(u, u)) @ M
    U, s, _ = np.linalg.svd(M)
    rank = int((s > 1e-9 * s[0]).sum())
    return U[:, :rank]


def lambda47_from_j(g: Geometry, r: float, i: int = 3, env=None) -> np.ndarray:
    """``<omega_j ^ omega_i, omega_k ^ omega_i> + F_i^+`` as a flat basis."""
    fr = Frame(g, r, env)
    om = fr.omegas()
    j, k = cyclic(i)
    extra = np.array([fr.vec(wedge(om[j - 1], om[i - 1])), fr.vec(wedge(om[k - 1], om[i - 1]))]).T
    M = np.hstack([extra, f_plus_range(g, r, i, env)])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int((s > 1e-9 * s[0]).sum())
    return U[:, :rank]


def lambda47_flat(g: Geometry, Phi: Form, r: float, env=None) -> np.ndarray:
    return _lambda47_flat(Frame(g, r, env), Phi)


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of two orthonormal bases.

    Uses the sines (residual of B after projecting onto A), which stay
    accurate for nearly coincident subspaces.
    """
    resid = B - A @ (A.T @ B)
    s = np.linalg.svd(resid, compute_uv=False)
    return np.sort(np.arcsin(np.clip(s, 0.0, 1.0)))


def cyclic(i: int) -> tuple[int, int]:
    """The indices ``j, k`` with ``(i, j, k)`` a cyclic permutation of 123."""
    j = i % 3 + 1
    return j, j % 3 + 1
